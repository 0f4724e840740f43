//! The topic network: a bidirectional LSTM over sentence vectors with a
//! shared tanh bottleneck producing per-sentence topic embeddings, a shared
//! output head, training with ADAM and early stopping, and model persistence.

mod adam;
mod io;
mod loss;
mod lstm;
mod network;
mod params;
mod real;
mod tensor;
mod train;

pub use adam::Adam;
pub use io::{load_model, read_model, save_model, write_model};
pub use loss::{
    dlogits_multi_bce, dlogits_ranking, dlogits_single, loss_multi_bce, loss_ranking, loss_single,
    LossKind, RankingParams,
};
pub use lstm::{lstm_backward, lstm_forward, LstmStep, LstmTrace};
pub use network::{backward_doc, forward_doc, softmax, DocForward};
pub use params::{Gradients, LstmParams, Network, SharedParams, TaskKind};
pub use real::Real;
pub use tensor::Mat;
pub use train::{train, EpochLog, TrainOutcome};

use crate::corpus::Document;
use crate::encode::SentenceEncoder;
use crate::Result;

/// Training hyperparameters (published defaults).
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub embedding: usize,
    /// Documents per batch.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Epochs without validation MAP improvement before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    /// Loss override; `None` picks cross-entropy for the single-label task
    /// and binary cross-entropy for the multi-label task.
    pub loss: Option<LossKind>,
    pub ranking: RankingParams,
    /// Minimal occurrence count for heading-vocabulary words (multi task).
    pub heading_min_frequency: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 256,
            embedding: 128,
            batch_size: 16,
            learning_rate: 0.01,
            dropout: 0.5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            patience: 10,
            max_epochs: 200,
            loss: None,
            ranking: RankingParams::default(),
            heading_min_frequency: 1,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn effective_loss(&self, task: TaskKind) -> LossKind {
        self.loss.unwrap_or(match task {
            TaskKind::Single => LossKind::CrossEntropy,
            TaskKind::Multi => LossKind::Bce,
        })
    }
}

/// Per-sentence directional topic embeddings.
#[derive(Debug, Clone)]
pub struct TopicEmbeddingSeq {
    pub forward: Vec<Vec<f32>>,
    pub backward: Vec<Vec<f32>>,
}

impl TopicEmbeddingSeq {
    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Concatenated embeddings `e_k = e_fwd_k (+) e_bwd_k`.
    pub fn concat(&self) -> Vec<Vec<f32>> {
        self.forward
            .iter()
            .zip(&self.backward)
            .map(|(f, b)| f.iter().chain(b).copied().collect())
            .collect()
    }
}

/// Inference output for one document.
#[derive(Debug, Clone)]
pub struct DocInference {
    pub embeddings: TopicEmbeddingSeq,
    /// Per-sentence activations (softmax distribution or sigmoid scores).
    pub scores: Vec<Vec<f32>>,
}

/// A trained model: network parameters, label names and the fitted sentence
/// encoder. Immutable and safe to share across threads.
#[derive(Debug, Clone)]
pub struct SectorModel {
    pub net: Network<f32>,
    pub labels: Vec<String>,
    pub encoder: SentenceEncoder,
}

impl SectorModel {
    pub fn task(&self) -> TaskKind {
        self.net.task
    }

    /// Encode a document into network inputs.
    pub fn encode_document(&self, doc: &Document) -> Vec<Vec<f32>> {
        let (vectors, _) = self.encoder.encode_document(doc);
        vectors.into_iter().map(|v| v.values).collect()
    }

    /// Topic embeddings and label scores for one document.
    pub fn infer(&self, doc: &Document) -> Result<DocInference> {
        let inputs = self.encode_document(doc);
        let out = forward_doc(&self.net, &inputs, None)?;
        Ok(DocInference {
            embeddings: TopicEmbeddingSeq {
                forward: out.embed_fwd,
                backward: out.embed_bwd,
            },
            scores: out.activations,
        })
    }

    /// Topic embeddings only.
    pub fn embed(&self, doc: &Document) -> Result<TopicEmbeddingSeq> {
        Ok(self.infer(doc)?.embeddings)
    }

    /// Per-sentence label scores only.
    pub fn predict(&self, doc: &Document) -> Result<Vec<Vec<f32>>> {
        Ok(self.infer(doc)?.scores)
    }
}
