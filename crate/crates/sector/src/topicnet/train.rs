//! Training loop: ADAM over document batches, inverted dropout on the hidden
//! states feeding the bottleneck, early stopping on validation MAP.
//!
//! Per-document forward/backward passes run in parallel inside a batch;
//! gradients reduce in document order, so a fixed seed gives bit-identical
//! results at any worker count.

use log::info;

use super::loss::{
    dlogits_multi_bce, dlogits_ranking, dlogits_single, loss_multi_bce, loss_ranking, loss_single,
    LossKind,
};
use super::network::{backward_doc, forward_doc};
use super::params::{Gradients, Network, TaskKind};
use super::{Adam, SectorModel, TrainConfig};
use crate::corpus::{sentence_targets, CorpusSplit, HeadingVocab, LabelVocab, SentenceTarget};
use crate::encode::SentenceEncoder;
use crate::rng::SplitMix64;
use crate::{par, Error, Result};

/// One line of the JSON-lines training log.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_map: f64,
    /// Seconds since the Unix epoch; lives only in the log.
    pub timestamp: f64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: SectorModel,
    pub log: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_val_map: f64,
}

struct PreparedDoc {
    inputs: Vec<Vec<f32>>,
    labels: Vec<usize>,
    heading_words: Vec<Vec<usize>>,
}

fn prepare(
    docs: &[crate::corpus::Document],
    encoder: &SentenceEncoder,
    label_vocab: &LabelVocab,
    heading_vocab: &HeadingVocab,
) -> Vec<PreparedDoc> {
    par::map(docs, |doc| {
        let (vectors, _) = encoder.encode_document(doc);
        let targets: Vec<SentenceTarget> = sentence_targets(doc, label_vocab, heading_vocab);
        PreparedDoc {
            inputs: vectors.into_iter().map(|v| v.values).collect(),
            labels: targets.iter().map(|t| t.label).collect(),
            heading_words: targets.into_iter().map(|t| t.heading_words).collect(),
        }
    })
}

const STREAM_INIT: u64 = 0x1217;
const STREAM_SHUFFLE: u64 = 0x5457;
const STREAM_DROPOUT: u64 = 0xd80f;

/// Loss and score gradients for one document under the configured loss.
/// For the ranking loss, sentences without a usable positive/negative split
/// are skipped (their gradient rows stay zero).
fn doc_loss_and_dlogits(
    out: &super::network::DocForward<f32>,
    doc: &PreparedDoc,
    loss: LossKind,
    cfg: &TrainConfig,
    n_labels: usize,
) -> Result<(f64, Vec<Vec<f32>>)> {
    match loss {
        LossKind::CrossEntropy => {
            let l = loss_single(&out.activations, &doc.labels)?;
            Ok((f64::from(l), dlogits_single(&out.activations, &doc.labels)))
        }
        LossKind::Bce => {
            let l = loss_multi_bce(&out.activations, &doc.heading_words)?;
            Ok((
                f64::from(l),
                dlogits_multi_bce(&out.activations, &doc.heading_words),
            ))
        }
        LossKind::Ranking => {
            let usable: Vec<usize> = (0..doc.heading_words.len())
                .filter(|&k| {
                    !doc.heading_words[k].is_empty() && doc.heading_words[k].len() < n_labels
                })
                .collect();
            if usable.is_empty() {
                return Ok((0.0, vec![vec![0.0; n_labels]; out.logits.len()]));
            }
            let scores: Vec<Vec<f32>> = usable.iter().map(|&k| out.logits[k].clone()).collect();
            let positives: Vec<Vec<usize>> =
                usable.iter().map(|&k| doc.heading_words[k].clone()).collect();
            let l = loss_ranking(&scores, &positives, &cfg.ranking)?;
            let partial = dlogits_ranking(&scores, &positives, &cfg.ranking)?;
            let mut full = vec![vec![0.0f32; n_labels]; out.logits.len()];
            for (row, &k) in partial.into_iter().zip(&usable) {
                full[k] = row;
            }
            Ok((f64::from(l), full))
        }
    }
}

/// Sentence-level mean average precision used for model selection: labels
/// ranked by score per sentence; single-label gold is the one-hot target,
/// multi-label gold the heading-word set (empty sets skipped).
fn sentence_map(
    net: &Network<f32>,
    docs: &[PreparedDoc],
    task: TaskKind,
) -> Result<f64> {
    let per_doc: Vec<Result<(f64, usize)>> = par::map(docs, |doc| {
        let out = forward_doc(net, &doc.inputs, None)?;
        let mut sum = 0.0f64;
        let mut count = 0usize;
        for (k, scores) in out.activations.iter().enumerate() {
            let gold: Vec<usize> = match task {
                TaskKind::Single => vec![doc.labels[k]],
                TaskKind::Multi => doc.heading_words[k].clone(),
            };
            if gold.is_empty() {
                continue;
            }
            let mut ranking: Vec<usize> = (0..scores.len()).collect();
            ranking.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
            let gold_set: std::collections::BTreeSet<usize> = gold.iter().copied().collect();
            let mut hits = 0usize;
            let mut ap = 0.0f64;
            for (pos, &label) in ranking.iter().enumerate() {
                if gold_set.contains(&label) {
                    hits += 1;
                    ap += hits as f64 / (pos + 1) as f64;
                }
            }
            sum += ap / gold_set.len() as f64;
            count += 1;
        }
        Ok((sum, count))
    });
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for r in per_doc {
        let (s, c) = r?;
        sum += s;
        count += c;
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Train a model on the split's train documents, selecting the snapshot with
/// the best validation MAP and stopping after `patience` epochs without
/// improvement.
pub fn train(
    split: &CorpusSplit,
    encoder: SentenceEncoder,
    task: TaskKind,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if split.train.is_empty() {
        return Err(Error::Corpus("training split is empty".into()));
    }
    if cfg.patience == 0 {
        return Err(Error::Config("patience must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&cfg.dropout) {
        return Err(Error::Config("dropout must be in [0, 1)".into()));
    }
    let label_vocab = LabelVocab::from_documents(&split.train);
    let heading_vocab = HeadingVocab::from_documents(&split.train, cfg.heading_min_frequency);
    let labels: Vec<String> = match task {
        TaskKind::Single => label_vocab.labels().to_vec(),
        TaskKind::Multi => heading_vocab.words().to_vec(),
    };
    if labels.is_empty() {
        return Err(Error::Corpus("no output labels derived from the training split".into()));
    }
    let loss = cfg.effective_loss(task);

    let train_docs = prepare(&split.train, &encoder, &label_vocab, &heading_vocab);
    let val_docs = prepare(&split.validation, &encoder, &label_vocab, &heading_vocab);

    let mut net: Network<f32> = Network::init(
        encoder.dim(),
        cfg.hidden,
        cfg.embedding,
        labels.len(),
        task,
        &mut SplitMix64::derive(cfg.seed, &[STREAM_INIT]),
    );
    let mut optimizer = Adam::new(
        &net.tensors(),
        cfg.learning_rate,
        cfg.beta1,
        cfg.beta2,
        cfg.epsilon,
    );

    let mut log: Vec<EpochLog> = Vec::new();
    let mut best_net = net.clone();
    let mut best_val_map = f64::NEG_INFINITY;
    let mut best_epoch = 0usize;
    let mut epochs_since_improvement = 0usize;

    for epoch in 1..=cfg.max_epochs {
        let mut order: Vec<usize> = (0..train_docs.len()).collect();
        SplitMix64::derive(cfg.seed, &[STREAM_SHUFFLE, epoch as u64]).shuffle(&mut order);

        let mut epoch_loss = 0.0f64;
        let mut docs_seen = 0usize;
        for batch in order.chunks(cfg.batch_size.max(1)) {
            let results: Vec<Result<(f64, Gradients<f32>)>> = par::map(batch, |&doc_idx| {
                let doc = &train_docs[doc_idx];
                let mut rng =
                    SplitMix64::derive(cfg.seed, &[STREAM_DROPOUT, epoch as u64, doc_idx as u64]);
                let dropout = if cfg.dropout > 0.0 {
                    Some((cfg.dropout, &mut rng))
                } else {
                    None
                };
                let out = forward_doc(&net, &doc.inputs, dropout)?;
                let (loss_value, d_logits) =
                    doc_loss_and_dlogits(&out, doc, loss, cfg, labels.len())?;
                let grads = backward_doc(&net, &out, &d_logits);
                Ok((loss_value, grads))
            });

            // Deterministic reduction in batch order.
            let mut batch_grads: Option<Gradients<f32>> = None;
            let mut batch_loss = 0.0f64;
            let mut batch_docs = 0usize;
            for r in results {
                let (l, g) = r?;
                if !l.is_finite() {
                    return Err(Error::Numeric(format!(
                        "training diverged at epoch {epoch}: non-finite loss"
                    )));
                }
                batch_loss += l;
                batch_docs += 1;
                match &mut batch_grads {
                    None => batch_grads = Some(g),
                    Some(acc) => acc.add_assign(&g),
                }
            }
            let Some(mut grads) = batch_grads else { continue };
            grads.scale(1.0f32 / batch_docs as f32);
            optimizer.step(&mut net.tensors_mut(), &grads.tensors());
            epoch_loss += batch_loss;
            docs_seen += batch_docs;
        }
        let train_loss = epoch_loss / docs_seen.max(1) as f64;
        if !train_loss.is_finite() {
            return Err(Error::Numeric(format!(
                "training diverged at epoch {epoch}: loss {train_loss}"
            )));
        }

        let val_map = sentence_map(&net, &val_docs, task)?;
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        info!("epoch {epoch}: train loss {train_loss:.6}, validation MAP {val_map:.4}");
        log.push(EpochLog {
            epoch,
            train_loss,
            val_map,
            timestamp,
        });

        if val_map > best_val_map + 1e-12 {
            best_val_map = val_map;
            best_net = net.clone();
            best_epoch = epoch;
            epochs_since_improvement = 0;
        } else {
            epochs_since_improvement += 1;
            if epochs_since_improvement >= cfg.patience {
                break;
            }
        }
    }

    Ok(TrainOutcome {
        model: SectorModel {
            net: best_net,
            labels,
            encoder,
        },
        log,
        best_epoch,
        best_val_map: best_val_map.max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, split_corpus, SyntheticConfig};
    use crate::encode::{EncoderConfig, EncoderKind};

    fn tiny_synthetic_split(seed: u64) -> CorpusSplit {
        let cfg = SyntheticConfig {
            topics: 3,
            words_per_topic: 10,
            documents: 12,
            segment_sentences: (3, 5),
            segments_per_document: (2, 3),
            words_per_sentence: (4, 7),
            concentration: 1.0,
            seed,
        };
        split_corpus(generate_synthetic(&cfg), seed).unwrap()
    }

    fn tiny_train_config() -> TrainConfig {
        TrainConfig {
            hidden: 8,
            embedding: 4,
            batch_size: 4,
            learning_rate: 0.01,
            dropout: 0.5,
            patience: 2,
            max_epochs: 3,
            seed: 7,
            ..Default::default()
        }
    }

    fn fit_bow(split: &CorpusSplit) -> SentenceEncoder {
        SentenceEncoder::fit(
            &EncoderConfig {
                variant: EncoderKind::Bow,
                ..Default::default()
            },
            &split.train,
            None,
        )
        .unwrap()
    }

    #[test]
    fn same_seed_gives_identical_parameters() {
        let split = tiny_synthetic_split(3);
        let cfg = tiny_train_config();
        let a = train(&split, fit_bow(&split), TaskKind::Single, &cfg).unwrap();
        let b = train(&split, fit_bow(&split), TaskKind::Single, &cfg).unwrap();
        assert_eq!(a.model.net, b.model.net);
        assert_eq!(a.log.len(), b.log.len());
        for (x, y) in a.log.iter().zip(&b.log) {
            assert_eq!(x.train_loss, y.train_loss);
            assert_eq!(x.val_map, y.val_map);
        }
    }

    #[test]
    fn patience_one_with_worsening_validation_stops_after_two_epochs() {
        // With patience 1, as soon as one epoch fails to improve the first
        // epoch's MAP the loop stops: exactly 2 epochs when MAP never rises.
        let split = tiny_synthetic_split(5);
        // An untrainable setup: learning rate 0 freezes the network, so
        // validation MAP is constant and never improves after epoch 1.
        let cfg = TrainConfig {
            learning_rate: 0.0,
            patience: 1,
            max_epochs: 50,
            ..tiny_train_config()
        };
        let out = train(&split, fit_bow(&split), TaskKind::Single, &cfg).unwrap();
        assert_eq!(out.log.len(), 2);
        assert_eq!(out.best_epoch, 1);
    }

    #[test]
    fn loss_is_non_increasing_over_first_steps_full_batch() {
        // Full-batch steps with a small learning rate and no dropout on the
        // synthetic fixture: the training loss must not increase over the
        // first 5 steps.
        let split = tiny_synthetic_split(11);
        let cfg = TrainConfig {
            batch_size: usize::MAX,
            learning_rate: 1e-3,
            dropout: 0.0,
            max_epochs: 5,
            patience: 50,
            ..tiny_train_config()
        };
        let out = train(&split, fit_bow(&split), TaskKind::Single, &cfg).unwrap();
        let losses: Vec<f64> = out.log.iter().map(|l| l.train_loss).collect();
        assert_eq!(losses.len(), 5);
        for pair in losses.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-9,
                "loss increased: {losses:?}"
            );
        }
    }

    #[test]
    fn multi_task_trains_with_bce_and_ranking() {
        let split = tiny_synthetic_split(13);
        for loss in [None, Some(LossKind::Ranking)] {
            let cfg = TrainConfig {
                loss,
                max_epochs: 2,
                ..tiny_train_config()
            };
            let out = train(&split, fit_bow(&split), TaskKind::Multi, &cfg).unwrap();
            assert_eq!(out.model.task(), TaskKind::Multi);
            assert!(!out.model.labels.is_empty());
        }
    }
}
