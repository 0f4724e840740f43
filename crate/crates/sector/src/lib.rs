//! Topic segmentation and classification with latent topic embeddings.
//!
//! The pipeline turns plain-text documents into labeled sections:
//!
//! 1. [`corpus`] loads documents with gold section annotations (or generates
//!    synthetic ones) and derives per-sentence training targets.
//! 2. [`normalize`] reduces raw heading variance to a small label set via
//!    synset-graph community detection and head/tail pruning.
//! 3. [`encode`] maps sentences to fixed-size vectors (TF-IDF bag-of-words,
//!    Bloom filter counts, or SIF-weighted word embeddings).
//! 4. [`topicnet`] trains a bidirectional LSTM with a shared tanh bottleneck
//!    that produces per-sentence topic embeddings and label scores.
//! 5. [`segment`] converts embeddings and scores into a section partition
//!    (newline and max-label baselines, embedding-deviation strategies).
//! 6. [`eval`] scores predictions with Pk, micro-F1, P@1 and MAP.
//!
//! Batch operations fan out over rayon when the `parallel` feature (default)
//! is enabled; outputs are ordered deterministically either way.

pub mod corpus;
pub mod encode;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod normalize;
pub mod par;
pub mod pipeline;
pub mod rng;
pub mod segment;
pub mod topicnet;

pub use error::{Error, Result};
