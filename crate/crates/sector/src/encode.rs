//! Sentence encoders: TF-IDF bag-of-words, Bloom filter counts, and
//! SIF-weighted word-embedding composition.
//!
//! All encoders are pure functions of `(sentence, fitted state)`; fitted
//! states are immutable and safe to share across threads.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use log::warn;

use crate::corpus::{Document, Sentence};
use crate::linalg;
use crate::{Error, Result};

/// Encoder variant tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    Bow,
    Bloom,
    Emb,
}

impl std::fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EncoderKind::Bow => "bow",
            EncoderKind::Bloom => "bloom",
            EncoderKind::Emb => "emb",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for EncoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bow" => Ok(EncoderKind::Bow),
            "bloom" => Ok(EncoderKind::Bloom),
            "emb" => Ok(EncoderKind::Emb),
            other => Err(Error::Config(format!("unknown encoder variant '{other}'"))),
        }
    }
}

/// Encoder hyperparameters with the published defaults.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct EncoderConfig {
    pub variant: EncoderKind,
    /// Bloom array size m.
    pub bloom_size: usize,
    /// Bloom hash count k.
    pub bloom_hashes: usize,
    /// SIF weighting parameter alpha.
    pub sif_alpha: f64,
    /// Bag-of-words vocabulary cap.
    pub max_vocab: usize,
    /// Bag-of-words minimal word count.
    pub min_count: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            variant: EncoderKind::Bloom,
            bloom_size: 4096,
            bloom_hashes: 5,
            sif_alpha: 1e-4,
            max_vocab: 50_000,
            min_count: 1,
        }
    }
}

/// A fixed-size sentence vector tagged with the encoder that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceVector {
    pub values: Vec<f32>,
    pub kind: EncoderKind,
}

impl SentenceVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

// ---------------------------------------------------------------------------
// Stable hashing for the Bloom encoder.
// ---------------------------------------------------------------------------

/// MurmurHash3 x64 128-bit (public domain reference algorithm). Used with a
/// fixed seed so Bloom vectors are identical across runs and platforms.
pub fn murmur3_x64_128(data: &[u8], seed: u64) -> (u64, u64) {
    const C1: u64 = 0x87c3_7b91_1142_53d5;
    const C2: u64 = 0x4cf5_ad43_2745_937f;
    let mut h1 = seed;
    let mut h2 = seed;
    let n_blocks = data.len() / 16;

    for i in 0..n_blocks {
        let k1 = u64::from_le_bytes(data[i * 16..i * 16 + 8].try_into().unwrap());
        let k2 = u64::from_le_bytes(data[i * 16 + 8..i * 16 + 16].try_into().unwrap());
        h1 ^= k1.wrapping_mul(C1).rotate_left(31).wrapping_mul(C2);
        h1 = h1
            .rotate_left(27)
            .wrapping_add(h2)
            .wrapping_mul(5)
            .wrapping_add(0x52dce729);
        h2 ^= k2.wrapping_mul(C2).rotate_left(33).wrapping_mul(C1);
        h2 = h2
            .rotate_left(31)
            .wrapping_add(h1)
            .wrapping_mul(5)
            .wrapping_add(0x38495ab5);
    }

    let tail = &data[n_blocks * 16..];
    let mut k1: u64 = 0;
    let mut k2: u64 = 0;
    for (i, &b) in tail.iter().enumerate() {
        if i < 8 {
            k1 |= (b as u64) << (8 * i);
        } else {
            k2 |= (b as u64) << (8 * (i - 8));
        }
    }
    if !tail.is_empty() {
        if tail.len() > 8 {
            h2 ^= k2.wrapping_mul(C2).rotate_left(33).wrapping_mul(C1);
        }
        h1 ^= k1.wrapping_mul(C1).rotate_left(31).wrapping_mul(C2);
    }

    h1 ^= data.len() as u64;
    h2 ^= data.len() as u64;
    h1 = h1.wrapping_add(h2);
    h2 = h2.wrapping_add(h1);
    h1 = fmix64(h1);
    h2 = fmix64(h2);
    h1 = h1.wrapping_add(h2);
    h2 = h2.wrapping_add(h1);
    (h1, h2)
}

fn fmix64(mut k: u64) -> u64 {
    k ^= k >> 33;
    k = k.wrapping_mul(0xff51_afd7_ed55_8ccd);
    k ^= k >> 33;
    k = k.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    k ^= k >> 33;
    k
}

const BLOOM_HASH_SEED: u64 = 0;

/// Bloom count encoding: each token increments `k` positions obtained by
/// double hashing `pos_i = (h1 + i * h2) mod m`, where `(h1, h2)` are the two
/// halves of a fixed-seed 128-bit hash of the token bytes. Vocabulary-free.
pub fn encode_bloom(sentence: &Sentence, m: usize, k: usize) -> SentenceVector {
    assert!(m >= 1 && k >= 1, "bloom parameters must be positive");
    let mut values = vec![0.0f32; m];
    for token in &sentence.tokens {
        let (h1, h2) = murmur3_x64_128(token.as_bytes(), BLOOM_HASH_SEED);
        for i in 0..k {
            let pos = (h1.wrapping_add((i as u64).wrapping_mul(h2)) % m as u64) as usize;
            values[pos] += 1.0;
        }
    }
    SentenceVector {
        values,
        kind: EncoderKind::Bloom,
    }
}

// ---------------------------------------------------------------------------
// Bag-of-words.
// ---------------------------------------------------------------------------

/// Fitted vocabulary with document frequencies, IDF weights and unigram
/// probabilities over the kept words.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
    idf: Vec<f32>,
    prob: Vec<f64>,
    doc_count: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn idf(&self, index: usize) -> f32 {
        self.idf[index]
    }

    /// Unigram probability of the word; probabilities over the vocabulary sum
    /// to one.
    pub fn prob(&self, index: usize) -> f64 {
        self.prob[index]
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub(crate) fn from_parts(words: Vec<String>, idf: Vec<f32>, prob: Vec<f64>, doc_count: usize) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocabulary {
            words,
            index,
            idf,
            prob,
            doc_count,
        }
    }
}

/// Fit a vocabulary on training documents: words ranked by frequency (ties
/// alphabetical), hapax control via `min_count`, capped at `max_size`.
/// IDF = ln((1 + |D|) / (1 + df)) + 1.
pub fn fit_vocabulary(docs: &[Document], max_size: usize, min_count: usize) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::Encoder("cannot fit vocabulary on an empty corpus".into()));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut doc_freq: HashMap<String, u32> = HashMap::new();
    for doc in docs {
        let mut seen: std::collections::HashSet<&String> = std::collections::HashSet::new();
        for sentence in &doc.sentences {
            for token in &sentence.tokens {
                *counts.entry(token.clone()).or_insert(0) += 1;
                if seen.insert(token) {
                    *doc_freq.entry(token.clone()).or_insert(0) += 1;
                }
            }
        }
    }

    let mut ranked: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_count as u64)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_size);
    if ranked.is_empty() {
        return Err(Error::Encoder("vocabulary is empty after thresholding".into()));
    }

    let total: u64 = ranked.iter().map(|(_, c)| c).sum();
    let n_docs = docs.len();
    let words: Vec<String> = ranked.iter().map(|(w, _)| w.clone()).collect();
    let idf: Vec<f32> = words
        .iter()
        .map(|w| {
            let df = doc_freq.get(w).copied().unwrap_or(0) as f64;
            (((1.0 + n_docs as f64) / (1.0 + df)).ln() + 1.0) as f32
        })
        .collect();
    let prob: Vec<f64> = ranked.iter().map(|(_, c)| *c as f64 / total as f64).collect();
    Ok(Vocabulary::from_parts(words, idf, prob, n_docs))
}

/// Sparse TF-IDF bag-of-words: every token occurrence adds its word's IDF
/// weight at the word's index; out-of-vocabulary tokens are skipped.
pub fn encode_bow(sentence: &Sentence, vocab: &Vocabulary) -> SentenceVector {
    let mut values = vec![0.0f32; vocab.len()];
    for token in &sentence.tokens {
        if let Some(i) = vocab.index_of(token) {
            values[i] += vocab.idf(i);
        }
    }
    SentenceVector {
        values,
        kind: EncoderKind::Bow,
    }
}

// ---------------------------------------------------------------------------
// Word embeddings + SIF.
// ---------------------------------------------------------------------------

/// Dense word vectors loaded from the text format
/// `count dim\nword v1 ... vd\n...`.
#[derive(Debug, Clone)]
pub struct WordEmbeddingStore {
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<Vec<f32>>,
    dim: usize,
}

impl WordEmbeddingStore {
    pub fn new(dim: usize) -> Self {
        WordEmbeddingStore {
            words: Vec::new(),
            index: HashMap::new(),
            vectors: Vec::new(),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Insert a vector; the first occurrence of a duplicate word wins.
    pub fn insert(&mut self, word: &str, vector: Vec<f32>) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::Encoder(format!(
                "vector for '{word}' has dimension {} but store is {}",
                vector.len(),
                self.dim
            )));
        }
        if self.index.contains_key(word) {
            return Ok(false);
        }
        self.index.insert(word.to_string(), self.words.len());
        self.words.push(word.to_string());
        self.vectors.push(vector);
        Ok(true)
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.index.get(word).map(|&i| self.vectors[i].as_slice())
    }

    pub fn vector(&self, index: usize) -> &[f32] {
        &self.vectors[index]
    }
}

/// Load word embeddings from the text format; errors name the line.
pub fn load_word_embeddings(path: impl AsRef<Path>) -> Result<WordEmbeddingStore> {
    let file = std::fs::File::open(path.as_ref())?;
    read_word_embeddings(std::io::BufReader::new(file))
}

pub fn read_word_embeddings(reader: impl BufRead) -> Result<WordEmbeddingStore> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Encoder("embedding file is empty".into()))??;
    let mut parts = header.split_whitespace();
    let count: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Encoder("line 1: bad count in header".into()))?;
    let dim: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Encoder("line 1: bad dimension in header".into()))?;
    let mut store = WordEmbeddingStore::new(dim);
    let mut duplicates = 0usize;
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let word = fields
            .next()
            .ok_or_else(|| Error::Encoder(format!("line {lineno}: missing word")))?;
        let vector: Vec<f32> = fields
            .map(|v| {
                v.parse::<f32>()
                    .map_err(|_| Error::Encoder(format!("line {lineno}: bad float '{v}'")))
            })
            .collect::<Result<_>>()?;
        if vector.len() != dim {
            return Err(Error::Encoder(format!(
                "line {lineno}: {} values but dimension is {dim}",
                vector.len()
            )));
        }
        if !store.insert(word, vector)? {
            duplicates += 1;
        }
    }
    if duplicates > 0 {
        warn!("embedding file: {duplicates} duplicate words ignored (first occurrence wins)");
    }
    if store.len() != count {
        warn!(
            "embedding file: header declares {count} words but {} were read",
            store.len()
        );
    }
    Ok(store)
}

/// Write the store in the same text format (round-trips through the loader).
pub fn save_word_embeddings(store: &WordEmbeddingStore, mut writer: impl Write) -> Result<()> {
    writeln!(writer, "{} {}", store.len(), store.dim())?;
    for (i, word) in store.words().iter().enumerate() {
        write!(writer, "{word}")?;
        for v in store.vector(i) {
            write!(writer, " {v}")?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

/// Fitted SIF state: per-word weights and the first principal direction of
/// the training sentence matrix, frozen for inference.
#[derive(Debug, Clone)]
pub struct SifState {
    /// alpha / (alpha + p(w)) per word, keyed like the embedding store.
    weights: HashMap<String, f64>,
    pub alpha: f64,
    /// First right singular vector of the stacked sentence matrix.
    pub principal: Vec<f64>,
}

impl SifState {
    pub fn weight(&self, word: &str) -> f64 {
        // Words unseen in training have p(w) = 0, hence weight 1.
        self.weights.get(word).copied().unwrap_or(1.0)
    }

    pub(crate) fn from_parts(weights: HashMap<String, f64>, alpha: f64, principal: Vec<f64>) -> Self {
        SifState {
            weights,
            alpha,
            principal,
        }
    }
}

/// Probability-weighted average of word vectors, before component removal.
/// Out-of-store tokens are skipped; the average divides by the number of
/// contributing tokens. All-OOV sentences give the zero vector.
fn sif_average(sentence: &Sentence, store: &WordEmbeddingStore, state_weight: &dyn Fn(&str) -> f64) -> Vec<f64> {
    let dim = store.dim();
    let mut v = vec![0.0f64; dim];
    let mut used = 0usize;
    for token in &sentence.tokens {
        if let Some(vec) = store.get(token) {
            let w = state_weight(token);
            for (acc, &x) in v.iter_mut().zip(vec) {
                *acc += w * x as f64;
            }
            used += 1;
        }
    }
    if used > 0 {
        for x in &mut v {
            *x /= used as f64;
        }
    }
    v
}

/// Fit the SIF state on training sentences: word probabilities from token
/// counts, weighted-average sentence vectors, then the first principal
/// direction of the (uncentered) stacked matrix.
pub fn fit_sif(
    sentences: &[&Sentence],
    store: &WordEmbeddingStore,
    alpha: f64,
) -> Result<SifState> {
    if sentences.len() < 2 {
        return Err(Error::Encoder("SIF needs at least 2 training sentences".into()));
    }
    if alpha <= 0.0 {
        return Err(Error::Encoder("SIF alpha must be positive".into()));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut total = 0u64;
    for s in sentences {
        for token in &s.tokens {
            *counts.entry(token.clone()).or_insert(0) += 1;
            total += 1;
        }
    }
    let weights: HashMap<String, f64> = counts
        .into_iter()
        .map(|(w, c)| {
            let p = c as f64 / total as f64;
            (w, alpha / (alpha + p))
        })
        .collect();

    let weight_fn = |word: &str| weights.get(word).copied().unwrap_or(1.0);
    let rows: Vec<Vec<f64>> = sentences
        .iter()
        .map(|s| sif_average(s, store, &weight_fn))
        .collect();
    if rows.iter().all(|r| r.iter().all(|&x| x == 0.0)) {
        return Err(Error::Encoder(
            "all training sentences encode to the zero vector (no words in the store)".into(),
        ));
    }
    let svd = linalg::right_singular_vectors(&rows, 1);
    Ok(SifState::from_parts(weights, alpha, svd.right_vectors[0].clone()))
}

/// SIF vector in f64 before the f32 cast: weighted average minus its
/// projection on the principal direction.
pub fn sif_vector_f64(
    sentence: &Sentence,
    store: &WordEmbeddingStore,
    state: &SifState,
) -> Vec<f64> {
    let weight_fn = |word: &str| state.weight(word);
    let mut v = sif_average(sentence, store, &weight_fn);
    let u = &state.principal;
    if !u.is_empty() {
        let proj: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
        for (x, &ui) in v.iter_mut().zip(u) {
            *x -= proj * ui;
        }
    }
    v
}

/// SIF sentence encoding `v_s - u u^T v_s`.
pub fn encode_sif(
    sentence: &Sentence,
    store: &WordEmbeddingStore,
    state: &SifState,
) -> SentenceVector {
    let values = sif_vector_f64(sentence, store, state)
        .into_iter()
        .map(|x| x as f32)
        .collect();
    SentenceVector {
        values,
        kind: EncoderKind::Emb,
    }
}

// ---------------------------------------------------------------------------
// Unified fitted encoder.
// ---------------------------------------------------------------------------

/// Token-level encoding diagnostics.
#[derive(Debug, Default, Clone, Copy)]
pub struct EncodeDiagnostics {
    pub total_tokens: usize,
    pub oov_tokens: usize,
}

/// A fitted sentence encoder, the unit serialized inside model files.
#[derive(Debug, Clone)]
pub enum SentenceEncoder {
    Bow(Vocabulary),
    Bloom { m: usize, k: usize },
    Emb { store: WordEmbeddingStore, sif: SifState },
}

impl SentenceEncoder {
    /// Fit an encoder of the configured variant on the training documents.
    /// The `emb` variant requires a loaded word-embedding store.
    pub fn fit(
        config: &EncoderConfig,
        train: &[Document],
        store: Option<WordEmbeddingStore>,
    ) -> Result<Self> {
        match config.variant {
            EncoderKind::Bow => Ok(SentenceEncoder::Bow(fit_vocabulary(
                train,
                config.max_vocab,
                config.min_count,
            )?)),
            EncoderKind::Bloom => {
                if config.bloom_size < 1 || config.bloom_hashes < 1 {
                    return Err(Error::Encoder("bloom m and k must be at least 1".into()));
                }
                Ok(SentenceEncoder::Bloom {
                    m: config.bloom_size,
                    k: config.bloom_hashes,
                })
            }
            EncoderKind::Emb => {
                let store = store.ok_or_else(|| {
                    Error::Encoder("the emb variant requires a word-embedding store".into())
                })?;
                let sentences: Vec<&Sentence> =
                    train.iter().flat_map(|d| d.sentences.iter()).collect();
                let sif = fit_sif(&sentences, &store, config.sif_alpha)?;
                Ok(SentenceEncoder::Emb { store, sif })
            }
        }
    }

    pub fn kind(&self) -> EncoderKind {
        match self {
            SentenceEncoder::Bow(_) => EncoderKind::Bow,
            SentenceEncoder::Bloom { .. } => EncoderKind::Bloom,
            SentenceEncoder::Emb { .. } => EncoderKind::Emb,
        }
    }

    /// Input dimension of the network fed by this encoder.
    pub fn dim(&self) -> usize {
        match self {
            SentenceEncoder::Bow(v) => v.len(),
            SentenceEncoder::Bloom { m, .. } => *m,
            SentenceEncoder::Emb { store, .. } => store.dim(),
        }
    }

    pub fn encode(&self, sentence: &Sentence) -> SentenceVector {
        match self {
            SentenceEncoder::Bow(vocab) => encode_bow(sentence, vocab),
            SentenceEncoder::Bloom { m, k } => encode_bloom(sentence, *m, *k),
            SentenceEncoder::Emb { store, sif } => encode_sif(sentence, store, sif),
        }
    }

    /// Encode a whole document, counting out-of-vocabulary tokens.
    pub fn encode_document(&self, doc: &Document) -> (Vec<SentenceVector>, EncodeDiagnostics) {
        let mut diag = EncodeDiagnostics::default();
        let vectors = doc
            .sentences
            .iter()
            .map(|s| {
                diag.total_tokens += s.tokens.len();
                diag.oov_tokens += s
                    .tokens
                    .iter()
                    .filter(|t| match self {
                        SentenceEncoder::Bow(v) => v.index_of(t).is_none(),
                        SentenceEncoder::Bloom { .. } => false,
                        SentenceEncoder::Emb { store, .. } => store.get(t).is_none(),
                    })
                    .count();
                self.encode(s)
            })
            .collect();
        (vectors, diag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, SectionAnnotation};

    fn sentence(text: &str) -> Sentence {
        Sentence::from_text(text, false).unwrap()
    }

    fn doc_from_sentences(id: &str, texts: &[&str]) -> Document {
        let sentences: Vec<Sentence> = texts.iter().map(|t| sentence(t)).collect();
        let n = sentences.len();
        Document::new(
            id.to_string(),
            id.to_string(),
            sentences,
            vec![SectionAnnotation {
                begin_sentence: 0,
                end_sentence: n,
                heading: "h".into(),
                topic_label: Some("h".into()),
            }],
        )
        .unwrap()
    }

    #[test]
    fn vocabulary_probabilities_sum_to_one() {
        let docs = vec![doc_from_sentences("d", &["a a b."])];
        let vocab = fit_vocabulary(&docs, 100, 1).unwrap();
        let a = vocab.index_of("a").unwrap();
        assert!((vocab.prob(a) - 2.0 / 3.0).abs() < 1e-12);
        let total: f64 = (0..vocab.len()).map(|i| vocab.prob(i)).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn word_in_every_doc_gets_minimal_idf() {
        let docs = vec![
            doc_from_sentences("d1", &["common rare1."]),
            doc_from_sentences("d2", &["common rare2."]),
        ];
        let vocab = fit_vocabulary(&docs, 100, 1).unwrap();
        let common = vocab.idf(vocab.index_of("common").unwrap());
        let rare = vocab.idf(vocab.index_of("rare1").unwrap());
        assert!(common < rare);
        // idf = ln((1+2)/(1+2)) + 1 = 1 for a word present in both documents.
        assert!((common - 1.0).abs() < 1e-6);
    }

    #[test]
    fn min_count_drops_hapax_words() {
        let docs = vec![doc_from_sentences("d", &["twice twice once."])];
        let vocab = fit_vocabulary(&docs, 100, 2).unwrap();
        assert!(vocab.index_of("twice").is_some());
        assert!(vocab.index_of("once").is_none());
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(fit_vocabulary(&[], 10, 1).is_err());
    }

    #[test]
    fn bow_oov_sentence_is_zero_and_repeats_add() {
        let docs = vec![doc_from_sentences("d", &["alpha beta."])];
        let vocab = fit_vocabulary(&docs, 100, 1).unwrap();
        let zero = encode_bow(&sentence("gamma delta."), &vocab);
        assert!(zero.values.iter().all(|&v| v == 0.0));
        let single = encode_bow(&sentence("alpha."), &vocab);
        let double = encode_bow(&sentence("alpha alpha."), &vocab);
        let i = vocab.index_of("alpha").unwrap();
        assert!((double.values[i] - 2.0 * single.values[i]).abs() < 1e-6);
    }

    #[test]
    fn bow_matches_hand_computed_tfidf() {
        // Two docs; "shared" occurs in both (df=2), "solo" in one (df=1).
        let docs = vec![
            doc_from_sentences("d1", &["shared solo."]),
            doc_from_sentences("d2", &["shared other."]),
        ];
        let vocab = fit_vocabulary(&docs, 100, 1).unwrap();
        let v = encode_bow(&sentence("shared solo."), &vocab);
        let idf_shared = ((1.0f64 + 2.0) / (1.0 + 2.0)).ln() + 1.0;
        let idf_solo = ((1.0f64 + 2.0) / (1.0 + 1.0)).ln() + 1.0;
        assert!((v.values[vocab.index_of("shared").unwrap()] as f64 - idf_shared).abs() < 1e-6);
        assert!((v.values[vocab.index_of("solo").unwrap()] as f64 - idf_solo).abs() < 1e-6);
    }

    #[test]
    fn bloom_l1_norm_is_k_times_tokens() {
        let s = sentence("one two three.");
        let v = encode_bloom(&s, 64, 5);
        let l1: f32 = v.values.iter().sum();
        assert_eq!(l1, 15.0);
        let empty = Sentence {
            text: String::new(),
            tokens: vec![],
            followed_by_newline: false,
        };
        assert!(encode_bloom(&empty, 64, 5).values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn bow_is_linear_under_bag_union() {
        let docs = vec![doc_from_sentences("d", &["alpha beta gamma delta."])];
        let vocab = fit_vocabulary(&docs, 100, 1).unwrap();
        let a = sentence("alpha beta.");
        let b = sentence("beta gamma.");
        let joined = sentence("alpha beta beta gamma.");
        let va = encode_bow(&a, &vocab).values;
        let vb = encode_bow(&b, &vocab).values;
        let vj = encode_bow(&joined, &vocab).values;
        for i in 0..vocab.len() {
            assert!((vj[i] - (va[i] + vb[i])).abs() < 1e-6);
        }
    }

    #[test]
    fn bloom_is_linear_under_bag_union() {
        let a = sentence("alpha beta.");
        let b = sentence("beta gamma.");
        let joined = sentence("alpha beta beta gamma.");
        let va = encode_bloom(&a, 128, 3).values;
        let vb = encode_bloom(&b, 128, 3).values;
        let vj = encode_bloom(&joined, 128, 3).values;
        for i in 0..128 {
            assert_eq!(vj[i], va[i] + vb[i]);
        }
    }

    #[test]
    fn murmur3_matches_reference_vectors() {
        // Values from the mmh3 reference library: hash64("foo"), seed 0 is
        // (-2129773440516405919, 9128664383759220103) as signed halves.
        let (h1, h2) = murmur3_x64_128(b"foo", 0);
        assert_eq!(h1 as i64, -2129773440516405919);
        assert_eq!(h2, 9128664383759220103);
        assert_eq!(murmur3_x64_128(b"", 0), (0, 0));
    }

    #[test]
    fn bloom_golden_hash_is_stable() {
        // 100 deterministic sentences; the digest pins cross-run and
        // cross-platform stability of the hashing scheme.
        let mut bytes: Vec<u8> = Vec::new();
        for i in 0..100 {
            let s = sentence(&format!("word{i} tok{} fixed.", i * 7 % 13));
            for v in encode_bloom(&s, 512, 5).values {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        let (h1, h2) = murmur3_x64_128(&bytes, 0);
        assert_eq!((h1, h2), (0x2478b660fdb8ab70, 0x22b2ffff6752477a));
    }

    fn toy_store() -> WordEmbeddingStore {
        let mut store = WordEmbeddingStore::new(2);
        store.insert("aa", vec![1.0, 0.0]).unwrap();
        store.insert("bb", vec![0.0, 1.0]).unwrap();
        store.insert("cc", vec![1.0, 1.0]).unwrap();
        store
    }

    #[test]
    fn sif_weight_is_half_when_p_equals_alpha() {
        // Two sentences, one word each, so p(w) = 1/2; with alpha = 1/2 the
        // weight alpha/(alpha+p) is exactly 0.5.
        let s1 = sentence("aa.");
        let s2 = sentence("bb.");
        let store = toy_store();
        let state = fit_sif(&[&s1, &s2], &store, 0.5).unwrap();
        assert!((state.weight("aa") - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identical_sentences_make_sif_vanish() {
        let s = sentence("aa bb.");
        let sents: Vec<&Sentence> = vec![&s; 4];
        let store = toy_store();
        let state = fit_sif(&sents, &store, 1e-4).unwrap();
        let v = sif_vector_f64(&s, &store, &state);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm < 1e-9, "norm = {norm}");
    }

    #[test]
    fn sif_output_is_orthogonal_to_principal() {
        let s1 = sentence("aa bb.");
        let s2 = sentence("bb cc.");
        let s3 = sentence("aa cc cc.");
        let store = toy_store();
        let state = fit_sif(&[&s1, &s2, &s3], &store, 1e-4).unwrap();
        for s in [&s1, &s2, &s3] {
            let v = sif_vector_f64(s, &store, &state);
            let dot: f64 = v.iter().zip(&state.principal).map(|(a, b)| a * b).sum();
            let norm_v = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(dot.abs() <= 1e-9 * norm_v.max(1.0), "dot = {dot}");
        }
    }

    #[test]
    fn sif_principal_matches_gram_oracle_on_fixture() {
        // 5 sentences in a 2-D store; compare u against the dominant
        // eigenvector of M^T M computed directly.
        let texts = ["aa bb.", "aa aa bb.", "bb cc.", "cc cc aa.", "aa bb cc."];
        let sentences: Vec<Sentence> = texts.iter().map(|t| sentence(t)).collect();
        let refs: Vec<&Sentence> = sentences.iter().collect();
        let store = toy_store();
        let state = fit_sif(&refs, &store, 1e-2).unwrap();
        let weight_fn = |w: &str| state.weight(w);
        let rows: Vec<Vec<f64>> = refs
            .iter()
            .map(|s| super::sif_average(s, &store, &weight_fn))
            .collect();
        // 2x2 Gram matrix eigenvector, closed form.
        let (mut a, mut b, mut d) = (0.0f64, 0.0f64, 0.0f64);
        for r in &rows {
            a += r[0] * r[0];
            b += r[0] * r[1];
            d += r[1] * r[1];
        }
        let lambda = ((a + d) + ((a - d).powi(2) + 4.0 * b * b).sqrt()) / 2.0;
        let mut u = [b, lambda - a];
        let n = (u[0] * u[0] + u[1] * u[1]).sqrt();
        u[0] /= n;
        u[1] /= n;
        let cos = (u[0] * state.principal[0] + u[1] * state.principal[1]).abs();
        assert!(cos >= 1.0 - 1e-9, "cos = {cos}");
    }

    #[test]
    fn all_zero_sif_corpus_is_an_error() {
        let s1 = sentence("unknown words.");
        let s2 = sentence("more unknown.");
        let store = toy_store();
        assert!(fit_sif(&[&s1, &s2], &store, 1e-4).is_err());
    }

    #[test]
    fn embedding_store_load_and_errors() {
        let text = "2 3\nalpha 1 2 3\nbeta 0.5 -1 2\n";
        let store = read_word_embeddings(std::io::Cursor::new(text)).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.get("alpha"), Some(&[1.0, 2.0, 3.0][..]));

        let bad_dim = "1 3\nalpha 1 2\n";
        let err = read_word_embeddings(std::io::Cursor::new(bad_dim)).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");

        let bad_float = "1 2\nalpha 1 oops\n";
        let err = read_word_embeddings(std::io::Cursor::new(bad_float)).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn embedding_store_round_trips_through_text() {
        let text = "2 3\nalpha 1 2 3\nbeta 0.5 -1 2.25\n";
        let store = read_word_embeddings(std::io::Cursor::new(text)).unwrap();
        let mut buf = Vec::new();
        save_word_embeddings(&store, &mut buf).unwrap();
        let reloaded = read_word_embeddings(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(store.words(), reloaded.words());
        for i in 0..store.len() {
            assert_eq!(store.vector(i), reloaded.vector(i));
        }
    }

    #[test]
    fn duplicate_embedding_words_first_wins() {
        let text = "2 2\nalpha 1 1\nalpha 9 9\n";
        let store = read_word_embeddings(std::io::Cursor::new(text)).unwrap();
        assert_eq!(store.get("alpha"), Some(&[1.0, 1.0][..]));
    }

    #[test]
    fn encoder_dims_match_variant() {
        let docs = vec![doc_from_sentences("d", &["alpha beta gamma."])];
        let bow = SentenceEncoder::fit(
            &EncoderConfig {
                variant: EncoderKind::Bow,
                ..Default::default()
            },
            &docs,
            None,
        )
        .unwrap();
        assert_eq!(bow.dim(), 3);
        let bloom = SentenceEncoder::fit(
            &EncoderConfig {
                variant: EncoderKind::Bloom,
                bloom_size: 128,
                bloom_hashes: 3,
                ..Default::default()
            },
            &docs,
            None,
        )
        .unwrap();
        assert_eq!(bloom.dim(), 128);
    }
}
