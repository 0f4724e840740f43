//! Documents, section annotations, vocabularies and training targets.
//!
//! A [`Document`] is an ordered list of sentences plus contiguous section
//! annotations that partition the sentence range. The partition invariant is
//! checked on every construction path (loader, synthesizer, tests).

mod load;
mod synth;

pub use load::{
    load_wikisection, load_wikisection_with, save_wikisection, split_sentences, tokenize,
    LoadOptions,
};
pub use synth::{generate_synthetic, SyntheticConfig};

use std::collections::{BTreeMap, HashMap};

use crate::{Error, Result};

/// Reserved label for unmapped or pruned headings.
pub const OTHER_LABEL: &str = "other";

/// One sentence: original text, lowercase tokens, and whether the source text
/// had a newline after it (consumed by the newline segmentation baseline).
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Sentence {
    pub text: String,
    pub tokens: Vec<String>,
    pub followed_by_newline: bool,
}

impl Sentence {
    /// Build a sentence from raw text; returns `None` if it has no tokens.
    pub fn from_text(text: &str, followed_by_newline: bool) -> Option<Self> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return None;
        }
        Some(Sentence {
            text: text.trim().to_string(),
            tokens,
            followed_by_newline,
        })
    }
}

/// A gold section: a sentence span `[begin, end)`, the raw heading path and
/// an optional normalized topic label.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SectionAnnotation {
    pub begin_sentence: usize,
    pub end_sentence: usize,
    pub heading: String,
    pub topic_label: Option<String>,
}

impl SectionAnnotation {
    /// The normalized label, falling back to `other` when absent.
    pub fn label(&self) -> &str {
        self.topic_label.as_deref().unwrap_or(OTHER_LABEL)
    }

    pub fn len(&self) -> usize {
        self.end_sentence - self.begin_sentence
    }

    pub fn is_empty(&self) -> bool {
        self.begin_sentence >= self.end_sentence
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub sentences: Vec<Sentence>,
    pub sections: Vec<SectionAnnotation>,
}

impl Document {
    /// Construct and validate: at least one sentence, and section spans that
    /// partition `[0, N)` contiguously.
    pub fn new(
        id: String,
        title: String,
        sentences: Vec<Sentence>,
        sections: Vec<SectionAnnotation>,
    ) -> Result<Self> {
        let n = sentences.len();
        if n == 0 {
            return Err(Error::document(&id, "document has no sentences"));
        }
        if sections.is_empty() {
            return Err(Error::document(&id, "document has no sections"));
        }
        let mut expected = 0usize;
        for (i, sec) in sections.iter().enumerate() {
            if sec.begin_sentence != expected {
                return Err(Error::document(
                    &id,
                    format!(
                        "section {i} begins at sentence {} but {} expected",
                        sec.begin_sentence, expected
                    ),
                ));
            }
            if sec.is_empty() {
                return Err(Error::document(&id, format!("section {i} is empty")));
            }
            expected = sec.end_sentence;
        }
        if expected != n {
            return Err(Error::document(
                &id,
                format!("sections cover {expected} of {n} sentences"),
            ));
        }
        Ok(Document {
            id,
            title,
            sentences,
            sections,
        })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Section index containing the given sentence.
    pub fn section_of(&self, sentence: usize) -> usize {
        self.sections
            .iter()
            .position(|s| sentence >= s.begin_sentence && sentence < s.end_sentence)
            .expect("sentence outside section partition")
    }

    /// Newline marks per sentence.
    pub fn newline_marks(&self) -> Vec<bool> {
        self.sentences.iter().map(|s| s.followed_by_newline).collect()
    }
}

/// Ordered topic label set including the reserved `other` label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVocab {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelVocab {
    pub fn new(mut labels: Vec<String>) -> Self {
        if !labels.iter().any(|l| l == OTHER_LABEL) {
            labels.push(OTHER_LABEL.to_string());
        }
        labels.sort();
        labels.dedup();
        let index = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        LabelVocab { labels, index }
    }

    /// Collect every section label of the given documents (plus `other`).
    pub fn from_documents(docs: &[Document]) -> Self {
        let labels = docs
            .iter()
            .flat_map(|d| d.sections.iter().map(|s| s.label().to_string()))
            .collect();
        Self::new(labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Index of the label, collapsing unknown labels to `other`.
    pub fn index_or_other(&self, label: &str) -> usize {
        self.index_of(label).unwrap_or_else(|| self.other_index())
    }

    pub fn other_index(&self) -> usize {
        self.index[OTHER_LABEL]
    }
}

/// Lowercase heading-word vocabulary for the multi-label task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadingVocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
    pub min_frequency: usize,
}

impl HeadingVocab {
    /// Count heading words over all sections of the given documents and keep
    /// those occurring at least `min_frequency` times.
    pub fn from_documents(docs: &[Document], min_frequency: usize) -> Self {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for doc in docs {
            for sec in &doc.sections {
                for word in tokenize(&sec.heading) {
                    *counts.entry(word).or_insert(0) += 1;
                }
            }
        }
        let words: Vec<String> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_frequency)
            .map(|(w, _)| w)
            .collect();
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        HeadingVocab {
            words,
            index,
            min_frequency,
        }
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

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }
}

/// Per-sentence training targets: a one-hot topic label index and the sorted
/// in-vocabulary heading-word indices of the enclosing section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceTarget {
    pub label: usize,
    pub heading_words: Vec<usize>,
}

/// Derive per-sentence targets: each sentence inherits its section's label and
/// heading-word bag. Heading words below the vocabulary threshold are absent;
/// section labels unknown to the vocabulary collapse to `other`.
pub fn sentence_targets(
    doc: &Document,
    labels: &LabelVocab,
    headings: &HeadingVocab,
) -> Vec<SentenceTarget> {
    let mut out = Vec::with_capacity(doc.len());
    for sec in &doc.sections {
        let label = labels.index_or_other(sec.label());
        let mut words: Vec<usize> = tokenize(&sec.heading)
            .iter()
            .filter_map(|w| headings.index_of(w))
            .collect();
        words.sort_unstable();
        words.dedup();
        for _ in sec.begin_sentence..sec.end_sentence {
            out.push(SentenceTarget {
                label,
                heading_words: words.clone(),
            });
        }
    }
    out
}

/// Train/validation/test split with the seed that produced it.
#[derive(Debug, Clone)]
pub struct CorpusSplit {
    pub train: Vec<Document>,
    pub validation: Vec<Document>,
    pub test: Vec<Document>,
    pub seed: u64,
}

impl CorpusSplit {
    pub fn total(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }
}

/// Shuffle documents deterministically by `(id set, seed)` and split them
/// 70/10/20 (sizes rounded half-up, remainder to the test set).
pub fn split_corpus(docs: Vec<Document>, seed: u64) -> Result<CorpusSplit> {
    if docs.len() < 10 {
        return Err(Error::Corpus(format!(
            "need at least 10 documents to split, got {}",
            docs.len()
        )));
    }
    let mut docs = docs;
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    for pair in docs.windows(2) {
        if pair[0].id == pair[1].id {
            return Err(Error::Corpus(format!("duplicate document id {}", pair[0].id)));
        }
    }
    let mut rng = crate::rng::SplitMix64::derive(seed, &[u64::from_be_bytes(*b"split\0\0\0")]);
    rng.shuffle(&mut docs);

    let n = docs.len();
    let n_train = (n as f64 * 0.7).round() as usize;
    let n_val = ((n as f64 * 0.1).round() as usize).max(1);
    let test_docs = docs.split_off(n_train + n_val);
    let val_docs = docs.split_off(n_train);
    Ok(CorpusSplit {
        train: docs,
        validation: val_docs,
        test: test_docs,
        seed,
    })
}
