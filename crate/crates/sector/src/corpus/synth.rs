//! Synthetic corpus generation for desk-scale experiments.
//!
//! Each document is a sequence of segments; a segment draws a topic (always
//! different from its predecessor), a length, and sentences whose words come
//! from the topic's multinomial. Headings and labels are the topic name, and
//! segment ends carry newline marks, so every downstream stage can run on the
//! output.

use super::{Document, Sentence, SectionAnnotation};
use crate::rng::SplitMix64;

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    /// Number of topics (>= 2).
    pub topics: usize,
    /// Words in each topic's own vocabulary block.
    pub words_per_topic: usize,
    pub documents: usize,
    /// Sentences per segment, inclusive range.
    pub segment_sentences: (usize, usize),
    /// Segments per document, inclusive range.
    pub segments_per_document: (usize, usize),
    /// Words per sentence, inclusive range.
    pub words_per_sentence: (usize, usize),
    /// Probability that a word is drawn from the segment topic's own block;
    /// the rest is spread uniformly over the whole vocabulary. 1.0 gives one
    /// disjoint word set per topic.
    pub concentration: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            topics: 5,
            words_per_topic: 40,
            documents: 50,
            segment_sentences: (5, 10),
            segments_per_document: (4, 7),
            words_per_sentence: (6, 12),
            concentration: 1.0,
            seed: 1,
        }
    }
}

/// Stable topic name: `topica`, `topicb`, ..., `topicaa`, ... One token under
/// the corpus tokenizer.
pub(crate) fn topic_name(index: usize) -> String {
    let mut suffix = String::new();
    let mut i = index;
    loop {
        suffix.insert(0, (b'a' + (i % 26) as u8) as char);
        i /= 26;
        if i == 0 {
            break;
        }
        i -= 1;
    }
    format!("topic{suffix}")
}

fn word(topic: usize, index: usize) -> String {
    format!("t{topic}w{index}")
}

fn sample_word(cfg: &SyntheticConfig, topic: usize, rng: &mut SplitMix64) -> String {
    if rng.next_f64() < cfg.concentration {
        word(topic, rng.below(cfg.words_per_topic))
    } else {
        let t = rng.below(cfg.topics);
        word(t, rng.below(cfg.words_per_topic))
    }
}

/// Generate a deterministic synthetic corpus. Identical config (including
/// seed) reproduces the corpus byte for byte.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Vec<Document> {
    assert!(cfg.topics >= 2, "need at least 2 topics");
    assert!(cfg.words_per_topic >= 1);
    let mut docs = Vec::with_capacity(cfg.documents);
    for d in 0..cfg.documents {
        let mut rng = SplitMix64::derive(cfg.seed, &[0x73796e, d as u64]);
        let n_segments = rng.range_inclusive(cfg.segments_per_document.0, cfg.segments_per_document.1);
        let mut sentences: Vec<Sentence> = Vec::new();
        let mut sections: Vec<SectionAnnotation> = Vec::new();
        let mut prev_topic: Option<usize> = None;
        for _ in 0..n_segments {
            let topic = loop {
                let t = rng.below(cfg.topics);
                if Some(t) != prev_topic {
                    break t;
                }
            };
            prev_topic = Some(topic);
            let begin = sentences.len();
            let n_sents = rng.range_inclusive(cfg.segment_sentences.0, cfg.segment_sentences.1);
            for s in 0..n_sents {
                let n_words = rng.range_inclusive(cfg.words_per_sentence.0, cfg.words_per_sentence.1);
                let words: Vec<String> = (0..n_words)
                    .map(|_| sample_word(cfg, topic, &mut rng))
                    .collect();
                let mut text = words.join(" ");
                // Capitalize the first word so the sentence splitter can
                // re-find the boundary on reload, and end with a period.
                text[..1].make_ascii_uppercase();
                text.push('.');
                let last = s + 1 == n_sents;
                sentences.push(Sentence {
                    tokens: words,
                    text,
                    followed_by_newline: last,
                });
            }
            let name = topic_name(topic);
            sections.push(SectionAnnotation {
                begin_sentence: begin,
                end_sentence: sentences.len(),
                heading: name.clone(),
                topic_label: Some(name),
            });
        }
        // No newline after the final sentence of a document.
        if let Some(last) = sentences.last_mut() {
            last.followed_by_newline = false;
        }
        let id = format!("synth-{d:04}");
        docs.push(
            Document::new(id.clone(), id, sentences, sections)
                .expect("synthetic document satisfies the partition invariant"),
        );
    }
    docs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_topics_have_disjoint_word_sets() {
        let cfg = SyntheticConfig {
            documents: 6,
            concentration: 1.0,
            ..Default::default()
        };
        let docs = generate_synthetic(&cfg);
        for doc in &docs {
            for sec in &doc.sections {
                let topic = sec.heading.clone();
                let t = doc
                    .sentences[sec.begin_sentence]
                    .tokens[0]
                    .strip_prefix('t')
                    .and_then(|s| s.split('w').next())
                    .unwrap()
                    .to_string();
                for k in sec.begin_sentence..sec.end_sentence {
                    for tok in &doc.sentences[k].tokens {
                        assert!(tok.starts_with(&format!("t{t}w")), "{tok} in section {topic}");
                    }
                }
            }
        }
    }

    #[test]
    fn adjacent_segments_differ_so_boundaries_equal_segments_minus_one() {
        let cfg = SyntheticConfig {
            topics: 2,
            documents: 8,
            ..Default::default()
        };
        for doc in generate_synthetic(&cfg) {
            for pair in doc.sections.windows(2) {
                assert_ne!(pair[0].label(), pair[1].label());
            }
            let boundaries = doc.sections.len() - 1;
            let marks = doc.newline_marks().iter().filter(|&&m| m).count();
            assert_eq!(marks, boundaries);
        }
    }

    #[test]
    fn fixed_seed_reproduces_identical_corpus() {
        let cfg = SyntheticConfig::default();
        let a = generate_synthetic(&cfg);
        let b = generate_synthetic(&cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn serialized_corpus_matches_golden_hash() {
        // Pins byte-level stability of generation + serialization across
        // runs, platforms and toolchains.
        let cfg = SyntheticConfig {
            documents: 3,
            ..Default::default()
        };
        let docs = generate_synthetic(&cfg);
        let dir = std::env::temp_dir().join(format!(
            "sector-synth-golden-{}-{:?}",
            std::process::id(),
            std::thread::current().id()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("golden.json");
        crate::corpus::save_wikisection(&docs, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let digest = crate::encode::murmur3_x64_128(&bytes, 0);
        assert_eq!(digest, (0x49fd50eb40cecba4, 0x2e937d434d4639db));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn topic_names_are_single_tokens() {
        assert_eq!(topic_name(0), "topica");
        assert_eq!(topic_name(25), "topicz");
        assert_eq!(topic_name(26), "topicaa");
        assert_eq!(super::super::tokenize(&topic_name(27)), vec![topic_name(27)]);
    }
}
