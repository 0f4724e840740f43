//! WikiSection JSON loading/saving and sentence splitting.
//!
//! Schema: a top-level array of documents, each with `id`, `title`, `text`
//! and `annotations` of `{begin, length, sectionHeading, sectionLabel}` where
//! `begin`/`length` count Unicode scalar values in `text`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{Document, Sentence, SectionAnnotation};
use crate::{Error, Result};

/// Lowercase tokens split on any non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

/// Raw sentence spans over the char sequence, before token filtering.
/// Splits at newline characters and after sentence-final punctuation followed
/// by whitespace and an uppercase letter or digit.
fn split_spans(chars: &[char]) -> Vec<(usize, usize)> {
    let n = chars.len();
    let mut spans = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < n {
        let c = chars[i];
        if c == '\n' {
            spans.push((start, i));
            start = i + 1;
            i += 1;
        } else if c == '.' || c == '!' || c == '?' {
            let mut j = i + 1;
            while j < n && chars[j] != '\n' && chars[j].is_whitespace() {
                j += 1;
            }
            let splits = j > i + 1 && j < n && (chars[j].is_uppercase() || chars[j].is_ascii_digit());
            if splits {
                spans.push((start, i + 1));
                start = j;
                i = j;
            } else {
                i += 1;
            }
        } else {
            i += 1;
        }
    }
    if start < n {
        spans.push((start, n));
    }
    spans
}

struct SentenceSpan {
    start: usize,
    sentence: Sentence,
}

/// Split text into sentences, keeping char offsets for annotation snapping.
/// Fragments without any token are dropped. A sentence is marked
/// `followed_by_newline` when a newline occurs before the next kept sentence
/// (or before the end of text).
fn split_sentences_spans(text: &str) -> Vec<SentenceSpan> {
    let chars: Vec<char> = text.chars().collect();
    let raw = split_spans(&chars);
    let mut kept: Vec<(usize, usize)> = Vec::new();
    for &(s, e) in &raw {
        let piece: String = chars[s..e].iter().collect();
        if !tokenize(&piece).is_empty() {
            kept.push((s, e));
        }
    }
    let mut out = Vec::with_capacity(kept.len());
    for (idx, &(s, e)) in kept.iter().enumerate() {
        let gap_end = kept.get(idx + 1).map_or(chars.len(), |&(ns, _)| ns);
        let newline = chars[e..gap_end].contains(&'\n');
        let piece: String = chars[s..e].iter().collect();
        if let Some(sentence) = Sentence::from_text(&piece, newline) {
            out.push(SentenceSpan { start: s, sentence });
        }
    }
    out
}

/// Split plain text into sentences. Whitespace-only text gives an empty list.
pub fn split_sentences(text: &str) -> Vec<Sentence> {
    split_sentences_spans(text)
        .into_iter()
        .map(|s| s.sentence)
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct RawAnnotation {
    begin: i64,
    length: i64,
    #[serde(rename = "sectionHeading", default)]
    section_heading: String,
    #[serde(rename = "sectionLabel", default)]
    section_label: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawDocument {
    id: String,
    #[serde(default)]
    title: String,
    text: String,
    annotations: Vec<RawAnnotation>,
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Documents longer than this many sentences are truncated with a warning.
    pub max_sentences: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { max_sentences: 512 }
    }
}

/// Load a WikiSection JSON file with default options.
pub fn load_wikisection(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    load_wikisection_with(path, &LoadOptions::default())
}

pub fn load_wikisection_with(
    path: impl AsRef<Path>,
    options: &LoadOptions,
) -> Result<Vec<Document>> {
    let mut buf = String::new();
    BufReader::new(File::open(path.as_ref())?).read_to_string(&mut buf)?;
    let values: Vec<serde_json::Value> = serde_json::from_str(&buf)?;
    let mut docs = Vec::with_capacity(values.len());
    for (pos, value) in values.into_iter().enumerate() {
        let id = value
            .get("id")
            .and_then(|v| v.as_str())
            .map(|s| s.to_string())
            .unwrap_or_else(|| format!("record #{pos}"));
        let raw: RawDocument = serde_json::from_value(value)
            .map_err(|e| Error::document(&id, format!("malformed record: {e}")))?;
        docs.push(convert_document(raw, options)?);
    }
    Ok(docs)
}

fn convert_document(raw: RawDocument, options: &LoadOptions) -> Result<Document> {
    let id = raw.id;
    if raw.annotations.is_empty() {
        return Err(Error::document(&id, "document has no sections"));
    }
    let text_len = raw.text.chars().count();
    let mut spans = split_sentences_spans(&raw.text);
    if spans.is_empty() {
        return Err(Error::document(&id, "document has no sentences"));
    }
    if spans.len() > options.max_sentences {
        warn!(
            "document {id}: truncated from {} to {} sentences",
            spans.len(),
            options.max_sentences
        );
        spans.truncate(options.max_sentences);
    }
    let starts: Vec<usize> = spans.iter().map(|s| s.start).collect();

    // Snap each annotation begin to the nearest sentence start (earlier wins
    // on ties); sub-sentence offsets are reported once per document.
    let mut snapped: Vec<(usize, &RawAnnotation)> = Vec::with_capacity(raw.annotations.len());
    let mut snap_warned = false;
    for ann in &raw.annotations {
        if ann.begin < 0 || ann.length < 0 || (ann.begin + ann.length) as usize > text_len {
            return Err(Error::document(
                &id,
                format!(
                    "annotation offsets [{}, {}) outside text of {} chars",
                    ann.begin,
                    ann.begin + ann.length,
                    text_len
                ),
            ));
        }
        let begin = ann.begin as usize;
        let mut best = 0usize;
        let mut best_dist = usize::MAX;
        for (k, &s) in starts.iter().enumerate() {
            let dist = s.abs_diff(begin);
            if dist < best_dist {
                best = k;
                best_dist = dist;
            }
        }
        if best_dist > 0 && !snap_warned {
            warn!("document {id}: annotation boundary at char {begin} snapped to a sentence break");
            snap_warned = true;
        }
        snapped.push((best, ann));
    }
    snapped.sort_by_key(|(k, _)| *k);

    // An uncovered prefix (e.g. an abstract before the first annotation)
    // becomes an implicit leading section labeled `other`.
    let mut sections: Vec<SectionAnnotation> = Vec::new();
    if snapped[0].0 > 0 {
        warn!(
            "document {id}: {} leading sentences not covered by annotations, labeled {}",
            snapped[0].0,
            super::OTHER_LABEL
        );
        sections.push(SectionAnnotation {
            begin_sentence: 0,
            end_sentence: snapped[0].0,
            heading: String::new(),
            topic_label: None,
        });
    }
    for (idx, &(begin, ann)) in snapped.iter().enumerate() {
        let end = snapped
            .get(idx + 1)
            .map_or(spans.len(), |&(next, _)| next.min(spans.len()));
        let begin = begin.min(spans.len());
        if begin >= end {
            warn!(
                "document {id}: annotation '{}' covers no sentences after snapping, dropped",
                ann.section_heading
            );
            continue;
        }
        let label = ann.section_label.trim();
        sections.push(SectionAnnotation {
            begin_sentence: begin,
            end_sentence: end,
            heading: ann.section_heading.clone(),
            topic_label: if label.is_empty() {
                None
            } else {
                Some(label.to_string())
            },
        });
    }

    let sentences: Vec<Sentence> = spans.into_iter().map(|s| s.sentence).collect();
    Document::new(id, raw.title, sentences, sections)
}

/// Reconstruct the document text: sentences joined with a space, or a newline
/// after sentences carrying the newline mark.
fn render_text(doc: &Document) -> (String, Vec<usize>) {
    let mut text = String::new();
    let mut starts = Vec::with_capacity(doc.len());
    let mut offset = 0usize;
    for (i, s) in doc.sentences.iter().enumerate() {
        starts.push(offset);
        text.push_str(&s.text);
        offset += s.text.chars().count();
        if i + 1 < doc.len() {
            let sep = if s.followed_by_newline { '\n' } else { ' ' };
            text.push(sep);
            offset += 1;
        }
    }
    (text, starts)
}

/// Serialize documents in the WikiSection JSON schema. Loading the output
/// reproduces the same documents (data-model round trip).
pub fn save_wikisection(docs: &[Document], path: impl AsRef<Path>) -> Result<()> {
    let raws: Vec<RawDocument> = docs
        .iter()
        .map(|doc| {
            let (text, starts) = render_text(doc);
            let total = text.chars().count();
            let annotations = doc
                .sections
                .iter()
                .map(|sec| {
                    // Annotations tile the char range: a section ends where
                    // the next sentence starts.
                    let begin = starts[sec.begin_sentence];
                    let end = if sec.end_sentence == doc.len() {
                        total
                    } else {
                        starts[sec.end_sentence]
                    };
                    RawAnnotation {
                        begin: begin as i64,
                        length: (end - begin) as i64,
                        section_heading: sec.heading.clone(),
                        section_label: sec.topic_label.clone().unwrap_or_default(),
                    }
                })
                .collect();
            RawDocument {
                id: doc.id.clone(),
                title: doc.title.clone(),
                text,
                annotations,
            }
        })
        .collect();
    let file = File::create(path.as_ref())?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, &raws)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}
