//! Evaluation: sentence-level Pk plus section-level micro-F1, P@1 and MAP
//! with maximum-boundary-overlap section matching.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Document};
use crate::{Error, Result};

/// An ordered section partition with one label key per section. For the
/// single-label task the key is the topic label; for the multi-label task it
/// is the sorted heading-word bag.
#[derive(Debug, Clone)]
pub struct SegmentationRef {
    pub spans: Vec<(usize, usize)>,
    pub labels: Vec<String>,
    pub n: usize,
}

impl SegmentationRef {
    pub fn new(spans: Vec<(usize, usize)>, labels: Vec<String>, n: usize) -> Result<Self> {
        if spans.len() != labels.len() {
            return Err(Error::Eval("spans and labels differ in length".into()));
        }
        let mut expected = 0usize;
        for &(b, e) in &spans {
            if b != expected || e <= b {
                return Err(Error::Eval(format!(
                    "spans do not partition [0, {n}): got ({b}, {e}) after {expected}"
                )));
            }
            expected = e;
        }
        if expected != n {
            return Err(Error::Eval(format!("spans cover {expected} of {n} sentences")));
        }
        Ok(SegmentationRef { spans, labels, n })
    }

    /// Merge adjacent sections with equal label keys.
    pub fn merged(&self) -> SegmentationRef {
        let mut spans: Vec<(usize, usize)> = Vec::new();
        let mut labels: Vec<String> = Vec::new();
        for (span, label) in self.spans.iter().zip(&self.labels) {
            if labels.last().is_some_and(|l| l == label) {
                spans.last_mut().unwrap().1 = span.1;
            } else {
                spans.push(*span);
                labels.push(label.clone());
            }
        }
        SegmentationRef {
            spans,
            labels,
            n: self.n,
        }
    }
}

/// Boundary set of a partition: the start index of every section except the
/// first, after merging adjacent same-label sections.
pub fn relevant_boundaries(seg: &SegmentationRef) -> BTreeSet<usize> {
    seg.merged().spans.iter().skip(1).map(|&(b, _)| b).collect()
}

/// Default Pk window: half the average reference segment length, rounded
/// half-up, at least 1.
pub fn default_window(n: usize, ref_segments: usize) -> usize {
    let k = (n as f64 / (2.0 * ref_segments.max(1) as f64)).round() as usize;
    k.max(1)
}

/// Probabilistic segmentation error: the fraction of sentence pairs `k`
/// positions apart that the reference and hypothesis classify differently as
/// same-segment vs different-segment. Boundary sets hold section start
/// indices (a boundary at `s` separates positions `< s` from `>= s`).
pub fn pk(
    ref_boundaries: &BTreeSet<usize>,
    hyp_boundaries: &BTreeSet<usize>,
    n: usize,
    k: usize,
) -> Result<f64> {
    if k == 0 || n <= k {
        return Err(Error::Eval(format!("pk window k={k} invalid for n={n}")));
    }
    let split_between = |bounds: &BTreeSet<usize>, i: usize| -> bool {
        bounds.range(i + 1..=i + k).next().is_some()
    };
    let mut disagreements = 0usize;
    for i in 0..(n - k) {
        if split_between(ref_boundaries, i) != split_between(hyp_boundaries, i) {
            disagreements += 1;
        }
    }
    Ok(disagreements as f64 / (n - k) as f64)
}

/// Pair every reference section with the hypothesis section of maximal
/// sentence overlap (ties to the earlier hypothesis section). A hypothesis
/// section may be matched by multiple reference sections.
pub fn match_sections(reference: &SegmentationRef, hypothesis: &SegmentationRef) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(reference.spans.len());
    for (ri, &(rb, re)) in reference.spans.iter().enumerate() {
        let mut best = 0usize;
        let mut best_overlap = 0usize;
        for (hi, &(hb, he)) in hypothesis.spans.iter().enumerate() {
            let overlap = re.min(he).saturating_sub(rb.max(hb));
            if overlap > best_overlap {
                best_overlap = overlap;
                best = hi;
            }
        }
        out.push((ri, best));
    }
    out
}

/// Micro-averaged F1 over matched `(gold, predicted)` label pairs, pooling
/// per-class TP/FP/FN. With one gold and one prediction per pair this equals
/// accuracy. The `other` label participates as a regular class.
pub fn micro_f1(pairs: &[(String, String)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (gold, pred) in pairs {
        if gold == pred {
            tp += 1;
        } else {
            fp += 1;
            fn_ += 1;
        }
    }
    if 2 * tp + fp + fn_ == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2.0 * tp as f64 + fp as f64 + fn_ as f64)
}

/// Precision@1: the fraction of matched sections whose top-ranked prediction
/// is in the gold label bag. Sections with an empty gold bag are skipped and
/// counted separately.
pub fn p_at_1(sections: &[(BTreeSet<String>, Vec<String>)]) -> (f64, usize) {
    let mut hits = 0usize;
    let mut total = 0usize;
    let mut skipped = 0usize;
    for (gold, ranking) in sections {
        if gold.is_empty() {
            skipped += 1;
            continue;
        }
        total += 1;
        if ranking.first().is_some_and(|top| gold.contains(top)) {
            hits += 1;
        }
    }
    let value = if total == 0 { 0.0 } else { hits as f64 / total as f64 };
    (value, skipped)
}

/// Mean average precision over sections. Per section, AP is the mean over
/// gold labels of precision at that label's rank; gold labels must appear in
/// the ranking. Sections with an empty gold bag are skipped.
pub fn mean_average_precision(sections: &[(BTreeSet<String>, Vec<String>)]) -> Result<(f64, usize)> {
    let mut sum = 0.0f64;
    let mut total = 0usize;
    let mut skipped = 0usize;
    for (gold, ranking) in sections {
        if gold.is_empty() {
            skipped += 1;
            continue;
        }
        let mut hits = 0usize;
        let mut ap = 0.0f64;
        let mut found = 0usize;
        for (pos, label) in ranking.iter().enumerate() {
            if gold.contains(label) {
                hits += 1;
                ap += hits as f64 / (pos + 1) as f64;
                found += 1;
            }
        }
        if found != gold.len() {
            return Err(Error::Eval(format!(
                "ranking misses {} of {} gold labels",
                gold.len() - found,
                gold.len()
            )));
        }
        sum += ap / gold.len() as f64;
        total += 1;
    }
    let value = if total == 0 { 0.0 } else { sum / total as f64 };
    Ok((value, skipped))
}

// ---------------------------------------------------------------------------
// Run-level evaluation over prediction files.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelScore {
    pub label: String,
    pub score: f32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictedSection {
    pub begin: usize,
    pub end: usize,
    /// Full label ranking, best first.
    pub labels: Vec<LabelScore>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DocumentPrediction {
    pub id: String,
    pub strategy: String,
    pub n_sentences: usize,
    pub sections: Vec<PredictedSection>,
}

/// Which task the run evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalTask {
    Single,
    Multi,
}

/// Aggregated run metrics. JSON-serialized as the report file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub model: String,
    pub strategy: String,
    pub pk: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_at_1: Option<f64>,
    pub map: f64,
    pub n_documents: usize,
}

impl EvalReport {
    /// Aligned text table mirroring the report columns.
    pub fn table(&self) -> String {
        let fmt = |v: Option<f64>| match v {
            Some(x) => format!("{:.1}", 100.0 * x),
            None => "n/a".to_string(),
        };
        let mut out = String::new();
        out.push_str(&format!(
            "{:<16} {:<18} {:<6} {:>6} {:>6} {:>6} {:>6} {:>6}\n",
            "dataset", "model", "segm.", "Pk", "F1", "P@1", "MAP", "docs"
        ));
        out.push_str(&format!(
            "{:<16} {:<18} {:<6} {:>6} {:>6} {:>6} {:>6} {:>6}\n",
            self.dataset,
            self.model,
            self.strategy,
            fmt(Some(self.pk)),
            fmt(self.f1),
            fmt(self.p_at_1),
            fmt(Some(self.map)),
            self.n_documents
        ));
        out
    }
}

fn gold_segmentation(doc: &Document, task: EvalTask) -> SegmentationRef {
    let spans: Vec<(usize, usize)> = doc
        .sections
        .iter()
        .map(|s| (s.begin_sentence, s.end_sentence))
        .collect();
    let labels: Vec<String> = doc
        .sections
        .iter()
        .map(|s| match task {
            EvalTask::Single => s.label().to_string(),
            EvalTask::Multi => {
                let mut words = tokenize(&s.heading);
                words.sort();
                words.dedup();
                words.join(" ")
            }
        })
        .collect();
    SegmentationRef::new(spans, labels, doc.len()).expect("gold sections partition the document")
}

fn hyp_segmentation(pred: &DocumentPrediction) -> Result<SegmentationRef> {
    let spans: Vec<(usize, usize)> = pred.sections.iter().map(|s| (s.begin, s.end)).collect();
    let labels: Vec<String> = pred
        .sections
        .iter()
        .map(|s| s.labels.first().map(|l| l.label.clone()).unwrap_or_default())
        .collect();
    SegmentationRef::new(spans, labels, pred.n_sentences)
        .map_err(|e| Error::Eval(format!("prediction for {}: {e}", pred.id)))
}

/// Score a run: Pk averaged uniformly over documents, classification metrics
/// pooled over all matched sections of all documents.
pub fn evaluate_run(
    gold: &[Document],
    predictions: &[DocumentPrediction],
    task: EvalTask,
) -> Result<EvalReport> {
    let by_id: BTreeMap<&str, &DocumentPrediction> =
        predictions.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut pk_sum = 0.0f64;
    let mut pk_docs = 0usize;
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut ranked_sections: Vec<(BTreeSet<String>, Vec<String>)> = Vec::new();

    for doc in gold {
        let pred = by_id
            .get(doc.id.as_str())
            .ok_or_else(|| Error::Eval(format!("missing prediction for document {}", doc.id)))?;
        if pred.n_sentences != doc.len() {
            return Err(Error::Eval(format!(
                "document {}: prediction covers {} sentences, gold has {}",
                doc.id,
                pred.n_sentences,
                doc.len()
            )));
        }
        let gold_seg = gold_segmentation(doc, task);
        let hyp_seg = hyp_segmentation(pred)?;

        let ref_bounds = relevant_boundaries(&gold_seg);
        let hyp_bounds = relevant_boundaries(&hyp_seg);
        let k = default_window(doc.len(), ref_bounds.len() + 1);
        // Documents shorter than the window have no probe positions and do
        // not contribute to Pk.
        if doc.len() > k {
            pk_sum += pk(&ref_bounds, &hyp_bounds, doc.len(), k)?;
            pk_docs += 1;
        }

        let gold_merged = gold_seg.merged();
        let hyp_merged = hyp_seg.merged();
        // Re-derive per-section rankings for merged hypothesis spans: the
        // matching needs the prediction ranking of the matched hyp section.
        let matches = match_sections(&gold_merged, &hyp_merged);
        // Map each merged hyp span back to the first original section inside.
        let ranking_of = |span: (usize, usize)| -> Vec<String> {
            pred.sections
                .iter()
                .find(|s| s.begin >= span.0 && s.begin < span.1)
                .map(|s| s.labels.iter().map(|l| l.label.clone()).collect())
                .unwrap_or_default()
        };
        // Gold labels outside the prediction's label vocabulary cannot be
        // ranked; MAP and P@1 skip them (they still count against micro-F1).
        for (ri, hi) in matches {
            let ranking = ranking_of(hyp_merged.spans[hi]);
            let universe: BTreeSet<&str> = ranking.iter().map(|s| s.as_str()).collect();
            match task {
                EvalTask::Single => {
                    pairs.push((
                        gold_merged.labels[ri].clone(),
                        hyp_merged.labels[hi].clone(),
                    ));
                    let gold_set: BTreeSet<String> = [gold_merged.labels[ri].clone()]
                        .into_iter()
                        .filter(|l| universe.contains(l.as_str()))
                        .collect();
                    ranked_sections.push((gold_set, ranking));
                }
                EvalTask::Multi => {
                    let gold_set: BTreeSet<String> = gold_merged.labels[ri]
                        .split_whitespace()
                        .filter(|w| universe.contains(w))
                        .map(|w| w.to_string())
                        .collect();
                    ranked_sections.push((gold_set, ranking));
                }
            }
        }
    }

    let n_documents = gold.len();
    let pk_mean = if pk_docs == 0 { 0.0 } else { pk_sum / pk_docs as f64 };
    let (map, _) = mean_average_precision(&ranked_sections)?;
    let report = match task {
        EvalTask::Single => EvalReport {
            dataset: String::new(),
            model: String::new(),
            strategy: String::new(),
            pk: pk_mean,
            f1: Some(micro_f1(&pairs)),
            p_at_1: None,
            map,
            n_documents,
        },
        EvalTask::Multi => {
            let (p1, _) = p_at_1(&ranked_sections);
            EvalReport {
                dataset: String::new(),
                model: String::new(),
                strategy: String::new(),
                pk: pk_mean,
                f1: None,
                p_at_1: Some(p1),
                map,
                n_documents,
            }
        }
    };
    Ok(report)
}
