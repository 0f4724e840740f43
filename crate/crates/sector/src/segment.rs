//! Topic segmentation: turn per-sentence label distributions and topic
//! embeddings into a section partition with labels.
//!
//! Strategies: newline prior (nl), top-2 label merging (max), embedding
//! deviation (emd) and bidirectional embedding deviation (bemd).

use log::warn;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Nl,
    Max,
    Emd,
    Bemd,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Strategy::Nl => "nl",
            Strategy::Max => "max",
            Strategy::Emd => "emd",
            Strategy::Bemd => "bemd",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nl" => Ok(Strategy::Nl),
            "max" => Ok(Strategy::Max),
            "emd" => Ok(Strategy::Emd),
            "bemd" => Ok(Strategy::Bemd),
            other => Err(Error::Config(format!("unknown segmentation strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SegConfig {
    /// PCA target dimensionality D.
    pub pca_dims: usize,
    /// Gaussian smoothing sigma.
    pub sigma: f64,
    pub strategy: Strategy,
}

impl Default for SegConfig {
    fn default() -> Self {
        SegConfig {
            pca_dims: 16,
            sigma: 2.5,
            strategy: Strategy::Bemd,
        }
    }
}

/// A predicted section: span, averaged label distribution and ranked labels.
#[derive(Debug, Clone)]
pub struct SectionPrediction {
    pub begin: usize,
    pub end: usize,
    /// Mean of the member sentences' distributions.
    pub distribution: Vec<f32>,
    /// Label indices, best first (ties by label index).
    pub ranking: Vec<usize>,
}

fn argmax(dist: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in dist.iter().enumerate() {
        if v > dist[best] {
            best = i;
        }
    }
    best
}

fn mean_distribution(dists: &[Vec<f32>], begin: usize, end: usize) -> Vec<f32> {
    let dim = dists[0].len();
    let mut out = vec![0.0f32; dim];
    for d in &dists[begin..end] {
        for (o, &v) in out.iter_mut().zip(d) {
            *o += v;
        }
    }
    let n = (end - begin) as f32;
    for o in &mut out {
        *o /= n;
    }
    out
}

/// Newline baseline: boundaries after newline-marked sentences, then adjacent
/// spans whose averaged argmax labels coincide are merged to a fixpoint.
/// Without any newline mark the whole document is one section (with a
/// warning).
pub fn segment_newline(marks: &[bool], dists: &[Vec<f32>]) -> Vec<(usize, usize)> {
    let n = marks.len();
    assert_eq!(n, dists.len());
    let mut spans: Vec<(usize, usize)> = Vec::new();
    let mut begin = 0usize;
    for (i, &mark) in marks.iter().enumerate() {
        if mark && i + 1 < n {
            spans.push((begin, i + 1));
            begin = i + 1;
        }
    }
    spans.push((begin, n));
    if spans.len() == 1 && n > 0 && !marks.iter().any(|&m| m) {
        warn!("no newline marks found, falling back to a single section");
    }
    merge_equal_argmax(spans, dists)
}

fn merge_equal_argmax(mut spans: Vec<(usize, usize)>, dists: &[Vec<f32>]) -> Vec<(usize, usize)> {
    loop {
        let labels: Vec<usize> = spans
            .iter()
            .map(|&(b, e)| argmax(&mean_distribution(dists, b, e)))
            .collect();
        let mut merged: Vec<(usize, usize)> = Vec::with_capacity(spans.len());
        let mut merged_labels: Vec<usize> = Vec::new();
        for (span, label) in spans.iter().zip(&labels) {
            if merged_labels.last() == Some(label) {
                merged.last_mut().unwrap().1 = span.1;
            } else {
                merged.push(*span);
                merged_labels.push(*label);
            }
        }
        if merged.len() == spans.len() {
            return merged;
        }
        spans = merged;
    }
}

fn top2(dist: &[f32]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dist.len()).collect();
    idx.sort_by(|&a, &b| dist[b].partial_cmp(&dist[a]).unwrap().then(a.cmp(&b)));
    idx.truncate(2);
    idx
}

/// Maximum-label baseline: start from singleton spans and merge adjacent
/// spans sharing at least one label among their top-2 sets (a span's set is
/// the union of its member sentences' top-2), repeating left-to-right passes
/// to a fixpoint.
pub fn segment_maxlabel(dists: &[Vec<f32>]) -> Vec<(usize, usize)> {
    let n = dists.len();
    let mut spans: Vec<(usize, usize)> = (0..n).map(|i| (i, i + 1)).collect();
    let top2_sets: Vec<Vec<usize>> = dists.iter().map(|d| top2(d)).collect();
    let span_set = |span: (usize, usize)| -> std::collections::BTreeSet<usize> {
        (span.0..span.1).flat_map(|i| top2_sets[i].iter().copied()).collect()
    };
    loop {
        let mut merged: Vec<(usize, usize)> = Vec::with_capacity(spans.len());
        for span in &spans {
            if let Some(last) = merged.last_mut() {
                let shared = span_set(*last)
                    .intersection(&span_set(*span))
                    .next()
                    .is_some();
                if shared {
                    last.1 = span.1;
                    continue;
                }
            }
            merged.push(*span);
        }
        if merged.len() == spans.len() {
            return merged;
        }
        spans = merged;
    }
}

/// Project an `N x dim` embedding matrix onto its top `dims` principal
/// components via uncentered SVD (no mean subtraction). Rank-deficient
/// components come back as zero columns with a warning.
pub fn pca_project(rows: &[Vec<f64>], dims: usize) -> Result<Vec<Vec<f64>>> {
    if rows.len() < 2 {
        return Err(Error::Numeric(format!(
            "PCA needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    let dims = dims.max(1);
    let svd = linalg::right_singular_vectors(rows, dims.min(rows[0].len()));
    if svd.zeroed > 0 {
        warn!(
            "PCA rank below {}: {} projected dimensions are zero",
            dims.min(rows[0].len()),
            svd.zeroed
        );
    }
    Ok(rows
        .iter()
        .map(|r| {
            svd.right_vectors
                .iter()
                .map(|w| r.iter().zip(w).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect())
}

/// Gaussian kernel truncated at `ceil(3 sigma)`, normalized to sum one.
fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|t| (-((t * t) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }
    kernel
}

/// 1-D Gaussian convolution along the sentence axis, per dimension, with
/// reflect padding at the edges (index -1 maps to 0, -2 to 1, ...).
pub fn gaussian_smooth(rows: &[Vec<f64>], sigma: f64) -> Vec<Vec<f64>> {
    assert!(sigma > 0.0, "sigma must be positive");
    let n = rows.len() as i64;
    if n == 0 {
        return Vec::new();
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;
    let reflect = |mut i: i64| -> usize {
        loop {
            if i < 0 {
                i = -i - 1;
            } else if i >= n {
                i = 2 * n - i - 1;
            } else {
                return i as usize;
            }
        }
    };
    (0..n)
        .map(|i| {
            let mut acc = vec![0.0f64; rows[0].len()];
            for (j, &w) in kernel.iter().enumerate() {
                let src = reflect(i + j as i64 - radius);
                for (a, &x) in acc.iter_mut().zip(&rows[src]) {
                    *a += w * x;
                }
            }
            acc
        })
        .collect()
}

fn to_f64_rows(rows: &[Vec<f32>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| r.iter().map(|&x| x as f64).collect())
        .collect()
}

fn reduce_and_smooth(rows: &[Vec<f32>], config: &SegConfig) -> Result<Vec<Vec<f64>>> {
    let projected = pca_project(&to_f64_rows(rows), config.pca_dims)?;
    Ok(gaussian_smooth(&projected, config.sigma))
}

fn warn_zero_norm(series: &[Vec<f64>]) {
    if series.iter().any(|v| linalg::norm(v) == 0.0) {
        warn!("zero-norm embedding encountered; treating its distances as 0");
    }
}

/// Embedding deviation: PCA, Gaussian smoothing, then per-sentence cosine
/// distance to the previous smoothed embedding (`d[0] = 0`).
pub fn deviation_emd(embeddings: &[Vec<f32>], config: &SegConfig) -> Result<Vec<f64>> {
    let n = embeddings.len();
    if n < 3 {
        return Err(Error::Numeric(format!(
            "deviation needs at least 3 sentences, got {n}"
        )));
    }
    let smoothed = reduce_and_smooth(embeddings, config)?;
    warn_zero_norm(&smoothed);
    let mut d = vec![0.0f64; n];
    for k in 1..n {
        d[k] = linalg::cosine_distance(&smoothed[k - 1], &smoothed[k]);
    }
    Ok(d)
}

/// Bidirectional embedding deviation: the geometric mean of the forward
/// difference at `(k-1, k)` and the backward difference at `(k, k+1)`,
/// with `d[0] = d[N-1] = 0`.
pub fn deviation_bemd(
    forward: &[Vec<f32>],
    backward: &[Vec<f32>],
    config: &SegConfig,
) -> Result<Vec<f64>> {
    let n = forward.len();
    if n != backward.len() {
        return Err(Error::Numeric("forward/backward length mismatch".into()));
    }
    if n < 3 {
        return Err(Error::Numeric(format!(
            "deviation needs at least 3 sentences, got {n}"
        )));
    }
    let fwd = reduce_and_smooth(forward, config)?;
    let bwd = reduce_and_smooth(backward, config)?;
    warn_zero_norm(&fwd);
    warn_zero_norm(&bwd);
    let mut d = vec![0.0f64; n];
    for k in 1..(n - 1) {
        let df = linalg::cosine_distance(&fwd[k - 1], &fwd[k]);
        let db = linalg::cosine_distance(&bwd[k], &bwd[k + 1]);
        d[k] = (df * db).sqrt();
    }
    Ok(d)
}

/// Strict local maxima of the deviation series; a plateau entered by a rise
/// takes its leftmost index when followed by a strict drop. A boundary at
/// `k` starts a new section at sentence `k`.
pub fn find_boundaries(d: &[f64]) -> Vec<usize> {
    let n = d.len();
    let mut out = Vec::new();
    let mut k = 1usize;
    while n >= 3 && k < n - 1 {
        if d[k] > d[k - 1] {
            // Find the end of the plateau of equal values starting at k.
            let mut j = k;
            while j + 1 < n && d[j + 1] == d[k] {
                j += 1;
            }
            if j + 1 < n && d[j + 1] < d[k] {
                out.push(k);
            }
            k = j + 1;
        } else {
            k += 1;
        }
    }
    out
}

/// Turn boundary indices into spans over `[0, n)`.
pub fn boundaries_to_spans(boundaries: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut spans = Vec::with_capacity(boundaries.len() + 1);
    let mut begin = 0usize;
    for &b in boundaries {
        if b > begin && b < n {
            spans.push((begin, b));
            begin = b;
        }
    }
    spans.push((begin, n));
    spans
}

/// Average member distributions per span (mean class distribution) and rank
/// labels by descending mean score, ties by label index.
pub fn assign_labels(spans: &[(usize, usize)], dists: &[Vec<f32>]) -> Vec<SectionPrediction> {
    spans
        .iter()
        .map(|&(begin, end)| {
            let distribution = mean_distribution(dists, begin, end);
            let mut ranking: Vec<usize> = (0..distribution.len()).collect();
            ranking.sort_by(|&a, &b| {
                distribution[b]
                    .partial_cmp(&distribution[a])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            SectionPrediction {
                begin,
                end,
                distribution,
                ranking,
            }
        })
        .collect()
}

/// Run one strategy end to end over a document's newline marks, per-sentence
/// distributions and directional topic embeddings. Documents shorter than 3
/// sentences fall back to a single section for the deviation strategies.
pub fn segment_document(
    strategy: Strategy,
    marks: &[bool],
    dists: &[Vec<f32>],
    forward: &[Vec<f32>],
    backward: &[Vec<f32>],
    config: &SegConfig,
) -> Result<Vec<SectionPrediction>> {
    let n = dists.len();
    let spans = match strategy {
        Strategy::Nl => segment_newline(marks, dists),
        Strategy::Max => segment_maxlabel(dists),
        Strategy::Emd | Strategy::Bemd if n < 3 => {
            warn!("document of {n} sentences is too short for deviation segmentation");
            vec![(0, n)]
        }
        Strategy::Emd => {
            let concat: Vec<Vec<f32>> = forward
                .iter()
                .zip(backward)
                .map(|(f, b)| f.iter().chain(b).copied().collect())
                .collect();
            let d = deviation_emd(&concat, config)?;
            boundaries_to_spans(&find_boundaries(&d), n)
        }
        Strategy::Bemd => {
            let d = deviation_bemd(forward, backward, config)?;
            boundaries_to_spans(&find_boundaries(&d), n)
        }
    };
    Ok(assign_labels(&spans, dists))
}
