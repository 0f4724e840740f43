//! Training losses and their gradients with respect to the raw scores.

use serde::{Deserialize, Serialize};

use super::real::Real;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    Bce,
    Ranking,
}

impl std::str::FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross_entropy" => Ok(LossKind::CrossEntropy),
            "bce" => Ok(LossKind::Bce),
            "ranking" => Ok(LossKind::Ranking),
            other => Err(Error::Config(format!("unknown loss '{other}'"))),
        }
    }
}

/// Ranking-loss hyperparameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RankingParams {
    pub gamma: f64,
    pub margin_pos: f64,
    pub margin_neg: f64,
}

impl Default for RankingParams {
    fn default() -> Self {
        RankingParams {
            gamma: 2.0,
            margin_pos: 2.5,
            margin_neg: 0.5,
        }
    }
}

fn clamp_prob<R: Real>(p: R) -> R {
    let floor = R::from_f64(1e-12);
    p.maxr(floor)
}

/// Mean negative log-likelihood of the target class under softmax
/// probabilities; probabilities are clamped at 1e-12 before the log.
pub fn loss_single<R: Real>(probs: &[Vec<R>], targets: &[usize]) -> Result<R> {
    if probs.len() != targets.len() {
        return Err(Error::Numeric("scores/targets length mismatch".into()));
    }
    let mut sum = R::ZERO;
    for (row, &t) in probs.iter().zip(targets) {
        if t >= row.len() {
            return Err(Error::Numeric(format!(
                "target index {t} out of range for {} labels",
                row.len()
            )));
        }
        sum += -clamp_prob(row[t]).ln();
    }
    Ok(sum / R::from_f64(probs.len() as f64))
}

/// Gradient of [`loss_single`] with respect to the logits: `(p - y) / N`.
pub fn dlogits_single<R: Real>(probs: &[Vec<R>], targets: &[usize]) -> Vec<Vec<R>> {
    let n = R::from_f64(probs.len() as f64);
    probs
        .iter()
        .zip(targets)
        .map(|(row, &t)| {
            row.iter()
                .enumerate()
                .map(|(j, &p)| {
                    let y = if j == t { R::ONE } else { R::ZERO };
                    (p - y) / n
                })
                .collect()
        })
        .collect()
}

/// Mean binary cross-entropy over sentences and labels; `targets` holds the
/// sorted positive label indices per sentence.
pub fn loss_multi_bce<R: Real>(probs: &[Vec<R>], targets: &[Vec<usize>]) -> Result<R> {
    if probs.len() != targets.len() {
        return Err(Error::Numeric("scores/targets length mismatch".into()));
    }
    let mut sum = R::ZERO;
    let mut terms = 0usize;
    for (row, positives) in probs.iter().zip(targets) {
        if positives.iter().any(|&t| t >= row.len()) {
            return Err(Error::Numeric("target index out of range".into()));
        }
        let mut is_pos = vec![false; row.len()];
        for &t in positives {
            is_pos[t] = true;
        }
        for (j, &p) in row.iter().enumerate() {
            let term = if is_pos[j] {
                -clamp_prob(p).ln()
            } else {
                -clamp_prob(R::ONE - p).ln()
            };
            sum += term;
            terms += 1;
        }
    }
    Ok(sum / R::from_f64(terms.max(1) as f64))
}

/// Gradient of [`loss_multi_bce`] w.r.t. the logits: `(p - z) / (N * L)`.
pub fn dlogits_multi_bce<R: Real>(probs: &[Vec<R>], targets: &[Vec<usize>]) -> Vec<Vec<R>> {
    let total = R::from_f64((probs.len() * probs.first().map_or(1, |r| r.len())).max(1) as f64);
    probs
        .iter()
        .zip(targets)
        .map(|(row, positives)| {
            let mut is_pos = vec![false; row.len()];
            for &t in positives {
                is_pos[t] = true;
            }
            row.iter()
                .enumerate()
                .map(|(j, &p)| {
                    let z = if is_pos[j] { R::ONE } else { R::ZERO };
                    (p - z) / total
                })
                .collect()
        })
        .collect()
}

/// Logistic pairwise ranking loss on raw scores, averaged over sentences.
/// The positive term averages all correct-label scores; the negative term
/// takes the most offending (highest-scoring) incorrect label:
/// `L = ln(1 + exp(g (m+ - score+))) + ln(1 + exp(g (m- + score-)))`.
pub fn loss_ranking<R: Real>(
    scores: &[Vec<R>],
    positives: &[Vec<usize>],
    params: &RankingParams,
) -> Result<R> {
    let mut sum = R::ZERO;
    for (row, pos) in scores.iter().zip(positives) {
        let (s_pos, s_neg, _) = ranking_terms(row, pos)?;
        let gamma = R::from_f64(params.gamma);
        let a = gamma * (R::from_f64(params.margin_pos) - s_pos);
        let b = gamma * (R::from_f64(params.margin_neg) + s_neg);
        sum += ln_1p_exp(a) + ln_1p_exp(b);
    }
    Ok(sum / R::from_f64(scores.len().max(1) as f64))
}

/// Numerically stable `ln(1 + exp(x))`.
fn ln_1p_exp<R: Real>(x: R) -> R {
    if x > R::ZERO {
        x + (R::ONE + (-x).exp()).ln()
    } else {
        (R::ONE + x.exp()).ln()
    }
}

fn ranking_terms<R: Real>(row: &[R], positives: &[usize]) -> Result<(R, R, usize)> {
    if positives.is_empty() {
        return Err(Error::Numeric("ranking loss needs at least one positive label".into()));
    }
    if positives.len() >= row.len() {
        return Err(Error::Numeric(
            "ranking loss needs at least one negative label".into(),
        ));
    }
    let mut is_pos = vec![false; row.len()];
    for &t in positives {
        if t >= row.len() {
            return Err(Error::Numeric(format!("target index {t} out of range")));
        }
        is_pos[t] = true;
    }
    let mut s_pos = R::ZERO;
    for &t in positives {
        s_pos += row[t];
    }
    s_pos /= R::from_f64(positives.len() as f64);
    let mut neg_best: Option<(usize, R)> = None;
    for (j, &s) in row.iter().enumerate() {
        if is_pos[j] {
            continue;
        }
        if neg_best.is_none_or(|(_, b)| s > b) {
            neg_best = Some((j, s));
        }
    }
    let (neg_idx, s_neg) = neg_best.expect("negative label exists");
    Ok((s_pos, s_neg, neg_idx))
}

/// Gradient of [`loss_ranking`] w.r.t. the raw scores.
pub fn dlogits_ranking<R: Real>(
    scores: &[Vec<R>],
    positives: &[Vec<usize>],
    params: &RankingParams,
) -> Result<Vec<Vec<R>>> {
    let n = R::from_f64(scores.len().max(1) as f64);
    let gamma = R::from_f64(params.gamma);
    let mut out = Vec::with_capacity(scores.len());
    for (row, pos) in scores.iter().zip(positives) {
        let (s_pos, s_neg, neg_idx) = ranking_terms(row, pos)?;
        let a = gamma * (R::from_f64(params.margin_pos) - s_pos);
        let b = gamma * (R::from_f64(params.margin_neg) + s_neg);
        // d/ds+ ln(1+exp(a)) = -gamma sigmoid(a), spread over the positives;
        // d/ds- ln(1+exp(b)) = +gamma sigmoid(b) on the most offending label.
        let d_pos = -(gamma * a.sigmoid()) / R::from_f64(pos.len() as f64) / n;
        let d_neg = gamma * b.sigmoid() / n;
        let mut grad = vec![R::ZERO; row.len()];
        for &t in pos {
            grad[t] += d_pos;
        }
        grad[neg_idx] += d_neg;
        out.push(grad);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_has_negligible_loss() {
        let probs = vec![vec![1.0f64, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let loss = loss_single(&probs, &[0, 1]).unwrap();
        assert!((0.0..=1e-9).contains(&loss));
    }

    #[test]
    fn uniform_prediction_loss_is_ln_c() {
        let c = 7usize;
        let probs = vec![vec![1.0f64 / c as f64; c]; 3];
        let loss = loss_single(&probs, &[0, 3, 6]).unwrap();
        assert!((loss - (c as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn single_loss_matches_scalar_oracle() {
        let probs = vec![
            vec![0.7f64, 0.2, 0.1],
            vec![0.1, 0.8, 0.1],
            vec![0.3, 0.3, 0.4],
            vec![0.25, 0.5, 0.25],
        ];
        let targets = [0usize, 1, 2, 0];
        let oracle = -(0.7f64.ln() + 0.8f64.ln() + 0.4f64.ln() + 0.25f64.ln()) / 4.0;
        let loss = loss_single(&probs, &targets).unwrap();
        assert!((loss - oracle).abs() < 1e-12);
    }

    #[test]
    fn target_out_of_range_is_an_error() {
        let probs = vec![vec![0.5f64, 0.5]];
        assert!(loss_single(&probs, &[2]).is_err());
    }

    #[test]
    fn bce_loss_basics() {
        let probs = vec![vec![1.0f64, 0.0]];
        let targets = vec![vec![0usize]];
        let loss = loss_multi_bce(&probs, &targets).unwrap();
        assert!(loss <= 1e-9);
        // Uniform 0.5 scores give ln 2 per term.
        let probs = vec![vec![0.5f64, 0.5]];
        let loss = loss_multi_bce(&probs, &targets).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ranking_loss_at_margin_points_is_two_ln_two() {
        // score+ = m+ and score- = -m- make both exponents exp(0).
        let scores = vec![vec![2.5f64, -0.5]];
        let positives = vec![vec![0usize]];
        let loss = loss_ranking(&scores, &positives, &RankingParams::default()).unwrap();
        assert!((loss - 2.0 * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn ranking_loss_vanishes_in_the_limit() {
        let scores = vec![vec![1e4f64, -1e4]];
        let positives = vec![vec![0usize]];
        let loss = loss_ranking(&scores, &positives, &RankingParams::default()).unwrap();
        assert!(loss.abs() < 1e-9);
    }

    #[test]
    fn ranking_loss_matches_independent_evaluation() {
        // Positives {1.0, 3.0}, negatives {0.2, 0.7}: score+ = 2.0,
        // score- = 0.7.
        let scores = vec![vec![1.0f64, 0.2, 3.0, 0.7]];
        let positives = vec![vec![0usize, 2]];
        let p = RankingParams::default();
        let loss = loss_ranking(&scores, &positives, &p).unwrap();
        let oracle = (1.0 + (2.0 * (2.5 - 2.0)).exp()).ln() + (1.0 + (2.0 * (0.5 + 0.7)).exp()).ln();
        assert!((loss - oracle).abs() < 1e-12);
    }

    #[test]
    fn ranking_loss_requires_a_negative() {
        let scores = vec![vec![1.0f64, 2.0]];
        let positives = vec![vec![0usize, 1]];
        assert!(loss_ranking(&scores, &positives, &RankingParams::default()).is_err());
        assert!(loss_ranking(&scores, &[vec![]], &RankingParams::default()).is_err());
    }

    #[test]
    fn gradients_scale_linearly_with_loss_scale() {
        // Doubling the loss doubles the gradient: check by scaling d_logits.
        let probs = vec![vec![0.6f64, 0.4]];
        let g = dlogits_single(&probs, &[0]);
        let mut doubled = g.clone();
        for row in &mut doubled {
            for v in row.iter_mut() {
                *v *= 2.0;
            }
        }
        for (a, b) in g[0].iter().zip(&doubled[0]) {
            assert!((2.0 * a - b).abs() < 1e-15);
        }
    }
}
