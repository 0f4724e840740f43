//! Document-level forward and backward passes: both LSTM directions, the
//! shared tanh bottleneck producing topic embeddings, and the shared output
//! head applied to both directional embeddings.

use super::lstm::{lstm_backward, lstm_forward, LstmTrace};
use super::params::{Gradients, Network, TaskKind};
use super::real::Real;
use crate::rng::SplitMix64;
use crate::Result;

/// Everything the backward pass needs from one document's forward pass.
#[derive(Debug, Clone)]
pub struct DocForward<R> {
    /// Inputs in document order.
    pub inputs: Vec<Vec<R>>,
    pub trace_fwd: LstmTrace<R>,
    /// Trace of the backward direction over the reversed inputs.
    pub trace_bwd: LstmTrace<R>,
    /// Hidden states after dropout, document order, per direction.
    pub h_fwd: Vec<Vec<R>>,
    pub h_bwd: Vec<Vec<R>>,
    /// Inverted-dropout masks (None at inference).
    pub mask_fwd: Option<Vec<Vec<R>>>,
    pub mask_bwd: Option<Vec<Vec<R>>>,
    /// Directional topic embeddings, document order.
    pub embed_fwd: Vec<Vec<R>>,
    pub embed_bwd: Vec<Vec<R>>,
    /// Raw output scores per sentence.
    pub logits: Vec<Vec<R>>,
    /// Task activation of the logits (softmax rows or sigmoid entries).
    pub activations: Vec<Vec<R>>,
}

pub fn softmax<R: Real>(logits: &[R]) -> Vec<R> {
    let mut max = logits[0];
    for &v in logits {
        max = max.maxr(v);
    }
    let exps: Vec<R> = logits.iter().map(|&v| (v - max).exp()).collect();
    let mut sum = R::ZERO;
    for &e in &exps {
        sum += e;
    }
    exps.into_iter().map(|e| e / sum).collect()
}

fn dropout_mask<R: Real>(n: usize, dim: usize, rate: f64, rng: &mut SplitMix64) -> Vec<Vec<R>> {
    let keep = 1.0 - rate;
    let scale = R::from_f64(1.0 / keep);
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| if rng.bernoulli(keep) { scale } else { R::ZERO })
                .collect()
        })
        .collect()
}

/// Run one document through the network. `dropout` applies inverted dropout
/// to the LSTM hidden states feeding the bottleneck (training only).
pub fn forward_doc<R: Real>(
    net: &Network<R>,
    inputs: &[Vec<R>],
    dropout: Option<(f64, &mut SplitMix64)>,
) -> Result<DocForward<R>> {
    let n = inputs.len();
    let refs: Vec<&[R]> = inputs.iter().map(|x| x.as_slice()).collect();
    let trace_fwd = lstm_forward(&net.forward, &refs)?;
    let reversed: Vec<&[R]> = refs.iter().rev().copied().collect();
    let trace_bwd = lstm_forward(&net.backward, &reversed)?;

    // Hidden states in document order; the backward trace is re-reversed.
    let mut h_fwd: Vec<Vec<R>> = trace_fwd.hidden_states();
    let mut h_bwd: Vec<Vec<R>> = trace_bwd.hidden_states();
    h_bwd.reverse();

    let (mask_fwd, mask_bwd) = match dropout {
        Some((rate, rng)) if rate > 0.0 => {
            let mf = dropout_mask(n, net.hidden(), rate, rng);
            let mb = dropout_mask(n, net.hidden(), rate, rng);
            for (h, m) in h_fwd.iter_mut().zip(&mf) {
                for (x, &s) in h.iter_mut().zip(m) {
                    *x *= s;
                }
            }
            for (h, m) in h_bwd.iter_mut().zip(&mb) {
                for (x, &s) in h.iter_mut().zip(m) {
                    *x *= s;
                }
            }
            (Some(mf), Some(mb))
        }
        _ => (None, None),
    };

    let embed = |h: &[R]| -> Vec<R> {
        let mut pre = net.shared.b_embed.clone();
        net.shared.w_embed.mul_vec_add(h, &mut pre);
        pre.into_iter().map(|v| v.tanh()).collect()
    };
    let embed_fwd: Vec<Vec<R>> = h_fwd.iter().map(|h| embed(h)).collect();
    let embed_bwd: Vec<Vec<R>> = h_bwd.iter().map(|h| embed(h)).collect();

    let mut logits = Vec::with_capacity(n);
    for k in 0..n {
        let mut z = net.shared.b_out.clone();
        net.shared.w_out.mul_vec_add(&embed_fwd[k], &mut z);
        net.shared.w_out.mul_vec_add(&embed_bwd[k], &mut z);
        logits.push(z);
    }
    let activations = logits
        .iter()
        .map(|z| match net.task {
            TaskKind::Single => softmax(z),
            TaskKind::Multi => z.iter().map(|&v| v.sigmoid()).collect(),
        })
        .collect();

    Ok(DocForward {
        inputs: inputs.to_vec(),
        trace_fwd,
        trace_bwd,
        h_fwd,
        h_bwd,
        mask_fwd,
        mask_bwd,
        embed_fwd,
        embed_bwd,
        logits,
        activations,
    })
}

/// Backpropagate `d_logits` (gradient of the loss w.r.t. the raw scores)
/// through the output head, the bottleneck and both LSTM directions.
pub fn backward_doc<R: Real>(
    net: &Network<R>,
    fwd: &DocForward<R>,
    d_logits: &[Vec<R>],
) -> Gradients<R> {
    let n = fwd.inputs.len();
    let hidden = net.hidden();
    let mut grads = net.zeros_like();

    let mut dh_fwd: Vec<Vec<R>> = vec![vec![R::ZERO; hidden]; n];
    let mut dh_bwd: Vec<Vec<R>> = vec![vec![R::ZERO; hidden]; n];

    for k in 0..n {
        let dz = &d_logits[k];
        // Output layer: the same weight matrix multiplies both embeddings.
        grads.shared.w_out.add_outer(dz, &fwd.embed_fwd[k]);
        grads.shared.w_out.add_outer(dz, &fwd.embed_bwd[k]);
        super::tensor::add_vec(&mut grads.shared.b_out, dz);

        for (embeds, hs, dh) in [
            (&fwd.embed_fwd, &fwd.h_fwd, &mut dh_fwd),
            (&fwd.embed_bwd, &fwd.h_bwd, &mut dh_bwd),
        ] {
            let mut de = vec![R::ZERO; net.embedding_dim()];
            net.shared.w_out.tr_mul_vec_add(dz, &mut de);
            // Through tanh of the bottleneck.
            let e = &embeds[k];
            let mut dpre = vec![R::ZERO; net.embedding_dim()];
            for j in 0..net.embedding_dim() {
                dpre[j] = de[j] * (R::ONE - e[j] * e[j]);
            }
            grads.shared.w_embed.add_outer(&dpre, &hs[k]);
            super::tensor::add_vec(&mut grads.shared.b_embed, &dpre);
            net.shared.w_embed.tr_mul_vec_add(&dpre, &mut dh[k]);
        }
    }

    // Dropout masks gate the hidden gradients.
    if let Some(masks) = &fwd.mask_fwd {
        for (dh, m) in dh_fwd.iter_mut().zip(masks) {
            for (x, &s) in dh.iter_mut().zip(m) {
                *x *= s;
            }
        }
    }
    if let Some(masks) = &fwd.mask_bwd {
        for (dh, m) in dh_bwd.iter_mut().zip(masks) {
            for (x, &s) in dh.iter_mut().zip(m) {
                *x *= s;
            }
        }
    }

    let refs: Vec<&[R]> = fwd.inputs.iter().map(|x| x.as_slice()).collect();
    grads.forward = lstm_backward(&net.forward, &refs, &fwd.trace_fwd, &dh_fwd);

    let reversed: Vec<&[R]> = refs.iter().rev().copied().collect();
    dh_bwd.reverse();
    grads.backward = lstm_backward(&net.backward, &reversed, &fwd.trace_bwd, &dh_bwd);

    grads
}
