//! LSTM with forget gates, no peepholes, zero initial state. The forward
//! pass keeps gate activations for backpropagation through time.

use super::params::{LstmParams, GATES};
use super::real::Real;
use crate::{Error, Result};

/// Per-step activations retained for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmStep<R> {
    pub gate_i: Vec<R>,
    pub gate_f: Vec<R>,
    pub gate_g: Vec<R>,
    pub gate_o: Vec<R>,
    pub cell: Vec<R>,
    pub tanh_cell: Vec<R>,
    pub hidden: Vec<R>,
}

#[derive(Debug, Clone)]
pub struct LstmTrace<R> {
    pub steps: Vec<LstmStep<R>>,
}

impl<R: Real> LstmTrace<R> {
    pub fn hidden_states(&self) -> Vec<Vec<R>> {
        self.steps.iter().map(|s| s.hidden.clone()).collect()
    }
}

/// Run the LSTM over `inputs` in the order given. Callers handle direction:
/// the backward direction feeds the reversed sequence and re-reverses the
/// outputs.
pub fn lstm_forward<R: Real>(params: &LstmParams<R>, inputs: &[&[R]]) -> Result<LstmTrace<R>> {
    let h = params.hidden;
    if inputs.is_empty() {
        return Err(Error::Numeric("LSTM needs at least one input".into()));
    }
    for (k, x) in inputs.iter().enumerate() {
        if x.len() != params.input_dim {
            return Err(Error::Numeric(format!(
                "input {k} has dimension {}, expected {}",
                x.len(),
                params.input_dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite value in input {k}")));
        }
    }

    let mut steps = Vec::with_capacity(inputs.len());
    let mut h_prev = vec![R::ZERO; h];
    let mut c_prev = vec![R::ZERO; h];
    for x in inputs {
        let mut pre = params.bias.clone();
        params.w_input.mul_vec_add(x, &mut pre);
        params.w_hidden.mul_vec_add(&h_prev, &mut pre);
        debug_assert_eq!(pre.len(), GATES * h);

        let mut gate_i = vec![R::ZERO; h];
        let mut gate_f = vec![R::ZERO; h];
        let mut gate_g = vec![R::ZERO; h];
        let mut gate_o = vec![R::ZERO; h];
        let mut cell = vec![R::ZERO; h];
        let mut tanh_cell = vec![R::ZERO; h];
        let mut hidden = vec![R::ZERO; h];
        for j in 0..h {
            gate_i[j] = pre[j].sigmoid();
            gate_f[j] = pre[h + j].sigmoid();
            gate_g[j] = pre[2 * h + j].tanh();
            gate_o[j] = pre[3 * h + j].sigmoid();
            cell[j] = gate_f[j] * c_prev[j] + gate_i[j] * gate_g[j];
            tanh_cell[j] = cell[j].tanh();
            hidden[j] = gate_o[j] * tanh_cell[j];
        }
        h_prev = hidden.clone();
        c_prev = cell.clone();
        steps.push(LstmStep {
            gate_i,
            gate_f,
            gate_g,
            gate_o,
            cell,
            tanh_cell,
            hidden,
        });
    }
    Ok(LstmTrace { steps })
}

/// Gradients of the LSTM parameters given upstream gradients `d_hidden` per
/// step (in the same order the trace was produced).
pub fn lstm_backward<R: Real>(
    params: &LstmParams<R>,
    inputs: &[&[R]],
    trace: &LstmTrace<R>,
    d_hidden: &[Vec<R>],
) -> LstmParams<R> {
    let h = params.hidden;
    let n = trace.steps.len();
    debug_assert_eq!(d_hidden.len(), n);
    let mut grads = params.zeros_like();
    let mut dh_next = vec![R::ZERO; h];
    let mut dc_next = vec![R::ZERO; h];
    let zeros = vec![R::ZERO; h];

    for t in (0..n).rev() {
        let step = &trace.steps[t];
        let c_prev = if t == 0 { &zeros } else { &trace.steps[t - 1].cell };
        let h_prev = if t == 0 { &zeros } else { &trace.steps[t - 1].hidden };

        let mut dpre = vec![R::ZERO; GATES * h];
        let mut dc = vec![R::ZERO; h];
        for j in 0..h {
            let dh = d_hidden[t][j] + dh_next[j];
            let o = step.gate_o[j];
            let tc = step.tanh_cell[j];
            dc[j] = dh * o * (R::ONE - tc * tc) + dc_next[j];

            let i = step.gate_i[j];
            let f = step.gate_f[j];
            let g = step.gate_g[j];
            dpre[j] = dc[j] * g * i * (R::ONE - i);
            dpre[h + j] = dc[j] * c_prev[j] * f * (R::ONE - f);
            dpre[2 * h + j] = dc[j] * i * (R::ONE - g * g);
            dpre[3 * h + j] = dh * tc * o * (R::ONE - o);
        }

        grads.w_input.add_outer(&dpre, inputs[t]);
        grads.w_hidden.add_outer(&dpre, h_prev);
        super::tensor::add_vec(&mut grads.bias, &dpre);

        dh_next = vec![R::ZERO; h];
        params.w_hidden.tr_mul_vec_add(&dpre, &mut dh_next);
        for j in 0..h {
            dc_next[j] = dc[j] * step.gate_f[j];
        }
    }
    grads
}
