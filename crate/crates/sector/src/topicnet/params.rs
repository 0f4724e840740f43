//! Network parameters: one LSTM per direction plus shared bottleneck and
//! output layers (tied across directions).

use super::real::Real;
use super::tensor::Mat;
use crate::rng::SplitMix64;

/// Classification head: softmax over topic labels or sigmoid over heading
/// words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Single,
    Multi,
}

/// Gate order inside the stacked LSTM matrices: input, forget, cell
/// candidate, output.
pub const GATES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams<R> {
    /// `(4H x input_dim)` input weights.
    pub w_input: Mat<R>,
    /// `(4H x H)` recurrent weights.
    pub w_hidden: Mat<R>,
    /// `4H` bias.
    pub bias: Vec<R>,
    pub hidden: usize,
    pub input_dim: usize,
}

impl<R: Real> LstmParams<R> {
    /// Uniform Xavier init in `+-sqrt(6 / (fan_in + fan_out))`; the forget
    /// gate bias starts at 1, all other biases at 0. No peepholes.
    pub fn init(input_dim: usize, hidden: usize, rng: &mut SplitMix64) -> Self {
        let gate_rows = GATES * hidden;
        let mut uniform = |rows: usize, cols: usize| -> Mat<R> {
            let a = (6.0 / (rows + cols) as f64).sqrt();
            Mat::from_fn(rows, cols, |_, _| R::from_f64(rng.uniform(-a, a)))
        };
        let w_input = uniform(gate_rows, input_dim);
        let w_hidden = uniform(gate_rows, hidden);
        let mut bias = vec![R::ZERO; gate_rows];
        for b in bias.iter_mut().skip(hidden).take(hidden) {
            *b = R::ONE;
        }
        LstmParams {
            w_input,
            w_hidden,
            bias,
            hidden,
            input_dim,
        }
    }

    pub fn zeros_like(&self) -> Self {
        LstmParams {
            w_input: Mat::zeros(self.w_input.rows, self.w_input.cols),
            w_hidden: Mat::zeros(self.w_hidden.rows, self.w_hidden.cols),
            bias: vec![R::ZERO; self.bias.len()],
            hidden: self.hidden,
            input_dim: self.input_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SharedParams<R> {
    /// Bottleneck `(E x H)`, shared by both directions.
    pub w_embed: Mat<R>,
    pub b_embed: Vec<R>,
    /// Output `(L x E)`; the same matrix multiplies both directional
    /// embeddings.
    pub w_out: Mat<R>,
    pub b_out: Vec<R>,
}

impl<R: Real> SharedParams<R> {
    pub fn init(hidden: usize, embedding: usize, labels: usize, rng: &mut SplitMix64) -> Self {
        let mut uniform = |rows: usize, cols: usize| -> Mat<R> {
            let a = (6.0 / (rows + cols) as f64).sqrt();
            Mat::from_fn(rows, cols, |_, _| R::from_f64(rng.uniform(-a, a)))
        };
        SharedParams {
            w_embed: uniform(embedding, hidden),
            b_embed: vec![R::ZERO; embedding],
            w_out: uniform(labels, embedding),
            b_out: vec![R::ZERO; labels],
        }
    }

    pub fn zeros_like(&self) -> Self {
        SharedParams {
            w_embed: Mat::zeros(self.w_embed.rows, self.w_embed.cols),
            b_embed: vec![R::ZERO; self.b_embed.len()],
            w_out: Mat::zeros(self.w_out.rows, self.w_out.cols),
            b_out: vec![R::ZERO; self.b_out.len()],
        }
    }
}

/// The full parameter set: forward LSTM, backward LSTM, shared layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<R> {
    pub forward: LstmParams<R>,
    pub backward: LstmParams<R>,
    pub shared: SharedParams<R>,
    pub task: TaskKind,
}

impl<R: Real> Network<R> {
    pub fn init(
        input_dim: usize,
        hidden: usize,
        embedding: usize,
        labels: usize,
        task: TaskKind,
        rng: &mut SplitMix64,
    ) -> Self {
        Network {
            forward: LstmParams::init(input_dim, hidden, rng),
            backward: LstmParams::init(input_dim, hidden, rng),
            shared: SharedParams::init(hidden, embedding, labels, rng),
            task,
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden
    }

    pub fn embedding_dim(&self) -> usize {
        self.shared.w_embed.rows
    }

    pub fn label_count(&self) -> usize {
        self.shared.w_out.rows
    }

    pub fn input_dim(&self) -> usize {
        self.forward.input_dim
    }

    pub fn zeros_like(&self) -> Gradients<R> {
        Gradients {
            forward: self.forward.zeros_like(),
            backward: self.backward.zeros_like(),
            shared: self.shared.zeros_like(),
        }
    }

    /// Parameter tensors in a fixed order (matching [`Gradients::tensors`]).
    pub fn tensors_mut(&mut self) -> Vec<&mut [R]> {
        vec![
            &mut self.forward.w_input.data,
            &mut self.forward.w_hidden.data,
            &mut self.forward.bias,
            &mut self.backward.w_input.data,
            &mut self.backward.w_hidden.data,
            &mut self.backward.bias,
            &mut self.shared.w_embed.data,
            &mut self.shared.b_embed,
            &mut self.shared.w_out.data,
            &mut self.shared.b_out,
        ]
    }

    pub fn tensors(&self) -> Vec<&[R]> {
        vec![
            &self.forward.w_input.data,
            &self.forward.w_hidden.data,
            &self.forward.bias,
            &self.backward.w_input.data,
            &self.backward.w_hidden.data,
            &self.backward.bias,
            &self.shared.w_embed.data,
            &self.shared.b_embed,
            &self.shared.w_out.data,
            &self.shared.b_out,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn map_to<T: Real>(&self) -> Network<T> {
        Network {
            forward: LstmParams {
                w_input: self.forward.w_input.map_to(),
                w_hidden: self.forward.w_hidden.map_to(),
                bias: self.forward.bias.iter().map(|&x| T::from_f64(x.to_f64())).collect(),
                hidden: self.forward.hidden,
                input_dim: self.forward.input_dim,
            },
            backward: LstmParams {
                w_input: self.backward.w_input.map_to(),
                w_hidden: self.backward.w_hidden.map_to(),
                bias: self.backward.bias.iter().map(|&x| T::from_f64(x.to_f64())).collect(),
                hidden: self.backward.hidden,
                input_dim: self.backward.input_dim,
            },
            shared: SharedParams {
                w_embed: self.shared.w_embed.map_to(),
                b_embed: self.shared.b_embed.iter().map(|&x| T::from_f64(x.to_f64())).collect(),
                w_out: self.shared.w_out.map_to(),
                b_out: self.shared.b_out.iter().map(|&x| T::from_f64(x.to_f64())).collect(),
            },
            task: self.task,
        }
    }
}

/// Gradient buffers with the same shapes as the network parameters. The tied
/// tensors (bottleneck and output weights) accumulate contributions from both
/// directions.
#[derive(Debug, Clone)]
pub struct Gradients<R> {
    pub forward: LstmParams<R>,
    pub backward: LstmParams<R>,
    pub shared: SharedParams<R>,
}

impl<R: Real> Gradients<R> {
    pub fn add_assign(&mut self, other: &Gradients<R>) {
        self.forward.w_input.add_assign(&other.forward.w_input);
        self.forward.w_hidden.add_assign(&other.forward.w_hidden);
        super::tensor::add_vec(&mut self.forward.bias, &other.forward.bias);
        self.backward.w_input.add_assign(&other.backward.w_input);
        self.backward.w_hidden.add_assign(&other.backward.w_hidden);
        super::tensor::add_vec(&mut self.backward.bias, &other.backward.bias);
        self.shared.w_embed.add_assign(&other.shared.w_embed);
        super::tensor::add_vec(&mut self.shared.b_embed, &other.shared.b_embed);
        self.shared.w_out.add_assign(&other.shared.w_out);
        super::tensor::add_vec(&mut self.shared.b_out, &other.shared.b_out);
    }

    pub fn scale(&mut self, s: R) {
        self.forward.w_input.scale(s);
        self.forward.w_hidden.scale(s);
        super::tensor::scale_vec(&mut self.forward.bias, s);
        self.backward.w_input.scale(s);
        self.backward.w_hidden.scale(s);
        super::tensor::scale_vec(&mut self.backward.bias, s);
        self.shared.w_embed.scale(s);
        super::tensor::scale_vec(&mut self.shared.b_embed, s);
        self.shared.w_out.scale(s);
        super::tensor::scale_vec(&mut self.shared.b_out, s);
    }

    /// Gradient tensors in the same fixed order as [`Network::tensors_mut`].
    pub fn tensors(&self) -> Vec<&[R]> {
        vec![
            &self.forward.w_input.data,
            &self.forward.w_hidden.data,
            &self.forward.bias,
            &self.backward.w_input.data,
            &self.backward.w_hidden.data,
            &self.backward.bias,
            &self.shared.w_embed.data,
            &self.shared.b_embed,
            &self.shared.w_out.data,
            &self.shared.b_out,
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [R]> {
        vec![
            &mut self.forward.w_input.data,
            &mut self.forward.w_hidden.data,
            &mut self.forward.bias,
            &mut self.backward.w_input.data,
            &mut self.backward.w_hidden.data,
            &mut self.backward.bias,
            &mut self.shared.w_embed.data,
            &mut self.shared.b_embed,
            &mut self.shared.w_out.data,
            &mut self.shared.b_out,
        ]
    }
}
