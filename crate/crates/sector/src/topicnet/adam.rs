//! ADAM optimizer over the network's flattened tensor list.

use super::real::Real;

#[derive(Debug, Clone)]
pub struct Adam<R> {
    m: Vec<Vec<R>>,
    v: Vec<Vec<R>>,
    step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl<R: Real> Adam<R> {
    pub fn new(shapes: &[&[R]], learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Adam {
            m: shapes.iter().map(|t| vec![R::ZERO; t.len()]).collect(),
            v: shapes.iter().map(|t| vec![R::ZERO; t.len()]).collect(),
            step: 0,
            learning_rate,
            beta1,
            beta2,
            epsilon,
        }
    }

    /// One update over parameter tensors and matching gradient tensors.
    pub fn step(&mut self, params: &mut [&mut [R]], grads: &[&[R]]) {
        debug_assert_eq!(params.len(), grads.len());
        self.step += 1;
        let b1 = R::from_f64(self.beta1);
        let b2 = R::from_f64(self.beta2);
        let one_minus_b1 = R::ONE - b1;
        let one_minus_b2 = R::ONE - b2;
        let correction1 = R::from_f64(1.0 - self.beta1.powi(self.step as i32));
        let correction2 = R::from_f64(1.0 - self.beta2.powi(self.step as i32));
        let lr = R::from_f64(self.learning_rate);
        let eps = R::from_f64(self.epsilon);

        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            debug_assert_eq!(p.len(), g.len());
            for i in 0..p.len() {
                m[i] = b1 * m[i] + one_minus_b1 * g[i];
                v[i] = b2 * v[i] + one_minus_b2 * g[i] * g[i];
                let m_hat = m[i] / correction1;
                let v_hat = v[i] / correction2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}
