use crate::embedding::EmbeddingMatrix;
use crate::train::loss::RowGrads;

/// Adam with moment updates applied only to rows that received a gradient.
/// Bias correction uses the global step count.
#[derive(Debug, Clone)]
pub struct SparseAdam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    d: usize,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl SparseAdam {
    pub fn new(n: usize, d: usize, lr: f64) -> Self {
        SparseAdam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            d,
            m: vec![0.0; n * d],
            v: vec![0.0; n * d],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut EmbeddingMatrix, grads: &RowGrads) {
        self.t += 1;
        let t = self.t as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let step = self.lr / bc1;
        let d = self.d;
        for (row, g) in grads.iter() {
            let range = row * d..(row + 1) * d;
            let m = &mut self.m[range.clone()];
            let v = &mut self.v[range];
            let p = params.row_mut(row);
            for i in 0..d {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                p[i] -= step * m[i] / ((v[i] / bc2).sqrt() + self.eps);
            }
        }
    }
}
