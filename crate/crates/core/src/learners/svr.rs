//! Linear epsilon-insensitive support vector regression.
//!
//! Features are standardized with the training means and SDs and the target
//! is centered. The dual problem
//!
//! ```text
//! min_b  1/2 b'Qb - y'b + eps * |b|_1    subject to  -C <= b_i <= C
//! ```
//!
//! with `Q = X X'` (X augmented by a constant column for the bias) is solved
//! by exact coordinate minimization, so the dual objective never increases
//! from one epoch to the next.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub tolerance: f64,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 1.0,
            epsilon: 0.1,
            max_epochs: 1000,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvr {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub target_mean: f64,
    /// Weights on the standardized features.
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Dual objective after each epoch.
    pub objective_trace: Vec<f64>,
    pub epochs: usize,
}

pub(crate) fn standardize_columns(x: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() as f64;
    let p = x.first().map_or(0, Vec::len);
    let mut means = vec![0.0; p];
    let mut scales = vec![1.0; p];
    for j in 0..p {
        let m = x.iter().map(|r| r[j]).sum::<f64>() / n;
        let var = x.iter().map(|r| (r[j] - m) * (r[j] - m)).sum::<f64>() / n;
        means[j] = m;
        if var > 0.0 {
            scales[j] = var.sqrt();
        }
    }
    (means, scales)
}

impl LinearSvr {
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: SvrParams, seed: u64) -> Self {
        let n = y.len();
        let (means, scales) = standardize_columns(x);
        let p = means.len();
        let target_mean = y.iter().sum::<f64>() / n as f64;
        // rows of [z_1..z_p, 1]
        let z: Vec<Vec<f64>> = x
            .iter()
            .map(|r| {
                let mut row: Vec<f64> = (0..p).map(|j| (r[j] - means[j]) / scales[j]).collect();
                row.push(1.0);
                row
            })
            .collect();
        let t: Vec<f64> = y.iter().map(|v| v - target_mean).collect();
        let q_diag: Vec<f64> = z.iter().map(|r| r.iter().map(|v| v * v).sum()).collect();

        let mut beta = vec![0.0; n];
        let mut w = vec![0.0; p + 1];
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trace = Vec::new();
        let mut epochs = 0;

        for _ in 0..params.max_epochs {
            epochs += 1;
            order.shuffle(&mut rng);
            let mut max_step: f64 = 0.0;
            for &i in &order {
                let row = &z[i];
                let g = dot(&w, row) - t[i];
                let unconstrained = beta[i] - g / q_diag[i];
                let shrink = params.epsilon / q_diag[i];
                let soft = unconstrained.signum() * (unconstrained.abs() - shrink).max(0.0);
                let updated = soft.clamp(-params.c, params.c);
                let delta = updated - beta[i];
                if delta != 0.0 {
                    for (wk, zk) in w.iter_mut().zip(row) {
                        *wk += delta * zk;
                    }
                    beta[i] = updated;
                    max_step = max_step.max(delta.abs());
                }
            }
            trace.push(dual_objective(&w, &beta, &t, params.epsilon));
            if max_step < params.tolerance {
                break;
            }
        }

        let bias = w[p];
        w.truncate(p);
        LinearSvr {
            means,
            scales,
            target_mean,
            weights: w,
            bias,
            objective_trace: trace,
            epochs,
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let linear: f64 = self
            .weights
            .iter()
            .enumerate()
            .map(|(j, wj)| wj * (row[j] - self.means[j]) / self.scales[j])
            .sum();
        self.target_mean + linear + self.bias
    }

    /// `1/2 |w|^2 + C * sum(max(0, |r_i| - eps))` on the training data, with
    /// the bias included in `w`.
    pub fn primal_objective(&self, x: &[Vec<f64>], y: &[f64], params: SvrParams) -> f64 {
        let reg = 0.5 * (dot(&self.weights, &self.weights) + self.bias * self.bias);
        let loss: f64 = x
            .iter()
            .zip(y)
            .map(|(r, v)| ((v - self.predict(r)).abs() - params.epsilon).max(0.0))
            .sum();
        reg + params.c * loss
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// With `w = X'b`, `b'Qb = |w|^2`.
fn dual_objective(w: &[f64], beta: &[f64], t: &[f64], epsilon: f64) -> f64 {
    0.5 * dot(w, w) - dot(t, beta) + epsilon * beta.iter().map(|b| b.abs()).sum::<f64>()
}
