//! Gradient boosting for squared-error loss.
//!
//! Starts from the target mean and adds shrunken depth-limited trees fitted
//! to the current residuals. A round whose tree would raise the training
//! loss ends training, so the recorded loss trace never increases.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{RegressionTree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostingParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
    /// Mean squared training error before the first round and after each.
    pub loss_trace: Vec<f64>,
}

fn mse(y: &[f64], f: &[f64]) -> f64 {
    y.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64
}

impl GradientBoosting {
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: BoostingParams, seed: u64) -> Self {
        let n = y.len();
        let init = y.iter().sum::<f64>() / n as f64;
        let mut current = vec![init; n];
        let mut loss = mse(y, &current);
        let mut model = GradientBoosting {
            init,
            learning_rate: params.learning_rate,
            trees: Vec::with_capacity(params.n_trees),
            loss_trace: vec![loss],
        };
        let n_features = x.first().map_or(0, Vec::len);
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_leaf: params.min_leaf,
            max_features: n_features,
        };
        // All features are examined at every split, so the rng never draws.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..params.n_trees {
            let residuals: Vec<f64> = y.iter().zip(&current).map(|(a, b)| a - b).collect();
            let tree = RegressionTree::fit(x, &residuals, (0..n).collect(), tree_params, &mut rng);
            let next: Vec<f64> = current
                .iter()
                .zip(x)
                .map(|(f, row)| f + params.learning_rate * tree.predict(row))
                .collect();
            let next_loss = mse(y, &next);
            if next_loss > loss {
                break;
            }
            current = next;
            loss = next_loss;
            model.trees.push(tree);
            model.loss_trace.push(loss);
        }
        model
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.init
            + self.learning_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }
}
