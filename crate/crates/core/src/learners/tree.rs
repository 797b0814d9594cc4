//! CART regression trees with squared-error splits.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features examined per split; all of them when >= the column count.
    pub max_features: usize,
}

impl RegressionTree {
    /// Grows a tree on the rows listed in `sample` (repeats allowed).
    pub fn fit<R: Rng>(
        x: &[Vec<f64>],
        y: &[f64],
        sample: Vec<usize>,
        params: TreeParams,
        rng: &mut R,
    ) -> Self {
        let mut tree = RegressionTree { nodes: Vec::new() };
        let n_features = x.first().map_or(0, Vec::len);
        tree.grow(x, y, sample, 0, params, n_features, rng);
        tree
    }

    #[allow(clippy::too_many_arguments)]
    fn grow<R: Rng>(
        &mut self,
        x: &[Vec<f64>],
        y: &[f64],
        rows: Vec<usize>,
        depth: usize,
        params: TreeParams,
        n_features: usize,
        rng: &mut R,
    ) -> usize {
        let id = self.nodes.len();
        let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node::Leaf { value: mean });

        if depth >= params.max_depth || rows.len() < 2 * params.min_leaf.max(1) {
            return id;
        }
        let Some((feature, threshold)) = best_split(x, y, &rows, params, n_features, rng) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| x[i][feature] <= threshold);
        let left = self.grow(x, y, left_rows, depth + 1, params, n_features, rng);
        let right = self.grow(x, y, right_rows, depth + 1, params, n_features, rng);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

fn best_split<R: Rng>(
    x: &[Vec<f64>],
    y: &[f64],
    rows: &[usize],
    params: TreeParams,
    n_features: usize,
    rng: &mut R,
) -> Option<(usize, f64)> {
    let candidates: Vec<usize> = if params.max_features >= n_features {
        (0..n_features).collect()
    } else {
        sample(rng, n_features, params.max_features.max(1)).into_vec()
    };
    let n = rows.len();
    let total: f64 = rows.iter().map(|&i| y[i]).sum();
    let total_sq: f64 = rows.iter().map(|&i| y[i] * y[i]).sum();
    let parent_sse = total_sq - total * total / n as f64;
    let min_leaf = params.min_leaf.max(1);

    let mut best: Option<(f64, usize, f64)> = None;
    let mut order: Vec<usize> = rows.to_vec();
    for &f in &candidates {
        order.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]));
        let (mut left_sum, mut left_sq) = (0.0, 0.0);
        for k in 0..n - 1 {
            let v = y[order[k]];
            left_sum += v;
            left_sq += v * v;
            let n_left = k + 1;
            let n_right = n - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let here = x[order[k]][f];
            let next = x[order[k + 1]][f];
            if here == next {
                continue;
            }
            let right_sum = total - left_sum;
            let right_sq = total_sq - left_sq;
            let sse = (left_sq - left_sum * left_sum / n_left as f64)
                + (right_sq - right_sum * right_sum / n_right as f64);
            let gain = parent_sse - sse;
            if best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, f, here + (next - here) / 2.0));
            }
        }
    }
    let tolerance = 1e-12 * parent_sse.abs().max(f64::MIN_POSITIVE);
    best.filter(|(gain, _, _)| *gain > tolerance)
        .map(|(_, f, t)| (f, t))
}
