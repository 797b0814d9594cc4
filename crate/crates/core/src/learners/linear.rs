//! Ordinary least squares with a ridge-jitter fallback for singular designs.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::least_squares;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Set when the design was singular and a tiny ridge penalty was added.
    pub ridge_lambda: Option<f64>,
}

impl LinearModel {
    pub fn fit(x: &[Vec<f64>], y: &[f64]) -> Self {
        let n = y.len();
        let p = x.first().map_or(0, Vec::len);
        let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] });
        let target = DVector::from_column_slice(y);
        match least_squares(&design, &target) {
            Ok(ls) => LinearModel {
                intercept: ls.coef[0],
                coefficients: ls.coef.iter().skip(1).copied().collect(),
                ridge_lambda: None,
            },
            Err(def) => {
                let xtx = design.transpose() * &design;
                let lambda = 1e-8 * xtx.diagonal().max().max(1.0);
                warn!(
                    "singular linear design (column {}); refitting with ridge jitter {lambda:e}",
                    def.column
                );
                let penalized = &xtx + DMatrix::identity(p + 1, p + 1) * lambda;
                let coef = penalized
                    .cholesky()
                    .expect("ridge-penalized normal matrix is positive definite")
                    .solve(&(design.transpose() * &target));
                LinearModel {
                    intercept: coef[0],
                    coefficients: coef.iter().skip(1).copied().collect(),
                    ridge_lambda: Some(lambda),
                }
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(row)
                .map(|(b, v)| b * v)
                .sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_line() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 3.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        let m = LinearModel::fit(&x, &y);
        assert!((m.intercept - 1.0).abs() < 1e-10);
        assert!((m.coefficients[0] - 2.0).abs() < 1e-10);
        assert!(m.ridge_lambda.is_none());
    }

    #[test]
    fn singular_design_falls_back_to_ridge() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| 3.0 * i as f64).collect();
        let m = LinearModel::fit(&x, &y);
        assert!(m.ridge_lambda.is_some());
        assert!((m.predict(&[4.0, 4.0]) - 12.0).abs() < 1e-4);
    }
}
