//! Outcome regressions on community-level founder traits: logistic
//! sustainability models, linear models for the other outcomes, marginal
//! effects and the cross-family majority vote.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::community::CommunityOutcomes;
use crate::error::{Error, Result};
use crate::estimator::CommunityFounderTraits;
use crate::learners::{adjusted_r2, r_squared, Family};
use crate::linalg::{least_squares, RankDeficiency};
use crate::BigFive;

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const LOGISTIC_TOLERANCE: f64 = 1e-8;
pub const LOGISTIC_MAX_ITER: usize = 100;

/// Slope predictors in design order; the intercept is column 0 of every fit.
pub const PREDICTORS: [&str; 6] = [
    "neuroticism",
    "extraversion",
    "openness",
    "agreeableness",
    "conscientiousness",
    "n_founders",
];
pub const N_COEF: usize = 7;

pub fn coefficient_names() -> Vec<&'static str> {
    std::iter::once("intercept").chain(PREDICTORS).collect()
}

/// Coefficient index of a trait (1-based, after the intercept).
pub fn trait_coefficient(t: BigFive) -> usize {
    t.index() + 1
}

pub const N_FOUNDERS_COEFFICIENT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeVariable {
    Sustained,
    FounderRetention,
    Size,
    Engagement,
    LogAvgDegree,
    Diameter,
    DegreeCentralization,
    ClosenessCentralization,
}

impl OutcomeVariable {
    pub const ALL: [OutcomeVariable; 8] = [
        OutcomeVariable::Sustained,
        OutcomeVariable::FounderRetention,
        OutcomeVariable::Size,
        OutcomeVariable::Engagement,
        OutcomeVariable::LogAvgDegree,
        OutcomeVariable::Diameter,
        OutcomeVariable::DegreeCentralization,
        OutcomeVariable::ClosenessCentralization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OutcomeVariable::Sustained => "sustained",
            OutcomeVariable::FounderRetention => "founder_retention",
            OutcomeVariable::Size => "size",
            OutcomeVariable::Engagement => "engagement",
            OutcomeVariable::LogAvgDegree => "log_avg_degree",
            OutcomeVariable::Diameter => "diameter",
            OutcomeVariable::DegreeCentralization => "degree_centralization",
            OutcomeVariable::ClosenessCentralization => "closeness_centralization",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            OutcomeVariable::Sustained => "Community sustainability",
            OutcomeVariable::FounderRetention => "Founder retention",
            OutcomeVariable::Size => "Community size",
            OutcomeVariable::Engagement => "Member engagement",
            OutcomeVariable::LogAvgDegree => "Social network degree (log)",
            OutcomeVariable::Diameter => "Social network diameter",
            OutcomeVariable::DegreeCentralization => "Social network degree centralization",
            OutcomeVariable::ClosenessCentralization => "Social network closeness centralization",
        }
    }

    pub fn kind(self) -> ModelKind {
        match self {
            OutcomeVariable::Sustained => ModelKind::Logistic,
            _ => ModelKind::Linear,
        }
    }

    /// Outcome value for one community, `None` when the metric is absent.
    /// `log_counts` log-transforms size and engagement.
    pub fn extract(self, o: &CommunityOutcomes, log_counts: bool) -> Option<f64> {
        let count = |v: f64| if log_counts { v.ln() } else { v };
        match self {
            OutcomeVariable::Sustained => Some(if o.sustained { 1.0 } else { 0.0 }),
            OutcomeVariable::FounderRetention => o.founder_retention,
            OutcomeVariable::Size => o.size.map(|s| count(s as f64)),
            OutcomeVariable::Engagement => o.engagement.map(count),
            OutcomeVariable::LogAvgDegree => o.log_avg_degree,
            OutcomeVariable::Diameter => o.diameter.map(|d| d as f64),
            OutcomeVariable::DegreeCentralization => o.degree_centralization,
            OutcomeVariable::ClosenessCentralization => o.closeness_centralization,
        }
    }
}

impl fmt::Display for OutcomeVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One regression's rows: five mean traits and the founder count per
/// community, plus the outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDesign {
    pub kind: ModelKind,
    pub trait_source: Family,
    pub row_ids: Vec<String>,
    pub predictors: Vec<[f64; 6]>,
    pub outcome: Vec<f64>,
}

impl RegressionDesign {
    pub fn new(
        kind: ModelKind,
        trait_source: Family,
        row_ids: Vec<String>,
        predictors: Vec<[f64; 6]>,
        outcome: Vec<f64>,
    ) -> Result<Self> {
        if predictors.len() != outcome.len() || row_ids.len() != outcome.len() {
            return Err(Error::Contract("design rows, ids and outcomes differ in length".into()));
        }
        if predictors.iter().flatten().chain(&outcome).any(|v| !v.is_finite()) {
            return Err(Error::Validation("design contains a missing or non-finite cell".into()));
        }
        if kind == ModelKind::Logistic && outcome.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Validation("logistic outcomes must be 0 or 1".into()));
        }
        Ok(RegressionDesign {
            kind,
            trait_source,
            row_ids,
            predictors,
            outcome,
        })
    }

    pub fn n(&self) -> usize {
        self.outcome.len()
    }

    /// `n x 7` matrix with the intercept column first.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), N_COEF, |i, j| if j == 0 { 1.0 } else { self.predictors[i][j - 1] })
    }

    /// Predictors z-scored (population SD); for linear designs the outcome
    /// too. Constant columns are only centered.
    pub fn standardized(&self) -> RegressionDesign {
        let z = |values: Vec<f64>| -> Vec<f64> {
            let n = values.len() as f64;
            let m = values.iter().sum::<f64>() / n;
            let sd = (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
            let s = if sd > 0.0 { sd } else { 1.0 };
            values.iter().map(|v| (v - m) / s).collect()
        };
        let mut predictors = self.predictors.clone();
        for j in 0..6 {
            let col = z(self.predictors.iter().map(|r| r[j]).collect());
            for (row, v) in predictors.iter_mut().zip(col) {
                row[j] = v;
            }
        }
        let outcome = match self.kind {
            ModelKind::Linear => z(self.outcome.clone()),
            ModelKind::Logistic => self.outcome.clone(),
        };
        RegressionDesign {
            predictors,
            outcome,
            ..self.clone()
        }
    }
}

/// Joins founder traits from one learner family with outcomes on community
/// id. Communities without the outcome are left out; rows follow the order
/// of `traits`.
pub fn build_design(
    outcome: OutcomeVariable,
    trait_source: Family,
    traits: &[CommunityFounderTraits],
    outcomes: &[CommunityOutcomes],
    log_counts: bool,
) -> Result<RegressionDesign> {
    let by_id: BTreeMap<&str, &CommunityOutcomes> =
        outcomes.iter().map(|o| (o.community_id.as_str(), o)).collect();
    let (mut ids, mut xs, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    for t in traits {
        let Some(y) = by_id.get(t.community_id.as_str()).and_then(|o| outcome.extract(o, log_counts)) else {
            continue;
        };
        let mut row = [0.0; 6];
        row[..5].copy_from_slice(&t.traits[trait_source.index()]);
        row[5] = t.n_founders as f64;
        ids.push(t.community_id.clone());
        xs.push(row);
        ys.push(y);
    }
    RegressionDesign::new(outcome.kind(), trait_source, ids, xs, ys)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: ModelKind,
    pub trait_source: Family,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Tjur's R² for logistic fits, adjusted R² for linear fits.
    pub fit_statistic: f64,
    /// Fitted values (probabilities for logistic fits).
    pub fitted: Vec<f64>,
    /// `y - fitted`.
    pub residuals: Vec<f64>,
    pub n: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Set when the logistic fit diverged, which signals separation.
    pub separation: bool,
}

fn rank_error(design_names: &[&str], x: &DMatrix<f64>, def: RankDeficiency) -> Error {
    // name the deficient column and the earlier columns it is built from
    let j = def.column;
    let mut columns = Vec::new();
    if j > 0 && j < x.ncols() {
        let prior = x.columns(0, j).into_owned();
        let target = x.column(j).into_owned();
        if let Ok(ls) = least_squares(&prior, &target) {
            let scale = target.amax().max(f64::MIN_POSITIVE);
            for (k, c) in ls.coef.iter().enumerate() {
                let contribution = c.abs() * prior.column(k).amax();
                if contribution > 1e-8 * scale {
                    columns.push(design_names[k].to_string());
                }
            }
        }
    }
    columns.push(design_names.get(j).copied().unwrap_or("?").to_string());
    Error::RankDeficient { columns }
}

fn two_sided_t(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return 1.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

fn two_sided_normal(z: f64) -> f64 {
    if z.is_nan() {
        return 1.0;
    }
    let dist = Normal::standard();
    (2.0 * dist.sf(z.abs())).min(1.0)
}

/// Ordinary least squares with classical standard errors and t-based
/// p-values (df = n - 7).
pub fn fit_ols(design: &RegressionDesign) -> Result<FitResult> {
    let n = design.n();
    if n <= N_COEF + 1 {
        return Err(Error::SampleSize {
            needed: N_COEF + 2,
            got: n,
        });
    }
    let x = design.matrix();
    let y = DVector::from_column_slice(&design.outcome);
    let names = coefficient_names();
    let ls = least_squares(&x, &y).map_err(|d| rank_error(&names, &x, d))?;
    let df = (n - N_COEF) as f64;
    let sigma2 = ls.rss / df;
    let cov = ls.xtx_inverse() * sigma2;
    let coefficients: Vec<f64> = ls.coef.iter().copied().collect();
    let standard_errors: Vec<f64> = (0..N_COEF).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    let p_values = coefficients
        .iter()
        .zip(&standard_errors)
        .map(|(&c, &se)| match (c, se) {
            (c, se) if se > 0.0 => two_sided_t(c / se, df),
            (c, _) if c == 0.0 => 1.0,
            _ => 0.0,
        })
        .collect();
    let fitted: Vec<f64> = ls.fitted.iter().copied().collect();
    let residuals = design.outcome.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let fit_statistic = adjusted_r2(r_squared(&design.outcome, &fitted), n, PREDICTORS.len())?;
    Ok(FitResult {
        kind: ModelKind::Linear,
        trait_source: design.trait_source,
        coefficients,
        standard_errors,
        p_values,
        fit_statistic,
        fitted,
        residuals,
        n,
        converged: true,
        iterations: 1,
        separation: false,
    })
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^eta)` without overflow.
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

/// Bernoulli log-likelihood of `coef` on the design.
pub fn logistic_log_likelihood(design: &RegressionDesign, coef: &[f64]) -> f64 {
    let x = design.matrix();
    let beta = DVector::from_column_slice(coef);
    let eta = &x * &beta;
    eta.iter()
        .zip(&design.outcome)
        .map(|(&e, &y)| y * e - softplus(e))
        .sum()
}

pub fn fitted_probabilities(design: &RegressionDesign, coef: &[f64]) -> Vec<f64> {
    let eta = design.matrix() * DVector::from_column_slice(coef);
    eta.iter().map(|&e| sigmoid(e)).collect()
}

/// Maximum likelihood by Newton/IRLS with step halving. Converges when the
/// largest coefficient change drops below 1e-8; a fit that has not
/// converged after 100 iterations, or whose information matrix becomes
/// singular, is flagged as separated.
pub fn fit_logistic(design: &RegressionDesign) -> Result<FitResult> {
    let n = design.n();
    let positives = design.outcome.iter().filter(|&&v| v == 1.0).count();
    if positives == 0 || positives == n {
        return Err(Error::Degenerate("logistic outcome has a single class".into()));
    }
    if n <= N_COEF {
        return Err(Error::SampleSize {
            needed: N_COEF + 1,
            got: n,
        });
    }
    let x = design.matrix();
    let names = coefficient_names();
    // the unweighted design must have full rank for the model to be identified
    least_squares(&x, &DVector::from_column_slice(&design.outcome)).map_err(|d| rank_error(&names, &x, d))?;

    let y = DVector::from_column_slice(&design.outcome);
    let mut beta = DVector::<f64>::zeros(N_COEF);
    let mut loglik = logistic_log_likelihood(design, beta.as_slice());
    let mut converged = false;
    let mut singular = false;
    let mut iterations = 0;

    while iterations < LOGISTIC_MAX_ITER {
        iterations += 1;
        let eta = &x * &beta;
        let p: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        let score = x.transpose() * (&y - DVector::from_vec(p.clone()));
        let info = information(&x, &p);
        let Some(chol) = info.cholesky() else {
            singular = true;
            break;
        };
        let step = chol.solve(&score);
        let mut scale = 1.0;
        let mut candidate = &beta + &step;
        let mut cand_ll = logistic_log_likelihood(design, candidate.as_slice());
        // halve until the likelihood does not drop
        for _ in 0..30 {
            if cand_ll >= loglik - 1e-12 * loglik.abs() {
                break;
            }
            scale *= 0.5;
            candidate = &beta + &step * scale;
            cand_ll = logistic_log_likelihood(design, candidate.as_slice());
        }
        let change = (&candidate - &beta).amax();
        beta = candidate;
        loglik = cand_ll;
        if change < LOGISTIC_TOLERANCE {
            converged = true;
            break;
        }
    }
    let separation = !converged;
    if separation {
        log::warn!(
            "logistic fit ({}) did not converge after {iterations} iterations{}; possible separation",
            design.trait_source,
            if singular { ", information matrix singular" } else { "" }
        );
    }

    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let fitted = fitted_probabilities(design, &coefficients);
    let info = information(&x, &fitted);
    let standard_errors: Vec<f64> = match info.clone().try_inverse() {
        Some(cov) => (0..N_COEF).map(|j| cov[(j, j)].max(0.0).sqrt()).collect(),
        None => vec![f64::INFINITY; N_COEF],
    };
    let p_values = coefficients
        .iter()
        .zip(&standard_errors)
        .map(|(&c, &se)| if se > 0.0 { two_sided_normal(c / se) } else { 1.0 })
        .collect();
    let residuals = design.outcome.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let fit_statistic = tjur_r2(&fitted, &design.outcome)?;
    Ok(FitResult {
        kind: ModelKind::Logistic,
        trait_source: design.trait_source,
        coefficients,
        standard_errors,
        p_values,
        fit_statistic,
        fitted,
        residuals,
        n,
        converged,
        iterations,
        separation,
    })
}

/// `X' diag(p(1-p)) X`.
fn information(x: &DMatrix<f64>, p: &[f64]) -> DMatrix<f64> {
    let w = DVector::from_iterator(p.len(), p.iter().map(|v| v * (1.0 - v)));
    let mut weighted = x.clone();
    for (i, mut row) in weighted.row_iter_mut().enumerate() {
        row *= w[i];
    }
    x.transpose() * weighted
}

/// Dispatches on the design kind.
pub fn fit(design: &RegressionDesign) -> Result<FitResult> {
    match design.kind {
        ModelKind::Logistic => fit_logistic(design),
        ModelKind::Linear => fit_ols(design),
    }
}

/// Mean fitted probability among positives minus among negatives.
pub fn tjur_r2(fitted: &[f64], outcomes: &[f64]) -> Result<f64> {
    let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0usize, 0.0, 0usize);
    for (&p, &y) in fitted.iter().zip(outcomes) {
        if y == 1.0 {
            s1 += p;
            n1 += 1;
        } else {
            s0 += p;
            n0 += 1;
        }
    }
    if n1 == 0 || n0 == 0 {
        return Err(Error::Undefined("Tjur's R² needs both outcome classes".into()));
    }
    Ok(s1 / n1 as f64 - s0 / n0 as f64)
}

/// `c_j * mean(p(1-p))`, the average change in probability per unit of
/// predictor `j` (a coefficient index, 1..=6).
pub fn average_marginal_effect(fit: &FitResult, design: &RegressionDesign, j: usize) -> Result<f64> {
    if fit.kind != ModelKind::Logistic {
        return Err(Error::Contract("marginal effects need a logistic fit".into()));
    }
    if !fit.converged {
        return Err(Error::Contract("refusing marginal effect of a non-converged fit".into()));
    }
    if j == 0 || j >= N_COEF {
        return Err(Error::Contract(format!("coefficient index {j} is not a predictor")));
    }
    let p = fitted_probabilities(design, &fit.coefficients);
    let mean_slope = p.iter().map(|v| v * (1.0 - v)).sum::<f64>() / p.len() as f64;
    Ok(fit.coefficients[j] * mean_slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    SupportedPositive,
    SupportedNegative,
    Unsupported,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::SupportedPositive => "supported_positive",
            Verdict::SupportedNegative => "supported_negative",
            Verdict::Unsupported => "unsupported",
        })
    }
}

/// Majority vote over (coefficient, p-value) pairs: supported when at least
/// three are significant and every significant coefficient has the same
/// sign.
pub fn vote(estimates: &[(f64, f64)], alpha: f64) -> Verdict {
    let significant: Vec<f64> = estimates.iter().filter(|(_, p)| *p < alpha).map(|(c, _)| *c).collect();
    if significant.len() < 3 {
        return Verdict::Unsupported;
    }
    if significant.iter().all(|&c| c > 0.0) {
        Verdict::SupportedPositive
    } else if significant.iter().all(|&c| c < 0.0) {
        Verdict::SupportedNegative
    } else {
        Verdict::Unsupported
    }
}

/// Verdict for coefficient `j` across the four trait-source fits.
pub fn ensemble_verdict(fits: &BTreeMap<Family, FitResult>, j: usize, alpha: f64) -> Result<Verdict> {
    let mut estimates = Vec::with_capacity(4);
    for f in Family::ALL {
        let fit = fits
            .get(&f)
            .ok_or_else(|| Error::Contract(format!("missing fit for trait source {f}")))?;
        let (c, p) = fit
            .coefficients
            .get(j)
            .zip(fit.p_values.get(j))
            .ok_or_else(|| Error::Contract(format!("coefficient {j} out of range")))?;
        estimates.push((*c, *p));
    }
    Ok(vote(&estimates, alpha))
}
