//! The four text-to-trait learner families behind one train/predict
//! contract, with grid search scored by K-fold pooled out-of-fold adjusted R².

pub mod boosting;
pub mod forest;
pub mod linear;
pub mod svr;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurizer::FeatureVector;
use crate::seeds::derive_seed;
use crate::BigFive;

use boosting::{BoostingParams, GradientBoosting};
use forest::{ForestParams, RandomForest};
use linear::LinearModel;
use svr::{LinearSvr, SvrParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_KFOLDS: usize = 10;
pub const TRAIT_MIN: f64 = 1.0;
pub const TRAIT_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GeneralLinear,
    RandomForest,
    SupportVector,
    GradientBoosting,
}

impl Family {
    /// Column order used in every report.
    pub const ALL: [Family; 4] = [
        Family::GeneralLinear,
        Family::RandomForest,
        Family::SupportVector,
        Family::GradientBoosting,
    ];

    /// Position in [`Family::ALL`].
    pub fn index(self) -> usize {
        match self {
            Family::GeneralLinear => 0,
            Family::RandomForest => 1,
            Family::SupportVector => 2,
            Family::GradientBoosting => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::GeneralLinear => "general_linear",
            Family::RandomForest => "random_forest",
            Family::SupportVector => "support_vector",
            Family::GradientBoosting => "gradient_boosting",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Family::GeneralLinear => "General linear",
            Family::RandomForest => "Random forest",
            Family::SupportVector => "Support-vector machine",
            Family::GradientBoosting => "Gradient boosting machine",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown learner family {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Text(String),
}

impl ParamValue {
    fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Real(r) => Some(*r),
            ParamValue::Text(_) => None,
        }
    }

    fn as_count(&self) -> Option<usize> {
        match self {
            ParamValue::Int(i) if *i > 0 => Some(*i as usize),
            ParamValue::Real(r) if *r >= 1.0 && r.fract() == 0.0 => Some(*r as usize),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Real(r) => write!(f, "{r}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

pub type Grid = BTreeMap<String, Vec<ParamValue>>;
pub type GridPoint = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub family: Family,
    pub grid: Grid,
    pub seed: u64,
    pub kfolds: usize,
}

impl LearnerSpec {
    pub fn new(family: Family, seed: u64) -> Self {
        LearnerSpec {
            family,
            grid: default_grid(family),
            seed,
            kfolds: DEFAULT_KFOLDS,
        }
    }

    pub fn with_grid(mut self, grid: Grid) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_kfolds(mut self, k: usize) -> Self {
        self.kfolds = k;
        self
    }
}

fn ints(v: &[i64]) -> Vec<ParamValue> {
    v.iter().map(|&i| ParamValue::Int(i)).collect()
}

fn reals(v: &[f64]) -> Vec<ParamValue> {
    v.iter().map(|&r| ParamValue::Real(r)).collect()
}

fn texts(v: &[&str]) -> Vec<ParamValue> {
    v.iter().map(|s| ParamValue::Text(s.to_string())).collect()
}

pub fn default_grid(family: Family) -> Grid {
    match family {
        Family::GeneralLinear => Grid::new(),
        Family::RandomForest => Grid::from([
            ("n_trees".into(), ints(&[100, 300])),
            ("max_features".into(), texts(&["third", "sqrt"])),
            ("min_leaf".into(), ints(&[5])),
        ]),
        Family::GradientBoosting => Grid::from([
            ("n_trees".into(), ints(&[200, 500])),
            ("max_depth".into(), ints(&[2, 3])),
            ("learning_rate".into(), reals(&[0.05, 0.1])),
        ]),
        Family::SupportVector => Grid::from([
            ("c".into(), reals(&[0.1, 1.0, 10.0])),
            ("epsilon".into(), reals(&[0.05, 0.1])),
            ("kernel".into(), texts(&["linear"])),
        ]),
    }
}

/// Cartesian product of the grid axes, keys in sorted order, first axis
/// varying slowest.
pub fn expand_grid(grid: &Grid) -> Vec<GridPoint> {
    let mut points = vec![GridPoint::new()];
    for (key, values) in grid {
        let mut next = Vec::with_capacity(points.len() * values.len());
        for p in &points {
            for v in values {
                let mut q = p.clone();
                q.insert(key.clone(), v.clone());
                next.push(q);
            }
        }
        points = next;
    }
    points
}

fn param<'a>(point: &'a GridPoint, key: &str) -> Option<&'a ParamValue> {
    point.get(key)
}

fn count_param(point: &GridPoint, key: &str, default: usize) -> Result<usize> {
    match param(point, key) {
        None => Ok(default),
        Some(v) => v
            .as_count()
            .ok_or_else(|| Error::Validation(format!("{key} must be a positive integer, got {v}"))),
    }
}

fn real_param(point: &GridPoint, key: &str, default: f64) -> Result<f64> {
    match param(point, key) {
        None => Ok(default),
        Some(v) => v
            .as_f64()
            .filter(|x| x.is_finite() && *x > 0.0)
            .ok_or_else(|| Error::Validation(format!("{key} must be a positive number, got {v}"))),
    }
}

fn max_features(point: &GridPoint, p: usize) -> Result<usize> {
    let k = match param(point, "max_features") {
        None => p.div_ceil(3),
        Some(ParamValue::Text(s)) => match s.as_str() {
            "third" => p / 3,
            "sqrt" => (p as f64).sqrt().floor() as usize,
            "all" => p,
            other => {
                return Err(Error::Validation(format!(
                    "max_features must be third, sqrt, all or a fraction, got {other:?}"
                )))
            }
        },
        Some(ParamValue::Int(i)) if *i > 0 => *i as usize,
        Some(ParamValue::Real(f)) if *f > 0.0 && *f <= 1.0 => (f * p as f64).floor() as usize,
        Some(v) => return Err(Error::Validation(format!("bad max_features {v}"))),
    };
    Ok(k.clamp(1, p.max(1)))
}

pub fn validate_point(family: Family, point: &GridPoint) -> Result<()> {
    let known: &[&str] = match family {
        Family::GeneralLinear => &[],
        Family::RandomForest => &["n_trees", "max_features", "min_leaf"],
        Family::GradientBoosting => &["n_trees", "max_depth", "learning_rate", "min_leaf"],
        Family::SupportVector => &["c", "epsilon", "kernel", "max_epochs"],
    };
    for key in point.keys() {
        if !known.contains(&key.as_str()) {
            return Err(Error::Validation(format!(
                "unknown {family} hyperparameter {key:?}"
            )));
        }
    }
    if let Some(v) = point.get("kernel") {
        if v != &ParamValue::Text("linear".into()) {
            return Err(Error::Validation(format!("only the linear kernel is supported, got {v}")));
        }
    }
    Ok(())
}

/// Family-specific fitted state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedParams {
    GeneralLinear(LinearModel),
    RandomForest(RandomForest),
    GradientBoosting(GradientBoosting),
    SupportVector(LinearSvr),
}

impl FittedParams {
    pub fn predict_raw(&self, row: &[f64]) -> f64 {
        match self {
            FittedParams::GeneralLinear(m) => m.predict(row),
            FittedParams::RandomForest(m) => m.predict(row),
            FittedParams::GradientBoosting(m) => m.predict(row),
            FittedParams::SupportVector(m) => m.predict(row),
        }
    }
}

/// Fits one family at one grid point.
pub fn fit_family(
    family: Family,
    point: &GridPoint,
    x: &[Vec<f64>],
    y: &[f64],
    seed: u64,
) -> Result<FittedParams> {
    validate_point(family, point)?;
    let p = x.first().map_or(0, Vec::len);
    Ok(match family {
        Family::GeneralLinear => FittedParams::GeneralLinear(LinearModel::fit(x, y)),
        Family::RandomForest => {
            let params = ForestParams {
                n_trees: count_param(point, "n_trees", 100)?,
                max_features: max_features(point, p)?,
                min_leaf: count_param(point, "min_leaf", 5)?,
            };
            FittedParams::RandomForest(RandomForest::fit(x, y, params, seed))
        }
        Family::GradientBoosting => {
            let params = BoostingParams {
                n_trees: count_param(point, "n_trees", 200)?,
                max_depth: count_param(point, "max_depth", 2)?,
                learning_rate: real_param(point, "learning_rate", 0.1)?.min(1.0),
                min_leaf: count_param(point, "min_leaf", 1)?,
            };
            FittedParams::GradientBoosting(GradientBoosting::fit(x, y, params, seed))
        }
        Family::SupportVector => {
            let params = SvrParams {
                c: real_param(point, "c", 1.0)?,
                epsilon: param(point, "epsilon")
                    .map(|v| {
                        v.as_f64()
                            .filter(|e| *e >= 0.0)
                            .ok_or_else(|| Error::Validation(format!("bad epsilon {v}")))
                    })
                    .transpose()?
                    .unwrap_or(0.1),
                max_epochs: count_param(point, "max_epochs", 1000)?,
                ..SvrParams::default()
            };
            FittedParams::SupportVector(LinearSvr::fit(x, y, params, seed))
        }
    })
}

/// `1 - SSE/TSS`; 0 when the target has no variance.
pub fn r_squared(y: &[f64], predicted: &[f64]) -> f64 {
    if is_constant(y) {
        return 0.0;
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sse: f64 = y.iter().zip(predicted).map(|(a, b)| (a - b) * (a - b)).sum();
    1.0 - sse / tss
}

fn is_constant(y: &[f64]) -> bool {
    y.windows(2).all(|w| w[0] == w[1])
}

/// Adjusted R² of predictions, reported as 0 for a constant target.
pub fn fit_adj_r2(y: &[f64], predicted: &[f64], p: usize) -> Result<f64> {
    let adj = adjusted_r2(r_squared(y, predicted), y.len(), p)?;
    Ok(if is_constant(y) { 0.0 } else { adj })
}

pub fn adjusted_r2(r2: f64, n: usize, p: usize) -> Result<f64> {
    if n <= p + 1 {
        return Err(Error::Undefined(format!(
            "adjusted R² needs n > p + 1 (n = {n}, p = {p})"
        )));
    }
    Ok(1.0 - (1.0 - r2) * (n - 1) as f64 / (n - p - 1) as f64)
}

/// Fold index per row: rows are shuffled with `seed` and dealt round-robin.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        folds[row] = pos % k;
    }
    folds
}

fn check_inputs(x: &[Vec<f64>], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Contract(format!("{} rows but {} targets", x.len(), y.len())));
    }
    let p = x.first().map_or(0, Vec::len);
    if x.iter().any(|r| r.len() != p) {
        return Err(Error::Contract("ragged feature matrix".into()));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite value in training data".into()));
    }
    Ok(())
}

/// Out-of-fold predictions pooled over `k` folds.
pub fn out_of_fold_predictions(
    family: Family,
    point: &GridPoint,
    x: &[Vec<f64>],
    y: &[f64],
    k: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if k < 2 || x.len() < 2 * k {
        return Err(Error::SampleSize {
            needed: 2 * k.max(2),
            got: x.len(),
        });
    }
    let folds = fold_assignment(x.len(), k, seed);
    let per_fold: Vec<Result<Vec<(usize, f64)>>> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let train: Vec<usize> = (0..x.len()).filter(|&i| folds[i] != fold).collect();
            let tx: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
            let ty: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let model = fit_family(family, point, &tx, &ty, derive_seed(seed, &format!("fold{fold}")))?;
            Ok((0..x.len())
                .filter(|&i| folds[i] == fold)
                .map(|i| (i, model.predict_raw(&x[i])))
                .collect())
        })
        .collect();
    let mut pooled = vec![0.0; x.len()];
    for fold in per_fold {
        for (i, v) in fold? {
            pooled[i] = v;
        }
    }
    Ok(pooled)
}

/// Adjusted R² of pooled out-of-fold predictions, `p` = column count.
pub fn kfold_resample_adj_r2(
    family: Family,
    point: &GridPoint,
    x: &[Vec<f64>],
    y: &[f64],
    k: usize,
    seed: u64,
) -> Result<f64> {
    check_inputs(x, y)?;
    let pooled = out_of_fold_predictions(family, point, x, y, k, seed)?;
    let p = x.first().map_or(0, Vec::len);
    fit_adj_r2(y, &pooled, p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridScore {
    pub point: GridPoint,
    pub resample_adj_r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitModel {
    pub format_version: u32,
    pub family: Family,
    #[serde(rename = "trait")]
    pub trait_: BigFive,
    pub feature_names: Vec<String>,
    pub params: FittedParams,
    pub hyperparameters: GridPoint,
    pub in_sample_adj_r2: f64,
    pub resample_adj_r2: f64,
    pub grid_scores: Vec<GridScore>,
    pub kfolds: usize,
    pub seed: u64,
    pub n_train: usize,
}

/// Grid search over `spec.grid`, then a refit on all rows with the best point.
pub fn train(
    spec: &LearnerSpec,
    trait_: BigFive,
    feature_names: &[String],
    x: &[Vec<f64>],
    y: &[f64],
) -> Result<TraitModel> {
    check_inputs(x, y)?;
    if x.len() < 10 {
        return Err(Error::SampleSize {
            needed: 10,
            got: x.len(),
        });
    }
    if x.first().map_or(0, Vec::len) != feature_names.len() {
        return Err(Error::Contract("feature names do not match matrix width".into()));
    }
    let points = expand_grid(&spec.grid);
    for point in &points {
        validate_point(spec.family, point)?;
    }
    let scores = points
        .par_iter()
        .map(|point| kfold_resample_adj_r2(spec.family, point, x, y, spec.kfolds, spec.seed))
        .collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.total_cmp(&scores[best]).is_gt() {
            best = i;
        }
    }
    let point = points[best].clone();
    let params = fit_family(spec.family, &point, x, y, spec.seed)?;
    let fitted: Vec<f64> = x.iter().map(|r| params.predict_raw(r)).collect();
    let in_sample = fit_adj_r2(y, &fitted, feature_names.len())?;
    Ok(TraitModel {
        format_version: MODEL_FORMAT_VERSION,
        family: spec.family,
        trait_,
        feature_names: feature_names.to_vec(),
        params,
        hyperparameters: point,
        in_sample_adj_r2: in_sample,
        resample_adj_r2: scores[best],
        grid_scores: points
            .into_iter()
            .zip(scores)
            .map(|(point, resample_adj_r2)| GridScore {
                point,
                resample_adj_r2,
            })
            .collect(),
        kfolds: spec.kfolds,
        seed: spec.seed,
        n_train: y.len(),
    })
}

impl TraitModel {
    /// Unclamped model output for a row in `feature_names` order.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.params.predict_raw(row)
    }

    /// Trait estimate for a feature vector, clamped to the 1..=5 scale.
    pub fn predict(&self, x: &FeatureVector) -> Result<f64> {
        let row = self
            .feature_names
            .iter()
            .map(|n| {
                x.get(n)
                    .ok_or_else(|| Error::Contract(format!("feature {n:?} missing from input")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(clamp_trait(self.predict_row(&row)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TraitModel = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "model format version {} not supported (expected {MODEL_FORMAT_VERSION})",
                model.format_version
            )));
        }
        Ok(model)
    }
}

pub fn clamp_trait(v: f64) -> f64 {
    v.clamp(TRAIT_MIN, TRAIT_MAX)
}
