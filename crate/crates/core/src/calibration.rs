//! Calibration set construction and two-stage feature selection.
//!
//! Survey responses are scored into Big Five labels, unusable respondents are
//! dropped, and for each trait the features are first screened by absolute
//! Pearson correlation and then refined by a forward-backward stepwise search
//! on a Gaussian linear model scored by AIC.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use log::{info, warn};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurizer::{FeatureMatrix, FeatureVector};
use crate::linalg::{least_squares, with_intercept};
use crate::{BigFive, TraitScores};

pub const N_ITEMS: usize = 20;
pub const DEFAULT_TOP_K_FEATURES: usize = 15;
pub const STEPWISE_MAX_MOVES: usize = 200;

const DEFAULT_KEY: &str = include_str!("../data/mini_ipip_key.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyedItem {
    pub trait_: BigFive,
    pub reverse_keyed: bool,
}

/// Item-to-trait assignment for the 20-item questionnaire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoringKey {
    items: [KeyedItem; N_ITEMS],
}

#[derive(Deserialize)]
struct KeyRow {
    item_index: usize,
    #[serde(rename = "trait")]
    trait_name: String,
    reverse_keyed: bool,
}

impl Default for ScoringKey {
    /// The published mini-IPIP layout.
    fn default() -> Self {
        ScoringKey::parse_csv(DEFAULT_KEY.as_bytes()).expect("bundled key is valid")
    }
}

impl ScoringKey {
    pub fn new(items: [KeyedItem; N_ITEMS]) -> Result<Self> {
        for t in BigFive::ALL {
            let count = items.iter().filter(|i| i.trait_ == t).count();
            if count != 4 {
                return Err(Error::Validation(format!(
                    "scoring key assigns {count} items to {t}, expected 4"
                )));
            }
        }
        Ok(ScoringKey { items })
    }

    pub fn parse_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut slots: [Option<KeyedItem>; N_ITEMS] = [None; N_ITEMS];
        for row in rdr.deserialize() {
            let row: KeyRow = row?;
            if !(1..=N_ITEMS).contains(&row.item_index) {
                return Err(Error::Validation(format!(
                    "item index {} outside 1..=20",
                    row.item_index
                )));
            }
            let slot = &mut slots[row.item_index - 1];
            if slot.is_some() {
                return Err(Error::Validation(format!(
                    "item {} listed twice in scoring key",
                    row.item_index
                )));
            }
            *slot = Some(KeyedItem {
                trait_: row.trait_name.parse()?,
                reverse_keyed: row.reverse_keyed,
            });
        }
        let mut items = [KeyedItem {
            trait_: BigFive::Neuroticism,
            reverse_keyed: false,
        }; N_ITEMS];
        for (i, slot) in slots.iter().enumerate() {
            items[i] = slot.ok_or_else(|| {
                Error::Validation(format!("item {} missing from scoring key", i + 1))
            })?;
        }
        ScoringKey::new(items)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        ScoringKey::parse_csv(file)
    }

    pub fn item(&self, index: usize) -> KeyedItem {
        self.items[index]
    }

    /// Zero-based item indices belonging to `t`.
    pub fn items_for(&self, t: BigFive) -> Vec<usize> {
        (0..N_ITEMS).filter(|&i| self.items[i].trait_ == t).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("item_index,trait,reverse_keyed\n");
        for (i, item) in self.items.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, item.trait_, item.reverse_keyed));
        }
        out
    }
}

/// Mean of each trait's four items, reverse-keyed items contributing
/// `6 - response`.
pub fn score_mini_ipip(responses: &[u8], key: &ScoringKey) -> Result<TraitScores> {
    if responses.len() != N_ITEMS {
        return Err(Error::Validation(format!(
            "expected {N_ITEMS} responses, got {}",
            responses.len()
        )));
    }
    if let Some((i, r)) = responses.iter().enumerate().find(|(_, r)| !(1..=5).contains(*r)) {
        return Err(Error::Validation(format!(
            "response {r} to item {} outside 1..=5",
            i + 1
        )));
    }
    let mut sums = [0.0; 5];
    for (i, &r) in responses.iter().enumerate() {
        let item = key.item(i);
        let v = if item.reverse_keyed { 6 - r } else { r };
        sums[item.trait_.index()] += f64::from(v);
    }
    Ok(sums.map(|s| s / 4.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRecord {
    pub user_id: String,
    /// One slot per item; `None` for an unanswered item.
    pub responses: Vec<Option<u8>>,
    /// Filled in for retained records.
    pub traits: Option<TraitScores>,
    /// Words of public text found for this user; `None` when the username
    /// matched no account.
    pub text_words: Option<usize>,
    pub features: Option<FeatureVector>,
}

impl CalibrationRecord {
    pub fn new(user_id: impl Into<String>, responses: Vec<Option<u8>>) -> Self {
        CalibrationRecord {
            user_id: user_id.into(),
            responses,
            traits: None,
            text_words: None,
            features: None,
        }
    }

    fn complete_responses(&self) -> Option<Vec<u8>> {
        if self.responses.len() != N_ITEMS {
            return None;
        }
        self.responses.iter().copied().collect()
    }
}

/// Reads `user_id,r01..r20`. Empty cells are unanswered items.
pub fn read_calibration_csv(path: &Path) -> Result<Vec<CalibrationRecord>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file);
    let header = rdr.headers()?.clone();
    let expected: Vec<String> = std::iter::once("user_id".to_string())
        .chain((1..=N_ITEMS).map(|i| format!("r{i:02}")))
        .collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::format(path, 1, "header must be user_id,r01..r20"));
    }
    let mut records = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let user_id = rec.get(0).unwrap_or("").to_string();
        if user_id.is_empty() {
            return Err(Error::format(path, line + 2, "missing user_id"));
        }
        let mut responses = Vec::with_capacity(N_ITEMS);
        for j in 1..=N_ITEMS {
            let cell = rec.get(j).unwrap_or("");
            if cell.is_empty() {
                responses.push(None);
                continue;
            }
            let v: u8 = cell
                .parse()
                .map_err(|_| Error::format(path, line + 2, format!("bad response {cell:?}")))?;
            if !(1..=5).contains(&v) {
                return Err(Error::Validation(format!(
                    "{}:{}: response {v} outside 1..=5",
                    path.display(),
                    line + 2
                )));
            }
            responses.push(Some(v));
        }
        records.push(CalibrationRecord::new(user_id, responses));
    }
    Ok(records)
}

pub fn write_calibration_csv<W: std::io::Write>(writer: W, records: &[CalibrationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["user_id".to_string()];
    header.extend((1..=N_ITEMS).map(|i| format!("r{i:02}")));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.user_id.clone()];
        for j in 0..N_ITEMS {
            row.push(
                r.responses
                    .get(j)
                    .copied()
                    .flatten()
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
            );
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<calibration csv>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationExclusion {
    Incomplete,
    ConstantResponses,
    NoTextMatch,
    BelowMinWords,
    Unfeaturizable,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub respondents: usize,
    pub retained: usize,
    pub counts: BTreeMap<CalibrationExclusion, usize>,
    pub excluded: Vec<(String, CalibrationExclusion)>,
}

/// Drops incomplete and constant questionnaires, unmatched usernames and
/// users below `min_words`; scores the traits of everyone retained.
pub fn apply_exclusions(
    records: Vec<CalibrationRecord>,
    key: &ScoringKey,
    min_words: usize,
) -> (Vec<CalibrationRecord>, ExclusionReport) {
    let mut report = ExclusionReport {
        respondents: records.len(),
        ..Default::default()
    };
    let mut kept = Vec::new();
    for mut rec in records {
        let reason = match rec.complete_responses() {
            None => Some(CalibrationExclusion::Incomplete),
            Some(resp) if resp.iter().all(|&r| r == resp[0]) => {
                Some(CalibrationExclusion::ConstantResponses)
            }
            Some(resp) => match rec.text_words {
                None => Some(CalibrationExclusion::NoTextMatch),
                Some(w) if w < min_words => Some(CalibrationExclusion::BelowMinWords),
                Some(_) if rec.features.is_none() => Some(CalibrationExclusion::Unfeaturizable),
                Some(_) => match score_mini_ipip(&resp, key) {
                    Ok(traits) => {
                        rec.traits = Some(traits);
                        None
                    }
                    Err(_) => Some(CalibrationExclusion::Incomplete),
                },
            },
        };
        match reason {
            Some(r) => {
                info!("calibration user {} excluded: {r:?}", rec.user_id);
                *report.counts.entry(r).or_insert(0) += 1;
                report.excluded.push((rec.user_id, r));
            }
            None => kept.push(rec),
        }
    }
    report.retained = kept.len();
    (kept, report)
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenedFeature {
    pub name: String,
    pub r: f64,
}

/// Top `k` features by absolute Pearson correlation with `target`, ties by
/// name. Constant columns get `r = 0`.
pub fn correlation_screen(
    features: &FeatureMatrix,
    target: &[f64],
    k: usize,
) -> Result<Vec<ScreenedFeature>> {
    if features.n_rows() < 3 {
        return Err(Error::SampleSize {
            needed: 3,
            got: features.n_rows(),
        });
    }
    if target.len() != features.n_rows() {
        return Err(Error::Contract(format!(
            "{} targets for {} rows",
            target.len(),
            features.n_rows()
        )));
    }
    let mut scored: Vec<ScreenedFeature> = features
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| ScreenedFeature {
            name: name.clone(),
            r: pearson(&features.column(j), target),
        })
        .collect();
    scored.sort_by(|a, b| {
        b.r.abs()
            .total_cmp(&a.r.abs())
            .then_with(|| a.name.cmp(&b.name))
    });
    scored.truncate(k);
    Ok(scored)
}

/// Gaussian-likelihood AIC up to an additive constant:
/// `n ln(RSS/n) + 2k` with `k` counting the intercept. RSS is floored at a
/// tiny fraction of the total sum of squares so exact fits compare by size.
pub fn gaussian_aic(rss: f64, tss: f64, n: usize, k: usize) -> f64 {
    let floor = (tss * 1e-20).max(f64::MIN_POSITIVE);
    let n = n as f64;
    n * (rss.max(floor) / n).ln() + 2.0 * k as f64
}

fn total_sum_of_squares(y: &[f64]) -> f64 {
    let m = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - m) * (v - m)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMove {
    Start,
    Add,
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub action: StepMove,
    pub feature: Option<String>,
    pub aic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedFeatureSet {
    pub trait_: BigFive,
    pub screened: Vec<ScreenedFeature>,
    /// Chosen features, in screened order.
    pub selected: Vec<String>,
    pub criterion_trace: Vec<StepRecord>,
    /// Candidates dropped because they made the design rank deficient.
    pub rank_dropped: Vec<String>,
}

/// Forward-backward stepwise search from the empty model. Every round
/// evaluates all single additions and removals, takes the lowest AIC (ties by
/// feature name) and stops when no move strictly improves the criterion.
pub fn stepwise_select(
    trait_: BigFive,
    screened: &[ScreenedFeature],
    features: &FeatureMatrix,
    target: &[f64],
) -> Result<SelectedFeatureSet> {
    if screened.is_empty() {
        return Err(Error::Contract("stepwise search needs screened features".into()));
    }
    let cols: Vec<usize> = screened
        .iter()
        .map(|s| {
            features
                .column_index(&s.name)
                .ok_or_else(|| Error::Contract(format!("unknown feature {:?}", s.name)))
        })
        .collect::<Result<_>>()?;
    let n = target.len();
    let y = DVector::from_column_slice(target);
    let tss = total_sum_of_squares(target);

    // candidate position -> usable
    let mut pool: BTreeSet<usize> = (0..cols.len()).collect();
    let mut model: BTreeSet<usize> = BTreeSet::new();
    let mut rank_dropped = Vec::new();

    let fit = |members: &BTreeSet<usize>| -> std::result::Result<f64, usize> {
        let design_cols: Vec<usize> = members.iter().map(|&m| cols[m]).collect();
        let x = with_intercept(&features.rows, &design_cols);
        match least_squares(&x, &y) {
            Ok(ls) => Ok(gaussian_aic(ls.rss, tss, n, members.len() + 1)),
            Err(def) => Err(def.column),
        }
    };

    let mut current = fit(&model).map_err(|_| Error::Degenerate("intercept-only fit failed".into()))?;
    let mut trace = vec![StepRecord {
        action: StepMove::Start,
        feature: None,
        aic: current,
    }];

    for _ in 0..STEPWISE_MAX_MOVES {
        let mut best: Option<(f64, &str, StepMove, usize)> = None;
        let mut consider = |aic: f64, m: usize, action: StepMove| {
            let name = screened[m].name.as_str();
            let better = match &best {
                None => true,
                Some((b, bn, _, _)) => aic < *b || (aic == *b && name < *bn),
            };
            if better {
                best = Some((aic, name, action, m));
            }
        };

        let additions: Vec<usize> = pool.difference(&model).copied().collect();
        for m in additions {
            let mut trial = model.clone();
            trial.insert(m);
            match fit(&trial) {
                Ok(aic) => consider(aic, m, StepMove::Add),
                Err(_) => {
                    warn!(
                        "{trait_}: dropping {:?} from stepwise pool (rank deficient design)",
                        screened[m].name
                    );
                    pool.remove(&m);
                    rank_dropped.push(screened[m].name.clone());
                }
            }
        }
        for &m in &model {
            let mut trial = model.clone();
            trial.remove(&m);
            if let Ok(aic) = fit(&trial) {
                consider(aic, m, StepMove::Drop);
            }
        }

        match best {
            Some((aic, name, action, m)) if aic < current => {
                match action {
                    StepMove::Add => model.insert(m),
                    _ => model.remove(&m),
                };
                current = aic;
                trace.push(StepRecord {
                    action,
                    feature: Some(name.to_string()),
                    aic,
                });
            }
            _ => break,
        }
    }

    Ok(SelectedFeatureSet {
        trait_,
        screened: screened.to_vec(),
        selected: model.iter().map(|&m| screened[m].name.clone()).collect(),
        criterion_trace: trace,
        rank_dropped,
    })
}
