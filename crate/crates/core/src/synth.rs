//! Synthetic data with planted effects.
//!
//! Two generators live here. [`simulate_regression`] draws community-level
//! founder traits and outcomes directly, one design per learner family, for
//! Monte Carlo checks of the regression stage. [`generate_synthetic`] writes
//! a complete platform: calibration users with survey answers and
//! trait-linked text, founders with pre-inception history, and community
//! event logs whose survival and activity follow configured coefficients.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::calibration::{write_calibration_csv, CalibrationRecord, ScoringKey, N_ITEMS};
use crate::error::{Error, Result};
use crate::featurizer::{write_documents_jsonl, Document, DocumentKind};
use crate::inference::{ModelKind, RegressionDesign};
use crate::learners::Family;
use crate::seeds::derive_seed;
use crate::{BigFive, TraitScores, SECONDS_PER_DAY};

fn rng_for(seed: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, label))
}

fn sigmoid(eta: f64) -> f64 {
    1.0 / (1.0 + (-eta).exp())
}

fn check_finite(what: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Validation(format!("{what} must be finite")))
    }
}

/// Linear predictor `intercept + traits . effects + n_effect * n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedEquation {
    pub intercept: f64,
    /// Indexed by [`BigFive::index`].
    pub traits: TraitScores,
    pub n_founders: f64,
}

impl PlantedEquation {
    pub fn eval(&self, traits: &TraitScores, n: usize) -> f64 {
        self.intercept
            + self.traits.iter().zip(traits).map(|(c, x)| c * x).sum::<f64>()
            + self.n_founders * n as f64
    }

    fn validate(&self, what: &str) -> Result<()> {
        let mut all = self.traits.to_vec();
        all.extend([self.intercept, self.n_founders]);
        check_finite(what, &all)
    }

    /// Smallest and largest value over the corners of the trait box and
    /// founder-count range (the predictor is linear, so corners bound it).
    fn range(&self, lo: f64, hi: f64, max_n: usize) -> (f64, f64) {
        let mut min = self.intercept;
        let mut max = self.intercept;
        for c in self.traits {
            min += (c * lo).min(c * hi);
            max += (c * lo).max(c * hi);
        }
        let (a, b) = (self.n_founders, self.n_founders * max_n as f64);
        (min + a.min(b), max + a.max(b))
    }
}

/// Table-5-style sustainability model used as planted truth.
pub fn sustainability_equation() -> PlantedEquation {
    let mut traits = [0.0; 5];
    traits[BigFive::Extraversion.index()] = -0.09;
    traits[BigFive::Agreeableness.index()] = 0.14;
    traits[BigFive::Conscientiousness.index()] = 0.19;
    PlantedEquation {
        intercept: -2.85,
        traits,
        n_founders: 0.30,
    }
}

/// Community-level regression scenario: true mean traits uniform on
/// `[trait_low, trait_high]`, founder counts uniform on `1..=max_founders`,
/// and each learner family observing the truth plus independent Gaussian
/// estimation noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionScenario {
    pub n_communities: usize,
    pub kind: ModelKind,
    pub equation: PlantedEquation,
    /// Residual SD for linear outcomes.
    pub residual_sd: f64,
    pub trait_low: f64,
    pub trait_high: f64,
    pub max_founders: usize,
    pub source_noise_sd: f64,
}

impl Default for RegressionScenario {
    fn default() -> Self {
        RegressionScenario {
            n_communities: 8625,
            kind: ModelKind::Logistic,
            equation: sustainability_equation(),
            residual_sd: 1.0,
            trait_low: 1.0,
            trait_high: 5.0,
            max_founders: 10,
            source_noise_sd: 0.1,
        }
    }
}

impl RegressionScenario {
    pub fn validate(&self) -> Result<()> {
        if self.n_communities == 0 {
            return Err(Error::Validation("scenario has no communities".into()));
        }
        if self.max_founders == 0 {
            return Err(Error::Validation("max_founders must be at least 1".into()));
        }
        self.equation.validate("planted coefficients")?;
        check_finite(
            "scenario parameters",
            &[self.residual_sd, self.trait_low, self.trait_high, self.source_noise_sd],
        )?;
        if self.trait_low >= self.trait_high {
            return Err(Error::Validation("trait range is empty".into()));
        }
        if self.residual_sd < 0.0 || self.source_noise_sd < 0.0 {
            return Err(Error::Validation("standard deviations must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedRegression {
    pub true_traits: Vec<TraitScores>,
    pub n_founders: Vec<usize>,
    pub outcome: Vec<f64>,
    pub designs: BTreeMap<Family, RegressionDesign>,
}

pub fn simulate_regression(scenario: &RegressionScenario, seed: u64) -> Result<SimulatedRegression> {
    scenario.validate()?;
    let mut rng = rng_for(seed, "regression");
    let noise = Normal::new(0.0, scenario.source_noise_sd).expect("validated sd");
    let residual = Normal::new(0.0, scenario.residual_sd).expect("validated sd");
    let n = scenario.n_communities;
    let mut true_traits = Vec::with_capacity(n);
    let mut n_founders = Vec::with_capacity(n);
    let mut outcome = Vec::with_capacity(n);
    for _ in 0..n {
        let mut t = [0.0; 5];
        for v in t.iter_mut() {
            *v = rng.random_range(scenario.trait_low..=scenario.trait_high);
        }
        let k = rng.random_range(1..=scenario.max_founders);
        let eta = scenario.equation.eval(&t, k);
        let y = match scenario.kind {
            ModelKind::Logistic => f64::from(rng.random_bool(sigmoid(eta))),
            ModelKind::Linear => eta + residual.sample(&mut rng),
        };
        true_traits.push(t);
        n_founders.push(k);
        outcome.push(y);
    }
    let ids: Vec<String> = (0..n).map(|i| format!("c{i:05}")).collect();
    let mut designs = BTreeMap::new();
    for f in Family::ALL {
        let mut src = rng_for(seed, &format!("source/{}", f.name()));
        let rows = true_traits
            .iter()
            .zip(&n_founders)
            .map(|(t, &k)| {
                let mut row = [0.0; 6];
                for (j, v) in t.iter().enumerate() {
                    row[j] = (v + noise.sample(&mut src)).clamp(1.0, 5.0);
                }
                row[5] = k as f64;
                row
            })
            .collect();
        designs.insert(
            f,
            RegressionDesign::new(scenario.kind, f, ids.clone(), rows, outcome.clone())?,
        );
    }
    Ok(SimulatedRegression {
        true_traits,
        n_founders,
        outcome,
        designs,
    })
}

/// Words whose frequency rises (first list) or falls (second list) with each
/// trait, in [`BigFive`] order.
const TRAIT_WORDS: [(&[&str], &[&str]); 5] = [
    (
        &["worried", "anxious", "nervous", "stress", "upset", "afraid", "sad"],
        &["calm", "relaxed", "steady"],
    ),
    (
        &["party", "friends", "people", "talk", "chat", "meet", "together", "crowd"],
        &["quiet", "alone", "home", "book", "read"],
    ),
    (
        &["idea", "imagine", "curious", "theory", "philosophy", "art", "music", "new"],
        &["usual", "same", "normal", "simple"],
    ),
    (
        &["kind", "thanks", "appreciate", "nice", "sweet", "love", "glad"],
        &["stupid", "idiot", "hate", "annoying"],
    ),
    (
        &["plan", "schedule", "organized", "goal", "finish", "complete", "work", "deadline", "effort", "success"],
        &["lazy", "forgot", "later", "whatever", "random"],
    ),
];

const FUNCTION_WORDS: &[&str] = &[
    "the", "a", "and", "to", "of", "it", "is", "i", "you", "that", "this", "was", "for", "on", "with", "my",
    "just", "so", "but", "in",
];

const NEUTRAL_WORDS: &[&str] = &["time", "game", "great", "happy", "think", "understand", "wonderful", "terrible"];

/// Share of tokens drawn from the trait-linked pools.
const STOCK_PHRASES: &[(&str, &str)] = &[
    ("thank", "you"),
    ("last", "night"),
    ("right", "now"),
    ("long", "story"),
    ("good", "luck"),
    ("next", "week"),
];

const TRAIT_SHARE: f64 = 0.4;
const NEUTRAL_SHARE: f64 = 0.15;
const PHRASE_SHARE: f64 = 0.05;

/// Text whose word mix encodes `traits`: each trait-linked token comes from
/// the high pool with probability `(trait - 1) / 4`.
pub fn trait_text<R: Rng>(rng: &mut R, traits: &TraitScores, words: usize) -> String {
    let mut out = Vec::with_capacity(words);
    while out.len() < words {
        let u: f64 = rng.random();
        if u >= 1.0 - PHRASE_SHARE && out.len() + 2 <= words {
            let (a, b) = *STOCK_PHRASES.choose(rng).expect("non-empty pool");
            out.extend([a, b]);
            continue;
        }
        let w = if u < TRAIT_SHARE {
            let t = rng.random_range(0..5);
            let q = ((traits[t] - 1.0) / 4.0).clamp(0.0, 1.0);
            let (high, low) = TRAIT_WORDS[t];
            let pool = if rng.random_bool(q) { high } else { low };
            *pool.choose(rng).expect("non-empty pool")
        } else if u < TRAIT_SHARE + NEUTRAL_SHARE {
            *NEUTRAL_WORDS.choose(rng).expect("non-empty pool")
        } else {
            *FUNCTION_WORDS.choose(rng).expect("non-empty pool")
        };
        out.push(w);
    }
    out.join(" ")
}

/// Mini-IPIP answers for a latent trait profile: the keyed item mean equals
/// the trait, plus rounding noise.
pub fn survey_responses<R: Rng>(rng: &mut R, traits: &TraitScores, key: &ScoringKey, noise_sd: f64) -> Vec<u8> {
    let noise = Normal::new(0.0, noise_sd).expect("non-negative sd");
    (0..N_ITEMS)
        .map(|i| {
            let item = key.item(i);
            let v = (traits[item.trait_.index()] + noise.sample(rng)).round().clamp(1.0, 5.0) as u8;
            if item.reverse_keyed {
                6 - v
            } else {
                v
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetScenario {
    pub n_calibration_users: usize,
    pub n_communities: usize,
    pub max_founders: usize,
    /// Chance that a founder slot is filled by someone who already founded
    /// another community.
    pub founder_reuse: f64,
    pub docs_per_user: usize,
    pub words_per_doc: usize,
    pub survey_noise_sd: f64,
    /// Logistic model of one-year survival.
    pub sustained: PlantedEquation,
    /// Linear model of the share of founders active at the year mark.
    pub retention: PlantedEquation,
    /// Linear model of items per active member at the year mark.
    pub engagement: PlantedEquation,
    /// Mean number of non-founder members at the year mark.
    pub newcomers_mean: f64,
    /// Share of year-mark items that are replies.
    pub reply_share: f64,
}

impl Default for DatasetScenario {
    fn default() -> Self {
        let mut retention_traits = [0.0; 5];
        retention_traits[BigFive::Conscientiousness.index()] = 0.03;
        let mut engagement_traits = [0.0; 5];
        engagement_traits[BigFive::Neuroticism.index()] = -0.07;
        engagement_traits[BigFive::Agreeableness.index()] = 0.08;
        DatasetScenario {
            n_calibration_users: 300,
            n_communities: 200,
            max_founders: 10,
            founder_reuse: 0.1,
            docs_per_user: 12,
            words_per_doc: 50,
            survey_noise_sd: 0.5,
            sustained: sustainability_equation(),
            retention: PlantedEquation {
                intercept: 0.34,
                traits: retention_traits,
                n_founders: -0.03,
            },
            engagement: PlantedEquation {
                intercept: 1.5,
                traits: engagement_traits,
                n_founders: 0.0,
            },
            newcomers_mean: 6.0,
            reply_share: 0.6,
        }
    }
}

pub const MIN_COMMUNITIES: usize = 200;
pub const MIN_CALIBRATION_USERS: usize = 20;

impl DatasetScenario {
    pub fn validate(&self) -> Result<()> {
        if self.n_communities < MIN_COMMUNITIES {
            return Err(Error::Validation(format!(
                "scenario needs at least {MIN_COMMUNITIES} communities, got {}",
                self.n_communities
            )));
        }
        if self.n_calibration_users < MIN_CALIBRATION_USERS {
            return Err(Error::Validation(format!(
                "scenario needs at least {MIN_CALIBRATION_USERS} calibration users"
            )));
        }
        if self.max_founders == 0 || self.docs_per_user == 0 || self.words_per_doc < 2 {
            return Err(Error::Validation("founder and text sizes must be positive".into()));
        }
        self.sustained.validate("survival coefficients")?;
        self.retention.validate("retention coefficients")?;
        self.engagement.validate("engagement coefficients")?;
        check_finite(
            "scenario parameters",
            &[self.founder_reuse, self.survey_noise_sd, self.newcomers_mean, self.reply_share],
        )?;
        for (what, p) in [("founder_reuse", self.founder_reuse), ("reply_share", self.reply_share)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Validation(format!("{what} must lie in [0, 1]")));
            }
        }
        if self.survey_noise_sd < 0.0 || self.newcomers_mean < 0.0 {
            return Err(Error::Validation("noise and newcomer mean must be non-negative".into()));
        }
        let (lo, hi) = self.retention.range(1.0, 5.0, self.max_founders);
        if lo < 0.0 || hi > 1.0 {
            return Err(Error::Validation(format!(
                "retention probability ranges over [{lo:.3}, {hi:.3}], outside [0, 1]"
            )));
        }
        let (lo, _) = self.engagement.range(1.0, 5.0, self.max_founders);
        if lo < 1.0 {
            return Err(Error::Validation(format!(
                "engagement can fall to {lo:.3}, below one item per member"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueCommunity {
    pub community_id: String,
    pub inception_ts: i64,
    pub founders: Vec<String>,
    pub mean_traits: TraitScores,
    pub p_sustained: f64,
    pub sustained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub scenario: DatasetScenario,
    pub user_traits: BTreeMap<String, TraitScores>,
    pub communities: Vec<TrueCommunity>,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub documents: Vec<Document>,
    pub calibration: Vec<CalibrationRecord>,
    /// Study communities with their inception times.
    pub communities: Vec<(String, i64)>,
    pub truth: GroundTruth,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub events: PathBuf,
    pub calibration: PathBuf,
    pub communities: PathBuf,
    pub truth: PathBuf,
}

pub const EVENTS_FILE: &str = "events.jsonl";
pub const CALIBRATION_FILE: &str = "calibration.csv";
pub const COMMUNITIES_FILE: &str = "communities.csv";
pub const TRUTH_FILE: &str = "truth.json";

impl SyntheticDataset {
    pub fn write_to_dir(&self, dir: &Path) -> Result<DatasetPaths> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths = DatasetPaths {
            events: dir.join(EVENTS_FILE),
            calibration: dir.join(CALIBRATION_FILE),
            communities: dir.join(COMMUNITIES_FILE),
            truth: dir.join(TRUTH_FILE),
        };
        write_documents_jsonl(&paths.events, &self.documents)?;

        let mut buf = Vec::new();
        write_calibration_csv(&mut buf, &self.calibration)?;
        fs::write(&paths.calibration, buf).map_err(|e| Error::io(&paths.calibration, e))?;

        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["community_id", "inception_ts"])?;
        for (id, ts) in &self.communities {
            w.write_record([id.clone(), ts.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Validation(e.to_string()))?;
        fs::write(&paths.communities, bytes).map_err(|e| Error::io(&paths.communities, e))?;

        let truth = serde_json::to_string_pretty(&self.truth)?;
        fs::write(&paths.truth, truth).map_err(|e| Error::io(&paths.truth, e))?;
        Ok(paths)
    }
}

/// Fixed platform epoch for synthetic timestamps (2017-07-14).
const EPOCH: i64 = 1_500_000_000;
const DAY: i64 = SECONDS_PER_DAY;

fn latent_traits<R: Rng>(rng: &mut R) -> TraitScores {
    let mut t = [0.0; 5];
    for v in t.iter_mut() {
        *v = rng.random_range(1.0..=5.0);
    }
    t
}

struct DocWriter {
    docs: Vec<Document>,
}

impl DocWriter {
    fn push(&mut self, id: String, author: &str, community: &str, ts: i64, parent: Option<String>, text: String) {
        self.docs.push(Document {
            id,
            author_id: author.to_string(),
            community_id: community.to_string(),
            timestamp: ts,
            kind: if parent.is_some() {
                DocumentKind::Comment
            } else {
                DocumentKind::Post
            },
            parent_id: parent,
            text,
        });
    }

    /// Pre-platform history spread over the year before the epoch in
    /// general-interest communities.
    fn history<R: Rng>(&mut self, rng: &mut R, user: &str, traits: &TraitScores, s: &DatasetScenario) {
        for k in 0..s.docs_per_user {
            let ts = EPOCH - 360 * DAY + rng.random_range(0..350 * DAY);
            let hub = format!("hub{}", rng.random_range(0..8));
            self.push(
                format!("{user}-h{k:03}"),
                user,
                &hub,
                ts,
                None,
                trait_text(rng, traits, s.words_per_doc),
            );
        }
    }
}

pub fn generate_synthetic(scenario: &DatasetScenario, seed: u64) -> Result<SyntheticDataset> {
    scenario.validate()?;
    let key = ScoringKey::default();
    let mut out = DocWriter { docs: Vec::new() };
    let mut user_traits = BTreeMap::new();

    let mut rng = rng_for(seed, "calibration");
    let mut calibration = Vec::with_capacity(scenario.n_calibration_users);
    for i in 0..scenario.n_calibration_users {
        let user = format!("cal{i:04}");
        let traits = latent_traits(&mut rng);
        let answers = survey_responses(&mut rng, &traits, &key, scenario.survey_noise_sd);
        calibration.push(CalibrationRecord::new(user.clone(), answers.into_iter().map(Some).collect()));
        out.history(&mut rng, &user, &traits, scenario);
        user_traits.insert(user, traits);
    }

    let mut rng = rng_for(seed, "communities");
    let mut founders_so_far: Vec<String> = Vec::new();
    let mut seen_founders: BTreeSet<String> = BTreeSet::new();
    let mut communities = Vec::with_capacity(scenario.n_communities);
    let mut truth_rows = Vec::with_capacity(scenario.n_communities);
    let newcomers = Poisson::new(scenario.newcomers_mean.max(1e-9)).expect("positive mean");

    for c in 0..scenario.n_communities {
        let cid = format!("com{c:04}");
        let inception = EPOCH + (c as i64 * 90 * DAY) / scenario.n_communities as i64;
        let n = rng.random_range(1..=scenario.max_founders);

        let mut founders: Vec<String> = Vec::with_capacity(n);
        while founders.len() < n {
            let reuse = !founders_so_far.is_empty() && rng.random_bool(scenario.founder_reuse);
            let user = if reuse {
                founders_so_far.choose(&mut rng).expect("non-empty").clone()
            } else {
                let fresh = format!("fnd{:05}", founders_so_far.len());
                founders_so_far.push(fresh.clone());
                fresh
            };
            if !founders.contains(&user) {
                founders.push(user);
            }
        }
        for f in &founders {
            if seen_founders.insert(f.clone()) {
                let traits = latent_traits(&mut rng);
                out.history(&mut rng, f, &traits, scenario);
                user_traits.insert(f.clone(), traits);
            }
        }
        let mut mean = [0.0; 5];
        for f in &founders {
            for (m, v) in mean.iter_mut().zip(&user_traits[f]) {
                *m += v / n as f64;
            }
        }

        // founders arrive in the first 60 days, the first one at inception
        let mut item = 0usize;
        let next_id = |item: &mut usize| {
            *item += 1;
            format!("{cid}-e{:04}", *item)
        };
        let mut early_posts = Vec::new();
        for (k, f) in founders.iter().enumerate() {
            let ts = inception + (k as i64 * 55 * DAY) / n as i64;
            let id = next_id(&mut item);
            let text = trait_text(&mut rng, &user_traits[f], 20);
            out.push(id.clone(), f, &cid, ts, None, text);
            early_posts.push(id);
        }
        // some founder chatter before the year mark
        for _ in 0..n {
            let f = founders.choose(&mut rng).expect("at least one founder");
            let parent = early_posts.choose(&mut rng).expect("founders posted").clone();
            let ts = inception + rng.random_range(60 * DAY..300 * DAY);
            let id = next_id(&mut item);
            let text = trait_text(&mut rng, &user_traits[f], 12);
            out.push(id, f, &cid, ts, Some(parent), text);
        }

        let p = sigmoid(scenario.sustained.eval(&mean, n));
        let sustained = rng.random_bool(p);
        if sustained {
            let retention = scenario.retention.eval(&mean, n).clamp(0.0, 1.0);
            let mut members: Vec<String> =
                founders.iter().filter(|_| rng.random_bool(retention)).cloned().collect();
            let extra = newcomers.sample(&mut rng) as usize;
            members.extend((0..extra).map(|k| format!("{cid}-m{k:03}")));
            if members.is_empty() {
                members.push(format!("{cid}-m000"));
            }
            let per_member = scenario.engagement.eval(&mean, n) - 1.0;
            let extra_items = Poisson::new(per_member.max(1e-9)).expect("positive mean");
            let window_start = inception + 365 * DAY;
            let mut authored: Vec<&String> = Vec::new();
            for m in &members {
                let k = 1 + extra_items.sample(&mut rng) as usize;
                authored.extend(std::iter::repeat_n(m, k));
            }
            let mut stamps: Vec<i64> = (0..authored.len())
                .map(|_| window_start + rng.random_range(0..30 * DAY))
                .collect();
            stamps.sort_unstable();
            // shuffle authors over the sorted stamps
            for i in (1..authored.len()).rev() {
                let j = rng.random_range(0..=i);
                authored.swap(i, j);
            }
            let mut window_ids: Vec<String> = Vec::new();
            for (author, ts) in authored.into_iter().zip(stamps) {
                let id = next_id(&mut item);
                let parent = if !window_ids.is_empty() && rng.random_bool(scenario.reply_share) {
                    Some(window_ids.choose(&mut rng).expect("non-empty").clone())
                } else {
                    None
                };
                let text = match user_traits.get(author.as_str()) {
                    Some(t) => trait_text(&mut rng, t, 12),
                    None => trait_text(&mut rng, &[3.0; 5], 12),
                };
                out.push(id.clone(), author, &cid, ts, parent, text);
                window_ids.push(id);
            }
        }

        communities.push((cid.clone(), inception));
        truth_rows.push(TrueCommunity {
            community_id: cid,
            inception_ts: inception,
            founders,
            mean_traits: mean,
            p_sustained: p,
            sustained,
        });
    }

    out.docs.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.id.cmp(&b.id)));
    Ok(SyntheticDataset {
        documents: out.docs,
        calibration,
        communities,
        truth: GroundTruth {
            seed,
            scenario: scenario.clone(),
            user_traits,
            communities: truth_rows,
        },
    })
}
