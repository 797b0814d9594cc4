//! Founder identification, pre-inception corpora, trait estimation and
//! community-level aggregation.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::community::EventLog;
use crate::error::{Error, Result};
use crate::featurizer::{Document, ExclusionReason, Featurizer};
use crate::learners::{Family, TraitModel};
use crate::{BigFive, TraitScores, SECONDS_PER_DAY};

pub const DEFAULT_FOUNDER_WINDOW_DAYS: i64 = 60;
pub const DEFAULT_MAX_FOUNDERS: usize = 10;
pub const DEFAULT_MAX_PRIOR_POSTS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Founder {
    pub user_id: String,
    pub first_activity_ts: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FounderRecord {
    pub user_id: String,
    pub community_id: String,
    pub first_activity_ts: i64,
    pub prior_documents: Vec<Document>,
}

/// The first `max_n` distinct users active in `[inception, inception +
/// window_days)`, ordered by first activity then user id.
pub fn identify_founders(log: &EventLog, window_days: i64, max_n: usize) -> Result<Vec<Founder>> {
    let end = log.inception_ts + window_days * SECONDS_PER_DAY;
    let mut first: BTreeMap<&str, i64> = BTreeMap::new();
    for e in log.events() {
        if e.timestamp < log.inception_ts || e.timestamp >= end {
            continue;
        }
        first
            .entry(e.author_id.as_str())
            .and_modify(|t| *t = (*t).min(e.timestamp))
            .or_insert(e.timestamp);
    }
    if first.is_empty() {
        return Err(Error::Degenerate(format!(
            "community {} has no activity in its first {window_days} days",
            log.community_id
        )));
    }
    let mut founders: Vec<Founder> = first
        .into_iter()
        .map(|(u, t)| Founder {
            user_id: u.to_string(),
            first_activity_ts: t,
        })
        .collect();
    founders.sort_by(|a, b| {
        a.first_activity_ts
            .cmp(&b.first_activity_ts)
            .then_with(|| a.user_id.cmp(&b.user_id))
    });
    founders.truncate(max_n);
    Ok(founders)
}

/// Every document on the platform grouped by author, earliest first.
#[derive(Debug, Clone, Default)]
pub struct AuthorIndex {
    by_author: HashMap<String, Vec<Document>>,
}

impl AuthorIndex {
    pub fn new(documents: impl IntoIterator<Item = Document>) -> Self {
        let mut by_author: HashMap<String, Vec<Document>> = HashMap::new();
        for d in documents {
            by_author.entry(d.author_id.clone()).or_default().push(d);
        }
        for docs in by_author.values_mut() {
            docs.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.id.cmp(&b.id)));
        }
        AuthorIndex { by_author }
    }

    pub fn documents(&self, user_id: &str) -> &[Document] {
        self.by_author.get(user_id).map_or(&[], Vec::as_slice)
    }
}

/// The user's documents outside `focal_community` strictly before
/// `inception_ts`, earliest first, capped at `max_posts`.
pub fn founder_prior_corpus(
    user_id: &str,
    index: &AuthorIndex,
    focal_community: &str,
    inception_ts: i64,
    max_posts: usize,
) -> Vec<Document> {
    index
        .documents(user_id)
        .iter()
        .take_while(|d| d.timestamp < inception_ts)
        .filter(|d| d.community_id != focal_community)
        .take(max_posts)
        .cloned()
        .collect()
}

pub fn founder_records(
    log: &EventLog,
    index: &AuthorIndex,
    window_days: i64,
    max_n: usize,
    max_posts: usize,
) -> Result<Vec<FounderRecord>> {
    Ok(identify_founders(log, window_days, max_n)?
        .into_iter()
        .map(|f| FounderRecord {
            prior_documents: founder_prior_corpus(&f.user_id, index, &log.community_id, log.inception_ts, max_posts),
            user_id: f.user_id,
            community_id: log.community_id.clone(),
            first_activity_ts: f.first_activity_ts,
        })
        .collect())
}

/// Per-family trait estimates, indexed by family then [`BigFive::index`].
pub type FamilyScores = [TraitScores; 4];

/// One trained model per (family, trait).
#[derive(Debug, Clone)]
pub struct ModelBank {
    models: Vec<TraitModel>,
}

impl ModelBank {
    /// Accepts the 20 models in any order; each (family, trait) pair must
    /// appear exactly once.
    pub fn new(models: Vec<TraitModel>) -> Result<Self> {
        let mut slots: Vec<Option<TraitModel>> = vec![None; 20];
        for m in models {
            let slot = &mut slots[Self::slot(m.family, m.trait_)];
            if slot.is_some() {
                return Err(Error::Validation(format!("duplicate model for {} {}", m.family, m.trait_)));
            }
            *slot = Some(m);
        }
        let mut models = Vec::with_capacity(20);
        for (i, s) in slots.into_iter().enumerate() {
            let m = s.ok_or_else(|| {
                Error::Validation(format!(
                    "missing model for {} {}",
                    Family::ALL[i / 5],
                    BigFive::ALL[i % 5]
                ))
            })?;
            models.push(m);
        }
        Ok(ModelBank { models })
    }

    fn slot(family: Family, t: BigFive) -> usize {
        family.index() * 5 + t.index()
    }

    pub fn get(&self, family: Family, t: BigFive) -> &TraitModel {
        &self.models[Self::slot(family, t)]
    }

    pub fn models(&self) -> &[TraitModel] {
        &self.models
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FounderOutcome {
    Estimated { scores: FamilyScores },
    Excluded {
        #[serde(flatten)]
        reason: ExclusionReason,
    },
}

/// Featurizes the corpus once and applies all 20 models.
pub fn estimate_founder_traits(
    user_id: &str,
    corpus: &[Document],
    featurizer: &Featurizer,
    bank: &ModelBank,
) -> Result<FounderOutcome> {
    let fv = match featurizer.featurize_user(user_id, corpus) {
        Ok(fv) => fv,
        Err(ex) => return Ok(FounderOutcome::Excluded { reason: ex.reason }),
    };
    let mut scores = [[0.0; 5]; 4];
    for f in Family::ALL {
        for t in BigFive::ALL {
            scores[f.index()][t.index()] = bank.get(f, t).predict(&fv)?;
        }
    }
    Ok(FounderOutcome::Estimated { scores })
}

type CacheCell = Arc<OnceLock<FounderOutcome>>;

/// Founder estimates keyed by (user, inception cutoff). Each key is computed
/// by exactly one caller; concurrent callers for the same key wait on it.
///
/// The key omits the focal community because a valid event log has no
/// focal-community activity before its own inception.
#[derive(Debug, Default)]
pub struct EstimateCache {
    cells: Mutex<HashMap<(String, i64), CacheCell>>,
}

impl EstimateCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_compute<F>(&self, user_id: &str, cutoff: i64, compute: F) -> Result<FounderOutcome>
    where
        F: FnOnce() -> Result<FounderOutcome>,
    {
        let cell = {
            let mut cells = self.cells.lock().expect("estimate cache poisoned");
            cells.entry((user_id.to_string(), cutoff)).or_default().clone()
        };
        if let Some(v) = cell.get() {
            return Ok(v.clone());
        }
        // OnceLock::get_or_try_init is unstable; compute then publish, so a
        // racing thread may compute the same value but only one is stored.
        let value = compute()?;
        Ok(cell.get_or_init(|| value).clone())
    }

    pub fn len(&self) -> usize {
        self.cells.lock().expect("estimate cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityFounderTraits {
    pub community_id: String,
    pub n_founders: usize,
    pub traits: FamilyScores,
}

impl CommunityFounderTraits {
    pub fn get(&self, family: Family, t: BigFive) -> f64 {
        self.traits[family.index()][t.index()]
    }
}

/// Arithmetic means per family and trait.
pub fn aggregate_community(community_id: &str, estimates: &[FamilyScores]) -> Result<CommunityFounderTraits> {
    if estimates.is_empty() {
        return Err(Error::Degenerate(format!(
            "community {community_id} has no founder with a valid estimate"
        )));
    }
    let n = estimates.len() as f64;
    let mut traits = [[0.0; 5]; 4];
    for (f, row) in traits.iter_mut().enumerate() {
        for (t, cell) in row.iter_mut().enumerate() {
            *cell = estimates.iter().map(|e| e[f][t]).sum::<f64>() / n;
        }
    }
    Ok(CommunityFounderTraits {
        community_id: community_id.to_string(),
        n_founders: estimates.len(),
        traits,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FounderLogEntry {
    pub community_id: String,
    pub user_id: String,
    pub corpus_documents: usize,
    #[serde(flatten)]
    pub outcome: FounderOutcome,
}

/// Estimates every founder of a community (through the cache) and
/// aggregates the valid ones. Returns the per-founder log alongside; the
/// aggregate is `None` when no founder could be estimated.
#[allow(clippy::too_many_arguments)]
pub fn estimate_community(
    log: &EventLog,
    index: &AuthorIndex,
    featurizer: &Featurizer,
    bank: &ModelBank,
    cache: &EstimateCache,
    window_days: i64,
    max_founders: usize,
    max_prior_posts: usize,
) -> Result<(Option<CommunityFounderTraits>, Vec<FounderLogEntry>)> {
    let records = founder_records(log, index, window_days, max_founders, max_prior_posts)?;
    let mut valid = Vec::new();
    let mut entries = Vec::new();
    for r in records {
        let outcome = cache.get_or_compute(&r.user_id, log.inception_ts, || {
            estimate_founder_traits(&r.user_id, &r.prior_documents, featurizer, bank)
        })?;
        if let FounderOutcome::Estimated { scores } = &outcome {
            valid.push(*scores);
        }
        entries.push(FounderLogEntry {
            community_id: r.community_id,
            user_id: r.user_id,
            corpus_documents: r.prior_documents.len(),
            outcome,
        });
    }
    let aggregate = if valid.is_empty() {
        log::info!("community {} dropped: no founder with a valid estimate", log.community_id);
        None
    } else {
        Some(aggregate_community(&log.community_id, &valid)?)
    };
    Ok((aggregate, entries))
}

pub fn trait_column_name(family: Family, t: BigFive) -> String {
    format!("{}.{}", family.name(), t.name())
}

pub fn founder_trait_columns() -> Vec<String> {
    let mut cols = vec!["community_id".to_string(), "n_founders".to_string()];
    for f in Family::ALL {
        for t in BigFive::ALL {
            cols.push(trait_column_name(f, t));
        }
    }
    cols
}

pub fn write_founder_traits_csv<W: std::io::Write>(writer: W, rows: &[CommunityFounderTraits]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(founder_trait_columns())?;
    for r in rows {
        let mut rec = vec![r.community_id.clone(), r.n_founders.to_string()];
        rec.extend(r.traits.iter().flatten().map(|v| v.to_string()));
        w.write_record(rec)?;
    }
    w.flush().map_err(|e| Error::io("<founder traits csv>", e))?;
    Ok(())
}

pub fn read_founder_traits_csv<R: std::io::Read>(reader: R) -> Result<Vec<CommunityFounderTraits>> {
    let mut r = csv::Reader::from_reader(reader);
    if r.headers()?.iter().ne(founder_trait_columns().iter().map(String::as_str)) {
        return Err(Error::Validation("unexpected founder traits header".into()));
    }
    let bad = |s: &str| Error::Validation(format!("bad founder traits cell {s:?}"));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut traits = [[0.0; 5]; 4];
        for (k, cell) in rec.iter().skip(2).enumerate() {
            traits[k / 5][k % 5] = cell.parse().map_err(|_| bad(cell))?;
        }
        rows.push(CommunityFounderTraits {
            community_id: rec[0].to_string(),
            n_founders: rec[1].parse().map_err(|_| bad(&rec[1]))?,
            traits,
        });
    }
    Ok(rows)
}
