//! End-to-end orchestration: featurize, calibrate, estimate, analyze,
//! regress, report.
//!
//! Each stage's state is cached as JSON under `<output>/.cache`, keyed by the
//! config hash and the input digests, so a rerun resumes where the previous
//! one stopped. Artifacts are rewritten from the state on every run, which
//! keeps cached and cold runs byte-identical.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::calibration::{
    apply_exclusions, correlation_screen, read_calibration_csv, stepwise_select, CalibrationRecord, ExclusionReport,
    ScoringKey, SelectedFeatureSet,
};
use crate::community::{compute_outcomes, write_outcomes_csv, CommunityOutcomes, EventLog, OutcomeWindows};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::estimator::{
    estimate_community, identify_founders, write_founder_traits_csv, AuthorIndex, CommunityFounderTraits,
    EstimateCache, FounderLogEntry, FounderOutcome, ModelBank,
};
use crate::featurizer::{
    build_bigram_vocabulary, read_documents_jsonl, tokenize, user_top_bigrams, BigramVocabulary, Document,
    FeatureMatrix, Featurizer, TokenizedText,
};
use crate::inference::{
    average_marginal_effect, build_design, fit, vote, FitResult, ModelKind, OutcomeVariable, N_COEF,
};
use crate::learners::{train, Family, LearnerSpec, TraitModel};
use crate::lexicons::{demo_affect_norms, demo_lexicons, load_affect_norms, load_lexicon_dir, AffectNorms, CategoryLexicon};
use crate::manifest::{config_hash, sha256_file, sha256_hex, Manifest, StageRecord, StageStatus};
use crate::report::{render_markdown, report_rows, write_report_csv, OutcomeReport};
use crate::seeds::derive_seed;
use crate::{BigFive, TraitScores};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Featurize,
    Calibrate,
    Estimate,
    Analyze,
    Regress,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Featurize,
        Stage::Calibrate,
        Stage::Estimate,
        Stage::Analyze,
        Stage::Regress,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Featurize => "featurize",
            Stage::Calibrate => "calibrate",
            Stage::Estimate => "estimate",
            Stage::Analyze => "analyze",
            Stage::Regress => "regress",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown stage {s:?}")))
    }
}

/// Everything read from disk before the stages run.
pub struct Inputs {
    pub documents: Vec<Document>,
    pub calibration: Vec<CalibrationRecord>,
    /// Study communities with explicit inception times, if listed.
    pub communities: Option<Vec<(String, i64)>>,
    pub lexicons: Vec<CategoryLexicon>,
    pub norms: AffectNorms,
    pub key: ScoringKey,
    /// Digest per input label.
    pub digests: BTreeMap<String, String>,
}

pub fn read_communities_csv(path: &Path) -> Result<Vec<(String, i64)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
        ),
        _ => Error::Csv(e),
    })?;
    if r.headers()?.iter().ne(["community_id", "inception_ts"]) {
        return Err(Error::format(path, 1, "header must be community_id,inception_ts"));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let ts: i64 = rec[1]
            .trim()
            .parse()
            .map_err(|_| Error::format(path, i + 2, format!("bad inception_ts {:?}", &rec[1])))?;
        rows.push((rec[0].to_string(), ts));
    }
    Ok(rows)
}

impl Inputs {
    pub fn load(cfg: &PipelineConfig) -> Result<Self> {
        let mut digests = BTreeMap::new();
        let events = PipelineConfig::require(&cfg.paths.events, "events")?;
        let calibration = PipelineConfig::require(&cfg.paths.calibration, "calibration")?;
        digests.insert("events".into(), sha256_file(&events)?);
        digests.insert("calibration".into(), sha256_file(&calibration)?);
        let documents = read_documents_jsonl(&events)?;
        let records = read_calibration_csv(&calibration)?;

        let communities = match &cfg.paths.communities {
            Some(p) => {
                digests.insert("communities".into(), sha256_file(p)?);
                Some(read_communities_csv(p)?)
            }
            None => None,
        };
        let lexicons = match &cfg.paths.lexicons {
            Some(dir) => {
                let lex = load_lexicon_dir(dir)?;
                let text: String = lex.iter().map(|l| format!("{}\n{}", l.name(), l.to_text())).collect();
                digests.insert("lexicons".into(), sha256_hex(text.as_bytes()));
                lex
            }
            None => demo_lexicons(),
        };
        let norms = match &cfg.paths.norms {
            Some(p) => {
                digests.insert("norms".into(), sha256_file(p)?);
                load_affect_norms(p)?
            }
            None => demo_affect_norms(),
        };
        let key = match &cfg.paths.scoring_key {
            Some(p) => {
                digests.insert("scoring_key".into(), sha256_file(p)?);
                ScoringKey::load(p)?
            }
            None => ScoringKey::default(),
        };
        Ok(Inputs {
            documents,
            calibration: records,
            communities,
            lexicons,
            norms,
            key,
            digests,
        })
    }

    /// Event logs of the study communities, sorted by id.
    pub fn event_logs(&self) -> Result<Vec<EventLog>> {
        let mut by_community: BTreeMap<&str, Vec<Document>> = BTreeMap::new();
        for d in &self.documents {
            by_community.entry(d.community_id.as_str()).or_default().push(d.clone());
        }
        match &self.communities {
            Some(list) => {
                let mut sorted = list.clone();
                sorted.sort();
                sorted
                    .into_iter()
                    .map(|(id, ts)| {
                        let events = by_community.remove(id.as_str()).unwrap_or_default();
                        EventLog::new(id, ts, events)
                    })
                    .collect()
            }
            None => by_community
                .into_iter()
                .map(|(id, events)| EventLog::from_events(id, events))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturizeState {
    pub vocabulary: BigramVocabulary,
    pub features: FeatureMatrix,
    pub traits: Vec<TraitScores>,
    pub exclusions: ExclusionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateState {
    pub selections: Vec<SelectedFeatureSet>,
    /// Family-major, then trait.
    pub models: Vec<TraitModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateState {
    pub traits: Vec<CommunityFounderTraits>,
    pub founders: Vec<FounderLogEntry>,
    pub dropped: Vec<Skipped>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeState {
    pub outcomes: Vec<CommunityOutcomes>,
    pub skipped: Vec<Skipped>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressState {
    pub reports: Vec<OutcomeReport>,
    pub skipped: Vec<Skipped>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub manifest: Manifest,
    pub cache_hits: Vec<Stage>,
}

fn is_data_shortfall(e: &Error) -> bool {
    matches!(
        e,
        Error::SampleSize { .. } | Error::Degenerate(_) | Error::RankDeficient { .. } | Error::Undefined(_)
    )
}

struct Runner<'a> {
    cfg: &'a PipelineConfig,
    out: PathBuf,
    manifest: Manifest,
    cache_hits: Vec<Stage>,
    cache_key: String,
}

impl Runner<'_> {
    fn emit(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.manifest.artifacts.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    fn emit_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.emit(rel, text.as_bytes())
    }

    fn cache_path(&self, stage: Stage) -> PathBuf {
        self.out.join(".cache").join(format!("{}-{}.json", stage.name(), self.cache_key))
    }

    fn cached<T, F>(&mut self, stage: Stage, compute: F) -> Result<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let path = self.cache_path(stage);
        if let Ok(text) = fs::read_to_string(&path) {
            match serde_json::from_str(&text) {
                Ok(v) => {
                    info!("{stage}: reusing cached state");
                    self.cache_hits.push(stage);
                    return Ok(v);
                }
                Err(e) => warn!("{stage}: ignoring unreadable cache {}: {e}", path.display()),
            }
        }
        let value = compute()?;
        let write = || -> std::io::Result<()> {
            fs::create_dir_all(path.parent().expect("cache file has a parent"))?;
            fs::write(&path, serde_json::to_vec(&value).expect("stage state serializes"))
        };
        if let Err(e) = write() {
            warn!("{stage}: could not write cache {}: {e}", path.display());
        }
        Ok(value)
    }

    fn count(&mut self, key: &str, n: usize) {
        self.manifest.counts.insert(key.to_string(), n);
    }
}

fn featurizer_for(inputs: &Inputs, cfg: &PipelineConfig, vocab: BigramVocabulary) -> Featurizer {
    Featurizer {
        lexicons: inputs.lexicons.clone(),
        norms: inputs.norms.clone(),
        vocab,
        min_words: cfg.thresholds.min_words,
    }
}

pub fn run_featurize(inputs: &Inputs, cfg: &PipelineConfig) -> Result<FeaturizeState> {
    let t = &cfg.thresholds;
    let index = AuthorIndex::new(inputs.documents.iter().cloned());
    let tokenized: Vec<Vec<TokenizedText>> = inputs
        .calibration
        .par_iter()
        .map(|r| index.documents(&r.user_id).iter().map(|d| tokenize(&d.text)).collect())
        .collect();
    let words = |docs: &[TokenizedText]| docs.iter().map(TokenizedText::word_count).sum::<usize>();

    let tops: BTreeMap<String, Vec<String>> = inputs
        .calibration
        .iter()
        .zip(&tokenized)
        .filter(|(_, docs)| words(docs) >= t.min_words)
        .map(|(r, docs)| (r.user_id.clone(), user_top_bigrams(docs, t.bigram_top_k)))
        .collect();
    let vocabulary = build_bigram_vocabulary(&tops, t.bigram_min_users);
    info!(
        "bigram vocabulary: {} of {} candidates",
        vocabulary.bigrams.len(),
        vocabulary.candidates
    );
    let featurizer = featurizer_for(inputs, cfg, vocabulary.clone());

    let records: Vec<CalibrationRecord> = inputs
        .calibration
        .par_iter()
        .zip(&tokenized)
        .map(|(r, docs)| {
            let mut r = r.clone();
            if !docs.is_empty() {
                r.text_words = Some(words(docs));
                r.features = featurizer.featurize_tokens(&r.user_id, docs).ok();
            }
            r
        })
        .collect();
    let (kept, exclusions) = apply_exclusions(records, &inputs.key, t.min_words);
    let vectors: Vec<(String, _)> = kept
        .iter()
        .map(|r| (r.user_id.clone(), r.features.clone().expect("retained records are featurized")))
        .collect();
    let features = FeatureMatrix::from_vectors(featurizer.feature_names(), &vectors)?;
    let traits = kept.iter().map(|r| r.traits.expect("retained records are scored")).collect();
    Ok(FeaturizeState {
        vocabulary,
        features,
        traits,
        exclusions,
    })
}

pub fn learner_seed(root: u64, family: Family, t: BigFive) -> u64 {
    derive_seed(root, &format!("calibrate/{}/{}", family.name(), t.name()))
}

pub fn run_calibrate(state: &FeaturizeState, cfg: &PipelineConfig) -> Result<CalibrateState> {
    let matrix = &state.features;
    let min_rows = 2 * cfg.thresholds.kfolds;
    if matrix.n_rows() < min_rows.max(10) {
        return Err(Error::SampleSize {
            needed: min_rows.max(10),
            got: matrix.n_rows(),
        });
    }
    let selections: Vec<SelectedFeatureSet> = BigFive::ALL
        .par_iter()
        .map(|&t| {
            let y: Vec<f64> = state.traits.iter().map(|s| s[t.index()]).collect();
            let screened = correlation_screen(matrix, &y, cfg.thresholds.top_k_features)?;
            stepwise_select(t, &screened, matrix, &y)
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(Family, BigFive)> = Family::ALL
        .iter()
        .flat_map(|&f| BigFive::ALL.iter().map(move |&t| (f, t)))
        .collect();
    let models = jobs
        .par_iter()
        .map(|&(f, t)| {
            let sel = &selections[t.index()];
            let names = if sel.selected.is_empty() {
                warn!("{t}: stepwise search kept no feature; using the top screened feature");
                vec![sel.screened[0].name.clone()]
            } else {
                sel.selected.clone()
            };
            let x = matrix.select(&names)?.rows;
            let y: Vec<f64> = state.traits.iter().map(|s| s[t.index()]).collect();
            let spec = LearnerSpec::new(f, learner_seed(cfg.seed, f, t))
                .with_grid(cfg.grid(f))
                .with_kfolds(cfg.thresholds.kfolds);
            train(&spec, t, &names, &x, &y)
        })
        .collect::<Result<_>>()?;
    Ok(CalibrateState { selections, models })
}

pub fn run_estimate(
    inputs: &Inputs,
    logs: &[EventLog],
    featurize: &FeaturizeState,
    calibrate: &CalibrateState,
    cfg: &PipelineConfig,
) -> Result<EstimateState> {
    let t = &cfg.thresholds;
    let index = AuthorIndex::new(inputs.documents.iter().cloned());
    let featurizer = featurizer_for(inputs, cfg, featurize.vocabulary.clone());
    let bank = ModelBank::new(calibrate.models.clone())?;
    let cache = EstimateCache::new();
    let results: Vec<Result<_>> = logs
        .par_iter()
        .map(|log| {
            estimate_community(
                log,
                &index,
                &featurizer,
                &bank,
                &cache,
                t.founder_window_days,
                t.max_founders,
                t.max_prior_posts,
            )
        })
        .collect();
    let mut state = EstimateState {
        traits: Vec::new(),
        founders: Vec::new(),
        dropped: Vec::new(),
    };
    for (log, r) in logs.iter().zip(results) {
        match r {
            Ok((aggregate, entries)) => {
                state.founders.extend(entries);
                match aggregate {
                    Some(a) => state.traits.push(a),
                    None => state.dropped.push(Skipped {
                        id: log.community_id.clone(),
                        reason: "no founder with a valid estimate".into(),
                    }),
                }
            }
            Err(e) if is_data_shortfall(&e) => state.dropped.push(Skipped {
                id: log.community_id.clone(),
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(state)
}

pub fn run_analyze(logs: &[EventLog], cfg: &PipelineConfig) -> Result<AnalyzeState> {
    let t = &cfg.thresholds;
    let windows = OutcomeWindows {
        year_mark_days: t.year_mark_days,
        window_days: t.window_days,
        network: cfg.analysis.network_window,
    };
    let results: Vec<Result<CommunityOutcomes>> = logs
        .par_iter()
        .map(|log| {
            let founders: Vec<String> = identify_founders(log, t.founder_window_days, t.max_founders)?
                .into_iter()
                .map(|f| f.user_id)
                .collect();
            compute_outcomes(log, &founders, &windows)
        })
        .collect();
    let mut state = AnalyzeState {
        outcomes: Vec::new(),
        skipped: Vec::new(),
    };
    for (log, r) in logs.iter().zip(results) {
        match r {
            Ok(o) => state.outcomes.push(o),
            Err(e) if is_data_shortfall(&e) => state.skipped.push(Skipped {
                id: log.community_id.clone(),
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(state)
}

pub fn run_regress(estimate: &EstimateState, analyze: &AnalyzeState, cfg: &PipelineConfig) -> Result<RegressState> {
    let alpha = cfg.thresholds.alpha;
    let results: Vec<Result<OutcomeReport>> = OutcomeVariable::ALL
        .par_iter()
        .map(|&outcome| {
            let mut fits: BTreeMap<Family, FitResult> = BTreeMap::new();
            let mut ames: BTreeMap<Family, Vec<f64>> = BTreeMap::new();
            for f in Family::ALL {
                let mut design = build_design(
                    outcome,
                    f,
                    &estimate.traits,
                    &analyze.outcomes,
                    cfg.analysis.log_outcomes,
                )?;
                if cfg.analysis.standardized {
                    design = design.standardized();
                }
                let result = fit(&design)?;
                if outcome.kind() == ModelKind::Logistic && result.converged {
                    let mut v = vec![0.0];
                    for j in 1..N_COEF {
                        v.push(average_marginal_effect(&result, &design, j)?);
                    }
                    ames.insert(f, v);
                }
                fits.insert(f, result);
            }
            let mut verdicts = vec![None];
            for j in 1..N_COEF {
                let estimates: Vec<(f64, f64)> = Family::ALL
                    .iter()
                    .map(|f| (fits[f].coefficients[j], fits[f].p_values[j]))
                    .collect();
                verdicts.push(Some(vote(&estimates, alpha)));
            }
            Ok(OutcomeReport {
                outcome,
                standardized: cfg.analysis.standardized,
                fits,
                verdicts,
                marginal_effects: (outcome.kind() == ModelKind::Logistic).then_some(ames),
            })
        })
        .collect();
    let mut state = RegressState {
        reports: Vec::new(),
        skipped: Vec::new(),
    };
    for (outcome, r) in OutcomeVariable::ALL.iter().zip(results) {
        match r {
            Ok(rep) => state.reports.push(rep),
            Err(e) if is_data_shortfall(&e) => {
                warn!("{outcome}: not estimated: {e}");
                state.skipped.push(Skipped {
                    id: outcome.name().into(),
                    reason: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(state)
}

fn csv_bytes<F>(write: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> Result<()>,
{
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

impl Runner<'_> {
    fn write_featurize(&mut self, s: &FeaturizeState) -> Result<()> {
        let features = csv_bytes(|b| s.features.write_csv(b))?;
        self.emit("features/calibration_features.csv", &features)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["user_id"];
        header.extend(BigFive::ALL.iter().map(|t| t.name()));
        w.write_record(&header)?;
        for (id, t) in s.features.row_ids.iter().zip(&s.traits) {
            let mut rec = vec![id.clone()];
            rec.extend(t.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        let traits = w.into_inner().map_err(|e| Error::Validation(e.to_string()))?;
        self.emit("features/calibration_traits.csv", &traits)?;
        self.emit_json("features/bigram_vocabulary.json", &s.vocabulary)?;
        self.emit_json("features/exclusions.json", &s.exclusions)?;
        self.count("calibration.respondents", s.exclusions.respondents);
        self.count("calibration.retained", s.exclusions.retained);
        self.count("features.columns", s.features.names.len());
        self.count("vocabulary.bigrams", s.vocabulary.bigrams.len());
        self.count("vocabulary.candidates", s.vocabulary.candidates);
        Ok(())
    }

    fn write_calibrate(&mut self, s: &CalibrateState) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "family",
            "trait",
            "n_features",
            "n_train",
            "in_sample_adj_r2",
            "resample_adj_r2",
            "hyperparameters",
        ])?;
        for m in &s.models {
            self.emit(&format!("models/{}.{}.json", m.family.name(), m.trait_.name()), m.to_json()?.as_bytes())?;
            self.manifest
                .seeds
                .insert(format!("calibrate/{}/{}", m.family.name(), m.trait_.name()), m.seed);
            w.write_record([
                m.family.name().to_string(),
                m.trait_.name().to_string(),
                m.feature_names.len().to_string(),
                m.n_train.to_string(),
                m.in_sample_adj_r2.to_string(),
                m.resample_adj_r2.to_string(),
                serde_json::to_string(&m.hyperparameters)?,
            ])?;
        }
        let table = w.into_inner().map_err(|e| Error::Validation(e.to_string()))?;
        self.emit("calibration/fit_statistics.csv", &table)?;
        self.emit_json("calibration/selection.json", &s.selections)?;
        for sel in &s.selections {
            self.count(&format!("selection.{}", sel.trait_.name()), sel.selected.len());
        }
        Ok(())
    }

    fn write_estimate(&mut self, s: &EstimateState) -> Result<()> {
        let traits = csv_bytes(|b| write_founder_traits_csv(b, &s.traits))?;
        self.emit("estimates/founder_traits.csv", &traits)?;
        let mut lines = String::new();
        for e in &s.founders {
            lines.push_str(&serde_json::to_string(e)?);
            lines.push('\n');
        }
        self.emit("estimates/founders.jsonl", lines.as_bytes())?;
        self.emit_json("estimates/dropped.json", &s.dropped)?;
        let estimated = s
            .founders
            .iter()
            .filter(|e| matches!(e.outcome, FounderOutcome::Estimated { .. }))
            .count();
        self.count("founders.identified", s.founders.len());
        self.count("founders.estimated", estimated);
        self.count("communities.with_founder_traits", s.traits.len());
        self.count("communities.dropped_in_estimation", s.dropped.len());
        Ok(())
    }

    fn write_analyze(&mut self, s: &AnalyzeState) -> Result<()> {
        let table = csv_bytes(|b| write_outcomes_csv(b, &s.outcomes))?;
        self.emit("outcomes/outcomes.csv", &table)?;
        let missing: usize = s.outcomes.iter().map(|o| o.missing_parents).sum();
        self.emit_json(
            "outcomes/data_quality.json",
            &serde_json::json!({ "missing_parents": missing, "skipped": s.skipped }),
        )?;
        self.count("communities.analyzed", s.outcomes.len());
        self.count("communities.sustained", s.outcomes.iter().filter(|o| o.sustained).count());
        self.count(
            "communities.closeness_defined",
            s.outcomes.iter().filter(|o| o.closeness_centralization.is_some()).count(),
        );
        self.count("data_quality.missing_parents", missing);
        Ok(())
    }

    fn write_regress(&mut self, s: &RegressState) -> Result<()> {
        self.emit_json("regress/fits.json", s)?;
        for r in &s.reports {
            let n = r.fits.values().map(|f| f.n).max().unwrap_or(0);
            self.count(&format!("regress.{}.n", r.outcome.name()), n);
        }
        Ok(())
    }

    fn write_report(&mut self, s: &RegressState) -> Result<()> {
        let mut md = render_markdown(&s.reports);
        if !s.skipped.is_empty() {
            md.push_str("\n## Outcomes not estimated\n\n");
            for sk in &s.skipped {
                md.push_str(&format!("- {}: {}\n", sk.id, sk.reason));
            }
        }
        self.emit("report/report.md", md.as_bytes())?;
        let rows = csv_bytes(|b| write_report_csv(b, &report_rows(&s.reports)))?;
        self.emit("report/report.csv", &rows)?;
        Ok(())
    }

    fn record(&mut self, stage: Stage) {
        self.manifest.stages.push(StageRecord {
            stage: stage.name().into(),
            status: StageStatus::Ok,
            error: None,
        });
    }

    fn run(&mut self, until: Stage, current: &mut Option<Stage>) -> Result<()> {
        let cfg = self.cfg;
        let inputs = Inputs::load(cfg)?;
        self.manifest.inputs = inputs.digests.clone();
        let key_material = serde_json::to_vec(&(config_hash(cfg), &inputs.digests))?;
        self.cache_key = sha256_hex(&key_material)[..16].to_string();

        *current = Some(Stage::Featurize);
        let featurize = self.cached(Stage::Featurize, || run_featurize(&inputs, cfg))?;
        self.write_featurize(&featurize)?;
        self.record(Stage::Featurize);
        if until == Stage::Featurize {
            return Ok(());
        }

        *current = Some(Stage::Calibrate);
        let calibrate = self.cached(Stage::Calibrate, || run_calibrate(&featurize, cfg))?;
        self.write_calibrate(&calibrate)?;
        self.record(Stage::Calibrate);
        if until == Stage::Calibrate {
            return Ok(());
        }

        *current = Some(Stage::Estimate);
        let logs = inputs.event_logs()?;
        self.count("communities", logs.len());
        let estimate = self.cached(Stage::Estimate, || run_estimate(&inputs, &logs, &featurize, &calibrate, cfg))?;
        self.write_estimate(&estimate)?;
        self.record(Stage::Estimate);
        if until == Stage::Estimate {
            return Ok(());
        }

        *current = Some(Stage::Analyze);
        let analyze = self.cached(Stage::Analyze, || run_analyze(&logs, cfg))?;
        self.write_analyze(&analyze)?;
        self.record(Stage::Analyze);
        if until == Stage::Analyze {
            return Ok(());
        }

        *current = Some(Stage::Regress);
        let regress = self.cached(Stage::Regress, || run_regress(&estimate, &analyze, cfg))?;
        self.write_regress(&regress)?;
        self.record(Stage::Regress);
        if until == Stage::Regress {
            return Ok(());
        }

        *current = Some(Stage::Report);
        self.write_report(&regress)?;
        self.record(Stage::Report);
        Ok(())
    }
}

/// Runs every stage up to and including `until`. On failure the manifest
/// still gets written, marking the stage that failed, and artifacts from
/// earlier stages stay in place.
pub fn run_pipeline(cfg: &PipelineConfig, until: Stage) -> Result<RunSummary> {
    cfg.validate()?;
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let mut runner = Runner {
        cfg,
        out: out.clone(),
        manifest: Manifest::new(cfg),
        cache_hits: Vec::new(),
        cache_key: String::new(),
    };
    let mut current = None;
    let result = runner.run(until, &mut current);
    if let Err(e) = &result {
        runner.manifest.stages.push(StageRecord {
            stage: current.map_or("load_inputs", Stage::name).into(),
            status: StageStatus::Failed,
            error: Some(e.to_string()),
        });
    }
    runner.manifest.write(&out)?;
    result.map(|()| RunSummary {
        manifest: runner.manifest,
        cache_hits: runner.cache_hits,
    })
}
