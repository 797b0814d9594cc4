//! Pipeline configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//! output_dir = "out"
//!
//! [paths]
//! events = "events.jsonl"
//! calibration = "calibration.csv"
//! communities = "communities.csv"   # optional
//! lexicons = "lexicons/"            # optional, bundled demo set otherwise
//! norms = "affect_norms.csv"        # optional
//! scoring_key = "key.csv"           # optional
//!
//! [thresholds]
//! min_words = 400
//!
//! [analysis]
//! network_window = "year_mark"
//!
//! [grids.random_forest]
//! n_trees = [100, 300]
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::community::NetworkWindow;
use crate::error::{Error, Result};
use crate::learners::{default_grid, expand_grid, validate_point, Family, Grid};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub events: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
    pub communities: Option<PathBuf>,
    pub lexicons: Option<PathBuf>,
    pub norms: Option<PathBuf>,
    pub scoring_key: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub min_words: usize,
    pub top_k_features: usize,
    pub bigram_top_k: usize,
    pub bigram_min_users: usize,
    pub founder_window_days: i64,
    pub max_founders: usize,
    pub max_prior_posts: usize,
    pub year_mark_days: i64,
    pub window_days: i64,
    pub kfolds: usize,
    pub alpha: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            min_words: 400,
            top_k_features: 15,
            bigram_top_k: 50,
            bigram_min_users: 100,
            founder_window_days: 60,
            max_founders: 10,
            max_prior_posts: 2000,
            year_mark_days: 365,
            window_days: 30,
            kfolds: 10,
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Analysis {
    pub network_window: NetworkWindow,
    /// Log-transform size and engagement before the linear fits.
    pub log_outcomes: bool,
    /// Report z-scored coefficients instead of raw ones.
    pub standardized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub paths: Paths,
    pub thresholds: Thresholds,
    pub analysis: Analysis,
    /// Per-family grid overrides keyed by family name.
    pub grids: BTreeMap<String, Grid>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            output_dir: PathBuf::from("out"),
            paths: Paths::default(),
            thresholds: Thresholds::default(),
            analysis: Analysis::default(),
            grids: BTreeMap::new(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Validation(format!("config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_relative_to(base);
        Ok(cfg)
    }

    pub fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        for p in [
            &mut self.paths.events,
            &mut self.paths.calibration,
            &mut self.paths.communities,
            &mut self.paths.lexicons,
            &mut self.paths.norms,
            &mut self.paths.scoring_key,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.thresholds;
        let counts = [
            ("min_words", t.min_words),
            ("top_k_features", t.top_k_features),
            ("bigram_top_k", t.bigram_top_k),
            ("max_founders", t.max_founders),
            ("max_prior_posts", t.max_prior_posts),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Validation(format!("{name} must be positive")));
            }
        }
        let days = [
            ("founder_window_days", t.founder_window_days),
            ("year_mark_days", t.year_mark_days),
            ("window_days", t.window_days),
        ];
        for (name, v) in days {
            if v <= 0 {
                return Err(Error::Validation(format!("{name} must be positive")));
            }
        }
        if t.kfolds < 2 {
            return Err(Error::Validation("kfolds must be at least 2".into()));
        }
        if !(t.alpha > 0.0 && t.alpha < 1.0) {
            return Err(Error::Validation("alpha must lie in (0, 1)".into()));
        }
        for (name, grid) in &self.grids {
            let family: Family = name.parse()?;
            for point in expand_grid(grid) {
                validate_point(family, &point)?;
            }
            if grid.values().any(Vec::is_empty) {
                return Err(Error::Validation(format!("{name} grid has an empty axis")));
            }
        }
        Ok(())
    }

    pub fn grid(&self, family: Family) -> Grid {
        self.grids
            .get(family.name())
            .cloned()
            .unwrap_or_else(|| default_grid(family))
    }

    pub fn require(path: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
        path.clone()
            .ok_or_else(|| Error::Validation(format!("config does not name the {what} file")))
    }
}
