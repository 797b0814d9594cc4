//! Run manifest: resolved config, its hash, seeds, input and artifact
//! digests, per-stage status and sample sizes. Nothing time- or
//! location-dependent is recorded, so identical runs produce identical
//! manifests.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub status: StageStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub config_hash: String,
    /// The resolved config with the output directory blanked.
    pub config: PipelineConfig,
    pub inputs: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub stages: Vec<StageRecord>,
    pub counts: BTreeMap<String, usize>,
    pub artifacts: BTreeMap<String, String>,
}

/// The config as recorded: everything except where the outputs go.
pub fn recorded_config(cfg: &PipelineConfig) -> PipelineConfig {
    let mut c = cfg.clone();
    c.output_dir = Default::default();
    c
}

pub fn config_hash(cfg: &PipelineConfig) -> String {
    let canonical = serde_json::to_vec(&recorded_config(cfg)).expect("config serializes");
    sha256_hex(&canonical)
}

impl Manifest {
    pub fn new(cfg: &PipelineConfig) -> Self {
        Manifest {
            tool: format!("founderlens {}", env!("CARGO_PKG_VERSION")),
            config_hash: config_hash(cfg),
            config: recorded_config(cfg),
            inputs: BTreeMap::new(),
            seeds: BTreeMap::from([("root".to_string(), cfg.seed)]),
            stages: Vec::new(),
            counts: BTreeMap::new(),
            artifacts: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.to_json()).map_err(|e| Error::io(&path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn failed_stage(&self) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.status == StageStatus::Failed)
    }
}
