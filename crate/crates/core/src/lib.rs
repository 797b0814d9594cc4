//! Founder personality estimation from text and online-community outcome
//! modeling.
//!
//! The pipeline runs in five stages: calibration data (self-reported traits
//! plus public text), text-to-trait learners, community outcome extraction,
//! founder trait estimation, and outcome regressions with an ensemble
//! majority-vote rule across the four learner families.

pub mod calibration;
pub mod community;
pub mod config;
pub mod error;
pub mod estimator;
pub mod featurizer;
pub mod graph;
pub mod inference;
pub mod learners;
pub mod lexicons;
mod linalg;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod seeds;
pub mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};

pub const SECONDS_PER_DAY: i64 = 86_400;

/// The five personality dimensions, in the order used by every table and
/// design matrix in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BigFive {
    Neuroticism,
    Extraversion,
    Openness,
    Agreeableness,
    Conscientiousness,
}

impl BigFive {
    pub const ALL: [BigFive; 5] = [
        BigFive::Neuroticism,
        BigFive::Extraversion,
        BigFive::Openness,
        BigFive::Agreeableness,
        BigFive::Conscientiousness,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            BigFive::Neuroticism => "neuroticism",
            BigFive::Extraversion => "extraversion",
            BigFive::Openness => "openness",
            BigFive::Agreeableness => "agreeableness",
            BigFive::Conscientiousness => "conscientiousness",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BigFive::Neuroticism => "Neuroticism",
            BigFive::Extraversion => "Extraversion",
            BigFive::Openness => "Openness",
            BigFive::Agreeableness => "Agreeableness",
            BigFive::Conscientiousness => "Conscientiousness",
        }
    }
}

impl fmt::Display for BigFive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BigFive {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_lowercase();
        BigFive::ALL
            .into_iter()
            .find(|t| t.name() == lower || t.name().starts_with(&lower) && lower.len() == 1)
            .ok_or_else(|| Error::Validation(format!("unknown trait {s:?}")))
    }
}

/// Five trait values indexed by [`BigFive::index`].
pub type TraitScores = [f64; 5];
