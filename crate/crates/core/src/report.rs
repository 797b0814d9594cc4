//! Regression tables as Markdown with a CSV twin.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{coefficient_names, FitResult, ModelKind, OutcomeVariable, Verdict, N_COEF};
use crate::learners::Family;

/// `***` below 0.01, `**` below 0.05, `*` below 0.1.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub outcome: OutcomeVariable,
    pub standardized: bool,
    pub fits: BTreeMap<Family, FitResult>,
    /// Indexed by coefficient; the intercept slot is `None`.
    pub verdicts: Vec<Option<Verdict>>,
    /// Average marginal effects per family and coefficient (logistic only).
    pub marginal_effects: Option<BTreeMap<Family, Vec<f64>>>,
}

fn term_label(term: &str) -> &str {
    match term {
        "intercept" => "Intercept",
        "neuroticism" => "Neuroticism",
        "extraversion" => "Extraversion",
        "openness" => "Openness",
        "agreeableness" => "Agreeableness",
        "conscientiousness" => "Conscientiousness",
        "n_founders" => "Num. of founders",
        other => other,
    }
}

fn statistic_label(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Logistic => "Tjur's R²",
        ModelKind::Linear => "Adj. R²",
    }
}

pub fn render_markdown(reports: &[OutcomeReport]) -> String {
    let mut out = String::from("# Founder traits and community outcomes\n");
    for r in reports {
        let kind = r.outcome.kind();
        let _ = writeln!(
            out,
            "\n## {}{}\n",
            r.outcome.title(),
            if r.standardized { " (standardized)" } else { "" }
        );
        let n = r.fits.values().map(|f| f.n).max().unwrap_or(0);
        let _ = writeln!(
            out,
            "{} regression, N = {n}. Cells are coefficient (s.e.).\n",
            match kind {
                ModelKind::Logistic => "Logistic",
                ModelKind::Linear => "Linear",
            }
        );
        out.push_str("| Variable |");
        for f in Family::ALL {
            let _ = write!(out, " {} |", f.label());
        }
        out.push_str(" Verdict |\n|---|");
        out.push_str(&"---|".repeat(Family::ALL.len() + 1));
        out.push('\n');
        for (j, term) in coefficient_names().into_iter().enumerate() {
            let _ = write!(out, "| {} |", term_label(term));
            for f in Family::ALL {
                match r.fits.get(&f) {
                    Some(fit) => {
                        let _ = write!(
                            out,
                            " {:.3}{} ({:.3}) |",
                            fit.coefficients[j],
                            stars(fit.p_values[j]),
                            fit.standard_errors[j]
                        );
                    }
                    None => out.push_str(" n/a |"),
                }
            }
            let verdict = r.verdicts.get(j).copied().flatten().map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, " {verdict} |");
        }
        let _ = write!(out, "| {} |", statistic_label(kind));
        for f in Family::ALL {
            match r.fits.get(&f) {
                Some(fit) => {
                    let _ = write!(out, " {:.3} |", fit.fit_statistic);
                }
                None => out.push_str(" n/a |"),
            }
        }
        out.push_str("  |\n| N |");
        for f in Family::ALL {
            let _ = write!(out, " {} |", r.fits.get(&f).map_or(0, |fit| fit.n));
        }
        out.push_str("  |\n\n* p<0.1, ** p<0.05, *** p<0.01\n");
        let flagged: Vec<&str> = r
            .fits
            .iter()
            .filter(|(_, fit)| fit.separation)
            .map(|(f, _)| f.name())
            .collect();
        if !flagged.is_empty() {
            let _ = writeln!(out, "\nFits flagged for separation: {}.", flagged.join(", "));
        }
        if let Some(ames) = &r.marginal_effects {
            out.push_str("\nAverage marginal effect per one-point increase:\n\n| Variable |");
            for f in Family::ALL {
                let _ = write!(out, " {} |", f.label());
            }
            out.push_str("\n|---|");
            out.push_str(&"---|".repeat(Family::ALL.len()));
            out.push('\n');
            for (j, term) in coefficient_names().into_iter().enumerate().skip(1) {
                let _ = write!(out, "| {} |", term_label(term));
                for f in Family::ALL {
                    match ames.get(&f).and_then(|v| v.get(j)) {
                        Some(v) => {
                            let _ = write!(out, " {:+.4} |", v);
                        }
                        None => out.push_str(" n/a |"),
                    }
                }
                out.push('\n');
            }
        }
    }
    out
}

/// One CSV cell group. Statistic rows carry the value in `coefficient` and
/// leave the standard error and p-value empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub outcome: String,
    pub trait_source: String,
    pub term: String,
    pub coefficient: f64,
    pub standard_error: Option<f64>,
    pub p_value: Option<f64>,
    pub stars: String,
    pub verdict: String,
}

pub const FIT_STATISTIC_TERM: &str = "fit_statistic";
pub const N_TERM: &str = "n";

pub fn report_rows(reports: &[OutcomeReport]) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for r in reports {
        for (f, fit) in &r.fits {
            for (j, term) in coefficient_names().into_iter().enumerate().take(N_COEF) {
                rows.push(ReportRow {
                    outcome: r.outcome.name().into(),
                    trait_source: f.name().into(),
                    term: term.into(),
                    coefficient: fit.coefficients[j],
                    standard_error: Some(fit.standard_errors[j]),
                    p_value: Some(fit.p_values[j]),
                    stars: stars(fit.p_values[j]).into(),
                    verdict: r.verdicts.get(j).copied().flatten().map(|v| v.to_string()).unwrap_or_default(),
                });
            }
            for (term, value) in [(FIT_STATISTIC_TERM, fit.fit_statistic), (N_TERM, fit.n as f64)] {
                rows.push(ReportRow {
                    outcome: r.outcome.name().into(),
                    trait_source: f.name().into(),
                    term: term.into(),
                    coefficient: value,
                    standard_error: None,
                    p_value: None,
                    stars: String::new(),
                    verdict: String::new(),
                });
            }
        }
    }
    rows
}

pub fn write_report_csv<W: std::io::Write>(writer: W, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<report csv>", e))?;
    Ok(())
}

pub fn read_report_csv<R: std::io::Read>(reader: R) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}
