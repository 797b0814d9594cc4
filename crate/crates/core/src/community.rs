//! One-year community outcomes and reply-network indicators.
//!
//! Every window is half-open `[start, end)` in UTC seconds. The year-mark
//! window is a 30-day month starting 365 days after inception.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurizer::{Document, DocumentKind};
use crate::graph::InteractionGraph;
use crate::SECONDS_PER_DAY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: i64,
    pub end: i64,
}

impl Window {
    pub fn contains(&self, ts: i64) -> bool {
        self.start <= ts && ts < self.end
    }

    pub fn after(origin: i64, offset_days: i64, length_days: i64) -> Self {
        let start = origin + offset_days * SECONDS_PER_DAY;
        Window {
            start,
            end: start + length_days * SECONDS_PER_DAY,
        }
    }
}

/// Which month the interaction graph is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkWindow {
    #[default]
    YearMark,
    FirstMonth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeWindows {
    pub year_mark_days: i64,
    pub window_days: i64,
    pub network: NetworkWindow,
}

impl Default for OutcomeWindows {
    fn default() -> Self {
        OutcomeWindows {
            year_mark_days: 365,
            window_days: 30,
            network: NetworkWindow::YearMark,
        }
    }
}

impl OutcomeWindows {
    pub fn year_mark(&self, inception: i64) -> Window {
        Window::after(inception, self.year_mark_days, self.window_days)
    }

    pub fn network(&self, inception: i64) -> Window {
        match self.network {
            NetworkWindow::YearMark => self.year_mark(inception),
            NetworkWindow::FirstMonth => Window::after(inception, 0, self.window_days),
        }
    }
}

/// Time-ordered activity of one community.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub community_id: String,
    pub inception_ts: i64,
    events: Vec<Document>,
}

impl EventLog {
    /// Sorts events by timestamp (then id) and checks they belong here.
    pub fn new(community_id: impl Into<String>, inception_ts: i64, mut events: Vec<Document>) -> Result<Self> {
        let community_id = community_id.into();
        if let Some(stray) = events.iter().find(|e| e.community_id != community_id) {
            return Err(Error::Contract(format!(
                "event {} belongs to {}, not {community_id}",
                stray.id, stray.community_id
            )));
        }
        events.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.id.cmp(&b.id)));
        if let Some(first) = events.first() {
            if first.timestamp < inception_ts {
                return Err(Error::Validation(format!(
                    "community {community_id} has activity at {} before its inception {inception_ts}",
                    first.timestamp
                )));
            }
        }
        Ok(EventLog {
            community_id,
            inception_ts,
            events,
        })
    }

    /// Inception taken as the first event.
    pub fn from_events(community_id: impl Into<String>, events: Vec<Document>) -> Result<Self> {
        let community_id = community_id.into();
        let inception = events
            .iter()
            .map(|e| e.timestamp)
            .min()
            .ok_or_else(|| Error::Degenerate(format!("community {community_id} has no events")))?;
        EventLog::new(community_id, inception, events)
    }

    pub fn events(&self) -> &[Document] {
        &self.events
    }

    pub fn in_window(&self, w: Window) -> impl Iterator<Item = &Document> {
        let lo = self.events.partition_point(|e| e.timestamp < w.start);
        let hi = self.events.partition_point(|e| e.timestamp < w.end);
        self.events[lo..hi].iter()
    }
}

pub fn sustained(log: &EventLog, year_mark: Window) -> bool {
    log.in_window(year_mark).next().is_some()
}

/// Share of founders with at least one post or comment in the window.
pub fn founder_retention(founders: &[String], log: &EventLog, window: Window) -> Result<f64> {
    if founders.is_empty() {
        return Err(Error::Contract("founder retention needs at least one founder".into()));
    }
    let active: BTreeSet<&str> = log.in_window(window).map(|e| e.author_id.as_str()).collect();
    let kept = founders.iter().filter(|f| active.contains(f.as_str())).count();
    Ok(kept as f64 / founders.len() as f64)
}

/// Distinct authors in the window of a sustained community.
pub fn community_size(log: &EventLog, window: Window) -> Result<usize> {
    let authors: BTreeSet<&str> = log.in_window(window).map(|e| e.author_id.as_str()).collect();
    if authors.is_empty() {
        return Err(Error::Contract(format!(
            "community {} has no activity in the window",
            log.community_id
        )));
    }
    Ok(authors.len())
}

/// Posts plus comments per active member in the window.
pub fn engagement(log: &EventLog, window: Window) -> Result<f64> {
    let size = community_size(log, window)?;
    let items = log.in_window(window).count();
    Ok(items as f64 / size as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GraphQuality {
    pub reply_events: usize,
    /// Replies whose parent is not in the community log.
    pub missing_parents: usize,
    /// Replies to someone with no activity in the window.
    pub inactive_parents: usize,
}

/// Reply graph over the users active in `window`: one undirected edge per
/// distinct (comment author, parent author) pair, self-replies ignored.
pub fn build_interaction_graph(log: &EventLog, window: Window) -> (InteractionGraph, GraphQuality) {
    let authors: BTreeMap<&str, &str> = log
        .events()
        .iter()
        .map(|e| (e.id.as_str(), e.author_id.as_str()))
        .collect();
    let mut graph = InteractionGraph::new(log.in_window(window).map(|e| e.author_id.clone()));
    let mut quality = GraphQuality::default();
    for e in log.in_window(window) {
        if e.kind != DocumentKind::Comment {
            continue;
        }
        quality.reply_events += 1;
        let Some(parent) = e.parent_id.as_deref().and_then(|p| authors.get(p)) else {
            quality.missing_parents += 1;
            continue;
        };
        if graph.index_of(parent).is_none() {
            quality.inactive_parents += 1;
            continue;
        }
        graph.add_edge(&e.author_id, parent);
    }
    (graph, quality)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityOutcomes {
    pub community_id: String,
    pub sustained: bool,
    pub founder_retention: Option<f64>,
    pub size: Option<usize>,
    pub engagement: Option<f64>,
    pub avg_degree: Option<f64>,
    pub log_avg_degree: Option<f64>,
    pub diameter: Option<usize>,
    pub n_components: Option<usize>,
    pub degree_centralization: Option<f64>,
    pub closeness_centralization: Option<f64>,
    pub missing_parents: usize,
}

/// All outcomes for one community. Year-window metrics stay absent when the
/// community did not survive.
pub fn compute_outcomes(log: &EventLog, founders: &[String], windows: &OutcomeWindows) -> Result<CommunityOutcomes> {
    let year = windows.year_mark(log.inception_ts);
    let mut out = CommunityOutcomes {
        community_id: log.community_id.clone(),
        sustained: sustained(log, year),
        founder_retention: None,
        size: None,
        engagement: None,
        avg_degree: None,
        log_avg_degree: None,
        diameter: None,
        n_components: None,
        degree_centralization: None,
        closeness_centralization: None,
        missing_parents: 0,
    };
    if !out.sustained {
        return Ok(out);
    }
    out.founder_retention = Some(founder_retention(founders, log, year)?);
    out.size = Some(community_size(log, year)?);
    out.engagement = Some(engagement(log, year)?);

    let (graph, quality) = build_interaction_graph(log, windows.network(log.inception_ts));
    out.missing_parents = quality.missing_parents;
    if let Some(d) = graph.average_degree() {
        out.avg_degree = Some(d.avg);
        out.log_avg_degree = d.log;
        out.diameter = Some(graph.diameter());
        out.n_components = Some(graph.count_components());
        out.degree_centralization = graph.degree_centralization();
        out.closeness_centralization = graph.closeness_centralization();
    }
    Ok(out)
}

pub const OUTCOME_COLUMNS: [&str; 11] = [
    "community_id",
    "sustained",
    "founder_retention",
    "size",
    "engagement",
    "avg_degree",
    "log_avg_degree",
    "diameter",
    "n_components",
    "degree_centralization",
    "closeness_centralization",
];

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_outcomes_csv<W: std::io::Write>(writer: W, rows: &[CommunityOutcomes]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(OUTCOME_COLUMNS)?;
    for o in rows {
        w.write_record([
            o.community_id.clone(),
            u8::from(o.sustained).to_string(),
            cell(o.founder_retention),
            cell(o.size),
            cell(o.engagement),
            cell(o.avg_degree),
            cell(o.log_avg_degree),
            cell(o.diameter),
            cell(o.n_components),
            cell(o.degree_centralization),
            cell(o.closeness_centralization),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<outcomes csv>", e))?;
    Ok(())
}

/// Reads the outcomes CSV back. The data-quality counter is not part of the
/// file and comes back as zero.
pub fn read_outcomes_csv<R: std::io::Read>(reader: R) -> Result<Vec<CommunityOutcomes>> {
    fn opt<T: std::str::FromStr>(s: &str) -> Result<Option<T>> {
        if s.is_empty() {
            return Ok(None);
        }
        s.parse()
            .map(Some)
            .map_err(|_| Error::Validation(format!("bad outcome cell {s:?}")))
    }
    let mut r = csv::Reader::from_reader(reader);
    if r.headers()?.iter().ne(OUTCOME_COLUMNS) {
        return Err(Error::Validation("unexpected outcomes header".into()));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(CommunityOutcomes {
            community_id: rec[0].to_string(),
            sustained: &rec[1] == "1",
            founder_retention: opt(&rec[2])?,
            size: opt(&rec[3])?,
            engagement: opt(&rec[4])?,
            avg_degree: opt(&rec[5])?,
            log_avg_degree: opt(&rec[6])?,
            diameter: opt(&rec[7])?,
            n_components: opt(&rec[8])?,
            degree_centralization: opt(&rec[9])?,
            closeness_centralization: opt(&rec[10])?,
            missing_parents: 0,
        });
    }
    Ok(rows)
}
