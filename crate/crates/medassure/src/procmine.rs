//! Event logs and directly-follows-graph discovery.
//!
//! A trace is one case's events sorted by timestamp (ties keep input
//! order). Discovery tallies, per trace, the executions of each activity,
//! every consecutive activity pair, and which activities open and close the
//! trace. Events without a timestamp are excluded at load time and counted,
//! since no order can be assigned to them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use chrono::{DateTime, FixedOffset};

use crate::error::{Error, Result};

/// One event-log row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub case_id: String,
    pub activity: String,
    pub timestamp: DateTime<FixedOffset>,
    /// Position in the input file; breaks timestamp ties stably.
    pub tie_index: usize,
}

/// One case's events in execution order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub case_id: String,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn activities(&self) -> impl Iterator<Item = &str> {
        self.events.iter().map(|e| e.activity.as_str())
    }
}

/// Result of loading an event log: traces, plus the number of rows that
/// were dropped for having an empty timestamp.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLog {
    pub traces: Vec<Trace>,
    pub skipped_untimestamped: usize,
}

/// Reads `case_id,activity,timestamp` rows (RFC 3339 timestamps). Events
/// are grouped by case and sorted by `(timestamp, tie_index)`; traces are
/// ordered by first-event time, then case id. A present but malformed
/// timestamp is a row error; an empty one skips the row with a count.
pub fn load_event_log(path: &Path) -> Result<EventLog> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::file(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::file(path, e.to_string()))?
        .clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::file(path, format!("missing column '{name}'")))
    };
    let case_col = column("case_id")?;
    let activity_col = column("activity")?;
    let time_col = column("timestamp")?;

    let mut events: Vec<Event> = Vec::new();
    let mut skipped = 0usize;
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 2;
        let row = row.map_err(|e| Error::file(path, e.to_string()))?;
        let raw_time = row
            .get(time_col)
            .ok_or_else(|| Error::row(path, row_no, "short row"))?;
        if raw_time.is_empty() {
            skipped += 1;
            continue;
        }
        let timestamp = DateTime::parse_from_rfc3339(raw_time)
            .map_err(|e| Error::row(path, row_no, format!("bad timestamp '{raw_time}': {e}")))?;
        let activity = row
            .get(activity_col)
            .ok_or_else(|| Error::row(path, row_no, "short row"))?;
        if activity.is_empty() {
            return Err(Error::row(path, row_no, "empty activity"));
        }
        events.push(Event {
            case_id: row
                .get(case_col)
                .ok_or_else(|| Error::row(path, row_no, "short row"))?
                .to_string(),
            activity: activity.to_string(),
            timestamp,
            tie_index: i,
        });
    }

    let mut by_case: BTreeMap<String, Vec<Event>> = BTreeMap::new();
    for event in events {
        by_case.entry(event.case_id.clone()).or_default().push(event);
    }
    let mut traces: Vec<Trace> = by_case
        .into_iter()
        .map(|(case_id, mut events)| {
            events.sort_by_key(|e| (e.timestamp, e.tie_index));
            Trace { case_id, events }
        })
        .collect();
    traces.sort_by(|a, b| {
        (a.events[0].timestamp, a.case_id.as_str()).cmp(&(b.events[0].timestamp, b.case_id.as_str()))
    });
    Ok(EventLog {
        traces,
        skipped_untimestamped: skipped,
    })
}

/// Trace filters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogFilter {
    ContainsActivity(String),
    ExcludesActivity(String),
    CaseIdSet(BTreeSet<String>),
}

impl LogFilter {
    /// Parses `contains=X`, `excludes=X` or `cases=a;b;c`.
    pub fn parse(text: &str) -> Result<LogFilter> {
        let (kind, value) = text
            .split_once('=')
            .ok_or_else(|| Error::Query(format!("bad filter '{text}', expected kind=value")))?;
        match kind {
            "contains" => Ok(LogFilter::ContainsActivity(value.to_string())),
            "excludes" => Ok(LogFilter::ExcludesActivity(value.to_string())),
            "cases" => Ok(LogFilter::CaseIdSet(
                value.split(';').map(str::to_string).collect(),
            )),
            other => Err(Error::Query(format!("unknown filter kind '{other}'"))),
        }
    }

    fn keeps(&self, trace: &Trace) -> bool {
        match self {
            LogFilter::ContainsActivity(activity) => trace.activities().any(|a| a == activity),
            LogFilter::ExcludesActivity(activity) => trace.activities().all(|a| a != activity),
            LogFilter::CaseIdSet(cases) => cases.contains(&trace.case_id),
        }
    }
}

/// Keeps the traces satisfying the predicate, preserving order.
pub fn filter_log(traces: &[Trace], filter: &LogFilter) -> Vec<Trace> {
    traces.iter().filter(|t| filter.keeps(t)).cloned().collect()
}

/// Directly-follows graph counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DfgModel {
    pub activity_counts: BTreeMap<String, u64>,
    pub arc_counts: BTreeMap<(String, String), u64>,
    pub start_counts: BTreeMap<String, u64>,
    pub end_counts: BTreeMap<String, u64>,
}

impl DfgModel {
    pub fn arc_count(&self, from: &str, to: &str) -> u64 {
        self.arc_counts
            .get(&(from.to_string(), to.to_string()))
            .copied()
            .unwrap_or(0)
    }
}

/// Tallies activities, consecutive pairs and trace endpoints.
pub fn discover_dfg(traces: &[Trace]) -> Result<DfgModel> {
    if traces.is_empty() {
        return Err(Error::Input("discovery needs a non-empty event log".into()));
    }
    let mut model = DfgModel::default();
    for trace in traces {
        let activities: Vec<&str> = trace.activities().collect();
        for activity in &activities {
            *model.activity_counts.entry(activity.to_string()).or_insert(0) += 1;
        }
        *model
            .start_counts
            .entry(activities[0].to_string())
            .or_insert(0) += 1;
        *model
            .end_counts
            .entry(activities[activities.len() - 1].to_string())
            .or_insert(0) += 1;
        for pair in activities.windows(2) {
            *model
                .arc_counts
                .entry((pair[0].to_string(), pair[1].to_string()))
                .or_insert(0) += 1;
        }
    }
    Ok(model)
}

/// DOT rendering with distinguished start/end pseudo-nodes. Activities are
/// labelled with their execution counts; arcs below `min_arc_count` are
/// omitted. Node and edge lines are emitted in lexicographic order.
pub fn dfg_to_dot(model: &DfgModel, min_arc_count: u64) -> String {
    let mut out = String::from("digraph dfg {\n");
    out.push_str("  __start [shape=triangle, label=\"start\"];\n");
    out.push_str("  __end [shape=square, label=\"end\"];\n");
    for (activity, count) in &model.activity_counts {
        let _ = writeln!(out, "  \"{activity}\" [label=\"{activity} ({count})\"];");
    }
    for (activity, count) in &model.start_counts {
        let _ = writeln!(out, "  __start -> \"{activity}\" [label=\"{count}\"];");
    }
    for ((from, to), count) in &model.arc_counts {
        if *count >= min_arc_count {
            let _ = writeln!(out, "  \"{from}\" -> \"{to}\" [label=\"{count}\"];");
        }
    }
    for (activity, count) in &model.end_counts {
        let _ = writeln!(out, "  \"{activity}\" -> __end [label=\"{count}\"];");
    }
    out.push_str("}\n");
    out
}
