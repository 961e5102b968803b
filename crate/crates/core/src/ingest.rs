//! Parsing of JSON Lines interaction logs and ego activity filtering.
//!
//! The wire format is one JSON object per line. Interaction records carry
//! `ego_id`, `alter_id`, `kind`, `ts` and optionally `text` and `label`;
//! per-ego sidecar objects `{ego_id, total_tweets}` report the full
//! timeline size including non-interaction tweets.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use chrono::{DateTime, Datelike, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sentiment::Polarity;

/// Fraction of malformed lines above which parsing aborts.
pub const MALFORMED_ABORT_FRACTION: f64 = 0.10;

/// Mean length of a calendar month in seconds (365.25 / 12 days), used for
/// the timeline span rule.
pub const SECONDS_PER_MONTH: f64 = 365.25 / 12.0 * 86_400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "reply")]
    Reply,
    #[serde(rename = "mention")]
    Mention,
    #[serde(rename = "quote")]
    QuoteRetweet,
    #[serde(rename = "retweet")]
    Retweet,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Reply => "reply",
            Kind::Mention => "mention",
            Kind::QuoteRetweet => "quote",
            Kind::Retweet => "retweet",
        }
    }
}

/// One directed communication event from an ego towards an alter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub ego_id: String,
    pub alter_id: String,
    pub kind: Kind,
    pub ts: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<Polarity>,
}

/// An ego's interaction records plus the count of non-interaction tweets
/// reported by the sidecar objects. Records are kept sorted by timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    pub ego_id: String,
    pub records: Vec<InteractionRecord>,
    pub non_interaction_tweets: u64,
}

impl Timeline {
    pub fn first_ts(&self) -> Option<i64> {
        self.records.first().map(|r| r.ts)
    }

    pub fn last_ts(&self) -> Option<i64> {
        self.records.last().map(|r| r.ts)
    }

    pub fn total_tweets(&self) -> u64 {
        self.records.len() as u64 + self.non_interaction_tweets
    }

    /// Timeline span in seconds; 0 for fewer than two records.
    pub fn span_seconds(&self) -> i64 {
        match (self.first_ts(), self.last_ts()) {
            (Some(a), Some(b)) => b - a,
            _ => 0,
        }
    }

    /// Interaction counts per UTC calendar month, keyed by (year, month).
    pub fn monthly_counts(&self) -> BTreeMap<(i32, u32), u64> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            let dt = DateTime::<Utc>::from_timestamp(r.ts, 0).expect("validated timestamp");
            *counts.entry((dt.year(), dt.month())).or_insert(0) += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseErrorKind {
    UnknownKind,
    MissingField,
    InvalidValue,
    BadJson,
}

/// A rejected input line with the 1-based line number and the reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub kind: ParseErrorKind,
    pub detail: String,
}

/// Parse result: grouped timelines plus counted diagnostics. Malformed
/// lines are never silently dropped.
#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub timelines: Vec<Timeline>,
    pub lines_read: usize,
    pub malformed: Vec<ParseDiagnostic>,
    /// Egos whose records arrived out of timestamp order (sorted anyway).
    pub non_monotonic_egos: Vec<String>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{malformed} of {total} lines malformed (> {:.0}% threshold)", MALFORMED_ABORT_FRACTION * 100.0)]
    TooManyMalformed { malformed: usize, total: usize },
}

#[derive(Deserialize)]
struct Sidecar {
    ego_id: String,
    total_tweets: u64,
}

/// Parse a JSON Lines interaction log.
///
/// Timelines come back grouped by ego and sorted by timestamp, with egos
/// in lexicographic order. Parsing aborts only when more than 10% of the
/// lines are malformed.
pub fn parse_interactions<R: BufRead>(reader: R) -> Result<ParseOutcome, IngestError> {
    let mut records: BTreeMap<String, Vec<InteractionRecord>> = BTreeMap::new();
    let mut sidecar_totals: BTreeMap<String, u64> = BTreeMap::new();
    let mut malformed = Vec::new();
    let mut lines_read = 0usize;

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        lines_read += 1;
        let value: serde_json::Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(e) => {
                malformed.push(ParseDiagnostic {
                    line: idx + 1,
                    kind: ParseErrorKind::BadJson,
                    detail: e.to_string(),
                });
                continue;
            }
        };
        if value.get("total_tweets").is_some() {
            match serde_json::from_value::<Sidecar>(value) {
                Ok(s) => {
                    *sidecar_totals.entry(s.ego_id).or_insert(0) += s.total_tweets;
                }
                Err(e) => malformed.push(ParseDiagnostic {
                    line: idx + 1,
                    kind: ParseErrorKind::MissingField,
                    detail: e.to_string(),
                }),
            }
            continue;
        }
        match parse_record(value) {
            Ok(record) => records.entry(record.ego_id.clone()).or_default().push(record),
            Err((kind, detail)) => malformed.push(ParseDiagnostic {
                line: idx + 1,
                kind,
                detail,
            }),
        }
    }

    if lines_read > 0 && malformed.len() as f64 > MALFORMED_ABORT_FRACTION * lines_read as f64 {
        return Err(IngestError::TooManyMalformed {
            malformed: malformed.len(),
            total: lines_read,
        });
    }

    let mut non_monotonic_egos = Vec::new();
    let mut timelines = Vec::new();
    for (ego_id, mut recs) in records {
        if recs.windows(2).any(|w| w[1].ts < w[0].ts) {
            non_monotonic_egos.push(ego_id.clone());
        }
        recs.sort_by_key(|r| r.ts);
        let interactions = recs.len() as u64;
        let total = sidecar_totals.remove(&ego_id).unwrap_or(interactions);
        timelines.push(Timeline {
            ego_id,
            records: recs,
            non_interaction_tweets: total.saturating_sub(interactions),
        });
    }
    // Sidecars for egos with no interaction records still yield (empty)
    // timelines so the filter stage can reject them explicitly.
    for (ego_id, total) in sidecar_totals {
        timelines.push(Timeline {
            ego_id,
            records: Vec::new(),
            non_interaction_tweets: total,
        });
    }
    timelines.sort_by(|a, b| a.ego_id.cmp(&b.ego_id));

    Ok(ParseOutcome {
        timelines,
        lines_read,
        malformed,
        non_monotonic_egos,
    })
}

fn parse_record(value: serde_json::Value) -> Result<InteractionRecord, (ParseErrorKind, String)> {
    if let Some(kind) = value.get("kind").and_then(|k| k.as_str()) {
        if !matches!(kind, "reply" | "mention" | "quote" | "retweet") {
            return Err((ParseErrorKind::UnknownKind, format!("unknown kind {kind:?}")));
        }
    }
    let record: InteractionRecord = serde_json::from_value(value).map_err(|e| {
        let msg = e.to_string();
        if msg.contains("missing field") {
            (ParseErrorKind::MissingField, msg)
        } else if msg.contains("unknown variant") {
            (ParseErrorKind::UnknownKind, msg)
        } else {
            (ParseErrorKind::InvalidValue, msg)
        }
    })?;
    if record.ego_id == record.alter_id {
        return Err((
            ParseErrorKind::InvalidValue,
            format!("self-interaction for ego {:?}", record.ego_id),
        ));
    }
    if record.ts < 0 {
        return Err((
            ParseErrorKind::InvalidValue,
            format!("negative timestamp {}", record.ts),
        ));
    }
    if record.kind != Kind::Retweet && record.text.is_none() && record.label.is_none() {
        return Err((
            ParseErrorKind::MissingField,
            format!("{} record needs text or label", record.kind.as_str()),
        ));
    }
    Ok(record)
}

/// Serialise timelines back to the JSON Lines wire format. Parsing the
/// output reproduces the same timeline set.
pub fn write_timelines<W: Write>(timelines: &[Timeline], mut out: W) -> std::io::Result<()> {
    for tl in timelines {
        for r in &tl.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        writeln!(
            out,
            "{}",
            serde_json::json!({ "ego_id": tl.ego_id, "total_tweets": tl.total_tweets() })
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterReason {
    TooFewTweets,
    SpanTooShort,
    Irregular,
}

impl FilterReason {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterReason::TooFewTweets => "TooFewTweets",
            FilterReason::SpanTooShort => "SpanTooShort",
            FilterReason::Irregular => "Irregular",
        }
    }
}

/// Per-ego filter decision; `kept` holds exactly when `reasons` is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub ego_id: String,
    pub kept: bool,
    pub reasons: Vec<FilterReason>,
}

/// Ego activity rules: minimum total tweets, minimum timeline span and the
/// once-every-3-days regularity requirement.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FilterRules {
    pub min_tweets: u64,
    pub min_span_months: u32,
    /// A month counts as regular when its tweet count reaches
    /// ceil(days_in_month / regularity_interval_days).
    pub regularity_interval_days: u32,
    /// Fraction of active months that must be regular (strict inequality).
    pub regularity_month_fraction: f64,
}

impl Default for FilterRules {
    fn default() -> Self {
        FilterRules {
            min_tweets: 2000,
            min_span_months: 6,
            regularity_interval_days: 3,
            regularity_month_fraction: 0.5,
        }
    }
}

/// Evaluate every rule independently for each ego; all violated rules are
/// listed. A deterministic pure function of its inputs.
pub fn filter_egos(timelines: &[Timeline], rules: &FilterRules) -> Vec<FilterVerdict> {
    timelines.iter().map(|tl| filter_ego(tl, rules)).collect()
}

fn filter_ego(tl: &Timeline, rules: &FilterRules) -> FilterVerdict {
    let mut reasons = Vec::new();
    if tl.total_tweets() < rules.min_tweets {
        reasons.push(FilterReason::TooFewTweets);
    }
    if (tl.span_seconds() as f64) < rules.min_span_months as f64 * SECONDS_PER_MONTH {
        reasons.push(FilterReason::SpanTooShort);
    }
    if !is_regular(tl, rules) {
        reasons.push(FilterReason::Irregular);
    }
    FilterVerdict {
        ego_id: tl.ego_id.clone(),
        kept: reasons.is_empty(),
        reasons,
    }
}

/// Regularity: over all UTC calendar months between the first and last
/// tweet inclusive, strictly more than `regularity_month_fraction` of them
/// must contain at least ceil(days_in_month / interval) tweets.
fn is_regular(tl: &Timeline, rules: &FilterRules) -> bool {
    let (Some(first), Some(last)) = (tl.first_ts(), tl.last_ts()) else {
        return false;
    };
    let counts = tl.monthly_counts();
    let first_dt = DateTime::<Utc>::from_timestamp(first, 0).expect("validated timestamp");
    let last_dt = DateTime::<Utc>::from_timestamp(last, 0).expect("validated timestamp");
    let months = month_range((first_dt.year(), first_dt.month()), (last_dt.year(), last_dt.month()));
    let active = months.len() as u64;
    let regular = months
        .iter()
        .filter(|&&(y, m)| {
            let required = days_in_month(y, m).div_ceil(rules.regularity_interval_days as u64);
            counts.get(&(y, m)).copied().unwrap_or(0) >= required
        })
        .count() as u64;
    (regular as f64) > rules.regularity_month_fraction * active as f64
}

fn month_range(from: (i32, u32), to: (i32, u32)) -> Vec<(i32, u32)> {
    let mut months = Vec::new();
    let (mut y, mut m) = from;
    loop {
        months.push((y, m));
        if (y, m) == to {
            break;
        }
        m += 1;
        if m > 12 {
            m = 1;
            y += 1;
        }
    }
    months
}

fn days_in_month(year: i32, month: u32) -> u64 {
    let first = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month");
    let next = if month == 12 {
        NaiveDate::from_ymd_opt(year + 1, 1, 1)
    } else {
        NaiveDate::from_ymd_opt(year, month + 1, 1)
    }
    .expect("valid month");
    (next - first).num_days() as u64
}

/// Write verdicts as CSV: `ego_id,kept,reasons` with reasons joined by `;`.
pub fn write_verdicts_csv<W: Write>(verdicts: &[FilterVerdict], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ego_id", "kept", "reasons"])?;
    for v in verdicts {
        let reasons: Vec<&str> = v.reasons.iter().map(|r| r.as_str()).collect();
        w.write_record([v.ego_id.as_str(), if v.kept { "true" } else { "false" }, &reasons.join(";")])?;
    }
    w.flush()?;
    Ok(())
}
