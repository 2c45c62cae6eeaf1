//! Event-log parsing, validation, sampling, and registration scoping.
//!
//! Accepts CSV and JSONL logs with one post per record. Rows that fail to
//! parse are collected into an error report instead of being silently
//! dropped; schema-level problems (missing columns, duplicate ids) abort.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SeededRng;

/// One post record from a forum dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEvent {
    pub forum_id: String,
    pub post_id: String,
    pub author_id: String,
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    /// Absent for thread starters.
    pub parent_post_id: Option<String>,
}

/// Input log encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for LogFormat {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(LogFormat::Csv),
            "jsonl" | "ndjson" => Ok(LogFormat::Jsonl),
            other => Err(IngestError::UnknownFormat(other.to_string())),
        }
    }
}

/// Validation strictness for structural problems in the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResolutionPolicy {
    Strict,
    #[default]
    Lenient,
}

impl std::str::FromStr for ResolutionPolicy {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(ResolutionPolicy::Strict),
            "lenient" => Ok(ResolutionPolicy::Lenient),
            other => Err(IngestError::UnknownPolicy(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("unknown log format {0:?} (expected csv or jsonl)")]
    UnknownFormat(String),
    #[error("unknown policy {0:?} (expected strict or lenient)")]
    UnknownPolicy(String),
    #[error("missing required column {0:?} in CSV header")]
    MissingColumn(&'static str),
    #[error("duplicate post id {post_id:?} in forum {forum_id:?}")]
    DuplicatePostId { forum_id: String, post_id: String },
    #[error("post {post_id:?} in forum {forum_id:?} replies to unknown post {parent_post_id:?}")]
    DanglingParent {
        forum_id: String,
        post_id: String,
        parent_post_id: String,
    },
    #[error("post {post_id:?} in forum {forum_id:?} predates its parent {parent_post_id:?}")]
    ParentAfterChild {
        forum_id: String,
        post_id: String,
        parent_post_id: String,
    },
    #[error("sampling fraction must lie in (0, 1], got {0}")]
    FractionOutOfRange(f64),
    #[error("user {user_id:?} registered at {registered} after first post at {first_post}")]
    RegistrationAfterFirstPost {
        user_id: String,
        registered: i64,
        first_post: i64,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// A row that could not be parsed, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseIssue {
    pub line: u64,
    pub message: String,
}

/// Parse outcome: events in file order plus per-row error records.
#[derive(Debug, Default)]
pub struct ParseReport {
    pub events: Vec<RawEvent>,
    pub issues: Vec<ParseIssue>,
}

const CSV_COLUMNS: [&str; 5] = [
    "forum_id",
    "post_id",
    "author_id",
    "timestamp",
    "parent_post_id",
];

/// Parse an event log. Malformed rows become [`ParseIssue`]s; a missing or
/// wrong header aborts with an error.
pub fn parse_event_log<R: BufRead>(reader: R, format: LogFormat) -> Result<ParseReport, IngestError> {
    match format {
        LogFormat::Csv => parse_csv(reader),
        LogFormat::Jsonl => parse_jsonl(reader),
    }
}

fn parse_csv<R: BufRead>(reader: R) -> Result<ParseReport, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(CSV_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or(IngestError::MissingColumn(match name {
                "forum_id" => "forum_id",
                "post_id" => "post_id",
                "author_id" => "author_id",
                "timestamp" => "timestamp",
                _ => "parent_post_id",
            }))?;
    }

    let mut report = ParseReport::default();
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line())
                    .unwrap_or(report.events.len() as u64 + 1);
                report.issues.push(ParseIssue {
                    line,
                    message: format!("malformed csv record: {e}"),
                });
                continue;
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(idx[i]).unwrap_or("").trim();
        let mut missing = None;
        for (i, name) in CSV_COLUMNS.iter().enumerate().take(4) {
            if field(i).is_empty() {
                missing = Some(*name);
                break;
            }
        }
        if let Some(name) = missing {
            report.issues.push(ParseIssue {
                line,
                message: format!("missing field {name}"),
            });
            continue;
        }
        let timestamp = match field(3).parse::<i64>() {
            Ok(t) => t,
            Err(_) => {
                report.issues.push(ParseIssue {
                    line,
                    message: format!("unparseable timestamp {:?}", field(3)),
                });
                continue;
            }
        };
        let parent = field(4);
        report.events.push(RawEvent {
            forum_id: field(0).to_string(),
            post_id: field(1).to_string(),
            author_id: field(2).to_string(),
            timestamp,
            parent_post_id: (!parent.is_empty()).then(|| parent.to_string()),
        });
    }
    Ok(report)
}

#[derive(Deserialize)]
struct JsonRow {
    forum_id: String,
    post_id: String,
    author_id: String,
    timestamp: JsonTimestamp,
    #[serde(default)]
    parent_post_id: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonTimestamp {
    Epoch(i64),
    Rfc3339(String),
}

fn parse_jsonl<R: BufRead>(reader: R) -> Result<ParseReport, IngestError> {
    let mut report = ParseReport::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i as u64 + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let row: JsonRow = match serde_json::from_str(&text) {
            Ok(r) => r,
            Err(e) => {
                report.issues.push(ParseIssue {
                    line: line_no,
                    message: format!("malformed json record: {e}"),
                });
                continue;
            }
        };
        if row.forum_id.is_empty() || row.post_id.is_empty() || row.author_id.is_empty() {
            report.issues.push(ParseIssue {
                line: line_no,
                message: "missing field (forum_id, post_id, and author_id are required)".to_string(),
            });
            continue;
        }
        let timestamp = match row.timestamp {
            JsonTimestamp::Epoch(t) => t,
            JsonTimestamp::Rfc3339(s) => match chrono::DateTime::parse_from_rfc3339(&s) {
                Ok(dt) => dt.timestamp(),
                Err(_) => {
                    report.issues.push(ParseIssue {
                        line: line_no,
                        message: format!("unparseable timestamp {s:?}"),
                    });
                    continue;
                }
            },
        };
        report.events.push(RawEvent {
            forum_id: row.forum_id,
            post_id: row.post_id,
            author_id: row.author_id,
            timestamp,
            parent_post_id: row.parent_post_id.filter(|p| !p.is_empty()),
        });
    }
    Ok(report)
}

/// Serialize events in the documented schema. `parse_event_log` of the output
/// reproduces the input exactly.
pub fn write_event_log<W: Write>(
    writer: W,
    events: &[RawEvent],
    format: LogFormat,
) -> Result<(), IngestError> {
    match format {
        LogFormat::Csv => {
            let mut wtr = csv::Writer::from_writer(writer);
            wtr.write_record(CSV_COLUMNS)?;
            for ev in events {
                wtr.write_record([
                    ev.forum_id.as_str(),
                    ev.post_id.as_str(),
                    ev.author_id.as_str(),
                    &ev.timestamp.to_string(),
                    ev.parent_post_id.as_deref().unwrap_or(""),
                ])?;
            }
            wtr.flush()?;
        }
        LogFormat::Jsonl => {
            let mut writer = writer;
            for ev in events {
                serde_json::to_writer(&mut writer, ev).map_err(std::io::Error::other)?;
                writer.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

/// A forum's events after validation: totally ordered by (timestamp, post_id).
#[derive(Debug, Clone)]
pub struct ValidatedForum {
    pub forum_id: String,
    pub events: Vec<RawEvent>,
    pub warnings: Vec<String>,
}

impl ValidatedForum {
    /// Distinct authors, in sorted order.
    pub fn authors(&self) -> BTreeSet<String> {
        self.events.iter().map(|e| e.author_id.clone()).collect()
    }
}

/// Group events per forum, reject duplicates, resolve reply relations, and
/// sort by (timestamp, post_id).
///
/// Under [`ResolutionPolicy::Lenient`], a dangling or time-inverted parent
/// reference is cleared (the post becomes a thread starter) and a warning is
/// recorded; under [`ResolutionPolicy::Strict`] both are errors.
pub fn resolve_and_validate(
    events: Vec<RawEvent>,
    policy: ResolutionPolicy,
) -> Result<BTreeMap<String, ValidatedForum>, IngestError> {
    let mut by_forum: BTreeMap<String, Vec<RawEvent>> = BTreeMap::new();
    for ev in events {
        by_forum.entry(ev.forum_id.clone()).or_default().push(ev);
    }

    let mut out = BTreeMap::new();
    for (forum_id, mut events) in by_forum {
        let mut times: BTreeMap<&str, i64> = BTreeMap::new();
        for ev in &events {
            if times.insert(ev.post_id.as_str(), ev.timestamp).is_some() {
                return Err(IngestError::DuplicatePostId {
                    forum_id,
                    post_id: ev.post_id.clone(),
                });
            }
        }
        let times: BTreeMap<String, i64> =
            times.into_iter().map(|(k, v)| (k.to_string(), v)).collect();

        let mut warnings = Vec::new();
        for ev in &mut events {
            let Some(parent) = ev.parent_post_id.clone() else {
                continue;
            };
            match times.get(&parent) {
                None => match policy {
                    ResolutionPolicy::Strict => {
                        return Err(IngestError::DanglingParent {
                            forum_id,
                            post_id: ev.post_id.clone(),
                            parent_post_id: parent,
                        })
                    }
                    ResolutionPolicy::Lenient => {
                        warnings.push(format!(
                            "post {:?} replies to unknown post {:?}; treated as thread starter",
                            ev.post_id, parent
                        ));
                        ev.parent_post_id = None;
                    }
                },
                Some(&parent_ts) if parent_ts > ev.timestamp => match policy {
                    ResolutionPolicy::Strict => {
                        return Err(IngestError::ParentAfterChild {
                            forum_id,
                            post_id: ev.post_id.clone(),
                            parent_post_id: parent,
                        })
                    }
                    ResolutionPolicy::Lenient => {
                        warnings.push(format!(
                            "post {:?} predates its parent {:?}; treated as thread starter",
                            ev.post_id, parent
                        ));
                        ev.parent_post_id = None;
                    }
                },
                Some(_) => {}
            }
        }

        events.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| a.post_id.cmp(&b.post_id))
        });
        out.insert(
            forum_id.clone(),
            ValidatedForum {
                forum_id,
                events,
                warnings,
            },
        );
    }
    Ok(out)
}

/// Uniform sample without replacement of `round(fraction * |users|)` users
/// (half-up). Deterministic for a fixed seed; `fraction = 1.0` is identity.
pub fn sample_users(
    users: &BTreeSet<String>,
    fraction: f64,
    seeds: &SeededRng,
) -> Result<BTreeSet<String>, IngestError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(IngestError::FractionOutOfRange(fraction));
    }
    let mut pool: Vec<&String> = users.iter().collect();
    let n = pool.len();
    let k = ((fraction * n as f64) + 0.5).floor() as usize;
    let k = k.min(n);

    let mut rng = seeds.child("sample_users").rng();
    // Partial Fisher-Yates over the sorted pool: the first k slots are the sample.
    for i in 0..k {
        let j = i + rand::Rng::gen_range(&mut rng, 0..n - i);
        pool.swap(i, j);
    }
    Ok(pool[..k].iter().map(|s| (*s).to_string()).collect())
}

/// Per-user registration times: `user_id -> seconds since epoch`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegistrationTable(pub BTreeMap<String, i64>);

impl RegistrationTable {
    /// Read the `user_id,registration_timestamp` CSV schema.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, IngestError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let user_col = headers
            .iter()
            .position(|h| h == "user_id")
            .ok_or(IngestError::MissingColumn("user_id"))?;
        let ts_col = headers
            .iter()
            .position(|h| h == "registration_timestamp")
            .ok_or(IngestError::MissingColumn("registration_timestamp"))?;
        let mut map = BTreeMap::new();
        for record in rdr.records() {
            let record = record?;
            let user = record.get(user_col).unwrap_or("").trim().to_string();
            let ts = record
                .get(ts_col)
                .unwrap_or("")
                .trim()
                .parse::<i64>()
                .map_err(|_| IngestError::MissingColumn("registration_timestamp"))?;
            map.insert(user, ts);
        }
        Ok(Self(map))
    }
}

/// Registration scoping result: per-user start time and the retained set.
#[derive(Debug, Clone, Default)]
pub struct RegistrationScope {
    pub t0: BTreeMap<String, i64>,
    pub retained: BTreeSet<String>,
    pub warnings: Vec<String>,
}

/// Resolve each author's registration time (table entry, else first post) and
/// retain users whose registration falls inside `window`.
pub fn scope_registration(
    forum: &ValidatedForum,
    registrations: Option<&RegistrationTable>,
    window: Option<(i64, i64)>,
    policy: ResolutionPolicy,
) -> Result<RegistrationScope, IngestError> {
    let mut first_post: BTreeMap<&str, i64> = BTreeMap::new();
    for ev in &forum.events {
        first_post.entry(ev.author_id.as_str()).or_insert(ev.timestamp);
    }

    let mut scope = RegistrationScope::default();
    for (user, &first) in &first_post {
        let mut t0 = first;
        if let Some(regs) = registrations {
            if let Some(&reg) = regs.0.get(*user) {
                if reg > first {
                    match policy {
                        ResolutionPolicy::Strict => {
                            return Err(IngestError::RegistrationAfterFirstPost {
                                user_id: user.to_string(),
                                registered: reg,
                                first_post: first,
                            })
                        }
                        ResolutionPolicy::Lenient => {
                            scope.warnings.push(format!(
                                "user {user:?} registered at {reg} after first post at {first}; clamped"
                            ));
                            t0 = first;
                        }
                    }
                } else {
                    t0 = reg;
                }
            }
        }
        if let Some((a, b)) = window {
            if t0 < a || t0 > b {
                continue;
            }
        }
        scope.t0.insert(user.to_string(), t0);
        scope.retained.insert(user.to_string());
    }
    Ok(scope)
}
