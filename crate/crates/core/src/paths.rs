//! User paths and timing vectors: the decoupled per-user history.
//!
//! A user's events are an ordered mix of own posts (`p`) and replies received
//! (`r`). The symbol sequence becomes a lattice walk from (0,0) — right on a
//! post, up on a reply — while the timestamps go into a separate timing
//! vector. Together the two parts reconstruct the history exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::RawEvent;
use crate::num::Real;
use crate::stats;

/// A single step type in a user's history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Post,
    Reply,
}

impl EventKind {
    pub fn as_char(self) -> char {
        match self {
            EventKind::Post => 'p',
            EventKind::Reply => 'r',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'p' => Some(EventKind::Post),
            'r' => Some(EventKind::Reply),
            _ => None,
        }
    }
}

/// One attributed event: a post made by the user, or a reply they received.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserEvent {
    pub kind: EventKind,
    pub time: i64,
    /// Id of the post that generated the event (the user's own post, or the
    /// other author's replying post). Its author differs from the event owner
    /// exactly when `kind` is `Reply`.
    pub source_post_id: String,
}

/// A lattice point (cumulative posts, cumulative replies).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PathPoint {
    pub x: u32,
    pub y: u32,
}

impl PathPoint {
    pub fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }
}

/// A user's symbol sequence with its materialized lattice points.
///
/// Nonempty paths always start with `p`: there cannot be replies before the
/// first post. Points include the origin, so there are `L + 1` of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserPath {
    pub user_id: String,
    pub symbols: Vec<EventKind>,
    pub points: Vec<PathPoint>,
}

impl UserPath {
    pub fn from_symbols(user_id: impl Into<String>, symbols: Vec<EventKind>) -> Self {
        let mut points = Vec::with_capacity(symbols.len() + 1);
        let (mut x, mut y) = (0u32, 0u32);
        points.push(PathPoint::new(x, y));
        for s in &symbols {
            match s {
                EventKind::Post => x += 1,
                EventKind::Reply => y += 1,
            }
            points.push(PathPoint::new(x, y));
        }
        Self {
            user_id: user_id.into(),
            symbols,
            points,
        }
    }

    /// Path length L: the number of events.
    pub fn length(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Number of posts (final x-coordinate).
    pub fn posts(&self) -> u32 {
        self.points.last().map(|p| p.x).unwrap_or(0)
    }

    /// Number of replies received (final y-coordinate).
    pub fn replies(&self) -> u32 {
        self.points.last().map(|p| p.y).unwrap_or(0)
    }

    pub fn symbol_string(&self) -> String {
        self.symbols.iter().map(|s| s.as_char()).collect()
    }

    pub fn parse_symbols(s: &str) -> Result<Vec<EventKind>, PathError> {
        s.chars()
            .map(|c| EventKind::from_char(c).ok_or(PathError::BadSymbol(c)))
            .collect()
    }
}

/// Registration time plus the ordered event times, aligned 1:1 with symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimingVector {
    pub t0: i64,
    pub event_times: Vec<i64>,
}

/// Lengths of the maximal post runs of a path (blocks of consecutive `p`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostRuns {
    pub lengths: Vec<u32>,
}

impl PostRuns {
    pub fn total_posts(&self) -> u32 {
        self.lengths.iter().sum()
    }
}

/// One user's decoupled history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserHistory {
    pub path: UserPath,
    pub timing: TimingVector,
}

impl UserHistory {
    /// The (kind, time) sequence the decoupling was built from.
    pub fn events(&self) -> impl Iterator<Item = (EventKind, i64)> + '_ {
        self.path
            .symbols
            .iter()
            .copied()
            .zip(self.timing.event_times.iter().copied())
    }

    /// Seconds between the user's first and last posts; `None` without posts.
    pub fn up_time(&self) -> Option<i64> {
        let mut post_times = self
            .events()
            .filter(|(k, _)| *k == EventKind::Post)
            .map(|(_, t)| t);
        let first = post_times.next()?;
        Some(post_times.last().unwrap_or(first) - first)
    }
}

/// A forum's set of decoupled user histories; the unit of analysis.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ForumArchive {
    pub forum_id: String,
    pub users: BTreeMap<String, UserHistory>,
}

impl ForumArchive {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn total_posts(&self) -> u64 {
        self.users.values().map(|h| u64::from(h.path.posts())).sum()
    }

    pub fn total_replies(&self) -> u64 {
        self.users.values().map(|h| u64::from(h.path.replies())).sum()
    }
}

#[derive(Debug, Error)]
pub enum PathError {
    #[error("first event for user {user_id:?} is a reply; replies cannot precede the first post")]
    FirstEventIsReply { user_id: String },
    #[error("correlation undefined for user {user_id:?}: {source}")]
    UndefinedCorrelation {
        user_id: String,
        source: stats::StatsError,
    },
    #[error("symbol {0:?} is not one of 'p', 'r'")]
    BadSymbol(char),
    #[error("malformed archive record at line {line}: {reason}")]
    MalformedArchive { line: usize, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Attribute validated events to users as ordered [`UserEvent`] sequences.
///
/// A post by `u` yields a `Post` for `u`. A post by `v` whose parent was
/// authored by `u != v` yields a `Reply` for `u` at `v`'s timestamp; a
/// self-reply counts only as a post. Replies to authors outside `users` are
/// not attributed. Within one user and equal timestamps, the user's own post
/// precedes replies they receive.
pub fn derive_user_events(
    events: &[RawEvent],
    users: &BTreeSet<String>,
) -> BTreeMap<String, Vec<UserEvent>> {
    let mut authors: BTreeMap<&str, &str> = BTreeMap::new();
    for ev in events {
        authors.insert(ev.post_id.as_str(), ev.author_id.as_str());
    }

    let mut out: BTreeMap<String, Vec<(i64, EventKind, &str)>> = BTreeMap::new();
    for ev in events {
        if users.contains(ev.author_id.as_str()) {
            out.entry(ev.author_id.clone()).or_default().push((
                ev.timestamp,
                EventKind::Post,
                ev.post_id.as_str(),
            ));
        }
        if let Some(parent) = &ev.parent_post_id {
            if let Some(&parent_author) = authors.get(parent.as_str()) {
                if parent_author != ev.author_id && users.contains(parent_author) {
                    out.entry(parent_author.to_string()).or_default().push((
                        ev.timestamp,
                        EventKind::Reply,
                        ev.post_id.as_str(),
                    ));
                }
            }
        }
    }

    out.into_iter()
        .map(|(user, mut evs)| {
            // Posts sort before replies at the same second: a reply's parent
            // exists no later than the reply itself.
            evs.sort_by(|a, b| {
                a.0.cmp(&b.0)
                    .then_with(|| {
                        let rank = |k: EventKind| match k {
                            EventKind::Post => 0u8,
                            EventKind::Reply => 1,
                        };
                        rank(a.1).cmp(&rank(b.1))
                    })
                    .then_with(|| a.2.cmp(b.2))
            });
            let evs = evs
                .into_iter()
                .map(|(time, kind, source)| UserEvent {
                    kind,
                    time,
                    source_post_id: source.to_string(),
                })
                .collect();
            (user, evs)
        })
        .collect()
}

/// Decouple one user's ordered events into a path and a timing vector.
pub fn build_user_path(
    user_id: &str,
    events: &[UserEvent],
    t0: i64,
) -> Result<UserHistory, PathError> {
    if let Some(first) = events.first() {
        if first.kind == EventKind::Reply {
            return Err(PathError::FirstEventIsReply {
                user_id: user_id.to_string(),
            });
        }
    }
    let symbols: Vec<EventKind> = events.iter().map(|e| e.kind).collect();
    let event_times: Vec<i64> = events.iter().map(|e| e.time).collect();
    Ok(UserHistory {
        path: UserPath::from_symbols(user_id, symbols),
        timing: TimingVector { t0, event_times },
    })
}

/// Build the archive for a forum from validated events, a retained user set,
/// and per-user registration times (first event time when absent).
pub fn build_archive(
    forum_id: &str,
    events: &[RawEvent],
    users: &BTreeSet<String>,
    t0: &BTreeMap<String, i64>,
) -> Result<ForumArchive, PathError> {
    let per_user = derive_user_events(events, users);
    let mut archive = ForumArchive {
        forum_id: forum_id.to_string(),
        users: BTreeMap::new(),
    };
    for (user, evs) in per_user {
        let start = t0
            .get(&user)
            .copied()
            .or_else(|| evs.first().map(|e| e.time))
            .unwrap_or(0);
        let history = build_user_path(&user, &evs, start)?;
        archive.users.insert(user, history);
    }
    Ok(archive)
}

/// Run lengths of maximal `p` blocks, i.e. the post runs of the extended
/// string `r·symbols·r`.
pub fn post_runs(path: &UserPath) -> PostRuns {
    let mut lengths = Vec::new();
    let mut current = 0u32;
    for s in &path.symbols {
        match s {
            EventKind::Post => current += 1,
            EventKind::Reply => {
                if current > 0 {
                    lengths.push(current);
                    current = 0;
                }
            }
        }
    }
    if current > 0 {
        lengths.push(current);
    }
    PostRuns { lengths }
}

/// Pearson correlation between the x and y coordinates of all path points,
/// origin included.
pub fn path_pearson<F: Real>(path: &UserPath) -> Result<F, PathError> {
    let xs: Vec<F> = path.points.iter().map(|p| F::of_usize(p.x as usize)).collect();
    let ys: Vec<F> = path.points.iter().map(|p| F::of_usize(p.y as usize)).collect();
    stats::pearson(&xs, &ys).map_err(|source| PathError::UndefinedCorrelation {
        user_id: path.user_id.clone(),
        source,
    })
}

/// Reply-graph degrees of one user. Each reply is one unit (multi-edges
/// counted).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DegreeStats {
    pub incoming: u32,
    pub outgoing: u32,
}

impl DegreeStats {
    pub fn total(&self) -> u32 {
        self.incoming + self.outgoing
    }
}

/// Directed reply graph over all authors: an edge v -> u for each reply by v
/// to a post authored by u != v.
pub fn build_reply_graph(events: &[RawEvent]) -> BTreeMap<String, DegreeStats> {
    let mut authors: BTreeMap<&str, &str> = BTreeMap::new();
    let mut degrees: BTreeMap<String, DegreeStats> = BTreeMap::new();
    for ev in events {
        authors.insert(ev.post_id.as_str(), ev.author_id.as_str());
        degrees.entry(ev.author_id.clone()).or_default();
    }
    for ev in events {
        let Some(parent) = &ev.parent_post_id else {
            continue;
        };
        let Some(&parent_author) = authors.get(parent.as_str()) else {
            continue;
        };
        if parent_author == ev.author_id {
            continue;
        }
        degrees.entry(ev.author_id.clone()).or_default().outgoing += 1;
        degrees.entry(parent_author.to_string()).or_default().incoming += 1;
    }
    degrees
}

/// Seconds between the first and last posts in an event sequence; replies are
/// ignored. `None` when the user made no posts.
pub fn user_up_time(events: &[UserEvent]) -> Option<i64> {
    let mut post_times = events
        .iter()
        .filter(|e| e.kind == EventKind::Post)
        .map(|e| e.time);
    let first = post_times.next()?;
    Some(post_times.last().unwrap_or(first) - first)
}

/// Spearman correlations between path lengths and reply-graph degree /
/// up-time. Data-dependent; reported, never asserted.
#[derive(Debug, Clone, Serialize)]
pub struct EngagementCorrelations<F> {
    pub users: usize,
    pub degree_spearman: Option<F>,
    pub uptime_spearman: Option<F>,
}

pub fn engagement_correlations<F: Real>(
    archive: &ForumArchive,
    graph: &BTreeMap<String, DegreeStats>,
) -> EngagementCorrelations<F> {
    let lengths: Vec<F> = archive
        .users
        .values()
        .map(|h| F::of_usize(h.path.length()))
        .collect();
    let degrees: Vec<F> = archive
        .users
        .keys()
        .map(|u| F::of_usize(graph.get(u).map(|d| d.total() as usize).unwrap_or(0)))
        .collect();
    let uptimes: Vec<F> = archive
        .users
        .values()
        .map(|h| F::of_f64(h.up_time().unwrap_or(0) as f64))
        .collect();
    EngagementCorrelations {
        users: archive.len(),
        degree_spearman: stats::spearman(&lengths, &degrees).ok(),
        uptime_spearman: stats::spearman(&lengths, &uptimes).ok(),
    }
}

#[derive(Serialize, Deserialize)]
struct ArchiveRecord {
    user_id: String,
    symbols: String,
    t0: i64,
    event_times: Vec<i64>,
}

/// Write the archive in the loss-free JSONL path export format: one record
/// `{user_id, symbols, t0, event_times}` per user, sorted by user id.
pub fn write_archive<W: Write>(mut writer: W, archive: &ForumArchive) -> Result<(), PathError> {
    for (user_id, history) in &archive.users {
        let record = ArchiveRecord {
            user_id: user_id.clone(),
            symbols: history.path.symbol_string(),
            t0: history.timing.t0,
            event_times: history.timing.event_times.clone(),
        };
        serde_json::to_writer(&mut writer, &record).map_err(std::io::Error::other)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Read an archive written by [`write_archive`]. The forum id is not part of
/// the record schema and is supplied by the caller.
pub fn read_archive<R: BufRead>(reader: R, forum_id: &str) -> Result<ForumArchive, PathError> {
    let mut archive = ForumArchive {
        forum_id: forum_id.to_string(),
        users: BTreeMap::new(),
    };
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let record: ArchiveRecord =
            serde_json::from_str(&text).map_err(|e| PathError::MalformedArchive {
                line: line_no,
                reason: e.to_string(),
            })?;
        let symbols = UserPath::parse_symbols(&record.symbols)?;
        if symbols.first() == Some(&EventKind::Reply) {
            return Err(PathError::MalformedArchive {
                line: line_no,
                reason: "path starts with a reply".to_string(),
            });
        }
        if symbols.len() != record.event_times.len() {
            return Err(PathError::MalformedArchive {
                line: line_no,
                reason: format!(
                    "{} symbols but {} event times",
                    symbols.len(),
                    record.event_times.len()
                ),
            });
        }
        if record.event_times.windows(2).any(|w| w[0] > w[1]) {
            return Err(PathError::MalformedArchive {
                line: line_no,
                reason: "event times decrease".to_string(),
            });
        }
        if let Some(&first) = record.event_times.first() {
            if record.t0 > first {
                return Err(PathError::MalformedArchive {
                    line: line_no,
                    reason: "registration time after first event".to_string(),
                });
            }
        }
        archive.users.insert(
            record.user_id.clone(),
            UserHistory {
                path: UserPath::from_symbols(record.user_id, symbols),
                timing: TimingVector {
                    t0: record.t0,
                    event_times: record.event_times,
                },
            },
        );
    }
    Ok(archive)
}
