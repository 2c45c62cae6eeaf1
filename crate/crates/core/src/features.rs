//! The six-number forum summary and per-user slope influence.
//!
//! Points from all user paths are pooled into one multiset; the forum slope
//! is the origin-constrained least-squares line through that multiset, the
//! spread its RMSE, the baseline the aggregate replies-to-posts ratio, and
//! the offset the signed gap between slope and baseline.

use std::io::{Read, Write};

use serde::Serialize;
use thiserror::Error;

use crate::num::Real;
use crate::paths::{ForumArchive, PathPoint};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("empty point cloud")]
    EmptyPointCloud,
    #[error("all points lie on the y-axis; slope undefined")]
    NoHorizontalExtent,
    #[error("archive is empty")]
    EmptyArchive,
    #[error("forum has no posts")]
    NoPosts,
    #[error("need at least two users, got {0}")]
    TooFewUsers(usize),
    #[error("unknown user {0:?}")]
    UnknownUser(String),
    #[error("missing column {0:?} in features CSV")]
    MissingColumn(&'static str),
    #[error("bad value in features CSV at line {line}: {reason}")]
    BadValue { line: usize, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Multiset of path points pooled over all users. Points from different
/// paths are distinct elements; every user contributes one origin point, so
/// the cloud has sum(L(u) + 1) elements. Longer paths therefore weigh more.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PointCloud {
    pub points: Vec<PathPoint>,
}

impl PointCloud {
    pub fn from_archive(archive: &ForumArchive) -> Self {
        let mut points = Vec::new();
        for history in archive.users.values() {
            points.extend_from_slice(&history.path.points);
        }
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Origin-constrained slope estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit<F> {
    pub beta: F,
    /// True when every point had y = 0 and the slope fell back to 0.
    pub degenerate: bool,
}

fn slope_sums<F: Real>(points: &[PathPoint]) -> (F, F) {
    let mut sum_xy = F::zero();
    let mut sum_xx = F::zero();
    for p in points {
        let x = F::of_usize(p.x as usize);
        let y = F::of_usize(p.y as usize);
        sum_xy += x * y;
        sum_xx += x * x;
    }
    (sum_xy, sum_xx)
}

fn slope_from_sums<F: Real>(sum_xy: F, sum_xx: F) -> Result<SlopeFit<F>, FeatureError> {
    if sum_xx.is_zero() {
        return Err(FeatureError::NoHorizontalExtent);
    }
    if sum_xy.is_zero() {
        return Ok(SlopeFit {
            beta: F::zero(),
            degenerate: true,
        });
    }
    Ok(SlopeFit {
        beta: sum_xy / sum_xx,
        degenerate: false,
    })
}

/// Least-squares slope of the line through the origin: sum(xy) / sum(x^2),
/// the unique minimizer of the pooled RMSE over beta > 0.
pub fn fit_forum_slope<F: Real>(cloud: &PointCloud) -> Result<SlopeFit<F>, FeatureError> {
    if cloud.is_empty() {
        return Err(FeatureError::EmptyPointCloud);
    }
    let (sum_xy, sum_xx) = slope_sums(&cloud.points);
    slope_from_sums(sum_xy, sum_xx)
}

/// RMSE of the origin line at slope `beta` over the cloud, multiplicity
/// included.
pub fn compute_spread<F: Real>(cloud: &PointCloud, beta: F) -> Result<F, FeatureError> {
    if cloud.is_empty() {
        return Err(FeatureError::EmptyPointCloud);
    }
    let mut ss = F::zero();
    for p in &cloud.points {
        let x = F::of_usize(p.x as usize);
        let y = F::of_usize(p.y as usize);
        let r = y - beta * x;
        ss += r * r;
    }
    Ok((ss / F::of_usize(cloud.len())).sqrt())
}

/// The six-number forum summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForumFeatures<F> {
    pub forum_id: String,
    /// Number of users N.
    pub size: usize,
    /// Average path length (posts + replies) / N.
    pub length: F,
    /// Origin-constrained slope of the pooled point cloud.
    pub slope: F,
    /// Aggregate replies / posts ratio.
    pub baseline: F,
    /// slope - baseline, exactly.
    pub offset: F,
    /// RMSE of the slope fit.
    pub spread: F,
    pub degenerate_slope: bool,
}

/// Compute the summary over every path in the archive, short ones included.
pub fn compute_forum_features<F: Real>(
    archive: &ForumArchive,
) -> Result<ForumFeatures<F>, FeatureError> {
    if archive.is_empty() {
        return Err(FeatureError::EmptyArchive);
    }
    let posts = archive.total_posts();
    let replies = archive.total_replies();
    if posts == 0 {
        return Err(FeatureError::NoPosts);
    }
    let size = archive.len();
    let length = F::of_f64((posts + replies) as f64) / F::of_usize(size);
    let baseline = F::of_f64(replies as f64) / F::of_f64(posts as f64);
    let cloud = PointCloud::from_archive(archive);
    let fit = fit_forum_slope::<F>(&cloud)?;
    let spread = compute_spread(&cloud, fit.beta)?;
    Ok(ForumFeatures {
        forum_id: archive.forum_id.clone(),
        size,
        length,
        slope: fit.beta,
        baseline,
        offset: fit.beta - baseline,
        spread,
        degenerate_slope: fit.degenerate,
    })
}

/// Signed change of the forum slope when `user_id` is included versus left
/// out.
pub fn slope_influence<F: Real>(
    archive: &ForumArchive,
    user_id: &str,
) -> Result<F, FeatureError> {
    if archive.len() < 2 {
        return Err(FeatureError::TooFewUsers(archive.len()));
    }
    let history = archive
        .users
        .get(user_id)
        .ok_or_else(|| FeatureError::UnknownUser(user_id.to_string()))?;

    let mut sum_xy = F::zero();
    let mut sum_xx = F::zero();
    for h in archive.users.values() {
        let (sxy, sxx) = slope_sums::<F>(&h.path.points);
        sum_xy += sxy;
        sum_xx += sxx;
    }
    let (user_xy, user_xx) = slope_sums::<F>(&history.path.points);
    let full = slope_from_sums(sum_xy, sum_xx)?;
    let without = slope_from_sums(sum_xy - user_xy, sum_xx - user_xx)?;
    Ok(full.beta - without.beta)
}

/// Influence of every user, sorted by user id.
pub fn slope_influences<F: Real>(
    archive: &ForumArchive,
) -> Result<Vec<(String, F)>, FeatureError> {
    archive
        .users
        .keys()
        .map(|user| slope_influence(archive, user).map(|d| (user.clone(), d)))
        .collect()
}

/// Aggregate per-forum counts, enough for the size, length, and baseline
/// features without path data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForumCounts {
    pub forum_id: String,
    pub users: u64,
    pub posts: u64,
    pub replies: u64,
}

/// size, length, and baseline from aggregate counts; the order-sensitive
/// features need paths.
pub fn features_from_counts<F: Real>(
    counts: &ForumCounts,
) -> Result<(usize, F, F), FeatureError> {
    if counts.posts == 0 {
        return Err(FeatureError::NoPosts);
    }
    if counts.users == 0 {
        return Err(FeatureError::EmptyArchive);
    }
    let length = F::of_f64((counts.posts + counts.replies) as f64) / F::of_f64(counts.users as f64);
    let baseline = F::of_f64(counts.replies as f64) / F::of_f64(counts.posts as f64);
    Ok((counts.users as usize, length, baseline))
}

/// Read a `forum,users,posts,replies` counts CSV.
pub fn read_counts_csv<R: Read>(reader: R) -> Result<Vec<ForumCounts>, FeatureError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &'static str| -> Result<usize, FeatureError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(FeatureError::MissingColumn(name))
    };
    let (forum, users, posts, replies) = (col("forum")?, col("users")?, col("posts")?, col("replies")?);
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let parse = |idx: usize| -> Result<u64, FeatureError> {
            record
                .get(idx)
                .unwrap_or("")
                .trim()
                .parse::<u64>()
                .map_err(|e| FeatureError::BadValue {
                    line: i + 2,
                    reason: e.to_string(),
                })
        };
        out.push(ForumCounts {
            forum_id: record.get(forum).unwrap_or("").trim().to_string(),
            users: parse(users)?,
            posts: parse(posts)?,
            replies: parse(replies)?,
        });
    }
    Ok(out)
}

/// Features table export: `forum,size,length,slope,base,offset,spread`.
pub fn write_features_csv<W: Write, F: Real>(
    writer: W,
    rows: &[ForumFeatures<F>],
) -> Result<(), FeatureError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["forum", "size", "length", "slope", "base", "offset", "spread"])?;
    for row in rows {
        wtr.write_record([
            row.forum_id.as_str(),
            &row.size.to_string(),
            &row.length.to_string(),
            &row.slope.to_string(),
            &row.baseline.to_string(),
            &row.offset.to_string(),
            &row.spread.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Read a features table in the export schema.
pub fn read_features_csv<R: Read, F: Real>(reader: R) -> Result<Vec<ForumFeatures<F>>, FeatureError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &'static str| -> Result<usize, FeatureError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(FeatureError::MissingColumn(name))
    };
    let forum = col("forum")?;
    let size = col("size")?;
    let length = col("length")?;
    let slope = col("slope")?;
    let base = col("base")?;
    let offset = col("offset")?;
    let spread = col("spread")?;
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let value = |idx: usize| -> Result<F, FeatureError> {
            record
                .get(idx)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map(F::of_f64)
                .map_err(|e| FeatureError::BadValue {
                    line: i + 2,
                    reason: e.to_string(),
                })
        };
        let size_value =
            record
                .get(size)
                .unwrap_or("")
                .trim()
                .parse::<usize>()
                .map_err(|e| FeatureError::BadValue {
                    line: i + 2,
                    reason: e.to_string(),
                })?;
        out.push(ForumFeatures {
            forum_id: record.get(forum).unwrap_or("").trim().to_string(),
            size: size_value,
            length: value(length)?,
            slope: value(slope)?,
            baseline: value(base)?,
            offset: value(offset)?,
            spread: value(spread)?,
            degenerate_slope: false,
        });
    }
    Ok(out)
}
