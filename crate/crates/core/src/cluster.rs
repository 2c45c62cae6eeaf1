//! Feature normalization and agglomerative hierarchical clustering.
//!
//! Ward's linkage under Euclidean distance via the Lance-Williams recurrence,
//! with a deterministic smallest-index tiebreak. The slope feature never
//! enters the matrix: baseline and offset carry the same information, and
//! both are normalized by the dispersion of the baseline since they share its
//! scale. No mean centering: Euclidean distances only see differences.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::features::ForumFeatures;
use crate::num::Real;
use crate::stats;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("need at least two rows, got {0}")]
    TooFewRows(usize),
    #[error("column {0} has zero dispersion")]
    ZeroDispersion(&'static str),
    #[error("no feature columns selected")]
    NoColumns,
    #[error("duplicate feature column {0}")]
    DuplicateColumn(&'static str),
    #[error("cut size {k} outside 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Interpretation of "normalize by dispersion".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    /// Divide by the sample standard deviation.
    ByStdDev,
    /// Divide by the sample variance.
    ByVariance,
}

impl std::str::FromStr for NormalizationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "by_stddev" | "stddev" => Ok(NormalizationMode::ByStdDev),
            "by_variance" | "variance" => Ok(NormalizationMode::ByVariance),
            other => Err(format!(
                "unknown normalization mode {other:?} (expected by_stddev or by_variance)"
            )),
        }
    }
}

/// Clusterable forum features. Slope is deliberately absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureColumn {
    Size,
    Length,
    Base,
    Offset,
    Spread,
}

impl FeatureColumn {
    pub const ALL: [FeatureColumn; 5] = [
        FeatureColumn::Size,
        FeatureColumn::Length,
        FeatureColumn::Base,
        FeatureColumn::Offset,
        FeatureColumn::Spread,
    ];

    /// The default set for the alternative baseline-only clustering: offset
    /// dropped, base kept.
    pub const WITHOUT_OFFSET: [FeatureColumn; 4] = [
        FeatureColumn::Size,
        FeatureColumn::Length,
        FeatureColumn::Base,
        FeatureColumn::Spread,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureColumn::Size => "size",
            FeatureColumn::Length => "length",
            FeatureColumn::Base => "base",
            FeatureColumn::Offset => "offset",
            FeatureColumn::Spread => "spread",
        }
    }

    fn raw<F: Real>(self, f: &ForumFeatures<F>) -> F {
        match self {
            FeatureColumn::Size => F::of_usize(f.size),
            FeatureColumn::Length => f.length,
            FeatureColumn::Base => f.baseline,
            FeatureColumn::Offset => f.offset,
            FeatureColumn::Spread => f.spread,
        }
    }
}

/// Normalized feature matrix ready for clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<F> {
    pub labels: Vec<String>,
    pub columns: Vec<FeatureColumn>,
    /// rows[i][j] is the normalized value of column j for forum i.
    pub rows: Vec<Vec<F>>,
    pub mode: NormalizationMode,
}

/// Divide size, length, and spread by their own dispersion and both base and
/// offset by the dispersion of base.
pub fn normalize_feature_matrix<F: Real>(
    features: &[ForumFeatures<F>],
    columns: &[FeatureColumn],
    mode: NormalizationMode,
) -> Result<FeatureMatrix<F>, ClusterError> {
    if features.len() < 2 {
        return Err(ClusterError::TooFewRows(features.len()));
    }
    if columns.is_empty() {
        return Err(ClusterError::NoColumns);
    }
    for (i, c) in columns.iter().enumerate() {
        if columns[..i].contains(c) {
            return Err(ClusterError::DuplicateColumn(c.name()));
        }
    }

    let dispersion = |column: FeatureColumn| -> Result<F, ClusterError> {
        let raw: Vec<F> = features.iter().map(|f| column.raw(f)).collect();
        let value = match mode {
            NormalizationMode::ByStdDev => stats::sample_stddev(&raw),
            NormalizationMode::ByVariance => stats::sample_variance(&raw),
        }
        .map_err(|_| ClusterError::TooFewRows(features.len()))?;
        if value.is_zero() {
            return Err(ClusterError::ZeroDispersion(column.name()));
        }
        Ok(value)
    };

    let mut divisors = Vec::with_capacity(columns.len());
    for &column in columns {
        let source = match column {
            FeatureColumn::Offset => FeatureColumn::Base,
            other => other,
        };
        divisors.push(dispersion(source)?);
    }

    let rows = features
        .iter()
        .map(|f| {
            columns
                .iter()
                .zip(&divisors)
                .map(|(&c, &d)| c.raw(f) / d)
                .collect()
        })
        .collect();
    Ok(FeatureMatrix {
        labels: features.iter().map(|f| f.forum_id.clone()).collect(),
        columns: columns.to_vec(),
        rows,
        mode,
    })
}

/// Linkage criteria. Ward is the primary method; single and average are
/// exploratory alternatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    Ward,
    Single,
    Average,
}

impl std::str::FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ward" => Ok(Linkage::Ward),
            "single" => Ok(Linkage::Single),
            "average" => Ok(Linkage::Average),
            other => Err(format!("unknown linkage {other:?}")),
        }
    }
}

/// One agglomeration step. Cluster ids: leaves are 0..n-1; the cluster formed
/// by step k gets id n + k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge<F> {
    pub a: usize,
    pub b: usize,
    pub height: F,
    /// Observations in the newly formed cluster.
    pub size: usize,
}

/// Stepwise dendrogram: n - 1 merges over n labeled leaves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dendrogram<F> {
    pub labels: Vec<String>,
    pub merges: Vec<Merge<F>>,
}

impl<F> Dendrogram<F> {
    pub fn leaf_count(&self) -> usize {
        self.labels.len()
    }
}

/// Agglomerative clustering with the given linkage under Euclidean distance.
///
/// Ties in the minimum linkage value are broken by the smallest (a, b)
/// cluster-id pair, so the merge sequence is deterministic.
pub fn linkage_clustering<F: Real>(
    matrix: &FeatureMatrix<F>,
    linkage: Linkage,
) -> Result<Dendrogram<F>, ClusterError> {
    let n = matrix.rows.len();
    if n < 2 {
        return Err(ClusterError::TooFewRows(n));
    }

    // Pairwise values: squared Euclidean for Ward, Euclidean otherwise.
    let sqdist = |a: &[F], b: &[F]| -> F {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| (x - y) * (x - y))
            .sum::<F>()
    };

    #[derive(Clone)]
    struct Active<F> {
        id: usize,
        size: usize,
        values: BTreeMap<usize, F>, // keyed by the other cluster's id
    }

    let mut active: Vec<Active<F>> = (0..n)
        .map(|i| Active {
            id: i,
            size: 1,
            values: BTreeMap::new(),
        })
        .collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut v = sqdist(&matrix.rows[i], &matrix.rows[j]);
            if linkage != Linkage::Ward {
                v = v.sqrt();
            }
            active[i].values.insert(j, v);
            active[j].values.insert(i, v);
        }
    }

    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        // Smallest linkage value; ties resolved by the smaller id pair.
        let mut best: Option<(F, usize, usize)> = None;
        for (pos_a, a) in active.iter().enumerate() {
            for b in active.iter().skip(pos_a + 1) {
                let v = a.values[&b.id];
                let candidate = (v, a.id.min(b.id), a.id.max(b.id));
                if best.map_or(true, |cur| {
                    candidate.0 < cur.0
                        || (candidate.0 == cur.0 && (candidate.1, candidate.2) < (cur.1, cur.2))
                }) {
                    best = Some(candidate);
                }
            }
        }
        let (value, id_a, id_b) = best.expect("at least two active clusters");
        let pos_a = active.iter().position(|c| c.id == id_a).expect("active");
        let pos_b = active.iter().position(|c| c.id == id_b).expect("active");
        let size_a = active[pos_a].size;
        let size_b = active[pos_b].size;
        let new_id = n + step;
        let new_size = size_a + size_b;

        let mut new_values = BTreeMap::new();
        for other in &active {
            if other.id == id_a || other.id == id_b {
                continue;
            }
            let va = other.values[&id_a];
            let vb = other.values[&id_b];
            let updated = match linkage {
                Linkage::Ward => {
                    let sa = F::of_usize(size_a);
                    let sb = F::of_usize(size_b);
                    let sx = F::of_usize(other.size);
                    ((sx + sa) * va + (sx + sb) * vb - sx * value) / (sa + sb + sx)
                }
                Linkage::Single => va.min(vb),
                Linkage::Average => {
                    let sa = F::of_usize(size_a);
                    let sb = F::of_usize(size_b);
                    (sa * va + sb * vb) / (sa + sb)
                }
            };
            new_values.insert(other.id, updated);
        }

        let height = match linkage {
            Linkage::Ward => value.sqrt(),
            _ => value,
        };
        merges.push(Merge {
            a: id_a,
            b: id_b,
            height,
            size: new_size,
        });

        active.retain(|c| c.id != id_a && c.id != id_b);
        for other in &mut active {
            other.values.remove(&id_a);
            other.values.remove(&id_b);
            other.values.insert(new_id, new_values[&other.id]);
        }
        active.push(Active {
            id: new_id,
            size: new_size,
            values: new_values,
        });
    }

    Ok(Dendrogram {
        labels: matrix.labels.clone(),
        merges,
    })
}

/// Ward's linkage under Euclidean distance.
pub fn ward_clustering<F: Real>(matrix: &FeatureMatrix<F>) -> Result<Dendrogram<F>, ClusterError> {
    linkage_clustering(matrix, Linkage::Ward)
}

/// Cut after the first n - k merges. Groups are ordered by their smallest
/// leaf index; labels within a group keep leaf order.
pub fn cut_dendrogram<F: Real>(
    dendrogram: &Dendrogram<F>,
    k: usize,
) -> Result<Vec<Vec<String>>, ClusterError> {
    let n = dendrogram.leaf_count();
    if k < 1 || k > n {
        return Err(ClusterError::KOutOfRange { k, n });
    }
    let mut members: BTreeMap<usize, Vec<usize>> = (0..n).map(|i| (i, vec![i])).collect();
    for (step, merge) in dendrogram.merges.iter().take(n - k).enumerate() {
        let mut group = members.remove(&merge.a).expect("live cluster");
        group.extend(members.remove(&merge.b).expect("live cluster"));
        group.sort_unstable();
        members.insert(n + step, group);
    }
    let mut groups: Vec<Vec<usize>> = members.into_values().collect();
    groups.sort_by_key(|g| g[0]);
    Ok(groups
        .into_iter()
        .map(|g| g.into_iter().map(|i| dendrogram.labels[i].clone()).collect())
        .collect())
}

/// Newick rendering with branch lengths from merge heights.
pub fn to_newick<F: Real>(dendrogram: &Dendrogram<F>) -> String {
    let n = dendrogram.leaf_count();
    fn render<F: Real>(d: &Dendrogram<F>, id: usize, parent_height: F, out: &mut String) {
        let n = d.leaf_count();
        if id < n {
            let _ = write!(out, "{}:{:.6}", d.labels[id], parent_height);
        } else {
            let merge = &d.merges[id - n];
            out.push('(');
            render(d, merge.a, merge.height, out);
            out.push(',');
            render(d, merge.b, merge.height, out);
            let _ = write!(out, "):{:.6}", parent_height - merge.height);
        }
    }
    let mut out = String::new();
    if n == 0 {
        out.push(';');
        return out;
    }
    if dendrogram.merges.is_empty() {
        let _ = write!(out, "{};", dendrogram.labels[0]);
        return out;
    }
    let root = &dendrogram.merges[n - 2];
    out.push('(');
    render(dendrogram, root.a, root.height, &mut out);
    out.push(',');
    render(dendrogram, root.b, root.height, &mut out);
    out.push_str(");");
    out
}

/// JSON merge-list export.
pub fn write_dendrogram_json<W: Write, F: Real + Serialize>(
    mut writer: W,
    dendrogram: &Dendrogram<F>,
) -> Result<(), ClusterError> {
    serde_json::to_writer_pretty(&mut writer, dendrogram).map_err(std::io::Error::other)?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Partition export: `forum,cluster_id` rows in leaf order.
pub fn write_partition_csv<W: Write>(
    writer: W,
    groups: &[Vec<String>],
) -> Result<(), ClusterError> {
    let mut rows: Vec<(String, usize)> = Vec::new();
    for (id, group) in groups.iter().enumerate() {
        for label in group {
            rows.push((label.clone(), id));
        }
    }
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["forum", "cluster_id"])
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    for (label, id) in rows {
        wtr.write_record([label.as_str(), &id.to_string()])
            .map_err(|e| std::io::Error::other(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}
