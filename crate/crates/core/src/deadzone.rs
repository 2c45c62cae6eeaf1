//! Spatial density of path points and dead-zone detection.
//!
//! A Gaussian kernel density over the lattice square [0, M]^2 is thresholded
//! at a low percentile of the densities observed at user locations; lattice
//! points below the threshold form the dead zone, and observed occurrences
//! landing there are flagged as outliers.

use std::collections::BTreeMap;
use std::io::Write;

use thiserror::Error;

use crate::num::Real;
use crate::paths::{ForumArchive, PathPoint};
use crate::stats;

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("empty point set")]
    EmptyPointSet,
    #[error("bandwidth must be positive, got {0}")]
    BadBandwidth(f64),
    #[error("point ({x}, {y}) lies outside the grid extent {extent}")]
    PointOutsideExtent { x: u32, y: u32, extent: usize },
    #[error("percentile must lie strictly between 0 and 100, got {0}")]
    PercentileOutOfRange(f64),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Normalized kernel density over the lattice square [0, extent]^2.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid<F> {
    extent: usize,
    bandwidth: F,
    /// Row-major values, index = y * (extent + 1) + x; they sum to 1.
    values: Vec<F>,
}

impl<F: Real> DensityGrid<F> {
    /// Square side: the largest coordinate covered on either axis.
    pub fn extent(&self) -> usize {
        self.extent
    }

    pub fn bandwidth(&self) -> F {
        self.bandwidth
    }

    pub fn width(&self) -> usize {
        self.extent + 1
    }

    pub fn value_at(&self, x: u32, y: u32) -> F {
        self.values[y as usize * self.width() + x as usize]
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }
}

/// Isotropic Gaussian kernel sum over all lattice points of the square
/// spanned by the data, normalized so grid values sum to 1.
pub fn estimate_density<F: Real>(
    points: &[PathPoint],
    bandwidth: F,
) -> Result<DensityGrid<F>, DensityError> {
    let extent = points
        .iter()
        .map(|p| p.x.max(p.y) as usize)
        .max()
        .ok_or(DensityError::EmptyPointSet)?;
    estimate_density_with_extent(points, bandwidth, extent)
}

/// As [`estimate_density`] with a caller-chosen square side; every point must
/// fall inside [0, extent]^2.
pub fn estimate_density_with_extent<F: Real>(
    points: &[PathPoint],
    bandwidth: F,
    extent: usize,
) -> Result<DensityGrid<F>, DensityError> {
    if points.is_empty() {
        return Err(DensityError::EmptyPointSet);
    }
    let sigma = bandwidth.to_f64().unwrap_or(f64::NAN);
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(DensityError::BadBandwidth(sigma));
    }
    let width = extent + 1;
    for p in points {
        if p.x as usize > extent || p.y as usize > extent {
            return Err(DensityError::PointOutsideExtent {
                x: p.x,
                y: p.y,
                extent,
            });
        }
    }

    // Occurrence counts per lattice point, then a separable convolution with
    // the 1-D Gaussian kernel along rows and columns. The kernel is truncated
    // at 8 sigma, far below the accuracy of the normalized values.
    let mut counts = vec![F::zero(); width * width];
    for p in points {
        counts[p.y as usize * width + p.x as usize] += F::one();
    }

    let radius = ((8.0 * sigma).ceil() as usize).min(extent);
    let two_sigma_sq = F::of_f64(2.0 * sigma * sigma);
    let kernel: Vec<F> = (0..=radius)
        .map(|d| {
            let d = F::of_usize(d);
            (-(d * d) / two_sigma_sq).exp()
        })
        .collect();

    let convolve_rows = |src: &[F], dst: &mut [F]| {
        for row in 0..width {
            let base = row * width;
            for x in 0..width {
                let mut acc = F::zero();
                let lo = x.saturating_sub(radius);
                let hi = (x + radius).min(extent);
                for s in lo..=hi {
                    let w = kernel[x.abs_diff(s)];
                    acc += src[base + s] * w;
                }
                dst[base + x] = acc;
            }
        }
    };

    let mut horizontal = vec![F::zero(); width * width];
    convolve_rows(&counts, &mut horizontal);
    // Transpose, convolve columns as rows, transpose back.
    let transpose = |src: &[F], dst: &mut [F]| {
        for y in 0..width {
            for x in 0..width {
                dst[x * width + y] = src[y * width + x];
            }
        }
    };
    let mut transposed = vec![F::zero(); width * width];
    transpose(&horizontal, &mut transposed);
    let mut convolved = vec![F::zero(); width * width];
    convolve_rows(&transposed, &mut convolved);
    let mut values = vec![F::zero(); width * width];
    transpose(&convolved, &mut values);

    let total: F = values.iter().copied().sum();
    for v in &mut values {
        *v = *v / total;
    }
    Ok(DensityGrid {
        extent,
        bandwidth,
        values,
    })
}

/// Dead-zone threshold, mask, and flagged observations.
#[derive(Debug, Clone, PartialEq)]
pub struct DeadZoneResult<F> {
    /// Nearest-rank percentile of densities at observed occurrences.
    pub threshold: F,
    extent: usize,
    mask: Vec<bool>,
    /// Observed occurrences (with multiplicity) whose density falls strictly
    /// below the threshold.
    pub outliers: Vec<PathPoint>,
}

impl<F> DeadZoneResult<F> {
    pub fn extent(&self) -> usize {
        self.extent
    }

    pub fn is_masked(&self, x: u32, y: u32) -> bool {
        let width = self.extent + 1;
        let (x, y) = (x as usize, y as usize);
        x < width && y < width && self.mask[y * width + x]
    }

    /// Lattice points inside the dead zone, in row-major order.
    pub fn mask_points(&self) -> impl Iterator<Item = PathPoint> + '_ {
        let width = self.extent + 1;
        self.mask.iter().enumerate().filter_map(move |(i, &m)| {
            m.then(|| PathPoint::new((i % width) as u32, (i / width) as u32))
        })
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Threshold the grid at the `percentile`-th nearest-rank percentile of the
/// densities at `observed` occurrences (with multiplicity). The mask is the
/// set of lattice points strictly below the threshold.
pub fn compute_dead_zone<F: Real>(
    grid: &DensityGrid<F>,
    observed: &[PathPoint],
    percentile: f64,
) -> Result<DeadZoneResult<F>, DensityError> {
    if !(percentile > 0.0 && percentile < 100.0) {
        return Err(DensityError::PercentileOutOfRange(percentile));
    }
    if observed.is_empty() {
        return Err(DensityError::EmptyPointSet);
    }
    for p in observed {
        if p.x as usize > grid.extent() || p.y as usize > grid.extent() {
            return Err(DensityError::PointOutsideExtent {
                x: p.x,
                y: p.y,
                extent: grid.extent(),
            });
        }
    }
    let observed_densities: Vec<F> = observed.iter().map(|p| grid.value_at(p.x, p.y)).collect();
    let threshold = stats::nearest_rank_percentile(&observed_densities, percentile)
        .map_err(|_| DensityError::EmptyPointSet)?;

    let mask: Vec<bool> = grid.values().iter().map(|&v| v < threshold).collect();
    let outliers: Vec<PathPoint> = observed
        .iter()
        .zip(&observed_densities)
        .filter(|(_, &d)| d < threshold)
        .map(|(&p, _)| p)
        .collect();
    Ok(DeadZoneResult {
        threshold,
        extent: grid.extent(),
        mask,
        outliers,
    })
}

/// Per-user path points that fall inside the dead zone. Every archive user
/// gets an entry; most lists are empty.
pub fn flag_outlier_users<F: Real>(
    archive: &ForumArchive,
    result: &DeadZoneResult<F>,
) -> BTreeMap<String, Vec<PathPoint>> {
    archive
        .users
        .iter()
        .map(|(user, history)| {
            let flagged: Vec<PathPoint> = history
                .path
                .points
                .iter()
                .filter(|p| result.is_masked(p.x, p.y))
                .copied()
                .collect();
            (user.clone(), flagged)
        })
        .collect()
}

/// Grid export: `x,y,density,in_dead_zone` rows over the full square.
pub fn write_density_csv<W: Write, F: Real>(
    writer: W,
    grid: &DensityGrid<F>,
    zone: &DeadZoneResult<F>,
) -> Result<(), DensityError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["x", "y", "density", "in_dead_zone"])
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    for y in 0..grid.width() as u32 {
        for x in 0..grid.width() as u32 {
            wtr.write_record([
                x.to_string(),
                y.to_string(),
                grid.value_at(x, y).to_string(),
                zone.is_masked(x, y).to_string(),
            ])
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Outlier export: `user_id,x,y` rows, users sorted, points in path order.
pub fn write_outliers_csv<W: Write>(
    writer: W,
    flagged: &BTreeMap<String, Vec<PathPoint>>,
) -> Result<(), DensityError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["user_id", "x", "y"])
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    for (user, points) in flagged {
        for p in points {
            wtr.write_record([user.as_str(), &p.x.to_string(), &p.y.to_string()])
                .map_err(|e| std::io::Error::other(e.to_string()))?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pt(x: u32, y: u32) -> PathPoint {
        PathPoint::new(x, y)
    }

    /// Direct double-loop Gaussian sum, the oracle the fast path must match.
    pub(crate) fn brute_force_density(
        points: &[PathPoint],
        bandwidth: f64,
        extent: usize,
    ) -> Vec<f64> {
        let width = extent + 1;
        let mut values = vec![0.0f64; width * width];
        for gy in 0..width {
            for gx in 0..width {
                let mut acc = 0.0;
                for p in points {
                    let dx = gx as f64 - p.x as f64;
                    let dy = gy as f64 - p.y as f64;
                    acc += (-(dx * dx + dy * dy) / (2.0 * bandwidth * bandwidth)).exp();
                }
                values[gy * width + gx] = acc;
            }
        }
        let total: f64 = values.iter().sum();
        values.iter().map(|v| v / total).collect()
    }

    #[test]
    fn single_point_density_decreases_along_diagonal() {
        let grid = estimate_density_with_extent(&[pt(0, 0)], 2.0f64, 10).unwrap();
        let mut prev = f64::INFINITY;
        for d in 0..=10u32 {
            let v = grid.value_at(d, d);
            assert!(v < prev, "density must strictly decrease at ({d}, {d})");
            prev = v;
        }
    }

    #[test]
    fn coincident_points_match_single_point_after_normalization() {
        let one = estimate_density_with_extent(&[pt(3, 4)], 2.0f64, 8).unwrap();
        let two = estimate_density_with_extent(&[pt(3, 4), pt(3, 4)], 2.0f64, 8).unwrap();
        for (a, b) in one.values().iter().zip(two.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_point_grid_is_rotation_symmetric() {
        let grid = estimate_density(&[pt(0, 0), pt(5, 5)], 2.0f64).unwrap();
        assert_eq!(grid.extent(), 5);
        for y in 0..=5u32 {
            for x in 0..=5u32 {
                let mirrored = grid.value_at(5 - x, 5 - y);
                assert_abs_diff_eq!(grid.value_at(x, y), mirrored, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn grid_sums_to_one() {
        let points = [pt(0, 0), pt(1, 3), pt(7, 2), pt(7, 2), pt(4, 4)];
        let grid = estimate_density(&points, 2.0f64).unwrap();
        let total: f64 = grid.values().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn matches_brute_force_oracle() {
        let points: Vec<PathPoint> = (0u32..60)
            .map(|i| pt((i * 7) % 23, (i * 13) % 23))
            .collect();
        let grid = estimate_density_with_extent(&points, 2.0f64, 22).unwrap();
        let oracle = brute_force_density(&points, 2.0, 22);
        for (a, b) in grid.values().iter().zip(&oracle) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn duplicate_point_never_decreases_density() {
        let base = vec![pt(2, 2), pt(8, 3), pt(5, 5)];
        let grid1 = estimate_density_with_extent(&base, 2.0f64, 10).unwrap();
        let mut more = base.clone();
        more.push(pt(8, 3));
        let grid2 = estimate_density_with_extent(&more, 2.0f64, 10).unwrap();
        assert!(grid2.value_at(8, 3) >= grid1.value_at(8, 3));
    }

    #[test]
    fn empty_points_rejected() {
        assert!(matches!(
            estimate_density::<f64>(&[], 2.0),
            Err(DensityError::EmptyPointSet)
        ));
    }

    #[test]
    fn coincident_observations_mask_excludes_their_point() {
        let points = vec![pt(3, 3); 5];
        let grid = estimate_density_with_extent(&points, 2.0f64, 6).unwrap();
        let zone = compute_dead_zone(&grid, &points, 5.0).unwrap();
        // threshold equals the single observed density; strict < keeps the
        // observed point out of the mask
        assert_abs_diff_eq!(zone.threshold, grid.value_at(3, 3));
        assert!(!zone.is_masked(3, 3));
        assert!(zone.outliers.is_empty());
        // far corner has lower density and is masked
        assert!(zone.is_masked(6, 0) || zone.is_masked(0, 6) || zone.is_masked(6, 6));
    }

    #[test]
    fn nearest_rank_flags_four_of_hundred_distinct() {
        // 100 observations at distinct densities: rank ceil(5) = 5, strict <
        // flags exactly the 4 occurrences below the 5th smallest. A mass
        // gradient along the x-axis keeps every observed density distinct.
        let mut cloud = Vec::new();
        for j in 0u32..100 {
            for _ in 0..(100 - j) {
                cloud.push(pt(j, 0));
            }
        }
        let grid = estimate_density(&cloud, 2.0f64).unwrap();
        let observed: Vec<PathPoint> = (0u32..100).map(|i| pt(i, 0)).collect();
        let densities: Vec<f64> = observed.iter().map(|p| grid.value_at(p.x, p.y)).collect();
        let distinct: std::collections::BTreeSet<u64> =
            densities.iter().map(|d| d.to_bits()).collect();
        assert_eq!(distinct.len(), 100, "construction must give distinct densities");
        let zone = compute_dead_zone(&grid, &observed, 5.0).unwrap();
        assert_eq!(zone.outliers.len(), 4);
    }

    #[test]
    fn percentile_out_of_range_rejected() {
        let points = [pt(0, 0), pt(1, 1)];
        let grid = estimate_density(&points, 2.0f64).unwrap();
        assert!(matches!(
            compute_dead_zone(&grid, &points, 0.0),
            Err(DensityError::PercentileOutOfRange(_))
        ));
        assert!(matches!(
            compute_dead_zone(&grid, &points, 100.0),
            Err(DensityError::PercentileOutOfRange(_))
        ));
    }

    #[test]
    fn mask_grows_with_percentile() {
        let points: Vec<PathPoint> = (0u32..40).map(|i| pt(i % 9, (i * 3) % 9)).collect();
        let grid = estimate_density(&points, 2.0f64).unwrap();
        let small = compute_dead_zone(&grid, &points, 5.0).unwrap();
        let large = compute_dead_zone(&grid, &points, 25.0).unwrap();
        assert!(large.masked_count() >= small.masked_count());
        for p in small.mask_points() {
            assert!(large.is_masked(p.x, p.y));
        }
    }

    #[test]
    fn flag_outlier_users_empty_archive() {
        let archive = ForumArchive::default();
        let points = [pt(0, 0), pt(1, 1)];
        let grid = estimate_density(&points, 2.0f64).unwrap();
        let zone = compute_dead_zone(&grid, &points, 5.0).unwrap();
        assert!(flag_outlier_users(&archive, &zone).is_empty());
    }
}
