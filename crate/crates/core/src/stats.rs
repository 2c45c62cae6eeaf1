//! Shared statistical kernels: correlations, percentiles, line fits.

use thiserror::Error;

use crate::num::Real;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("samples have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("correlation undefined: zero variance in one coordinate")]
    UndefinedCorrelation,
    #[error("percentile must lie strictly between 0 and 100, got {0}")]
    PercentileOutOfRange(f64),
    #[error("need at least two points for a line fit")]
    TooFewPoints,
}

pub fn mean<F: Real>(xs: &[F]) -> Result<F, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    Ok(xs.iter().copied().sum::<F>() / F::of_usize(xs.len()))
}

/// Unbiased (n-1) sample variance.
pub fn sample_variance<F: Real>(xs: &[F]) -> Result<F, StatsError> {
    if xs.len() < 2 {
        return Err(StatsError::EmptySample);
    }
    let m = mean(xs)?;
    let ss = xs.iter().map(|&x| (x - m) * (x - m)).sum::<F>();
    Ok(ss / F::of_usize(xs.len() - 1))
}

pub fn sample_stddev<F: Real>(xs: &[F]) -> Result<F, StatsError> {
    sample_variance(xs).map(F::sqrt)
}

/// Sample Pearson correlation coefficient.
///
/// Errors when either coordinate has zero variance.
pub fn pearson<F: Real>(xs: &[F], ys: &[F]) -> Result<F, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(StatsError::UndefinedCorrelation);
    }
    let mx = mean(xs)?;
    let my = mean(ys)?;
    let mut sxy = F::zero();
    let mut sxx = F::zero();
    let mut syy = F::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx.is_zero() || syy.is_zero() {
        return Err(StatsError::UndefinedCorrelation);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman<F: Real>(xs: &[F], ys: &[F]) -> Result<F, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    pearson(&rx, &ry)
}

/// Ranks 1..=n with tied values assigned the mean of their rank range.
pub fn average_ranks<F: Real>(xs: &[F]) -> Vec<F> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("rankable values"));
    let mut ranks = vec![F::zero(); n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // ranks are 1-based; ties share the mean rank of their block
        let avg = F::of_usize(i + 1 + j + 1) / F::of_f64(2.0);
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Nearest-rank percentile: the value at rank `ceil(pct/100 * n)` (1-based)
/// of the sorted sample.
pub fn nearest_rank_percentile<F: Real>(values: &[F], pct: f64) -> Result<F, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if !(pct > 0.0 && pct < 100.0) {
        return Err(StatsError::PercentileOutOfRange(pct));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("orderable values"));
    let n = sorted.len();
    let rank = ((pct / 100.0) * n as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, n) - 1])
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit<F> {
    pub slope: F,
    pub intercept: F,
    /// Root-mean-square residual of the fit.
    pub rmse: F,
}

pub fn fit_line<F: Real>(xs: &[F], ys: &[F]) -> Result<LineFit<F>, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(StatsError::TooFewPoints);
    }
    let mx = mean(xs)?;
    let my = mean(ys)?;
    let mut sxy = F::zero();
    let mut sxx = F::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx.is_zero() {
        return Err(StatsError::UndefinedCorrelation);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<F>();
    let rmse = (ss / F::of_usize(xs.len())).sqrt();
    Ok(LineFit { slope, intercept, rmse })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pearson_perfect_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.0, 4.0, 6.0, 8.0];
        assert_abs_diff_eq!(pearson(&xs, &ys).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pearson_zero_variance_is_error() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [5.0, 5.0, 5.0];
        assert_eq!(pearson(&xs, &ys), Err(StatsError::UndefinedCorrelation));
    }

    #[test]
    fn ranks_average_over_ties() {
        let ranks = average_ranks(&[10.0f64, 20.0, 20.0, 30.0]);
        assert_eq!(ranks, vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn spearman_monotone_with_ties() {
        let xs = [1.0, 2.0, 2.0, 3.0, 10.0];
        let ys = [10.0, 20.0, 20.0, 21.0, 300.0];
        assert_abs_diff_eq!(spearman(&xs, &ys).unwrap(), 1.0, epsilon = 1e-12);
    }

    // Brute-force rank oracle: rank(x_i) by counting smaller and equal values.
    fn rank_by_counting(xs: &[f64]) -> Vec<f64> {
        xs.iter()
            .map(|&xi| {
                let below = xs.iter().filter(|&&x| x < xi).count();
                let equal = xs.iter().filter(|&&x| x == xi).count();
                below as f64 + (equal as f64 + 1.0) / 2.0
            })
            .collect()
    }

    #[test]
    fn spearman_matches_counting_oracle() {
        let xs = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0];
        let ys = [2.0, 7.0, 1.0, 8.0, 2.0, 8.0, 1.0, 8.0, 2.0, 8.0];
        let via_ranks = pearson(&rank_by_counting(&xs), &rank_by_counting(&ys)).unwrap();
        assert_abs_diff_eq!(spearman(&xs, &ys).unwrap(), via_ranks, epsilon = 1e-12);
    }

    #[test]
    fn nearest_rank_examples() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        // ceil(0.05 * 100) = 5 -> fifth smallest
        assert_eq!(nearest_rank_percentile(&v, 5.0).unwrap(), 5.0);
        assert_eq!(nearest_rank_percentile(&[7.0], 50.0).unwrap(), 7.0);
        assert!(nearest_rank_percentile(&v, 0.0).is_err());
        assert!(nearest_rank_percentile(&v, 100.0).is_err());
    }

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let fit = fit_line(&xs, &ys).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.rmse, 0.0, epsilon = 1e-12);
    }
}
