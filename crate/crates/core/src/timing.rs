//! Inter-event times: extraction, per-user mean normalization, and power-law
//! exponent fitting on the pooled distribution.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::num::Real;
use crate::paths::{ForumArchive, TimingVector};
use crate::stats;

#[derive(Debug, Error)]
pub enum TimingError {
    #[error("need at least two events for inter-event times, got {0}")]
    TooFewEvents(usize),
    #[error("need at least {need} samples for a power-law fit, got {got}")]
    InsufficientSamples { got: usize, need: usize },
    #[error("samples span {decades:.3} decades; need at least one")]
    InsufficientDynamicRange { decades: f64 },
    #[error("fewer than three nonempty bins")]
    TooFewBins,
    #[error("bins_per_decade must be positive")]
    ZeroBins,
    #[error("samples must be positive and finite")]
    BadSample,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Positive gaps between consecutive events of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct InterEventSample<F> {
    pub deltas: Vec<F>,
    /// Number of zero gaps dropped.
    pub zeros_dropped: usize,
}

/// Gaps between consecutive event times. The registration gap `t1 - t0` is
/// excluded; zero gaps are dropped and counted.
pub fn inter_event_times<F: Real>(tv: &TimingVector) -> Result<InterEventSample<F>, TimingError> {
    if tv.event_times.len() < 2 {
        return Err(TimingError::TooFewEvents(tv.event_times.len()));
    }
    let mut deltas = Vec::with_capacity(tv.event_times.len() - 1);
    let mut zeros_dropped = 0usize;
    for pair in tv.event_times.windows(2) {
        let dt = pair[1] - pair[0];
        if dt == 0 {
            zeros_dropped += 1;
        } else {
            deltas.push(F::of_f64(dt as f64));
        }
    }
    Ok(InterEventSample { deltas, zeros_dropped })
}

/// Union of mean-normalized per-user gaps across qualifying users.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledDeltas<F> {
    pub values: Vec<F>,
    pub users_pooled: usize,
    pub users_skipped: usize,
    pub zeros_dropped: usize,
}

impl<F> Default for PooledDeltas<F> {
    fn default() -> Self {
        Self {
            values: Vec::new(),
            users_pooled: 0,
            users_skipped: 0,
            zeros_dropped: 0,
        }
    }
}

/// For each user with at least `min_events` events, divide their gaps by the
/// user's own mean gap (making each user's mean exactly 1) and pool.
pub fn normalize_and_pool<F: Real>(archive: &ForumArchive, min_events: usize) -> PooledDeltas<F> {
    let mut pooled = PooledDeltas::default();
    for history in archive.users.values() {
        if history.path.length() < min_events {
            pooled.users_skipped += 1;
            continue;
        }
        let sample: InterEventSample<F> = match inter_event_times(&history.timing) {
            Ok(s) => s,
            Err(_) => {
                pooled.users_skipped += 1;
                continue;
            }
        };
        pooled.zeros_dropped += sample.zeros_dropped;
        if sample.deltas.is_empty() {
            pooled.users_skipped += 1;
            continue;
        }
        let mean = sample.deltas.iter().copied().sum::<F>() / F::of_usize(sample.deltas.len());
        pooled.values.extend(sample.deltas.iter().map(|&d| d / mean));
        pooled.users_pooled += 1;
    }
    pooled
}

/// Power-law fit of an empirical density: `density ~ x^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit<F> {
    pub exponent: F,
    pub fit_range: (F, F),
    /// Nonempty bins used in the fit.
    pub bins: usize,
    /// RMS residual of the line fit in log-log space.
    pub residual: F,
}

const MIN_FIT_SAMPLES: usize = 50;

/// Fit a power law by logarithmic binning: histogram with `bins_per_decade`
/// log-spaced bins, empirical density per bin, then least squares on
/// (log10 bin center, log10 density) over nonempty bins.
pub fn fit_power_law<F: Real>(
    samples: &[F],
    bins_per_decade: usize,
) -> Result<PowerLawFit<F>, TimingError> {
    if bins_per_decade == 0 {
        return Err(TimingError::ZeroBins);
    }
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(TimingError::InsufficientSamples {
            got: samples.len(),
            need: MIN_FIT_SAMPLES,
        });
    }
    if samples.iter().any(|&x| !(x > F::zero()) || !x.is_finite()) {
        return Err(TimingError::BadSample);
    }
    let min = samples.iter().copied().fold(F::infinity(), F::min);
    let max = samples.iter().copied().fold(F::zero(), F::max);
    let decades = (max / min).log10().to_f64().expect("finite ratio");
    if decades < 1.0 {
        return Err(TimingError::InsufficientDynamicRange { decades });
    }

    let n_bins = (decades * bins_per_decade as f64).ceil() as usize;
    let log_min = min.log10();
    let bin_width_log = F::of_f64(1.0 / bins_per_decade as f64);
    let mut counts = vec![0usize; n_bins];
    for &x in samples {
        let idx = ((x.log10() - log_min) / bin_width_log)
            .floor()
            .to_f64()
            .expect("finite index") as usize;
        counts[idx.min(n_bins - 1)] += 1;
    }

    let total = F::of_usize(samples.len());
    let mut log_centers = Vec::new();
    let mut log_densities = Vec::new();
    for (i, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let lo = log_min + bin_width_log * F::of_usize(i);
        let hi = lo + bin_width_log;
        let edge_lo = F::of_f64(10.0).powf(lo);
        let edge_hi = F::of_f64(10.0).powf(hi);
        let density = F::of_usize(count) / (total * (edge_hi - edge_lo));
        log_centers.push((edge_lo * edge_hi).sqrt().log10());
        log_densities.push(density.log10());
    }
    if log_centers.len() < 3 {
        return Err(TimingError::TooFewBins);
    }
    let fit = stats::fit_line(&log_centers, &log_densities).map_err(|_| TimingError::TooFewBins)?;
    Ok(PowerLawFit {
        exponent: fit.slope,
        fit_range: (min, max),
        bins: log_centers.len(),
        residual: fit.rmse,
    })
}

/// Pooled deltas as a one-column CSV.
pub fn write_deltas_csv<W: Write, F: Real>(
    writer: W,
    pooled: &PooledDeltas<F>,
) -> Result<(), TimingError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["normalized_delta"])
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    for v in &pooled.values {
        wtr.write_record([v.to_string()])
            .map_err(|e| std::io::Error::other(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FitSummary<F> {
    exponent: F,
    range: (F, F),
    bins: usize,
    residual: F,
}

pub fn write_fit_json<W: Write, F: Real + Serialize>(
    mut writer: W,
    fit: &PowerLawFit<F>,
) -> Result<(), TimingError> {
    let summary = FitSummary {
        exponent: fit.exponent,
        range: fit.fit_range,
        bins: fit.bins,
        residual: fit.residual,
    };
    serde_json::to_writer_pretty(&mut writer, &summary).map_err(std::io::Error::other)?;
    writer.write_all(b"\n")?;
    Ok(())
}
