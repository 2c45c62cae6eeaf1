//! Generative models for user paths and their evaluation.
//!
//! Two generators: a Bernoulli coin toss with fixed P(p) = p_post, and a
//! sticking model that penalizes deviations from the target proportion with
//! bias p_harsh. Model fit is judged per user by a two-sample KS test on
//! post-run length multisets.

use std::io::Write;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::num::Real;
use crate::paths::{post_runs, EventKind, ForumArchive, UserPath};
use crate::rng::SeededRng;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("path for user {0:?} is empty")]
    EmptyPath(String),
    #[error("path length must be at least 1")]
    ZeroLength,
    #[error("probability parameter {name} = {value} outside [0, 1]")]
    ParamOutOfRange { name: &'static str, value: f64 },
    #[error("empty sample for KS test")]
    EmptySample,
    #[error("KS sample contains a non-finite value")]
    NonFiniteSample,
    #[error("sticking model requires p_harsh")]
    MissingPHarsh,
    #[error("replicates must be a positive odd number, got {0}")]
    BadReplicates(usize),
    #[error("empty p_harsh grid")]
    EmptyGrid,
    #[error("archive is empty")]
    EmptyArchive,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Per-user generator parameters estimated from a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UserModelParams<F> {
    /// posts / (posts + replies) of the source path.
    pub p_post: F,
    pub path_length: usize,
}

pub fn estimate_p_post<F: Real>(path: &UserPath) -> Result<UserModelParams<F>, ModelError> {
    if path.is_empty() {
        return Err(ModelError::EmptyPath(path.user_id.clone()));
    }
    let posts = F::of_usize(path.posts() as usize);
    let length = F::of_usize(path.length());
    Ok(UserModelParams {
        p_post: posts / length,
        path_length: path.length(),
    })
}

fn check_prob(name: &'static str, value: f64) -> Result<(), ModelError> {
    if !(0.0..=1.0).contains(&value) || value.is_nan() {
        return Err(ModelError::ParamOutOfRange { name, value });
    }
    Ok(())
}

/// Bernoulli path generator: first symbol is always `p`, the remaining
/// `length - 1` symbols are i.i.d. with P(p) = `p_post`.
pub fn generate_coin_toss<R: Rng>(
    length: usize,
    p_post: f64,
    rng: &mut R,
) -> Result<Vec<EventKind>, ModelError> {
    if length < 1 {
        return Err(ModelError::ZeroLength);
    }
    check_prob("p_post", p_post)?;
    let mut symbols = Vec::with_capacity(length);
    symbols.push(EventKind::Post);
    for _ in 1..length {
        symbols.push(if rng.gen_bool(p_post) {
            EventKind::Post
        } else {
            EventKind::Reply
        });
    }
    Ok(symbols)
}

/// Sticking path generator. Starting from `p`, each next symbol is drawn with
/// probability `p_harsh` of restoring the post proportion toward `p_post`
/// (probability 0.5 when the proportion is on target), so paths adhere to the
/// line of slope (1 - p_post) / p_post. `p_harsh = 0.5` reduces to the coin
/// toss with P(p) = 0.5.
pub fn generate_sticking<R: Rng>(
    length: usize,
    p_post: f64,
    p_harsh: f64,
    rng: &mut R,
) -> Result<Vec<EventKind>, ModelError> {
    if length < 1 {
        return Err(ModelError::ZeroLength);
    }
    check_prob("p_post", p_post)?;
    check_prob("p_harsh", p_harsh)?;
    let mut symbols = Vec::with_capacity(length);
    symbols.push(EventKind::Post);
    let mut posts = 1usize;
    for curr_length in 2..=length {
        let curr_prop = posts as f64 / (curr_length - 1) as f64;
        let p_curr = if p_post > curr_prop {
            p_harsh
        } else if p_post < curr_prop {
            1.0 - p_harsh
        } else {
            0.5
        };
        let symbol = if rng.gen_bool(p_curr) {
            EventKind::Post
        } else {
            EventKind::Reply
        };
        if symbol == EventKind::Post {
            posts += 1;
        }
        symbols.push(symbol);
    }
    Ok(symbols)
}

/// Two-sample KS result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsTest<F> {
    /// Supremum distance between the empirical CDFs, in [0, 1].
    pub statistic: F,
    /// Continuous-approximation p-value (Kolmogorov distribution with
    /// effective n = |a||b| / (|a| + |b|) and the Stephens small-sample
    /// factor). Conservative on heavily tied discrete samples.
    pub p_value: F,
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample<F: Real>(a: &[F], b: &[F]) -> Result<KsTest<F>, ModelError> {
    if a.is_empty() || b.is_empty() {
        return Err(ModelError::EmptySample);
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(ModelError::NonFiniteSample);
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).expect("finite values"));
    ys.sort_by(|p, q| p.partial_cmp(q).expect("finite values"));

    let n = xs.len();
    let m = ys.len();
    let (mut i, mut j) = (0usize, 0usize);
    let mut statistic = F::zero();
    while i < n && j < m {
        let current = if xs[i] <= ys[j] { xs[i] } else { ys[j] };
        while i < n && xs[i] == current {
            i += 1;
        }
        while j < m && ys[j] == current {
            j += 1;
        }
        let fa = F::of_usize(i) / F::of_usize(n);
        let fb = F::of_usize(j) / F::of_usize(m);
        let diff = (fa - fb).abs();
        if diff > statistic {
            statistic = diff;
        }
    }
    // Once one sample is exhausted its ECDF is 1 and the gap only shrinks.

    let ne = F::of_usize(n) * F::of_usize(m) / F::of_usize(n + m);
    let sqrt_ne = ne.sqrt();
    let lambda =
        (sqrt_ne + F::of_f64(0.12) + F::of_f64(0.11) / sqrt_ne) * statistic;
    Ok(KsTest {
        statistic,
        p_value: kolmogorov_survival(lambda),
    })
}

/// Q_KS(lambda) = 2 * sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
fn kolmogorov_survival<F: Real>(lambda: F) -> F {
    if lambda <= F::zero() {
        return F::one();
    }
    let minus_two_lambda_sq = F::of_f64(-2.0) * lambda * lambda;
    let mut sum = F::zero();
    let mut sign = F::one();
    for j in 1..=100 {
        let jf = F::of_usize(j);
        let term = sign * (minus_two_lambda_sq * jf * jf).exp();
        sum += term;
        if term.abs() < F::of_f64(1e-10) {
            break;
        }
        sign = -sign;
    }
    (F::of_f64(2.0) * sum).max(F::zero()).min(F::one())
}

/// Which generator to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PathModel {
    Coin,
    Sticking,
}

impl std::str::FromStr for PathModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "coin" => Ok(PathModel::Coin),
            "sticking" => Ok(PathModel::Sticking),
            other => Err(format!("unknown model {other:?} (expected coin or sticking)")),
        }
    }
}

/// Evaluation settings; defaults follow the study design (length >= 20,
/// 5% significance, one synthetic path per user).
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub min_length: usize,
    pub alpha: f64,
    /// Number of synthetic replicates per user; must be odd so that the
    /// majority vote equals the median p-value decision.
    pub replicates: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            min_length: 20,
            alpha: 0.05,
            replicates: 1,
        }
    }
}

/// Per-user evaluation row. With replicates > 1, `ks_statistic` and `p_value`
/// come from the median-p replicate, so `passed == (p_value >= alpha)` always
/// holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserFitRow<F> {
    pub user_id: String,
    pub p_post: F,
    pub path_length: usize,
    pub ks_statistic: F,
    pub p_value: F,
    pub passed: bool,
}

/// Dataset-level model evaluation report.
#[derive(Debug, Clone, Serialize)]
pub struct ModelFitReport<F> {
    pub model: PathModel,
    pub p_harsh: Option<f64>,
    pub alpha: f64,
    pub min_length: usize,
    pub replicates: usize,
    pub users_tested: usize,
    pub users_passed: usize,
    pub rows: Vec<UserFitRow<F>>,
}

/// Evaluate a generator against every user with path length >= `min_length`:
/// estimate p_post, generate synthetic paths of the same length from a
/// per-user derived stream, and KS-compare the post-run multisets.
pub fn evaluate_model_fit<F: Real>(
    archive: &ForumArchive,
    model: PathModel,
    p_harsh: Option<f64>,
    opts: &FitOptions,
    seeds: &SeededRng,
) -> Result<ModelFitReport<F>, ModelError> {
    if archive.is_empty() {
        return Err(ModelError::EmptyArchive);
    }
    if model == PathModel::Sticking {
        match p_harsh {
            None => return Err(ModelError::MissingPHarsh),
            Some(h) => check_prob("p_harsh", h)?,
        }
    }
    if opts.replicates == 0 || opts.replicates % 2 == 0 {
        return Err(ModelError::BadReplicates(opts.replicates));
    }
    check_prob("alpha", opts.alpha)?;

    let mut rows = Vec::new();
    let mut users_passed = 0usize;
    for (user_id, history) in &archive.users {
        let length = history.path.length();
        if length < opts.min_length {
            continue;
        }
        let params: UserModelParams<F> = estimate_p_post(&history.path)?;
        let p_post = params.p_post.to_f64().expect("probability fits f64");
        let empirical: Vec<F> = post_runs(&history.path)
            .lengths
            .iter()
            .map(|&l| F::of_usize(l as usize))
            .collect();

        let mut tests = Vec::with_capacity(opts.replicates);
        for replicate in 0..opts.replicates {
            let mut rng = seeds
                .child(&format!("user={user_id}/rep={replicate}"))
                .rng();
            let symbols = match model {
                PathModel::Coin => generate_coin_toss(length, p_post, &mut rng)?,
                PathModel::Sticking => {
                    generate_sticking(length, p_post, p_harsh.expect("validated"), &mut rng)?
                }
            };
            let synthetic_runs: Vec<F> = post_runs(&UserPath::from_symbols("synthetic", symbols))
                .lengths
                .iter()
                .map(|&l| F::of_usize(l as usize))
                .collect();
            tests.push(ks_two_sample(&empirical, &synthetic_runs)?);
        }
        tests.sort_by(|a, b| a.p_value.partial_cmp(&b.p_value).expect("finite p-values"));
        let median = tests[tests.len() / 2];
        let passed = median.p_value >= F::of_f64(opts.alpha);
        if passed {
            users_passed += 1;
        }
        rows.push(UserFitRow {
            user_id: user_id.clone(),
            p_post: params.p_post,
            path_length: length,
            ks_statistic: median.statistic,
            p_value: median.p_value,
            passed,
        });
    }

    Ok(ModelFitReport {
        model,
        p_harsh: if model == PathModel::Sticking { p_harsh } else { None },
        alpha: opts.alpha,
        min_length: opts.min_length,
        replicates: opts.replicates,
        users_tested: rows.len(),
        users_passed,
        rows,
    })
}

/// The grid 0.50, 0.55, ..., 0.95.
pub fn default_p_harsh_grid() -> Vec<f64> {
    (0..10).map(|i| 0.50 + 0.05 * i as f64).collect()
}

/// Outcome of the p_harsh grid search.
#[derive(Debug, Clone, Serialize)]
pub struct PHarshSearch<F> {
    pub best_p_harsh: f64,
    pub best_report: ModelFitReport<F>,
    /// (p_harsh, users_passed) per grid value, in grid order.
    pub grid_results: Vec<(f64, usize)>,
}

/// Evaluate the sticking model at every grid value (each with its own derived
/// seed) and return the value maximizing users passed; ties go to the
/// smallest p_harsh.
pub fn search_p_harsh<F: Real>(
    archive: &ForumArchive,
    grid: &[f64],
    opts: &FitOptions,
    seeds: &SeededRng,
) -> Result<PHarshSearch<F>, ModelError> {
    if grid.is_empty() {
        return Err(ModelError::EmptyGrid);
    }
    let mut best: Option<(f64, ModelFitReport<F>)> = None;
    let mut grid_results = Vec::with_capacity(grid.len());
    for &value in grid {
        check_prob("p_harsh", value)?;
        let child = seeds.child(&format!("p_harsh={value:.4}"));
        let report =
            evaluate_model_fit(archive, PathModel::Sticking, Some(value), opts, &child)?;
        grid_results.push((value, report.users_passed));
        let better = match &best {
            None => true,
            Some((best_value, best_report)) => {
                report.users_passed > best_report.users_passed
                    || (report.users_passed == best_report.users_passed && value < *best_value)
            }
        };
        if better {
            best = Some((value, report));
        }
    }
    let (best_p_harsh, best_report) = best.expect("nonempty grid");
    Ok(PHarshSearch {
        best_p_harsh,
        best_report,
        grid_results,
    })
}

/// Write per-user rows as CSV: `user_id,p_post,path_length,ks_statistic,p_value,passed`.
pub fn write_fit_rows_csv<W: Write, F: Real>(
    writer: W,
    report: &ModelFitReport<F>,
) -> Result<(), ModelError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["user_id", "p_post", "path_length", "ks_statistic", "p_value", "passed"])
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    for row in &report.rows {
        wtr.write_record([
            row.user_id.as_str(),
            &row.p_post.to_string(),
            &row.path_length.to_string(),
            &row.ks_statistic.to_string(),
            &row.p_value.to_string(),
            &row.passed.to_string(),
        ])
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Dataset-level summary mirroring the per-model evaluation table.
#[derive(Serialize)]
struct FitSummary<'a> {
    model: PathModel,
    users_tested: usize,
    users_passed: usize,
    p_harsh: Option<f64>,
    alpha: f64,
    min_length: usize,
    replicates: usize,
    seed: u64,
    rng_algorithm: &'a str,
}

pub fn write_fit_summary_json<W: Write, F: Real>(
    mut writer: W,
    report: &ModelFitReport<F>,
    seeds: &SeededRng,
) -> Result<(), ModelError> {
    let summary = FitSummary {
        model: report.model,
        users_tested: report.users_tested,
        users_passed: report.users_passed,
        p_harsh: report.p_harsh,
        alpha: report.alpha,
        min_length: report.min_length,
        replicates: report.replicates,
        seed: seeds.seed(),
        rng_algorithm: seeds.algorithm(),
    };
    serde_json::to_writer_pretty(&mut writer, &summary).map_err(std::io::Error::other)?;
    writer.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;
    use crate::paths::{TimingVector, UserHistory};
    use approx::assert_abs_diff_eq;

    fn symbols(s: &str) -> Vec<EventKind> {
        UserPath::parse_symbols(s).unwrap()
    }

    fn symbol_string(symbols: &[EventKind]) -> String {
        symbols.iter().map(|s| s.as_char()).collect()
    }

    #[test]
    fn estimate_p_post_examples() {
        let params: UserModelParams<f64> =
            estimate_p_post(&UserPath::from_symbols("u", symbols("pprp"))).unwrap();
        assert_abs_diff_eq!(params.p_post, 0.75);
        assert_eq!(params.path_length, 4);

        let p: UserModelParams<f64> =
            estimate_p_post(&UserPath::from_symbols("u", symbols("p"))).unwrap();
        assert_abs_diff_eq!(p.p_post, 1.0);

        let p: UserModelParams<f64> =
            estimate_p_post(&UserPath::from_symbols("u", symbols("prprpr"))).unwrap();
        assert_abs_diff_eq!(p.p_post, 0.5);

        assert!(matches!(
            estimate_p_post::<f64>(&UserPath::from_symbols("u", vec![])),
            Err(ModelError::EmptyPath(_))
        ));
    }

    #[test]
    fn coin_toss_forced_first_symbol() {
        let mut rng = SeededRng::new(1).rng();
        let s = generate_coin_toss(1, 0.1, &mut rng).unwrap();
        assert_eq!(symbol_string(&s), "p");
    }

    #[test]
    fn coin_toss_all_posts_at_p_one() {
        let mut rng = SeededRng::new(1).rng();
        let s = generate_coin_toss(50, 1.0, &mut rng).unwrap();
        assert_eq!(symbol_string(&s), "p".repeat(50));
    }

    #[test]
    fn coin_toss_frequency_concentrates() {
        let mut rng = SeededRng::new(2).rng();
        let s = generate_coin_toss(10_000, 0.75, &mut rng).unwrap();
        let posts_after_first = s[1..].iter().filter(|k| **k == EventKind::Post).count();
        let freq = posts_after_first as f64 / (s.len() - 1) as f64;
        assert!((freq - 0.75).abs() < 0.02, "freq = {freq}");
    }

    #[test]
    fn coin_toss_rejects_bad_params() {
        let mut rng = SeededRng::new(1).rng();
        assert!(matches!(
            generate_coin_toss(0, 0.5, &mut rng),
            Err(ModelError::ZeroLength)
        ));
        assert!(matches!(
            generate_coin_toss(5, 1.5, &mut rng),
            Err(ModelError::ParamOutOfRange { .. })
        ));
    }

    // With p_harsh = 1 every off-target step is corrected immediately, so the
    // post count never strays more than one step from the target proportion.
    #[test]
    fn sticking_with_full_harshness_stays_on_line() {
        for (seed, p_post) in [(1u64, 0.5), (2, 0.25), (3, 0.75), (4, 0.6)] {
            let mut rng = SeededRng::new(seed).rng();
            let s = generate_sticking(50, p_post, 1.0, &mut rng).unwrap();
            let mut posts = 0.0;
            for (i, sym) in s.iter().enumerate() {
                if *sym == EventKind::Post {
                    posts += 1.0;
                }
                let len = (i + 1) as f64;
                assert!(
                    (posts - p_post * len).abs() <= 1.0 + 1e-9,
                    "deviated at prefix {len} for p_post {p_post}"
                );
            }
        }
    }

    #[test]
    fn sticking_concentrates_tighter_than_coin() {
        let seeds = SeededRng::new(7);
        let mut rng = seeds.child("stick").rng();
        let s = generate_sticking(10_000, 0.75, 0.8, &mut rng).unwrap();
        let posts = s.iter().filter(|k| **k == EventKind::Post).count();
        let freq = posts as f64 / s.len() as f64;
        assert!((freq - 0.75).abs() < 0.01, "freq = {freq}");

        // Across many paths the final proportion varies less than the coin's.
        let paths = 200;
        let len = 400;
        let spread = |gen: &dyn Fn(&mut rand_chacha::ChaCha8Rng) -> Vec<EventKind>| {
            let mut props = Vec::new();
            for i in 0..paths {
                let mut rng = seeds.child(&format!("cmp/{i}")).rng();
                let s = gen(&mut rng);
                props.push(
                    s.iter().filter(|k| **k == EventKind::Post).count() as f64 / len as f64,
                );
            }
            let mean = props.iter().sum::<f64>() / paths as f64;
            props.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (paths - 1) as f64
        };
        let var_stick = spread(&|rng| generate_sticking(len, 0.75, 0.8, rng).unwrap());
        let var_coin = spread(&|rng| generate_coin_toss(len, 0.75, rng).unwrap());
        assert!(
            var_stick < var_coin,
            "sticking variance {var_stick} should be below coin variance {var_coin}"
        );
    }

    #[test]
    fn ks_identical_samples() {
        let a = [1.0f64, 2.0, 3.0];
        let t = ks_two_sample(&a, &a).unwrap();
        assert_abs_diff_eq!(t.statistic, 0.0);
        assert!(t.p_value > 0.999);
    }

    #[test]
    fn ks_disjoint_samples() {
        let a = [1.0f64, 1.0, 1.0];
        let b = [5.0f64, 5.0, 5.0];
        let t = ks_two_sample(&a, &b).unwrap();
        assert_abs_diff_eq!(t.statistic, 1.0);
    }

    #[test]
    fn ks_half_overlap() {
        let a = [1.0f64, 2.0, 3.0, 4.0];
        let b = [3.0f64, 4.0, 5.0, 6.0];
        let t = ks_two_sample(&a, &b).unwrap();
        assert_abs_diff_eq!(t.statistic, 0.5);
    }

    #[test]
    fn ks_is_symmetric() {
        let a = [1.0f64, 2.0, 2.0, 3.5, 9.0];
        let b = [0.5f64, 2.0, 4.0];
        let t1 = ks_two_sample(&a, &b).unwrap();
        let t2 = ks_two_sample(&b, &a).unwrap();
        assert_abs_diff_eq!(t1.statistic, t2.statistic);
        assert_abs_diff_eq!(t1.p_value, t2.p_value);
    }

    #[test]
    fn ks_rejects_empty() {
        assert!(matches!(
            ks_two_sample::<f64>(&[], &[1.0]),
            Err(ModelError::EmptySample)
        ));
    }

    fn archive_from_symbols(specs: &[(&str, &str)]) -> ForumArchive {
        let mut archive = ForumArchive {
            forum_id: "synthetic".to_string(),
            users: BTreeMap::new(),
        };
        for (user, s) in specs {
            let syms = symbols(s);
            let times: Vec<i64> = (0..syms.len() as i64).collect();
            archive.users.insert(
                user.to_string(),
                UserHistory {
                    path: UserPath::from_symbols(*user, syms),
                    timing: TimingVector { t0: 0, event_times: times },
                },
            );
        }
        archive
    }

    #[test]
    fn evaluate_skips_short_paths() {
        let archive = archive_from_symbols(&[("u", "pprp"), ("v", "pr")]);
        let report: ModelFitReport<f64> = evaluate_model_fit(
            &archive,
            PathModel::Coin,
            None,
            &FitOptions::default(),
            &SeededRng::new(1),
        )
        .unwrap();
        assert_eq!(report.users_tested, 0);
        assert!(report.rows.is_empty());
    }

    #[test]
    fn evaluate_requires_p_harsh_for_sticking() {
        let archive = archive_from_symbols(&[("u", "pprp")]);
        assert!(matches!(
            evaluate_model_fit::<f64>(
                &archive,
                PathModel::Sticking,
                None,
                &FitOptions::default(),
                &SeededRng::new(1)
            ),
            Err(ModelError::MissingPHarsh)
        ));
    }

    #[test]
    fn evaluate_is_seed_stable() {
        let long: String = "ppr".repeat(20);
        let archive = archive_from_symbols(&[("u", &long), ("v", &long)]);
        let seeds = SeededRng::new(9);
        let r1: ModelFitReport<f64> =
            evaluate_model_fit(&archive, PathModel::Coin, None, &FitOptions::default(), &seeds)
                .unwrap();
        let r2: ModelFitReport<f64> =
            evaluate_model_fit(&archive, PathModel::Coin, None, &FitOptions::default(), &seeds)
                .unwrap();
        assert_eq!(r1.rows, r2.rows);
        assert_eq!(r1.users_tested, 2);
    }

    #[test]
    fn evaluate_rejects_even_replicates() {
        let archive = archive_from_symbols(&[("u", "pprp")]);
        let opts = FitOptions { replicates: 2, ..FitOptions::default() };
        assert!(matches!(
            evaluate_model_fit::<f64>(&archive, PathModel::Coin, None, &opts, &SeededRng::new(1)),
            Err(ModelError::BadReplicates(2))
        ));
    }

    #[test]
    fn search_single_value_grid_is_trivial() {
        let long: String = "ppr".repeat(20);
        let archive = archive_from_symbols(&[("u", &long)]);
        let search: PHarshSearch<f64> = search_p_harsh(
            &archive,
            &[0.5],
            &FitOptions::default(),
            &SeededRng::new(1),
        )
        .unwrap();
        assert_abs_diff_eq!(search.best_p_harsh, 0.5);
        assert_eq!(search.grid_results.len(), 1);
    }

    #[test]
    fn default_grid_covers_half_to_ninety_five() {
        let grid = default_p_harsh_grid();
        assert_eq!(grid.len(), 10);
        assert_abs_diff_eq!(grid[0], 0.50);
        assert_abs_diff_eq!(grid[9], 0.95, epsilon = 1e-12);
    }
}
