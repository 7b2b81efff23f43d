//! Monte Carlo harness: pointwise consistency, CLT shape, uniform
//! consistency over a grid of `S_tau`, and small-ball rate validation.
//!
//! Every replicate draws from a generator keyed by
//! `(master seed, experiment tag, n, replicate)`, so results do not depend on
//! the number of worker threads or on scheduling order. Work is spread over a
//! dedicated rayon pool and collected in index order.

use std::io;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{a_opt_pointwise, a_opt_uniform};
use crate::datagen::{
    draw_iid_point, draw_ma_point, gen_nar, gen_regressors, gen_response, NoiseSpec, ProcessKind,
    ProcessSpec, RegressionFunctionSpec,
};
use crate::error::{invalid, Error, Result};
use crate::estimator::{bias_bound, nw_estimate, standardize_error, RegressionSample};
use crate::kernels::{estimate_xi, KernelSpec};
use crate::rng::{derive_seed, purpose, stream};
use crate::seqspace::{cover_grid, BandwidthSchedule, SeqPoint, TruncSet, DEFAULT_GRID_CAP};
use crate::smallball::{rate_constants, truncate_coeffs, DistSpec, RateConstants, Variant};
use crate::stats::{self, LineFit};

/// How the bandwidth `h` is chosen for a sample of size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum BandwidthPolicy {
    Fixed { h: f64 },
    /// `h = scale (log n)^{a_opt}` with the pointwise exponent, or the
    /// uniform-consistency exponent when `uniform` is set.
    RateOptimal {
        beta: f64,
        scale: f64,
        #[serde(default)]
        uniform: bool,
    },
}

impl BandwidthPolicy {
    pub fn h(&self, n: usize, p: f64) -> Result<f64> {
        match *self {
            BandwidthPolicy::Fixed { h } => {
                if h > 0.0 && h.is_finite() {
                    Ok(h)
                } else {
                    Err(invalid(format!("fixed bandwidth must be positive, got {h}")))
                }
            }
            BandwidthPolicy::RateOptimal { beta, scale, uniform } => {
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(invalid(format!("bandwidth scale must be positive, got {scale}")));
                }
                let nf = n as f64;
                let a = if uniform {
                    a_opt_uniform(nf, beta, p)?
                } else {
                    a_opt_pointwise(nf, beta, p)?
                };
                Ok(scale * nf.ln().powf(a))
            }
        }
    }
}

/// Where the estimator is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvalSpec {
    /// Explicit points, zero-padded or truncated to the regressor length.
    Points { points: Vec<Vec<f64>> },
    /// [`cover_grid`] of `S_{grid_tau}` with radius `lambda`, embedded in the
    /// first `grid_tau` coordinates.
    CoverGrid { grid_tau: usize, lambda: f64, eta: f64 },
}

impl EvalSpec {
    pub fn origin() -> Self {
        EvalSpec::Points { points: vec![vec![0.0]] }
    }

    pub fn points(&self, tau: usize) -> Result<Vec<SeqPoint>> {
        match self {
            EvalSpec::Points { points } => {
                if points.is_empty() {
                    return Err(invalid("no evaluation points given"));
                }
                points.iter().map(|c| Ok(SeqPoint::new(c.clone())?.resized(tau))).collect()
            }
            EvalSpec::CoverGrid { grid_tau, lambda, eta } => {
                if *grid_tau > tau {
                    return Err(invalid(format!(
                        "grid dimension {grid_tau} exceeds the regressor length {tau}"
                    )));
                }
                let set = TruncSet::new(*grid_tau, *lambda)?;
                Ok(cover_grid(&set, *eta, DEFAULT_GRID_CAP)?
                    .into_iter()
                    .map(|p| p.resized(tau))
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub process: ProcessSpec,
    pub regression: RegressionFunctionSpec,
    pub noise: NoiseSpec,
    pub kernel: KernelSpec,
    /// Bandwidth growth exponent: `h_j = j^p h`.
    pub p: f64,
    pub bandwidth: BandwidthPolicy,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub eval: EvalSpec,
    pub seed: u64,
    /// Fill `elapsed_ms`; off by default so output is byte-reproducible.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.process.validate()?;
        self.regression.validate()?;
        self.noise.validate()?;
        if self.replicates < 2 {
            return Err(invalid(format!("need at least 2 replicates, got {}", self.replicates)));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("n_grid must be non-empty and strictly increasing"));
        }
        if self.n_grid[0] < 3 {
            return Err(invalid("sample sizes must be at least 3"));
        }
        BandwidthSchedule::new(self.p, 1.0, self.kernel.lambda)?;
        for &n in &self.n_grid {
            self.bandwidth.h(n, self.p)?;
        }
        Ok(())
    }

    pub fn schedule(&self, n: usize) -> Result<BandwidthSchedule> {
        BandwidthSchedule::new(self.p, self.bandwidth.h(n, self.p)?, self.kernel.lambda)
    }

    /// One regression sample of size `n` with regressors of length `tau`.
    pub fn draw_sample(&self, n: usize, tau: usize, seed: u64) -> Result<RegressionSample> {
        let process = self.process.with_tau(tau);
        match process.kind {
            ProcessKind::NarInfinite { .. } => Ok(gen_nar(&process, &self.regression, n, seed)?.1),
            _ => {
                let x = gen_regressors(&process, n, seed)?;
                let y = gen_response(&x, &self.regression, &self.noise, seed)?;
                RegressionSample::new(y, x)
            }
        }
    }
}

/// Which experiment a record belongs to; also keys the replicate streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Consistency,
    Clt,
    Uniform,
}

impl ExperimentKind {
    fn tag(self) -> u64 {
        match self {
            ExperimentKind::Consistency => 101,
            ExperimentKind::Clt => 102,
            ExperimentKind::Uniform => 103,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Consistency => "consistency",
            ExperimentKind::Clt => "clt",
            ExperimentKind::Uniform => "uniform",
        }
    }

    /// Regressor length at sample size `n`: `ceil(log n)` for the uniform
    /// experiment, the configured truncation otherwise.
    pub fn tau(self, cfg: &ExperimentConfig, n: usize) -> usize {
        match self {
            ExperimentKind::Uniform => (n as f64).ln().ceil() as usize,
            _ => cfg.process.tau,
        }
    }
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub n: usize,
    pub replicate: usize,
    pub point: usize,
    pub estimate: Option<f64>,
    pub truth: f64,
    pub abs_error: Option<f64>,
    pub empty_window: bool,
    pub phi_hat: f64,
    pub elapsed_ms: u64,
}

/// Writes records with the header
/// `experiment,n,replicate,point,estimate,truth,abs_error,empty_window,phi_hat,elapsed_ms`.
pub fn write_records<W: io::Write>(out: W, records: &[ResultRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record([
            "experiment", "n", "replicate", "point", "estimate", "truth", "abs_error",
            "empty_window", "phi_hat", "elapsed_ms",
        ])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn replicate_seed(cfg: &ExperimentConfig, kind: ExperimentKind, n: usize, replicate: usize) -> u64 {
    derive_seed(cfg.seed, &[kind.tag(), n as u64, replicate as u64, purpose::REPLICATE])
}

/// Draws replicate `replicate` at size `n` and evaluates it at `points`.
/// Generator failures are reported in the second slot; the records then carry
/// no estimate.
fn evaluate_replicate(
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
    n: usize,
    replicate: usize,
    points: &[(usize, SeqPoint)],
) -> (Vec<ResultRecord>, Option<String>) {
    let start = Instant::now();
    let tau = kind.tau(cfg, n);
    let prepared = cfg
        .schedule(n)
        .and_then(|s| Ok((s, cfg.draw_sample(n, tau, replicate_seed(cfg, kind, n, replicate))?)));
    let mut failure = None;
    let mut out = Vec::with_capacity(points.len());
    for (id, x) in points {
        let truth = cfg.regression.eval(x.coords());
        let mut rec = ResultRecord {
            experiment: kind.name().to_string(),
            n,
            replicate,
            point: *id,
            estimate: None,
            truth,
            abs_error: None,
            empty_window: false,
            phi_hat: 0.0,
            elapsed_ms: 0,
        };
        match &prepared {
            Ok((sched, sample)) => match nw_estimate(sample, x, &cfg.kernel, sched) {
                Ok(est) => {
                    rec.estimate = Some(est.value);
                    rec.abs_error = Some((est.value - truth).abs());
                    rec.phi_hat = est.phi_hat();
                }
                Err(Error::EmptyWindow) => rec.empty_window = true,
                Err(e) => {
                    failure.get_or_insert_with(|| e.to_string());
                }
            },
            Err(e) => {
                failure.get_or_insert_with(|| e.to_string());
            }
        }
        out.push(rec);
    }
    if cfg.record_timing {
        let ms = start.elapsed().as_millis() as u64;
        for r in &mut out {
            r.elapsed_ms = ms;
        }
    }
    (out, failure)
}

/// Recomputes a single `(n, replicate, point)` cell from its coordinates.
pub fn rerun_cell(
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
    n: usize,
    replicate: usize,
    point: usize,
) -> Result<ResultRecord> {
    cfg.validate()?;
    let pts = cfg.eval.points(kind.tau(cfg, n))?;
    let x = pts
        .get(point)
        .ok_or_else(|| invalid(format!("point {point} out of range ({} points)", pts.len())))?;
    let (mut recs, failure) = evaluate_replicate(cfg, kind, n, replicate, &[(point, x.clone())]);
    match failure {
        Some(msg) => Err(Error::InvalidArgument(msg)),
        None => Ok(recs.remove(0)),
    }
}

/// Runs every `(n, replicate)` job and returns records in `(n, replicate,
/// point)` order.
fn run_grid(
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
    threads: usize,
) -> Result<(Vec<ResultRecord>, Vec<String>)> {
    let mut per_n_points = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let pts: Vec<(usize, SeqPoint)> =
            cfg.eval.points(kind.tau(cfg, n))?.into_iter().enumerate().collect();
        per_n_points.push(pts);
    }
    let jobs: Vec<(usize, usize)> = (0..cfg.n_grid.len())
        .flat_map(|i| (0..cfg.replicates).map(move |r| (i, r)))
        .collect();
    let results: Vec<(Vec<ResultRecord>, Option<String>)> = in_pool(threads, || {
        jobs.par_iter()
            .map(|&(i, r)| evaluate_replicate(cfg, kind, cfg.n_grid[i], r, &per_n_points[i]))
            .collect()
    })?;
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for ((i, r), (recs, fail)) in jobs.iter().zip(results) {
        if let Some(msg) = fail {
            failures.push(format!("n={} replicate={r}: {msg}", cfg.n_grid[*i]));
        }
        records.extend(recs);
    }
    Ok((records, failures))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub point: usize,
    pub h: f64,
    pub median_abs_error: Option<f64>,
    pub empty_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencySummary {
    pub cells: Vec<CellSummary>,
    pub failures: Vec<String>,
}

impl ConsistencySummary {
    /// Median absolute errors across `n_grid` at one evaluation point.
    pub fn medians_at(&self, point: usize) -> Vec<Option<f64>> {
        self.cells.iter().filter(|c| c.point == point).map(|c| c.median_abs_error).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub records: Vec<ResultRecord>,
    pub summary: ConsistencySummary,
}

/// Median absolute error per `(n, point)` across replicates, plus the share of
/// replicates whose window was empty.
pub fn run_consistency(cfg: &ExperimentConfig, threads: usize) -> Result<ConsistencyReport> {
    cfg.validate()?;
    let (records, failures) = run_grid(cfg, ExperimentKind::Consistency, threads)?;
    let n_points = cfg.eval.points(cfg.process.tau)?.len();
    let mut cells = Vec::new();
    for &n in &cfg.n_grid {
        let h = cfg.bandwidth.h(n, cfg.p)?;
        for point in 0..n_points {
            let rows: Vec<&ResultRecord> =
                records.iter().filter(|r| r.n == n && r.point == point).collect();
            let errs: Vec<f64> = rows.iter().filter_map(|r| r.abs_error).collect();
            let empty = rows.iter().filter(|r| r.empty_window).count();
            cells.push(CellSummary {
                n,
                point,
                h,
                median_abs_error: stats::median(&errs),
                empty_rate: empty as f64 / rows.len() as f64,
            });
        }
    }
    Ok(ConsistencyReport { records, summary: ConsistencySummary { cells, failures } })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltSummary {
    pub n: usize,
    pub h: f64,
    pub used: usize,
    pub empty_windows: usize,
    pub raw_mean: f64,
    pub raw_sd: f64,
    pub ks_distance: f64,
    /// `1.63 / sqrt(used)`, the asymptotic 1% critical value.
    pub ks_critical: f64,
    pub mean_phi_hat: f64,
    /// Mean and standard deviation of the theory-scaled errors, when the
    /// kernel constants could be estimated.
    pub theory_mean: Option<f64>,
    pub theory_sd: Option<f64>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltReport {
    pub records: Vec<ResultRecord>,
    /// Errors after subtracting their mean and dividing by their standard
    /// deviation, in replicate order.
    pub standardized: Vec<f64>,
    pub theory_scaled: Vec<f64>,
    pub summary: CltSummary,
}

/// KS coefficient at the 1% level.
pub const KS_C_01: f64 = 1.63;

/// Distribution of `m_hat(x) - m(x)` at the first evaluation point for a
/// single sample size.
pub fn run_clt(cfg: &ExperimentConfig, threads: usize) -> Result<CltReport> {
    cfg.validate()?;
    if cfg.replicates < 200 {
        return Err(invalid(format!("the CLT run needs at least 200 replicates, got {}", cfg.replicates)));
    }
    if cfg.n_grid.len() != 1 {
        return Err(invalid("the CLT run takes exactly one sample size"));
    }
    let n = cfg.n_grid[0];
    let tau = cfg.process.tau;
    let x = cfg.eval.points(tau)?.swap_remove(0);
    let jobs: Vec<usize> = (0..cfg.replicates).collect();
    let pts = [(0usize, x.clone())];
    let results: Vec<(Vec<ResultRecord>, Option<String>)> = in_pool(threads, || {
        jobs.par_iter()
            .map(|&r| evaluate_replicate(cfg, ExperimentKind::Clt, n, r, &pts))
            .collect()
    })?;
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (r, (recs, fail)) in results.into_iter().enumerate() {
        if let Some(msg) = fail {
            failures.push(format!("replicate={r}: {msg}"));
        }
        records.extend(recs);
    }
    let errors: Vec<f64> =
        records.iter().filter_map(|r| r.estimate.map(|e| e - r.truth)).collect();
    let empty_windows = records.iter().filter(|r| r.empty_window).count();
    let standardized = stats::restandardize(&errors)?;
    let ks_distance = stats::ks_distance_normal(&standardized);
    let phis: Vec<f64> = records.iter().filter(|r| r.estimate.is_some()).map(|r| r.phi_hat).collect();
    let mean_phi_hat = stats::mean(&phis);

    let sched = cfg.schedule(n)?;
    let theory_scaled = theory_scaled_errors(cfg, &sched, &x, n, mean_phi_hat, &errors).unwrap_or_default();
    let (theory_mean, theory_sd) = if theory_scaled.len() >= 2 {
        (Some(stats::mean(&theory_scaled)), Some(stats::sample_sd(&theory_scaled)))
    } else {
        (None, None)
    };
    let summary = CltSummary {
        n,
        h: sched.h(),
        used: errors.len(),
        empty_windows,
        raw_mean: stats::mean(&errors),
        raw_sd: stats::sample_sd(&errors),
        ks_distance,
        ks_critical: stats::ks_critical(errors.len(), KS_C_01),
        mean_phi_hat,
        theory_mean,
        theory_sd,
        failures,
    };
    Ok(CltReport { records, standardized, theory_scaled, summary })
}

/// `(m_hat - m - bias_bound) / sqrt(sigma^2 xi_2 / (n phi xi_1^2))` with
/// `xi` estimated by Monte Carlo from the design and `phi` from the data.
fn theory_scaled_errors(
    cfg: &ExperimentConfig,
    sched: &BandwidthSchedule,
    x: &SeqPoint,
    n: usize,
    phi: f64,
    errors: &[f64],
) -> Result<Vec<f64>> {
    let tau = cfg.process.tau;
    let xi_seed = derive_seed(cfg.seed, &[ExperimentKind::Clt.tag(), purpose::XI]);
    let xi = match &cfg.process.kind {
        ProcessKind::IidRegressors { dist } => {
            estimate_xi(&cfg.kernel, |rng| draw_iid_point(dist, tau, rng), x, sched, 200_000, xi_seed)?
        }
        ProcessKind::GaussianMa { coeffs } => {
            let a = truncate_coeffs(coeffs);
            estimate_xi(&cfg.kernel, |rng| draw_ma_point(&a, tau, rng), x, sched, 200_000, xi_seed)?
        }
        ProcessKind::NarInfinite { .. } => {
            return Err(invalid("no closed-form regressor law for the autoregressive design"))
        }
    };
    let sigma = cfg.noise.sigma(x.coords());
    let variance = sigma * sigma * xi.xi2 / (xi.xi1 * xi.xi1);
    let bias = bias_bound(sched.h(), cfg.regression.beta, sched.lambda(), &cfg.regression.coeffs, cfg.p)?;
    errors
        .iter()
        .map(|e| standardize_error(*e, 0.0, bias, n, phi, variance))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformSummary {
    pub n_grid: Vec<usize>,
    pub tau: Vec<usize>,
    pub h: Vec<f64>,
    pub grid_points: Vec<usize>,
    /// `[n index][replicate]` sup error over the non-empty grid points.
    pub sup_errors: Vec<Vec<Option<f64>>>,
    pub median_sup: Vec<Option<f64>>,
    pub empty_windows: Vec<usize>,
    /// Share of replicate indices whose sup error decreases strictly in `n`.
    pub decreasing_fraction: f64,
    /// `log median_sup` regressed on `beta a_opt log log n`.
    pub rate_fit: Option<LineFit>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformReport {
    pub records: Vec<ResultRecord>,
    pub summary: UniformSummary,
}

/// Sup-norm error over a cover grid, with regressors truncated at
/// `tau = ceil(log n)`.
pub fn run_uniform(cfg: &ExperimentConfig, threads: usize) -> Result<UniformReport> {
    cfg.validate()?;
    let kind = ExperimentKind::Uniform;
    let (records, failures) = run_grid(cfg, kind, threads)?;
    let mut sup_errors = Vec::new();
    let mut median_sup = Vec::new();
    let mut empty_windows = Vec::new();
    let mut grid_points = Vec::new();
    let mut taus = Vec::new();
    let mut hs = Vec::new();
    for &n in &cfg.n_grid {
        taus.push(kind.tau(cfg, n));
        hs.push(cfg.bandwidth.h(n, cfg.p)?);
        let rows: Vec<&ResultRecord> = records.iter().filter(|r| r.n == n).collect();
        grid_points.push(rows.iter().map(|r| r.point).max().map_or(0, |m| m + 1));
        empty_windows.push(rows.iter().filter(|r| r.empty_window).count());
        let sups: Vec<Option<f64>> = (0..cfg.replicates)
            .map(|rep| {
                rows.iter()
                    .filter(|r| r.replicate == rep)
                    .filter_map(|r| r.abs_error)
                    .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e))))
            })
            .collect();
        let finite: Vec<f64> = sups.iter().flatten().copied().collect();
        median_sup.push(stats::median(&finite));
        sup_errors.push(sups);
    }
    let decreasing = (0..cfg.replicates)
        .filter(|&rep| {
            let path: Option<Vec<f64>> = sup_errors.iter().map(|s| s[rep]).collect();
            path.is_some_and(|p| p.windows(2).all(|w| w[1] < w[0]))
        })
        .count();
    let rate_fit = match cfg.bandwidth {
        BandwidthPolicy::RateOptimal { beta, .. } if cfg.n_grid.len() >= 2 => {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (&n, m) in cfg.n_grid.iter().zip(&median_sup) {
                if let Some(m) = m.filter(|m| *m > 0.0) {
                    let nf = n as f64;
                    xs.push(beta * a_opt_uniform(nf, beta, cfg.p)? * nf.ln().ln());
                    ys.push(m.ln());
                }
            }
            stats::ols(&xs, &ys).ok()
        }
        _ => None,
    };
    let summary = UniformSummary {
        n_grid: cfg.n_grid.clone(),
        tau: taus,
        h: hs,
        grid_points,
        sup_errors,
        median_sup,
        empty_windows,
        decreasing_fraction: decreasing as f64 / cfg.replicates as f64,
        rate_fit,
        failures,
    };
    Ok(UniformReport { records, summary })
}

/// Configuration of the small-ball rate check at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmallBallConfig {
    /// `iid_regressors` or `gaussian_ma`.
    pub process: ProcessSpec,
    pub p: f64,
    pub lambda: f64,
    pub h_grid: Vec<f64>,
    pub draws: usize,
    pub seed: u64,
}

/// Smallest admissible number of draws per bandwidth.
pub const MIN_SMALL_BALL_DRAWS: usize = 1_000_000;
const SMALL_BALL_CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallBallReport {
    pub h_grid: Vec<f64>,
    pub phi_hat: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Regressor `(lambda h)^{-2/(2p-1)}`.
    pub abscissa: Vec<f64>,
    /// `log phi_hat - poly log(lambda h)`.
    pub response: Vec<f64>,
    pub fit: LineFit,
    /// `-C**`, or `-C**_G C_A^{2/(2p-1)}` for moving-average regressors.
    pub predicted_slope: f64,
    /// `|slope - predicted| / |predicted|`.
    pub relative_error: f64,
    pub constants: RateConstants,
    pub draws: usize,
}

/// Estimates `phi_0(lambda h)` on the h-grid from shared draws and regresses
/// its logarithm on `(lambda h)^{-2/(2p-1)}`.
pub fn run_smallball_validation(cfg: &SmallBallConfig, threads: usize) -> Result<SmallBallReport> {
    cfg.process.validate()?;
    if cfg.h_grid.len() < 5 {
        return Err(invalid(format!("the h-grid needs at least 5 points, got {}", cfg.h_grid.len())));
    }
    if cfg.h_grid.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(invalid("h-grid values must be positive"));
    }
    if cfg.draws < MIN_SMALL_BALL_DRAWS {
        return Err(invalid(format!(
            "need at least {MIN_SMALL_BALL_DRAWS} draws per bandwidth, got {}",
            cfg.draws
        )));
    }
    let tau = cfg.process.tau;
    let sched = BandwidthSchedule::new(cfg.p, 1.0, cfg.lambda)?;
    let inv_sq = sched.inverse_sq_bandwidths(tau);
    let (constants, draw): (RateConstants, Box<dyn Fn(&mut crate::rng::StreamRng) -> SeqPoint + Sync>) =
        match &cfg.process.kind {
            ProcessKind::IidRegressors { dist } => {
                let c = rate_constants(dist, cfg.p, cfg.lambda, Variant::Iid, None)?;
                let d = *dist;
                (c, Box::new(move |rng| draw_iid_point(&d, tau, rng)))
            }
            ProcessKind::GaussianMa { coeffs } => {
                let a = truncate_coeffs(coeffs);
                let c = rate_constants(&DistSpec::ChiSq1, cfg.p, cfg.lambda, Variant::GaussianDependent, Some(&a))?;
                (c, Box::new(move |rng| draw_ma_point(&a, tau, rng)))
            }
            ProcessKind::NarInfinite { .. } => {
                return Err(invalid("small-ball validation needs iid or moving-average regressors"))
            }
        };
    // hits at radius lambda h  <=>  sum_j X_j^2 j^{-2p} <= (lambda h)^2
    let radii_sq: Vec<f64> = cfg.h_grid.iter().map(|h| (cfg.lambda * h).powi(2)).collect();
    let chunks = cfg.draws.div_ceil(SMALL_BALL_CHUNK);
    let counts: Vec<Vec<u64>> = in_pool(threads, || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = stream(cfg.seed, &[purpose::SMALL_BALL, c as u64]);
                let len = SMALL_BALL_CHUNK.min(cfg.draws - c * SMALL_BALL_CHUNK);
                let mut hits = vec![0u64; radii_sq.len()];
                for _ in 0..len {
                    let z = draw(&mut rng);
                    let q: f64 = z.coords().iter().zip(&inv_sq).map(|(v, w)| v * v * w).sum();
                    for (k, r2) in radii_sq.iter().enumerate() {
                        if q <= *r2 {
                            hits[k] += 1;
                        }
                    }
                }
                hits
            })
            .collect()
    })?;
    let total: Vec<u64> =
        (0..radii_sq.len()).map(|k| counts.iter().map(|c| c[k]).sum()).collect();
    let n = cfg.draws as f64;
    let mut phi_hat = Vec::new();
    let mut stderr = Vec::new();
    for (k, &hits) in total.iter().enumerate() {
        if hits == 0 {
            return Err(Error::InsufficientHits(cfg.h_grid[k]));
        }
        let phi = hits as f64 / n;
        phi_hat.push(phi);
        stderr.push((phi * (1.0 - phi) / n).sqrt());
    }
    let k_exp = constants.decay_exponent();
    let poly = constants.polynomial_exponent();
    let abscissa: Vec<f64> = cfg.h_grid.iter().map(|h| (cfg.lambda * h).powf(-k_exp)).collect();
    let response: Vec<f64> = cfg
        .h_grid
        .iter()
        .zip(&phi_hat)
        .map(|(h, phi)| phi.ln() - poly * (cfg.lambda * h).ln())
        .collect();
    let fit = stats::ols(&abscissa, &response)?;
    let predicted_slope = -constants.exponential_coefficient();
    Ok(SmallBallReport {
        h_grid: cfg.h_grid.clone(),
        phi_hat,
        stderr,
        abscissa,
        response,
        relative_error: ((fit.slope - predicted_slope) / predicted_slope).abs(),
        fit,
        predicted_slope,
        constants,
        draws: cfg.draws,
    })
}

/// Reference configurations for the built-in experiments.
///
/// All of them regress on `m(x) = sum_j e^{-j} x_j` with Gaussian noise
/// `sigma = 0.5`, the Epanechnikov kernel on `[0, 1]` and `p = 2`. The
/// Lambert-W bandwidth rule carries the constant factor [`presets::H_SCALE`];
/// without it the in-window count `n phi` stays near 10 for
/// `n <= 10^4` and the error does not visibly shrink.
pub mod presets {
    use super::*;
    use crate::kernels::KernelKind;

    pub const H_SCALE: f64 = 3.0;
    pub const SEED: u64 = 20_240_601;

    fn common(process: ProcessSpec, bandwidth: BandwidthPolicy) -> ExperimentConfig {
        ExperimentConfig {
            process,
            regression: RegressionFunctionSpec::linear_geometric(1.0, 1.0),
            noise: NoiseSpec::constant(0.5),
            kernel: KernelSpec { kind: KernelKind::EpanechnikovII, lambda: 1.0 },
            p: 2.0,
            bandwidth,
            n_grid: vec![],
            replicates: 0,
            eval: EvalSpec::origin(),
            seed: SEED,
            record_timing: false,
        }
    }

    fn pointwise() -> BandwidthPolicy {
        BandwidthPolicy::RateOptimal { beta: 1.0, scale: H_SCALE, uniform: false }
    }

    /// Gaussian MA(`a_j = 0.5^j`) regressors of length 20 at the origin,
    /// `n = 500, 2000, 8000`, 200 replicates.
    pub fn consistency() -> ExperimentConfig {
        let a = crate::datagen::geometric_ma_coeffs(0.5).expect("valid ratio");
        ExperimentConfig {
            n_grid: vec![500, 2000, 8000],
            replicates: 200,
            ..common(ProcessSpec::gaussian_ma(a, 20), pointwise())
        }
    }

    /// Standard Gaussian i.i.d. regressors of length 20 at the origin,
    /// `n = 5000`, 500 replicates.
    pub fn clt() -> ExperimentConfig {
        ExperimentConfig {
            n_grid: vec![5000],
            replicates: 500,
            ..common(ProcessSpec::iid(DistSpec::ChiSq1, 20), pointwise())
        }
    }

    /// Standard Gaussian i.i.d. regressors, `n = 10^3, 10^4, 10^5`, sup error
    /// over the 9-point cover grid of `S_2` with radius 1/2.
    pub fn uniform() -> ExperimentConfig {
        ExperimentConfig {
            n_grid: vec![1000, 10_000, 100_000],
            replicates: 40,
            eval: EvalSpec::CoverGrid { grid_tau: 2, lambda: 0.5, eta: 1.0 },
            ..common(
                ProcessSpec::iid(DistSpec::ChiSq1, 1),
                BandwidthPolicy::RateOptimal { beta: 1.0, scale: H_SCALE, uniform: true },
            )
        }
    }

    /// `p = 2`, `lambda = 1`, 60 coordinates, `10^6` draws on six
    /// geometrically spaced `h` in `[0.1, 0.6]`.
    pub fn smallball(moving_average: bool) -> SmallBallConfig {
        let process = if moving_average {
            ProcessSpec::gaussian_ma(crate::datagen::geometric_ma_coeffs(0.5).expect("valid ratio"), 60)
        } else {
            ProcessSpec::iid(DistSpec::ChiSq1, 60)
        };
        SmallBallConfig {
            process,
            p: 2.0,
            lambda: 1.0,
            h_grid: (0..6).map(|i| 0.1 * 6f64.powf(i as f64 / 5.0)).collect(),
            draws: MIN_SMALL_BALL_DRAWS,
            seed: SEED,
        }
    }
}
