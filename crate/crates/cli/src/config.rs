//! The TOML experiment file.
//!
//! Schema 1 is a flat document: a top-level `schema = 1` plus optional
//! `[design]`, `[kernel]`, `[bandwidth]`, `[run]`, `[eval]` and
//! `[smallball]` tables. Every key is optional and overrides the built-in
//! preset of the chosen subcommand; unknown keys are rejected.

use serde::Deserialize;

use seqreg::contraction::ContractionSpec;
use seqreg::datagen::{geometric_ma_coeffs, Link, NoiseSpec, ProcessKind, ProcessSpec};
use seqreg::experiments::{BandwidthPolicy, EvalSpec, ExperimentConfig, SmallBallConfig};
use seqreg::{DistSpec, KernelKind};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema: u32,
    #[serde(default)]
    pub design: Design,
    #[serde(default)]
    pub kernel: Kernel,
    #[serde(default)]
    pub bandwidth: Bandwidth,
    #[serde(default)]
    pub run: Run,
    #[serde(default)]
    pub eval: Eval,
    #[serde(default)]
    pub smallball: SmallBall,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Design {
    /// `iid`, `gaussian_ma` or `nar`.
    pub process: Option<String>,
    /// Marginal family for `iid`, e.g. `chisq1` or `gamma:2,1`.
    pub dist: Option<String>,
    pub ma_coeffs: Option<Vec<f64>>,
    /// Shortcut for `ma_coeffs = [1, r, r^2, ...]`.
    pub ma_ratio: Option<f64>,
    pub tau: Option<usize>,
    pub burn_in: Option<usize>,
    pub nar_sigma: Option<f64>,
    /// `identity` or `tanh`.
    pub link: Option<String>,
    pub c0: Option<f64>,
    pub gamma: Option<f64>,
    pub coeffs: Option<Vec<f64>>,
    pub beta: Option<f64>,
    pub noise_sigma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Kernel {
    pub kind: Option<String>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bandwidth {
    pub p: Option<f64>,
    /// `fixed` or `rate_optimal`.
    pub policy: Option<String>,
    pub h: Option<f64>,
    pub beta: Option<f64>,
    pub scale: Option<f64>,
    pub uniform: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Run {
    pub n_grid: Option<Vec<usize>>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub record_timing: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Eval {
    pub points: Option<Vec<Vec<f64>>>,
    pub grid_tau: Option<usize>,
    pub grid_lambda: Option<f64>,
    pub eta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmallBall {
    pub h_grid: Option<Vec<f64>>,
    pub draws: Option<usize>,
    pub lambda: Option<f64>,
}

pub fn parse(text: &str) -> Result<ConfigFile, String> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| e.message().to_string())?;
    if file.schema != SCHEMA {
        return Err(format!("unsupported schema {}, expected {SCHEMA}", file.schema));
    }
    Ok(file)
}

fn process_kind(d: &Design, current: &ProcessKind) -> Result<ProcessKind, String> {
    let name = match (&d.process, current) {
        (Some(s), _) => s.as_str(),
        (None, ProcessKind::IidRegressors { .. }) => "iid",
        (None, ProcessKind::GaussianMa { .. }) => "gaussian_ma",
        (None, ProcessKind::NarInfinite { .. }) => "nar",
    };
    match name {
        "iid" => {
            let dist = match (&d.dist, current) {
                (Some(s), _) => s.parse::<DistSpec>().map_err(|e| e.to_string())?,
                (None, ProcessKind::IidRegressors { dist }) => *dist,
                (None, _) => DistSpec::ChiSq1,
            };
            Ok(ProcessKind::IidRegressors { dist })
        }
        "gaussian_ma" => {
            let coeffs = match (&d.ma_coeffs, d.ma_ratio, current) {
                (Some(_), Some(_), _) => return Err("give either ma_coeffs or ma_ratio, not both".into()),
                (Some(c), None, _) => c.clone(),
                (None, Some(r), _) => geometric_ma_coeffs(r).map_err(|e| e.to_string())?,
                (None, None, ProcessKind::GaussianMa { coeffs }) => coeffs.clone(),
                (None, None, _) => geometric_ma_coeffs(0.5).map_err(|e| e.to_string())?,
            };
            Ok(ProcessKind::GaussianMa { coeffs })
        }
        "nar" => {
            let sigma = match (d.nar_sigma, current) {
                (Some(s), _) => s,
                (None, ProcessKind::NarInfinite { sigma }) => *sigma,
                (None, _) => 1.0,
            };
            Ok(ProcessKind::NarInfinite { sigma })
        }
        other => Err(format!("unknown process '{other}' (expected iid, gaussian_ma or nar)")),
    }
}

fn apply_design(d: &Design, process: &mut ProcessSpec) -> Result<(), String> {
    process.kind = process_kind(d, &process.kind)?;
    if let Some(t) = d.tau {
        process.tau = t;
    }
    if d.burn_in.is_some() {
        process.burn_in = d.burn_in;
    }
    Ok(())
}

/// Applies the file on top of an experiment preset.
pub fn apply(file: &ConfigFile, cfg: &mut ExperimentConfig) -> Result<(), String> {
    let d = &file.design;
    apply_design(d, &mut cfg.process)?;
    if let Some(link) = &d.link {
        cfg.regression.link = match link.as_str() {
            "identity" => Link::Identity,
            "tanh" => Link::Tanh,
            other => return Err(format!("unknown link '{other}' (expected identity or tanh)")),
        };
    }
    match (&d.coeffs, d.c0, d.gamma) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err("give either coeffs or c0/gamma, not both".into())
        }
        (Some(c), None, None) => cfg.regression.coeffs = ContractionSpec::explicit(c.clone()),
        (None, c0, gamma) if c0.is_some() || gamma.is_some() => {
            let (c0_old, gamma_old) = match cfg.regression.coeffs {
                ContractionSpec::Geometric { c0, gamma } => (c0, gamma),
                _ => (1.0, 1.0),
            };
            cfg.regression.coeffs =
                ContractionSpec::geometric(c0.unwrap_or(c0_old), gamma.unwrap_or(gamma_old));
        }
        _ => {}
    }
    if let Some(b) = d.beta {
        cfg.regression.beta = b;
    }
    if let Some(s) = d.noise_sigma {
        cfg.noise = NoiseSpec::constant(s);
    }
    if let Some(k) = &file.kernel.kind {
        cfg.kernel.kind = k.parse::<KernelKind>().map_err(|e| e.to_string())?;
    }
    if let Some(l) = file.kernel.lambda {
        cfg.kernel.lambda = l;
    }
    let b = &file.bandwidth;
    if let Some(p) = b.p {
        cfg.p = p;
    }
    let policy = b.policy.clone().unwrap_or_else(|| match cfg.bandwidth {
        BandwidthPolicy::Fixed { .. } => "fixed".into(),
        BandwidthPolicy::RateOptimal { .. } => "rate_optimal".into(),
    });
    cfg.bandwidth = match (policy.as_str(), cfg.bandwidth) {
        ("fixed", current) => {
            let h = match (b.h, current) {
                (Some(h), _) => h,
                (None, BandwidthPolicy::Fixed { h }) => h,
                (None, _) => return Err("the fixed bandwidth policy needs h".into()),
            };
            BandwidthPolicy::Fixed { h }
        }
        ("rate_optimal", current) => {
            if b.h.is_some() {
                return Err("h only applies to the fixed policy".into());
            }
            let (beta, scale, uniform) = match current {
                BandwidthPolicy::RateOptimal { beta, scale, uniform } => (beta, scale, uniform),
                BandwidthPolicy::Fixed { .. } => (1.0, 1.0, false),
            };
            BandwidthPolicy::RateOptimal {
                beta: b.beta.unwrap_or(beta),
                scale: b.scale.unwrap_or(scale),
                uniform: b.uniform.unwrap_or(uniform),
            }
        }
        (other, _) => return Err(format!("unknown bandwidth policy '{other}' (expected fixed or rate_optimal)")),
    };
    let r = &file.run;
    if let Some(n) = &r.n_grid {
        cfg.n_grid = n.clone();
    }
    if let Some(k) = r.replicates {
        cfg.replicates = k;
    }
    if let Some(s) = r.seed {
        cfg.seed = s;
    }
    if let Some(t) = r.record_timing {
        cfg.record_timing = t;
    }
    let e = &file.eval;
    let grid_keys = e.grid_tau.is_some() || e.grid_lambda.is_some() || e.eta.is_some();
    match (&e.points, grid_keys) {
        (Some(_), true) => return Err("give either eval.points or a cover grid, not both".into()),
        (Some(p), false) => cfg.eval = EvalSpec::Points { points: p.clone() },
        (None, true) => {
            let (t0, l0, e0) = match cfg.eval {
                EvalSpec::CoverGrid { grid_tau, lambda, eta } => (grid_tau, lambda, eta),
                EvalSpec::Points { .. } => (1, 1.0, 1.0),
            };
            cfg.eval = EvalSpec::CoverGrid {
                grid_tau: e.grid_tau.unwrap_or(t0),
                lambda: e.grid_lambda.unwrap_or(l0),
                eta: e.eta.unwrap_or(e0),
            };
        }
        (None, false) => {}
    }
    cfg.validate().map_err(|e| e.to_string())
}

/// Applies the file on top of the small-ball preset.
pub fn apply_smallball(file: &ConfigFile, cfg: &mut SmallBallConfig) -> Result<(), String> {
    apply_design(&file.design, &mut cfg.process)?;
    if let Some(p) = file.bandwidth.p {
        cfg.p = p;
    }
    if let Some(s) = file.run.seed {
        cfg.seed = s;
    }
    let s = &file.smallball;
    if let Some(h) = &s.h_grid {
        cfg.h_grid = h.clone();
    }
    if let Some(d) = s.draws {
        cfg.draws = d;
    }
    if let Some(l) = s.lambda {
        cfg.lambda = l;
    }
    cfg.process.validate().map_err(|e| e.to_string())
}
