mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use seqreg::bandwidth::{a_opt_pointwise, a_opt_uniform, h_opt};
use seqreg::experiments::{
    presets, run_clt, run_consistency, run_smallball_validation, run_uniform, write_records,
    ExperimentConfig, ResultRecord,
};
use seqreg::smallball::{dist_constants, rate_constants, Variant};
use seqreg::DistSpec;

#[derive(Parser)]
#[command(name = "seqreg", version, about = "Sequence-regressor kernel regression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunOpts {
    /// TOML experiment file (schema 1); omitted keys keep the built-in preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for the records CSV and summary JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every available core. Never changes results.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Iid,
    GaussianDependent,
}

#[derive(Subcommand)]
enum Command {
    /// Median absolute error across a sample-size grid.
    Consistency(RunOpts),
    /// Shape of the standardized error distribution.
    Clt(RunOpts),
    /// Sup-norm error over a cover grid.
    Uniform(RunOpts),
    /// Small-ball probability slope against the predicted constant.
    Smallball(RunOpts),
    /// Small-ball rate constants for a marginal family.
    Constants {
        /// Family of X^2, e.g. exp:1, gamma:2,1, chisq1, weibull:1,2, pareto:1,2, uniform:3.
        #[arg(long)]
        dist: String,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, value_enum, default_value_t = VariantArg::Iid)]
        variant: VariantArg,
        /// Moving-average coefficients a_0, a_1, ... for the dependent variant.
        #[arg(long, value_delimiter = ',')]
        ma: Option<Vec<f64>>,
    },
    /// Optimal bandwidth exponents over a grid of sample sizes.
    Bandwidth {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        beta: f64,
        /// Sample sizes; repeat or comma-separate. Defaults to 10^3 .. 10^9.
        #[arg(long, value_delimiter = ',')]
        n: Vec<f64>,
    },
}

/// Failure classes mapped to exit codes 2 and 1.
enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn report(&self) -> ExitCode {
        let (kind, msg, code) = match self {
            Failure::Config(m) => ("config", m, 2),
            Failure::Runtime(m) => ("runtime", m, 1),
        };
        eprintln!("{}", json!({ "error": kind, "message": msg }));
        ExitCode::from(code)
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn load(opts: &RunOpts) -> Result<Option<config::ConfigFile>, Failure> {
    let Some(path) = &opts.config else {
        return Ok(None);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    config::parse(&text)
        .map(Some)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn experiment_config(opts: &RunOpts, preset: ExperimentConfig) -> Result<ExperimentConfig, Failure> {
    let mut cfg = preset;
    if let Some(file) = load(opts)? {
        config::apply(&file, &mut cfg).map_err(Failure::Config)?;
    }
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn pretty<T: Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(runtime)
}

/// Prints the summary and, with `--out`, writes `<name>_summary.json` and
/// `<name>_records.csv`.
fn emit<C: Serialize, S: Serialize>(
    name: &str,
    out: Option<&Path>,
    config: &C,
    summary: &S,
    records: Option<&[ResultRecord]>,
) -> Result<(), Failure> {
    let doc = pretty(&json!({ "experiment": name, "config": config, "summary": summary }))?;
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(runtime)?;
        fs::write(dir.join(format!("{name}_summary.json")), &doc).map_err(runtime)?;
        if let Some(recs) = records {
            let file = fs::File::create(dir.join(format!("{name}_records.csv"))).map_err(runtime)?;
            write_records(file, recs).map_err(runtime)?;
        }
    }
    print!("{doc}");
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Consistency(o) => {
            let cfg = experiment_config(&o, presets::consistency())?;
            let r = run_consistency(&cfg, o.threads).map_err(runtime)?;
            emit("consistency", o.out.as_deref(), &cfg, &r.summary, Some(&r.records))
        }
        Command::Clt(o) => {
            let cfg = experiment_config(&o, presets::clt())?;
            let r = run_clt(&cfg, o.threads).map_err(runtime)?;
            emit("clt", o.out.as_deref(), &cfg, &r.summary, Some(&r.records))
        }
        Command::Uniform(o) => {
            let cfg = experiment_config(&o, presets::uniform())?;
            let r = run_uniform(&cfg, o.threads).map_err(runtime)?;
            emit("uniform", o.out.as_deref(), &cfg, &r.summary, Some(&r.records))
        }
        Command::Smallball(o) => {
            let mut cfg = presets::smallball(false);
            if let Some(file) = load(&o)? {
                config::apply_smallball(&file, &mut cfg).map_err(Failure::Config)?;
            }
            if let Some(s) = o.seed {
                cfg.seed = s;
            }
            let r = run_smallball_validation(&cfg, o.threads).map_err(runtime)?;
            emit("smallball", o.out.as_deref(), &cfg, &r, None)
        }
        Command::Constants { dist, p, lambda, variant, ma } => {
            let dist: DistSpec = dist.parse().map_err(|e: seqreg::Error| Failure::Config(e.to_string()))?;
            let variant = match variant {
                VariantArg::Iid => Variant::Iid,
                VariantArg::GaussianDependent => Variant::GaussianDependent,
            };
            let base = dist_constants(&dist, p).map_err(runtime)?;
            let mut doc = json!({
                "dist": dist.label(),
                "p": p,
                "lambda": lambda,
                "rho": base.rho,
                "slowly_varying_limit": dist.slowly_varying_limit(),
                "c_ell": base.c_ell,
                "zeta": base.zeta,
            });
            // families without zeta still report their tabulated constants
            if base.zeta.is_some() {
                let rc = rate_constants(&dist, p, lambda, variant, ma.as_deref()).map_err(runtime)?;
                doc["rate"] = json!({
                    "variant": rc.variant,
                    "c_star": rc.c_star,
                    "c_dstar": rc.c_dstar,
                    "c_a": rc.c_a,
                    "decay_exponent": rc.decay_exponent(),
                    "polynomial_exponent": rc.polynomial_exponent(),
                    "exponential_coefficient": rc.exponential_coefficient(),
                });
            }
            print!("{}", pretty(&doc)?);
            Ok(())
        }
        Command::Bandwidth { p, beta, n } => {
            let grid = if n.is_empty() { vec![1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9] } else { n };
            println!("n\ta_opt_pointwise\th_pointwise\ta_opt_uniform\th_uniform");
            for n in grid {
                let ap = a_opt_pointwise(n, beta, p).map_err(runtime)?;
                let au = a_opt_uniform(n, beta, p).map_err(runtime)?;
                let hp = h_opt(n, ap).map_err(runtime)?;
                let hu = h_opt(n, au).map_err(runtime)?;
                println!("{n}\t{ap}\t{hp}\t{au}\t{hu}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return Failure::Config(first.to_string()).report();
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
