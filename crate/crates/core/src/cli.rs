//! Command-line front end.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::datagen::{censor_transform, gen_example, Seed};
use crate::diagnostics::{run_mc, run_mc_quadrant, McConfig};
use crate::error::Result;
use crate::estimators::{default_eps, default_h_tilde, Deconvolver, EstimatorConfig};
use crate::geom::Point2;
use crate::grid::{GridMethod, GridMode, GridSpec};
use crate::io;
use crate::kernels::{Kernel1D, ProductKernel2D};

/// Environment variable holding the default worker thread count.
pub const THREADS_ENV: &str = "UDECONV_THREADS";

#[derive(Debug, Parser)]
#[command(name = "udeconv", version, about = "Bivariate density estimation under additive uniform noise")]
pub struct Cli {
    /// Worker threads; 0 lets the runtime decide.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate observations from a bundled example.
    Simulate(SimulateArgs),
    /// Evaluate an estimator on a square grid.
    Estimate(EstimateArgs),
    /// Print estimated quadrant probabilities and weights at one point.
    Weights(WeightsArgs),
    /// Monte Carlo check of the bias and variance predictions.
    Diagnose(DiagnoseArgs),
    /// Transform quadrant-censored observations into estimator input.
    Censor(CensorArgs),
}

/// A value that is either given explicitly or derived from the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum AutoOr {
    Auto,
    Value(f64),
}

impl AutoOr {
    pub fn resolve(self, default: impl FnOnce() -> f64) -> f64 {
        match self {
            AutoOr::Auto => default(),
            AutoOr::Value(v) => v,
        }
    }
}

impl FromStr for AutoOr {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(AutoOr::Auto);
        }
        s.parse().map(AutoOr::Value).map_err(|_| format!("expected a number or 'auto', got '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelChoice {
    Biweight,
    Triweight,
}

impl FromStr for KernelChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "biweight" => Ok(KernelChoice::Biweight),
            "triweight" => Ok(KernelChoice::Triweight),
            _ => Err(format!("unknown kernel '{s}'; expected biweight or triweight")),
        }
    }
}

impl KernelChoice {
    fn kernel(self) -> ProductKernel2D {
        let k = match self {
            KernelChoice::Biweight => Kernel1D::biweight(),
            KernelChoice::Triweight => Kernel1D::triweight(),
        };
        ProductKernel2D::new(k.clone(), k)
    }
}

fn parse_point(s: &str) -> std::result::Result<Point2, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("point '{s}' is not of the form x1,x2"))?;
    let p = Point2::new(
        a.trim().parse().map_err(|_| format!("bad coordinate '{a}'"))?,
        b.trim().parse().map_err(|_| format!("bad coordinate '{b}'"))?,
    );
    if !p.is_finite() {
        return Err(format!("point '{s}' is not finite"));
    }
    Ok(p)
}

/// Semicolon-separated list of `x1,x2` points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointList(pub Vec<Point2>);

impl FromStr for PointList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let pts = s
            .split(';')
            .filter(|p| !p.trim().is_empty())
            .map(parse_point)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if pts.is_empty() {
            return Err("no points given".into());
        }
        Ok(PointList(pts))
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Bundled example, 1 or 2.
    #[arg(long, default_value_t = 1)]
    pub example: u8,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Also write the hidden points as `y1,y2`.
    #[arg(long)]
    pub with_truth: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// CSV with columns `x1,x2`.
    #[arg(long)]
    pub data: PathBuf,
    /// Density bandwidth on both axes.
    #[arg(long)]
    pub h: f64,
    /// Separate bandwidth for the second axis.
    #[arg(long)]
    pub h2: Option<f64>,
    /// Weight bandwidth, or `auto` for `n^(-1/6)`.
    #[arg(long, default_value = "auto")]
    pub h_tilde: AutoOr,
    /// Truncation level, or `auto` for `1 / ln n`.
    #[arg(long, default_value = "auto")]
    pub eps: AutoOr,
    /// `lo:hi:count_per_unit`, shared by both axes.
    #[arg(long, default_value = "-1:4:100", allow_hyphen_values = true)]
    pub grid: GridSpec,
    /// `combined` or one of `mm`, `mp`, `pm`, `pp`.
    #[arg(long, default_value = "combined")]
    pub method: GridMethod,
    /// `exact` or `binned`.
    #[arg(long, default_value = "exact")]
    pub mode: GridMode,
    #[arg(long, default_value = "biweight")]
    pub kernel: KernelChoice,
    /// Replace negative values by zero in the written surface.
    #[arg(long)]
    pub clip_negative: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// `x1,x2`
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub point: Point2,
    #[arg(long, default_value = "auto")]
    pub h_tilde: AutoOr,
    #[arg(long, default_value = "auto")]
    pub eps: AutoOr,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long, default_value_t = 1)]
    pub example: u8,
    #[arg(long, default_value_t = 20_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.4)]
    pub h: f64,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    /// Semicolon-separated `x1,x2` points.
    #[arg(long, default_value = "1,1", allow_hyphen_values = true)]
    pub points: PointList,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "auto")]
    pub h_tilde: AutoOr,
    #[arg(long, default_value = "auto")]
    pub eps: AutoOr,
    /// Also report the quadrant-probability estimators.
    #[arg(long)]
    pub quadrant: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CensorArgs {
    /// CSV with columns `t1,t2,delta`.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Path of the metadata file written next to `out`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn write_sidecar(out: &Path, command: &str, resolved: Value, n: usize, started: Instant) -> Result<()> {
    let meta = json!({
        "command": command,
        "resolved_config": resolved,
        "n": n,
        "runtime_ms": started.elapsed().as_secs_f64() * 1e3,
        "library_version": env!("CARGO_PKG_VERSION"),
    });
    io::write_json(&sidecar_path(out), &meta)
}

fn configure_threads(threads: Option<usize>) {
    if let Some(t) = threads {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    configure_threads(cli.threads);
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Estimate(a) => cmd_estimate(&a),
        Command::Weights(a) => cmd_weights(&a),
        Command::Diagnose(a) => cmd_diagnose(&a),
        Command::Censor(a) => cmd_censor(&a),
    }
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let started = Instant::now();
    let sim = gen_example(a.example, a.n, Seed(a.seed), 0)?;
    let truth = a.with_truth.then(|| sim.truth.points());
    io::write_points(&a.out, sim.observed.points(), truth)?;
    let resolved = json!({
        "example": a.example,
        "n": a.n,
        "seed": a.seed,
        "stream": 0,
        "with_truth": a.with_truth,
        "rng": crate::datagen::RNG_NAME,
    });
    write_sidecar(&a.out, "simulate", resolved, a.n, started)
}

fn method_name(m: GridMethod) -> String {
    match m {
        GridMethod::Combined => "combined".into(),
        GridMethod::Single(tag) => tag.label().into(),
    }
}

pub fn cmd_estimate(a: &EstimateArgs) -> Result<()> {
    let started = Instant::now();
    let sample = io::read_sample(&a.data)?;
    let n = sample.len();
    let cfg = EstimatorConfig::for_sample_size(a.h, n)
        .with_bandwidths(a.h, a.h2.unwrap_or(a.h))
        .with_h_tilde(a.h_tilde.resolve(|| default_h_tilde(n)))
        .with_eps(a.eps.resolve(|| default_eps(n)))
        .with_kernel(a.kernel.kernel());
    if cfg.wide_bandwidth() {
        eprintln!(
            "warning: bandwidth {} is at least 1/2; the quadrant estimators are no longer asymptotically uncorrelated",
            cfg.h1.max(cfg.h2)
        );
    }
    let resolved = json!({
        "data": a.data,
        "h1": cfg.h1,
        "h2": cfg.h2,
        "h_tilde": cfg.h_tilde,
        "eps": cfg.eps,
        "kernel": cfg.kernel.k1.name(),
        "grid": { "lo": a.grid.lo, "hi": a.grid.hi, "count_per_unit": a.grid.count_per_unit, "points_per_axis": a.grid.len() },
        "method": method_name(a.method),
        "mode": format!("{:?}", a.mode).to_lowercase(),
        "clip_negative": a.clip_negative,
    });
    let d = Deconvolver::new(sample, cfg)?;
    let values = d.evaluate_grid(&a.grid, a.method, a.mode)?;
    io::write_grid(&a.out, &a.grid, &values, a.clip_negative)?;
    write_sidecar(&a.out, "estimate", resolved, n, started)
}

/// Quadrant estimates and weights at one point, as printed by `weights`.
#[derive(Debug, Clone, Serialize)]
pub struct WeightsReport {
    pub point: Point2,
    pub n: usize,
    pub h_tilde: f64,
    pub eps: f64,
    pub quadrant_raw: [f64; 4],
    pub quadrant_truncated: [f64; 4],
    pub weights: [f64; 4],
    pub weights_sum: f64,
}

pub fn weights_report(a: &WeightsArgs) -> Result<WeightsReport> {
    let sample = io::read_sample(&a.data)?;
    let n = sample.len();
    let h_tilde = a.h_tilde.resolve(|| default_h_tilde(n));
    let cfg = EstimatorConfig::for_sample_size(h_tilde, n)
        .with_h_tilde(h_tilde)
        .with_eps(a.eps.resolve(|| default_eps(n)));
    let d = Deconvolver::new(sample, cfg)?;
    let auto = d.combined_auto(a.point)?;
    Ok(WeightsReport {
        point: a.point,
        n,
        h_tilde,
        eps: d.config().eps,
        quadrant_raw: d.quadrant_probs(a.point),
        quadrant_truncated: auto.probs.to_array(),
        weights: auto.weights.to_array(),
        weights_sum: auto.weights.sum(),
    })
}

pub fn cmd_weights(a: &WeightsArgs) -> Result<()> {
    let report = weights_report(a)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

pub fn cmd_diagnose(a: &DiagnoseArgs) -> Result<()> {
    let started = Instant::now();
    let h_tilde = match a.h_tilde {
        AutoOr::Auto => None,
        AutoOr::Value(v) => Some(v),
    };
    let eps = match a.eps {
        AutoOr::Auto => None,
        AutoOr::Value(v) => Some(v),
    };
    let points = a.points.0.clone();
    let cfg = McConfig { example: a.example, n: a.n, h: a.h, h_tilde, eps, reps: a.reps, points, seed: a.seed };
    let mut reports = run_mc(&cfg)?;
    if a.quadrant {
        reports.extend(run_mc_quadrant(a.example, a.n, h_tilde, a.reps, &cfg.points, a.seed)?);
    }
    io::write_json(&a.out, &reports)?;
    let resolved = json!({
        "example": a.example,
        "n": a.n,
        "h": a.h,
        "h_tilde": cfg.resolved_h_tilde(),
        "eps": cfg.resolved_eps(),
        "reps": a.reps,
        "points": cfg.points,
        "seed": a.seed,
        "quadrant": a.quadrant,
    });
    write_sidecar(&a.out, "diagnose", resolved, a.n, started)
}

pub fn cmd_censor(a: &CensorArgs) -> Result<()> {
    let started = Instant::now();
    let rows = io::read_censored(&a.data)?;
    let points: Vec<Point2> = rows.iter().map(censor_transform).collect::<Result<_>>()?;
    io::write_points(&a.out, &points, None)?;
    write_sidecar(&a.out, "censor", json!({ "data": a.data }), points.len(), started)
}

/// Process exit code for a command outcome.
pub fn exit_code(result: &Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) if e.is_user_error() => 2,
        Err(_) => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_or_parses() {
        assert_eq!("auto".parse::<AutoOr>().unwrap(), AutoOr::Auto);
        assert_eq!("AUTO".parse::<AutoOr>().unwrap(), AutoOr::Auto);
        assert_eq!("0.25".parse::<AutoOr>().unwrap(), AutoOr::Value(0.25));
        assert!("x".parse::<AutoOr>().is_err());
        assert_eq!(AutoOr::Auto.resolve(|| 3.0), 3.0);
    }

    #[test]
    fn points_parse() {
        assert_eq!(parse_point("1,-0.5").unwrap(), Point2::new(1.0, -0.5));
        assert!(parse_point("1").is_err());
        assert_eq!("1,1;0.5,2".parse::<PointList>().unwrap().0.len(), 2);
        assert!(";".parse::<PointList>().is_err());
    }

    #[test]
    fn command_line_parses() {
        let cli = Cli::try_parse_from([
            "udeconv", "estimate", "--data", "d.csv", "--h", "0.5", "--grid", "-1:4:100", "--method", "pp",
            "--mode", "binned", "--out", "o.csv",
        ])
        .unwrap();
        match cli.command {
            Command::Estimate(a) => {
                assert_eq!(a.grid.len(), 501);
                assert_eq!(a.mode, GridMode::Binned);
                assert_eq!(a.h_tilde, AutoOr::Auto);
            }
            other => panic!("{other:?}"),
        }
        let cli = Cli::try_parse_from(["udeconv", "--threads", "2", "diagnose", "--points", "1,1;0.8,1.2", "--out", "r.json"]).unwrap();
        assert_eq!(cli.threads, Some(2));
        match cli.command {
            Command::Diagnose(a) => assert_eq!(a.points.0.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("/tmp/a.csv")), PathBuf::from("/tmp/a.csv.meta.json"));
    }
}
