use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hhq_bench::compare::{compare, DEFAULT_METRICS};
use hhq_bench::{parse_report, run, sweep, sweep_csv, Filter, RunConfig, SweepConfig};
use hhq_core::sampling::SamplingMode;
use hhq_core::workload::{read_trace, write_trace, LatencyFamily, TraceGenerator, WorkloadSpec};
use hhq_core::{EstimatorKind, ProblemConfig, Sizing};

#[derive(Parser)]
#[command(name = "hhq", version, about = "Per-item latency quantiles for heavy hitters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic Zipf trace.
    Generate(GenerateArgs),
    /// Run one estimator over a trace and report per-heavy-hitter errors.
    Run(RunArgs),
    /// Run a grid of algorithms, epsilons and seeds.
    Sweep(SweepArgs),
    /// Diff the summary metrics of two run reports.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..=u32::MAX as u64))]
    universe: u64,
    #[arg(long, default_value_t = 1.2, allow_negative_numbers = true, value_parser = non_negative)]
    zipf: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Family::Lognormal)]
    latency: Family,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Lognormal,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Naive,
    Skip,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Square,
    Quasi,
    Squad,
}

impl From<Algorithm> for EstimatorKind {
    fn from(a: Algorithm) -> Self {
        match a {
            Algorithm::Square => EstimatorKind::Square,
            Algorithm::Quasi => EstimatorKind::Quasi,
            Algorithm::Squad => EstimatorKind::Squad,
        }
    }
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, default_value_t = 0.01, value_parser = unit_open_closed)]
    theta: f64,
    #[arg(long, default_value_t = 0.05, value_parser = unit_open)]
    delta: f64,
    /// Quantiles to query, comma separated.
    #[arg(long = "q", default_values_t = [0.5, 0.9, 0.99], value_delimiter = ',', value_parser = unit_closed)]
    qs: Vec<f64>,
    /// Pre-filter probability.
    #[arg(long, value_parser = unit_open_closed)]
    filter_p: Option<f64>,
    /// Share of the error budget given to the filtered estimator.
    #[arg(long, default_value_t = 0.9, value_parser = unit_open)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    c_m: f64,
    #[arg(long, default_value_t = 1.0)]
    c_z: f64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    repetitions: u64,
    #[arg(long, value_enum, default_value_t = Mode::Skip)]
    sampling: Mode,
}

impl Common {
    fn run_config(&self, kind: EstimatorKind, epsilon: f64, seed: u64) -> Result<RunConfig> {
        let mut cfg = RunConfig::new(kind, ProblemConfig::new(self.theta, epsilon, self.delta, seed)?);
        cfg.qs = self.qs.clone();
        cfg.filter = self.filter_p.map(|p| Filter { p, alpha: self.alpha });
        cfg.sizing = Sizing {
            c_m: self.c_m,
            c_z: self.c_z,
            repetitions: self.repetitions as usize,
            sampling: match self.sampling {
                Mode::Naive => SamplingMode::Naive,
                Mode::Skip => SamplingMode::SkipL,
            },
        };
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    algorithm: Algorithm,
    #[arg(long, default_value_t = 0.05, value_parser = unit_open)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    common: Common,
    /// Also report the footprint in bytes.
    #[arg(long)]
    bytes: bool,
    /// Also report the mean query latency.
    #[arg(long)]
    time_queries: bool,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Algorithm::Square, Algorithm::Quasi, Algorithm::Squad])]
    algorithms: Vec<Algorithm>,
    #[arg(long = "eps", value_delimiter = ',', default_values_t = [0.1, 0.05, 0.025], value_parser = unit_open)]
    epsilons: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0])]
    seeds: Vec<u64>,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    left: PathBuf,
    right: PathBuf,
    /// Allowed relative delta for every metric.
    #[arg(long, default_value_t = 0.0)]
    tolerance: f64,
    /// Per-metric override, e.g. `footprint=0.3`.
    #[arg(long = "tol", value_parser = metric_tolerance)]
    tolerances: Vec<(String, f64)>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_METRICS.map(String::from))]
    metrics: Vec<String>,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| e.to_string())
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v >= 0.0 && v.is_finite() { Ok(v) } else { Err(format!("{v} must be finite and >= 0")) }
}

fn unit_open(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v < 1.0 { Ok(v) } else { Err(format!("{v} must lie in (0, 1)")) }
}

fn unit_open_closed(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v <= 1.0 { Ok(v) } else { Err(format!("{v} must lie in (0, 1]")) }
}

fn unit_closed(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if (0.0..=1.0).contains(&v) { Ok(v) } else { Err(format!("{v} must lie in [0, 1]")) }
}

fn metric_tolerance(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or("expected metric=tolerance")?;
    Ok((k.to_string(), non_negative(v)?))
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<Vec<hhq_core::StreamElement>> {
    read_trace(path).with_context(|| format!("reading trace {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate(a) => {
            let spec = WorkloadSpec {
                n: a.n,
                universe: a.universe,
                zipf_s: a.zipf,
                latency: match a.latency {
                    Family::Lognormal => LatencyFamily::LogNormal,
                    Family::Uniform => LatencyFamily::Uniform,
                },
                seed: a.seed,
            };
            let trace: Vec<_> = TraceGenerator::new(&spec)?.collect();
            write_trace(&trace, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
        }
        Command::Run(a) => {
            let trace = load(&a.common.trace)?;
            let mut cfg = a.common.run_config(a.algorithm.into(), a.epsilon, a.seed)?;
            cfg.bytes = a.bytes;
            cfg.time_queries = a.time_queries;
            let report = run(&trace, &cfg)?;
            emit(&report.to_csv(), a.out.as_ref())?;
        }
        Command::Sweep(a) => {
            let trace = load(&a.common.trace)?;
            let base = a.common.run_config(EstimatorKind::Squad, a.epsilons[0], a.seeds[0])?;
            let cfg = SweepConfig {
                algorithms: a.algorithms.iter().map(|&x| x.into()).collect(),
                epsilons: a.epsilons,
                seeds: a.seeds,
                base,
            };
            emit(&sweep_csv(&sweep(&trace, &cfg)?), a.out.as_ref())?;
        }
        Command::Compare(a) => {
            let read = |p: &PathBuf| -> Result<_> {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                parse_report(&text).with_context(|| format!("parsing {}", p.display()))
            };
            let (left, right) = (read(&a.left)?, read(&a.right)?);
            let tol = |m: &str| {
                a.tolerances.iter().rev().find(|(k, _)| k == m).map_or(a.tolerance, |&(_, t)| t)
            };
            let cmp = compare(&left, &right, &a.metrics, tol)?;
            print!("{}", cmp.render());
            if !cmp.all_within() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
