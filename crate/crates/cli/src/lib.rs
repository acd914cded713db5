//! Command-line experiments: network generation, IFS construction,
//! K sweeps, LP-cost trade-off curves and baseline comparison.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod manifest;
pub mod pairing_file;

pub use commands::Outcome;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    #[error(transparent)]
    Schedule(#[from] crewseed_core::schedule::ScheduleError),
    #[error(transparent)]
    Ipdch(#[from] crewseed_core::ipdch::IpdchError),
    #[error(transparent)]
    Edfs(#[from] crewseed_core::baseline::EdfsError),
    #[error(transparent)]
    Metrics(#[from] crewseed_core::metrics::MetricsError),
}

impl CliError {
    /// 1 for usage and I/O problems; infeasibility is not an error.
    pub fn exit_code(&self) -> u8 {
        1
    }
}

/// When a run stops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TerminateSpec {
    Feasibility,
    Secs(f64),
    Iters(usize),
}

impl FromStr for TerminateSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("expected `feasibility`, `secs:N` or `iters:N`, got `{s}`");
        match s.split_once(':') {
            None if s == "feasibility" => Ok(TerminateSpec::Feasibility),
            Some(("secs", n)) => match n.parse::<f64>() {
                Ok(v) if v.is_finite() && v > 0.0 => Ok(TerminateSpec::Secs(v)),
                _ => Err(bad()),
            },
            Some(("iters", n)) => match n.parse::<usize>() {
                Ok(v) if v > 0 => Ok(TerminateSpec::Iters(v)),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for TerminateSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TerminateSpec::Feasibility => f.write_str("feasibility"),
            TerminateSpec::Secs(v) => write!(f, "secs:{v}"),
            TerminateSpec::Iters(n) => write!(f, "iters:{n}"),
        }
    }
}

impl TerminateSpec {
    pub fn to_termination(self) -> crewseed_core::ipdch::Termination {
        use crewseed_core::ipdch::Termination;
        match self {
            TerminateSpec::Feasibility => Termination::FeasibilityPoint,
            TerminateSpec::Secs(v) => Termination::WallClock(Duration::from_secs_f64(v)),
            TerminateSpec::Iters(n) => Termination::Iterations(n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Ipdch,
    Edfs,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ipdch => "ipdch",
            Method::Edfs => "edfs",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "crewseed", version, about = "Initial feasible solutions for crew pairing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic hub-and-spoke schedule.
    Generate(GenerateArgs),
    /// Build one IFS and report on it.
    Ifs(IfsArgs),
    /// Run IPDCH over a grid of K values and seeds.
    SweepK(SweepArgs),
    /// Run IPDCH past feasibility and record LP-cost against time.
    Tradeoff(TradeoffArgs),
    /// Run IPDCH and the depth-first baseline side by side.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Schedule CSV; its `.meta.toml` sidecar must sit next to it.
    #[arg(long)]
    pub schedule: PathBuf,
    /// TOML file with optional `[rules]`, `[cost]` and `[caps]` tables.
    #[arg(long)]
    pub rules: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub flights: usize,
    #[arg(long, default_value_t = 8)]
    pub airports: usize,
    #[arg(long, default_value_t = 2)]
    pub hubs: usize,
    #[arg(long, default_value_t = 2)]
    pub bases: usize,
    #[arg(long, default_value_t = 7)]
    pub days: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct IfsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = Method::Ipdch)]
    pub method: Method,
    /// Flights drawn per iteration; defaults to min(700, |F|).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `feasibility`, `secs:N` or `iters:N`.
    #[arg(long, default_value = "feasibility")]
    pub terminate: TerminateSpec,
    /// Seconds allowed per sub-instance IP.
    #[arg(long)]
    pub ip_time_limit: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated K values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub k: Vec<usize>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', required = true)]
    pub seed: Vec<u64>,
    #[arg(long, default_value = "feasibility")]
    pub terminate: TerminateSpec,
    /// Per-run time cap in seconds.
    #[arg(long)]
    pub cap_secs: Option<f64>,
    #[arg(long)]
    pub ip_time_limit: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TradeoffArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run budget. Without it the budget is `budget_multiple` times the
    /// time a first run takes to reach feasibility.
    #[arg(long)]
    pub terminate: Option<TerminateSpec>,
    #[arg(long, default_value_t = 5.0)]
    pub budget_multiple: f64,
    #[arg(long)]
    pub ip_time_limit: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Time limit for each method, in seconds.
    #[arg(long, default_value_t = 600.0)]
    pub time_limit: f64,
    #[arg(long)]
    pub ip_time_limit: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Generate(a) => commands::cmd_generate(&a),
        Command::Ifs(a) => commands::cmd_ifs(&a),
        Command::SweepK(a) => commands::cmd_sweep_k(&a),
        Command::Tradeoff(a) => commands::cmd_tradeoff(&a),
        Command::Compare(a) => commands::cmd_compare(&a),
    }
}

/// Sizes the global rayon pool from `CREWSEED_THREADS` when set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("CREWSEED_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("CREWSEED_THREADS must be a positive integer, got `{value}`")))?;
    // A pool built earlier in the process is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, contents).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terminate_spec_parses() {
        assert_eq!("feasibility".parse(), Ok(TerminateSpec::Feasibility));
        assert_eq!("secs:2.5".parse(), Ok(TerminateSpec::Secs(2.5)));
        assert_eq!("iters:7".parse(), Ok(TerminateSpec::Iters(7)));
        for bad in ["", "secs:", "secs:-1", "iters:0", "iters:x", "feasible", "mins:3"] {
            assert!(bad.parse::<TerminateSpec>().is_err(), "{bad}");
        }
        assert_eq!(TerminateSpec::Iters(7).to_string(), "iters:7");
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
