use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[cfg(test)]
mod cli_tests;
mod commands;
mod config;
mod error;

use config::{FitKind, IntegrateModel, RunConfig, SimulateMode, DEFAULT_SEED};
use error::CliError;
use income_dynamics::estimation::Binning;

/// Growth-and-reset income dynamics: synthesize panels, estimate kernels,
/// integrate and simulate the master equation, and fit stationary shapes.
#[derive(Debug, Parser)]
#[command(name = "income-dynamics", version)]
struct Cli {
    /// JSON run configuration; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for every random stream.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print nothing but errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic employee panel.
    Synth(SynthArgs),
    /// Growth, reset and histogram estimates from a panel CSV.
    Estimate(EstimateArgs),
    /// Fit the growth constant, the reset rate or the Beta prime shape.
    Fit(FitArgs),
    /// Score how well rescaled distributions collapse onto one curve.
    Collapse(CollapseArgs),
    /// Run the agent simulator or draw Beta prime samples.
    Simulate(SimulateArgs),
    /// Integrate the master equation toward its steady state.
    Integrate(IntegrateArgs),
    /// Stationary density of the kernels, numerically and in closed form.
    Stationary(StationaryArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub years: Option<usize>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub growth_u: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Panel CSV with header `employee_id,year,income`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub first_year: Option<i32>,
    #[arg(long)]
    pub last_year: Option<i32>,
    #[arg(long)]
    pub min_count: Option<u64>,
    /// `log2` or `linear:WIDTH`.
    #[arg(long, value_parser = config::parse_binning)]
    pub binning: Option<Binning>,
    #[arg(long)]
    pub histogram_year: Option<i32>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub kind: Option<FitKind>,
    /// Binned series CSV (growth, reset), or income samples or density CSV (shape).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub mean_income: Option<f64>,
    /// Fit `a` and `s` independently instead of fixing `s = a - 2`.
    #[arg(long)]
    pub free: bool,
}

#[derive(Debug, Args)]
pub struct CollapseArgs {
    /// Income-sample or density CSVs, one curve each.
    #[arg(value_name = "CSV")]
    pub inputs: Vec<PathBuf>,
    /// Panel CSV contributing one curve per year.
    #[arg(long)]
    pub panel: Option<PathBuf>,
    #[arg(long, value_parser = config::parse_binning)]
    pub binning: Option<Binning>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub mode: Option<SimulateMode>,
    #[arg(long)]
    pub agents: Option<usize>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub snapshots: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub a: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    #[arg(long, value_enum)]
    pub model: Option<IntegrateModel>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_time: Option<f64>,
    #[arg(long)]
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StationaryArgs {
    #[arg(long)]
    pub points: Option<usize>,
}

/// Everything a command needs besides its own flags.
pub struct Ctx {
    pub cfg: RunConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub quiet: bool,
}

impl Ctx {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    pub fn warn(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("warning: {}", msg.as_ref());
        }
    }

    pub fn write_json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::write(&path, serde_json::to_string_pretty(value)? + "\n")?;
        self.note(format!("wrote {}", path.display()));
        Ok(path)
    }

    pub fn wrote(&self, path: &Path) {
        self.note(format!("wrote {}", path.display()));
    }
}

/// An input path that must exist.
pub fn require_input(path: Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    let path = path.ok_or_else(|| CliError::Usage(format!("{what} is required")))?;
    if !path.is_file() {
        return Err(CliError::Usage(format!("{what} {} does not exist", path.display())));
    }
    Ok(path)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| CliError::Usage("an output directory is required (--out DIR)".into()))?;
    fs::create_dir_all(&out)?;
    let ctx = Ctx {
        seed: cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED),
        cfg,
        out,
        quiet: cli.quiet,
    };
    match &cli.command {
        Command::Synth(a) => commands::synth::run(&ctx, a),
        Command::Estimate(a) => commands::estimate::run(&ctx, a),
        Command::Fit(a) => commands::fit::run(&ctx, a),
        Command::Collapse(a) => commands::collapse::run(&ctx, a),
        Command::Simulate(a) => commands::simulate::run(&ctx, a),
        Command::Integrate(a) => commands::integrate::run(&ctx, a),
        Command::Stationary(a) => commands::stationary::run(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
