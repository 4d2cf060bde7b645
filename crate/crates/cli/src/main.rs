use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

mod commands;
mod config;

use config::ConfigFile;

/// Simulate and verify the coupled dislocation-density system.
#[derive(Debug, Parser)]
#[command(name = "disloc", version)]
struct Cli {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate from the sine-plus-bump initial data and store the trajectory.
    Simulate(SimulateArgs),
    /// Check a stored trajectory against the gradient-margin floor.
    Verify(VerifyArgs),
    /// Convergence study against a manufactured solution.
    Mms(MmsArgs),
    /// Evaluate the norm suite on a reference corpus.
    Norms(NormsArgs),
    /// Tabulate the logarithmic gamma law, or the decay floor of a stored run.
    Gamma(GammaArgs),
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Amplitude of the sine mode in rho (default 0).
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Number of grid nodes including both ends.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub picard_tol: Option<f64>,
    #[arg(long)]
    pub picard_max_iters: Option<usize>,
    #[arg(long)]
    pub dt_backoff: Option<f64>,
    /// Monitor weight stored for later verification.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Write every k-th state (the last one is always written).
    #[arg(long)]
    pub save_every: Option<usize>,
    /// Output directory (default `.`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// File stem for `<name>.csv` and `<name>.meta.json` (default `run`).
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct VerifyArgs {
    /// Trajectory CSV written by `simulate`.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Metadata sidecar (default: `<stem>.meta.json` next to the trajectory).
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Override the monitor weight.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Report directory (default: the trajectory's directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct MmsArgs {
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Spatial ladder, comma separated (default 51,101,201).
    #[arg(long)]
    pub nodes: Option<String>,
    /// dt = c h^2 on the spatial ladder (default 1).
    #[arg(long)]
    pub c: Option<f64>,
    /// Temporal ladder on the finest grid (default 4e-3,2e-3,1e-3).
    #[arg(long)]
    pub dts: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct NormsArgs {
    /// `standard`, `kt` or `extension`.
    #[arg(long)]
    pub corpus: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub nt: Option<usize>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Hölder seminorm exponent.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Hölder norm order (non-integer).
    #[arg(long)]
    pub ell: Option<f64>,
    /// Fractional Sobolev order of the t = 0 slice.
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct GammaArgs {
    /// Rate E in gamma' = -E (1 + |log gamma|) gamma.
    #[arg(long)]
    pub e: Option<f64>,
    #[arg(long)]
    pub gamma0: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Instead, compute the decay floor of a stored run.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad or missing configuration; exit 2.
    Config(String),
    /// Unreadable or unwritable file; exit 2.
    Io(String),
    /// The run or check itself failed; exit 1.
    Failed(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Failed(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(path) => match ConfigFile::load(path) {
            Ok(c) => c,
            Err(e) => return fail(e, None),
        },
        None => ConfigFile::default(),
    };
    let (result, sub) = match cli.command {
        Command::Simulate(a) => (commands::simulate(a, &cfg), "simulate"),
        Command::Verify(a) => (commands::verify(a, &cfg), "verify"),
        Command::Mms(a) => (commands::mms(a, &cfg), "mms"),
        Command::Norms(a) => (commands::norms(a, &cfg), "norms"),
        Command::Gamma(a) => (commands::gamma(a, &cfg), "gamma"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e, Some(sub)),
    }
}

fn fail(e: CliError, sub: Option<&str>) -> ExitCode {
    eprintln!("error: {e}");
    if let (CliError::Config(_), Some(name)) = (&e, sub) {
        let mut cmd = Cli::command();
        if let Some(sc) = cmd.find_subcommand_mut(name) {
            let mut sc = sc.clone().bin_name(format!("disloc {name}"));
            eprintln!("\n{}", sc.render_usage());
        }
    }
    ExitCode::from(e.code())
}
