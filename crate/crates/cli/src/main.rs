//! `slabwave`: reproducible runs of the slab Dirichlet-to-Neumann toolkit.
//!
//! Exit status is 0 on success, 1 when a tolerance check or a solver fails,
//! and 2 for invalid invocations.

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{read_config, UsageError};

#[derive(Debug, Parser)]
#[command(
    name = "slabwave",
    version,
    about = "Slab Dirichlet-to-Neumann operators, layers, and symmetry checks"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Debug, Args)]
pub struct Common {
    /// Weight exponent a in (-1, 1).
    #[arg(
        long,
        global = true,
        conflicts_with = "s",
        allow_negative_numbers = true
    )]
    pub a: Option<f64>,
    /// Fractional order s in (0, 1).
    #[arg(long, global = true)]
    pub s: Option<f64>,
    /// Horizontal nodes per axis.
    #[arg(long, global = true)]
    pub nx: Option<usize>,
    /// Vertical nodes.
    #[arg(long, global = true)]
    pub my: Option<usize>,
    /// Side length of the horizontal box.
    #[arg(long = "box", global = true)]
    pub side: Option<f64>,
    /// Radii as `r1,r2,...` or `start:stop:step`.
    #[arg(long, global = true)]
    pub radii: Option<String>,
    /// Solver tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for generated test data.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Config file of `key=value` defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form symbol against the mode-solver oracle (CSV).
    Symbol(SymbolArgs),
    /// Extension of a trace and operator identities (JSON).
    Extend(ExtendArgs),
    /// Layer solution with residual, stability and monotonicity (JSON).
    Layer,
    /// Localized energies over growing radii and the fitted slope (CSV).
    EnergySweep(SweepArgs),
    /// Direction fit and one-dimensional residual of a planar trace (JSON).
    Symmetry(SymmetryArgs),
    /// Continuity, incompressibility and potential checks (CSV).
    FluidCheck(FluidArgs),
    /// Runs the acceptance suite and prints one line per criterion.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct SymbolArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub xi_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub xi_max: Option<f64>,
    /// Number of log-spaced frequencies.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExtendArgs {
    /// Horizontal dimension, 1 or 2.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Use the single mode cos(k x1) instead of a random trace.
    #[arg(long)]
    pub mode: Option<f64>,
    /// Highest mode index of the random trace.
    #[arg(long)]
    pub max_mode: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Horizontal dimension n, 1 or 2.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Tilt of the boundary layer in degrees (n = 2).
    #[arg(long, allow_negative_numbers = true)]
    pub tilt: Option<f64>,
    /// Pinned band width in cells (n = 2).
    #[arg(long)]
    pub band: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SymmetryArgs {
    /// CSV trace with columns x1,x2,u on a square cell-centred grid.
    #[arg(long, conflicts_with = "angle")]
    pub input: Option<PathBuf>,
    /// Generate tanh(omega . x / width) with omega at this angle in degrees.
    #[arg(long, allow_negative_numbers = true)]
    pub angle: Option<f64>,
    #[arg(long)]
    pub width: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Example {
    /// v = -X, rho = exp(d t).
    Packing,
    /// v = -X, rho = 1.
    Leak,
}

impl std::str::FromStr for Example {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Example as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Args)]
pub struct FluidArgs {
    #[arg(long, value_enum)]
    pub example: Option<Example>,
    /// Ambient dimension d of X.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub time: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Run only these criteria, e.g. `1,2,10`.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<u8>>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<slabwave::Error>() {
        Some(slabwave::Error::InvalidParameter(_) | slabwave::Error::RadiusExceedsBox { .. }) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let file = match &cli.common.config {
        Some(path) => read_config(path).map_err(|e| match e.downcast::<UsageError>() {
            Ok(u) => u.into(),
            Err(other) => config::usage(format!("{other:#}")),
        })?,
        None => Default::default(),
    };
    let out = cli
        .common
        .out
        .clone()
        .or_else(|| file.get("out").map(PathBuf::from));
    let c = &cli.common;
    match &cli.command {
        Command::Symbol(args) => commands::symbol(c, args, file, out.as_deref()),
        Command::Extend(args) => commands::extend(c, args, file, out.as_deref()),
        Command::Layer => commands::layer(c, file, out.as_deref()),
        Command::EnergySweep(args) => commands::energy_sweep(c, args, file, out.as_deref()),
        Command::Symmetry(args) => commands::symmetry(c, args, file, out.as_deref()),
        Command::FluidCheck(args) => commands::fluid_check(c, args, file, out.as_deref()),
        Command::Selftest(args) => commands::selftest(args, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
