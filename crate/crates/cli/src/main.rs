//! `illiquid`: coefficient tables, densities, cutoffs and table
//! reproductions from the command line.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod failure;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{Flags, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "illiquid", version, about = "Asymptotic densities for an illiquid market model")]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Build a coefficient table and write it (JSON: exact decimals).
    Coeffs {
        /// Solve the full equation instead of the order-K truncation.
        #[arg(long)]
        full: bool,
    },
    /// Evaluate the order-K density on a symmetric grid.
    Density,
    /// Tail probabilities of the order-K density.
    Tails {
        /// Tail distances in standard deviations.
        #[arg(long, value_delimiter = ',', default_values_t = [3.0, 4.0])]
        q: Vec<f64>,
    },
    /// Central moments of the order-K density.
    Moments,
    /// Ratio coefficients, minimum time and largest safe order.
    Cutoff {
        /// Largest order considered for K_safe.
        #[arg(long, default_value_t = 8)]
        k_max: usize,
    },
    /// Check the series against the exact lattice law.
    Oracle(OracleArgs),
    /// Cancellation diagnostics at 6 sd, one day.
    Table1,
    /// Left-tail percentages, Gaussian against order-K series.
    Table2,
    /// Ratio coefficients and minimum times at x = 0.
    Table3,
    /// Mid-tail sup-difference between successive orders up to K.
    ScanK(ScanKArgs),
    /// Smallest N after which the density stops changing.
    ScanN(ScanNArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Compare at lattice points within this many sd.
    #[arg(long, default_value_t = 3.0)]
    pub bulk_sd: f64,
    /// Lattice mass allowed outside the tabulated window.
    #[arg(long, default_value_t = 1e-15)]
    pub mass_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ScanKArgs {
    #[arg(long, default_value_t = 3.0)]
    pub lo_sd: f64,
    #[arg(long, default_value_t = 5.0)]
    pub hi_sd: f64,
    /// Grid points on each side.
    #[arg(long, default_value_t = 41)]
    pub per_side: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ScanNArgs {
    /// Density offsets in standard deviations.
    #[arg(long, value_delimiter = ',', default_values_t = [4.0, 5.0, 6.0])]
    pub at_sd: Vec<f64>,
    /// Left-tail distances in standard deviations.
    #[arg(long, value_delimiter = ',', default_values_t = [3.0, 4.0])]
    pub tail_sd: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub n_min: usize,
    #[arg(long, default_value_t = 5)]
    pub n_step: usize,
    /// Relative change treated as converged.
    #[arg(long, default_value_t = 1e-12)]
    pub rel_change: f64,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = RunConfig::resolve(&cli.flags)?;
    if let Some(threads) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    commands::dispatch(&cli.command, &cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(failure::exit_code(&err))
        }
    }
}
