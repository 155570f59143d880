//! Run configuration: JSON file values overlaid by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use illiquid::analytics::{DEFAULT_GRID_POINTS, DEFAULT_SPAN_SD};
use illiquid::params::{DAY, DEFAULT_PRECISION_BITS, MONTH};
use illiquid::{ModelParams, Truncation};
use serde::{Deserialize, Serialize};

pub const DEFAULT_ORDER: usize = 4;
pub const DEFAULT_MAX_N: usize = 100;
pub const DEFAULT_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Volatility per sqrt(time unit).
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Bid-offer spread width.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Seller-minus-buyer imbalance in [-1, 1].
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    /// Largest series row kept.
    #[arg(long = "N", global = true)]
    pub max_n: Option<usize>,
    /// Number of derivative families (diagonals) kept.
    #[arg(long = "K", global = true)]
    pub order: Option<usize>,
    /// Elapsed time (one year = 1).
    #[arg(long, global = true, conflicts_with_all = ["t_days", "t_months"])]
    pub t: Option<f64>,
    /// Elapsed time in trading days (1 day = 0.004).
    #[arg(long, global = true, conflicts_with = "t_months")]
    pub t_days: Option<f64>,
    /// Elapsed time in months (1 month = 0.08).
    #[arg(long, global = true)]
    pub t_months: Option<f64>,
    /// Relative tolerance for the next omitted term.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Grid half-width in standard deviations.
    #[arg(long, global = true)]
    pub grid_sd: Option<f64>,
    /// Number of grid points (odd).
    #[arg(long, global = true)]
    pub grid_points: Option<usize>,
    /// Mantissa bits for coefficient arithmetic.
    #[arg(long, global = true)]
    pub prec_bits: Option<u32>,
    /// Worker threads for grid evaluation (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileParams {
    pub sigma: Option<f64>,
    pub epsilon: Option<f64>,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileTrunc {
    #[serde(rename = "N")]
    pub max_n: Option<usize>,
    #[serde(rename = "K")]
    pub order: Option<usize>,
    pub precision_bits: Option<u32>,
}

/// JSON configuration file; every field optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub params: FileParams,
    #[serde(default)]
    pub trunc: FileTrunc,
    pub t: Option<f64>,
    pub grid_span_sd: Option<f64>,
    pub grid_points: Option<usize>,
    pub tolerance: Option<f64>,
    pub output_path: Option<PathBuf>,
    pub output_format: Option<Format>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Fully resolved settings. Fields a subcommand does not need may be
/// missing; accessors report which flag to supply.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sigma: Option<f64>,
    pub epsilon: Option<f64>,
    pub eta: f64,
    pub max_n: usize,
    /// Unset means the subcommand's own default.
    pub order: Option<usize>,
    pub precision_bits: u32,
    pub t: Option<f64>,
    pub grid_span_sd: f64,
    pub grid_points: usize,
    pub tolerance: f64,
    pub threads: Option<usize>,
    pub output_path: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn resolve(flags: &Flags) -> anyhow::Result<Self> {
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let t = flags
            .t
            .or(flags.t_days.map(|d| d * DAY))
            .or(flags.t_months.map(|m| m * MONTH))
            .or(file.t);
        let cfg = Self {
            sigma: flags.sigma.or(file.params.sigma),
            epsilon: flags.epsilon.or(file.params.epsilon),
            eta: flags.eta.or(file.params.eta).unwrap_or(0.0),
            max_n: flags.max_n.or(file.trunc.max_n).unwrap_or(DEFAULT_MAX_N),
            order: flags.order.or(file.trunc.order),
            precision_bits: flags
                .prec_bits
                .or(file.trunc.precision_bits)
                .unwrap_or(DEFAULT_PRECISION_BITS),
            t,
            grid_span_sd: flags.grid_sd.or(file.grid_span_sd).unwrap_or(DEFAULT_SPAN_SD),
            grid_points: flags.grid_points.or(file.grid_points).unwrap_or(DEFAULT_GRID_POINTS),
            tolerance: flags.tol.or(file.tolerance).unwrap_or(DEFAULT_TOLERANCE),
            threads: flags.threads,
            output_path: flags.out.clone().or(file.output_path),
            format: flags.format.or(file.output_format).unwrap_or(Format::Csv),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> anyhow::Result<()> {
        let finite = [
            ("--sigma", self.sigma),
            ("--epsilon", self.epsilon),
            ("--eta", Some(self.eta)),
            ("--t", self.t),
            ("--grid-sd", Some(self.grid_span_sd)),
            ("--tol", Some(self.tolerance)),
        ];
        for (flag, v) in finite {
            if let Some(v) = v {
                if !v.is_finite() {
                    bail!("{flag} must be finite, got {v}");
                }
            }
        }
        if self.grid_points < 3 || self.grid_points.is_multiple_of(2) {
            bail!("--grid-points must be odd and at least 3, got {}", self.grid_points);
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            bail!("--tol must lie in (0, 1), got {}", self.tolerance);
        }
        if self.threads == Some(0) {
            bail!("--threads must be at least 1");
        }
        Ok(())
    }

    pub fn sigma(&self) -> anyhow::Result<f64> {
        self.sigma.context("missing --sigma (or params.sigma in --config)")
    }

    pub fn epsilon(&self) -> anyhow::Result<f64> {
        self.epsilon
            .context("missing --epsilon (or params.epsilon in --config)")
    }

    pub fn time(&self) -> anyhow::Result<f64> {
        self.t
            .context("missing --t, --t-days or --t-months (or t in --config)")
    }

    pub fn params(&self) -> anyhow::Result<ModelParams> {
        Ok(ModelParams::new(self.sigma()?, self.epsilon()?, self.eta)?)
    }

    pub fn truncation(&self) -> anyhow::Result<Truncation> {
        Ok(Truncation::new(self.max_n, self.order(), self.precision_bits)?)
    }

    pub fn order(&self) -> usize {
        self.order.unwrap_or(DEFAULT_ORDER)
    }
}
