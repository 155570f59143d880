//! Asymptotic power-series solutions of the infinite-order Fokker-Planck
//! equation that governs mid-price dynamics in an illiquid market with a
//! bid-offer spread `epsilon` and buyer/seller imbalance `eta`:
//!
//! ```text
//! dp/dt = sigma^2 sum_{k>=1} eps^(2k-2)/(2k)! d^(2k)p/dx^(2k)
//!       + sigma^2 eta sum_{k>=2} (-eps)^(2k-3)/(2k-1)! d^(2k-1)p/dx^(2k-1)
//! ```
//!
//! The crate is organised around the pipeline
//!
//! * [`coefficients`]: the recurrence for the series coefficients `a_nm`,
//!   in arbitrary-precision binary floating point;
//! * [`series`]: evaluation of the truncated series with cancellation
//!   diagnostics;
//! * [`cutoff`]: ratio estimates, minimum valid times and divergence scans;
//! * [`oracle`]: the closed-form Fourier symbol of the full equation and the
//!   exact lattice (Skellam) law it generates;
//! * [`analytics`]: tail probabilities, moments and table reproduction.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod coefficients;
pub mod cutoff;
mod error;
pub mod exec;
pub mod io;
pub mod oracle;
pub mod params;
pub mod quadrature;
pub mod series;
pub mod summation;

pub use coefficients::{build_full, build_truncated, CoefficientTable, EquationForm};
pub use error::{Error, Result};
pub use exec::Execution;
pub use params::{ModelParams, Truncation};
pub use cutoff::{min_time, ratio_coefficients, Cutoff, RatioEstimate};
pub use oracle::{lattice_pmf, symbol, LatticeDistribution};
pub use series::{eval_density, eval_grid, DensityGrid, DensityPoint};

/// Re-export of the bigfloat type used for every coefficient.
pub use rug::Float;
