//! Market parameters and truncation settings.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One trading day in the time unit used throughout (one year = 250 days).
pub const DAY: f64 = 0.004;
/// One month (twenty trading days).
pub const MONTH: f64 = 0.08;

pub const DEFAULT_PRECISION_BITS: u32 = 256;
pub const MIN_PRECISION_BITS: u32 = 64;

/// Volatility `sigma`, spread width `epsilon` and imbalance `eta`.
///
/// `eta` is the seller weight minus the buyer weight, so it lives in
/// `[-1, 1]`; negative values mean more sellers than buyers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub sigma: f64,
    pub epsilon: f64,
    pub eta: f64,
}

impl ModelParams {
    pub fn new(sigma: f64, epsilon: f64, eta: f64) -> Result<Self> {
        let params = Self { sigma, epsilon, eta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidParams(format!(
                "sigma must be positive and finite, got {}",
                self.sigma
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "epsilon must be non-negative and finite, got {}",
                self.epsilon
            )));
        }
        if !(self.eta.is_finite() && (-1.0..=1.0).contains(&self.eta)) {
            return Err(Error::InvalidParams(format!(
                "eta must lie in [-1, 1], got {}",
                self.eta
            )));
        }
        Ok(())
    }

    /// Standard deviation `sigma * sqrt(t)` of the law at time `t`.
    pub fn std_dev(&self, t: f64) -> f64 {
        self.sigma * t.sqrt()
    }

    pub fn variance(&self, t: f64) -> f64 {
        self.sigma * self.sigma * t
    }

    /// Expected number of spread-sized jumps by time `t`, `sigma^2 t / eps^2`.
    pub fn jump_intensity(&self, t: f64) -> f64 {
        self.variance(t) / (self.epsilon * self.epsilon)
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }

    pub fn with_eta(self, eta: f64) -> Self {
        Self { eta, ..self }
    }
}

/// Series truncation: rows `n <= N`, PDE order `K`, and mantissa width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    #[serde(rename = "N")]
    pub max_n: usize,
    #[serde(rename = "K")]
    pub order: usize,
    pub precision_bits: u32,
}

impl Truncation {
    pub fn new(max_n: usize, order: usize, precision_bits: u32) -> Result<Self> {
        let trunc = Self {
            max_n,
            order,
            precision_bits,
        };
        trunc.validate()?;
        Ok(trunc)
    }

    /// `N` rows and order `K` at the default 256-bit precision.
    pub fn with_default_precision(max_n: usize, order: usize) -> Result<Self> {
        Self::new(max_n, order, DEFAULT_PRECISION_BITS)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_n < 1 {
            return Err(Error::InvalidTruncation("N must be at least 1".into()));
        }
        if self.order < 1 {
            return Err(Error::InvalidTruncation("K must be at least 1".into()));
        }
        if self.order > self.max_n {
            return Err(Error::InvalidTruncation(format!(
                "K = {} exceeds N = {}",
                self.order, self.max_n
            )));
        }
        if self.precision_bits < MIN_PRECISION_BITS {
            return Err(Error::InvalidTruncation(format!(
                "precision must be at least {MIN_PRECISION_BITS} bits, got {}",
                self.precision_bits
            )));
        }
        Ok(())
    }
}
