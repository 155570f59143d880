//! Exact solution of the full equation.
//!
//! With `p_hat(w) = int p(x) e^{iwx} dx` each derivative becomes `-iw` and
//! both derivative families sum in closed form:
//!
//! ```text
//! psi(w) = (sigma^2/eps^2) (cos(eps w) - 1) + i (sigma^2 eta/eps^2) (sin(eps w) - eps w)
//! ```
//!
//! This is the log-characteristic function (per unit time) of
//! `eps (N+ - N-) + drift t` with independent Poisson counts of rates
//!
//! ```text
//! lambda_pm = sigma^2 (1 +- eta) / (2 eps^2),   drift = -sigma^2 eta / eps,
//! ```
//!
//! so the fundamental solution is a shifted, scaled Skellam law on the
//! lattice `eps Z + drift t`. Its cumulants are
//! `kappa_2k = sigma^2 eps^(2k-2) t` and `kappa_(2k-1) = sigma^2 eta eps^(2k-3) t`
//! (`k >= 2`), with `kappa_1 = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::params::ModelParams;
use crate::quadrature::interpolate;
use crate::series::DensityGrid;
use crate::{Error, Result};

/// Smallest `sigma^2 t / eps^2` (expected number of jumps) at which the
/// smooth series is compared against the lattice law.
pub const MIN_JUMP_INTENSITY: f64 = 25.0;

/// `sin z - z`, accurate near zero.
fn sin_minus_id(z: Complex64) -> Complex64 {
    if z.norm() < 1.0 {
        // -z^3/3! + z^5/5! - ...
        let z2 = z * z;
        let mut term = -z * z2 / 6.0;
        let mut sum = term;
        let mut k = 2.0;
        while term.norm() > 1e-18 * sum.norm() {
            term = -term * z2 / ((2.0 * k) * (2.0 * k + 1.0));
            sum += term;
            k += 1.0;
        }
        sum
    } else {
        z.sin() - z
    }
}

/// `psi` at a complex argument.
pub fn symbol_complex(params: &ModelParams, w: Complex64) -> Complex64 {
    let s2 = params.sigma * params.sigma;
    let eps = params.epsilon;
    if eps == 0.0 {
        return -0.5 * s2 * w * w;
    }
    // cos(z) - 1 = -2 sin^2(z/2) avoids cancellation for small z.
    let half = (eps * w * 0.5).sin();
    let even = -2.0 * s2 / (eps * eps) * half * half;
    let odd = Complex64::i() * (s2 * params.eta / (eps * eps)) * sin_minus_id(eps * w);
    even + odd
}

/// The Fourier symbol `psi(w)` of the full equation.
pub fn symbol(params: &ModelParams, omega: f64) -> Complex64 {
    symbol_complex(params, Complex64::new(omega, 0.0))
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

/// Coefficient `c_m` of `d^m p / dx^m` in the equation.
pub fn pde_coefficient(params: &ModelParams, m: usize) -> f64 {
    let s2 = params.sigma * params.sigma;
    let eps = params.epsilon;
    match m {
        0 | 1 => 0.0,
        _ if m.is_multiple_of(2) => s2 * eps.powi(m as i32 - 2) / factorial(m),
        // (-eps)^(2k-3) with 2k - 1 = m.
        _ => -s2 * params.eta * eps.powi(m as i32 - 2) / factorial(m),
    }
}

/// Coefficient of `w^m` in `psi` implied by the equation: `c_m (-i)^m`.
pub fn pde_symbol_coefficient(params: &ModelParams, m: usize) -> Complex64 {
    let minus_i_pow = match m % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    };
    pde_coefficient(params, m) * minus_i_pow
}

/// Taylor coefficient of `psi` at `w = 0`, by the trapezoid rule on the
/// Cauchy integral over a circle of radius `max(m, 1) / eps`.
pub fn numeric_symbol_coefficient(params: &ModelParams, m: usize) -> Complex64 {
    const POINTS: usize = 128;
    let radius = (m.max(1) as f64) / params.epsilon.max(f64::MIN_POSITIVE);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..POINTS {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / POINTS as f64;
        let unit = Complex64::from_polar(1.0, theta);
        acc += symbol_complex(params, radius * unit) * unit.powi(-(m as i32));
    }
    acc / (POINTS as f64 * radius.powi(m as i32))
}

/// Largest mismatch between the Taylor coefficients of the closed-form
/// symbol and those implied by the equation, over orders `0..=2K`, each
/// relative to `sigma^2 eps^(m-2) / m!`.
pub fn symbol_taylor_check(params: &ModelParams, order: usize) -> Result<f64> {
    if params.epsilon <= 0.0 {
        return Err(Error::InvalidParams(
            "symbol check needs a positive spread".into(),
        ));
    }
    let s2 = params.sigma * params.sigma;
    Ok((0..=2 * order)
        .map(|m| {
            let scale = s2 * params.epsilon.powi(m as i32 - 2) / factorial(m);
            (numeric_symbol_coefficient(params, m) - pde_symbol_coefficient(params, m)).norm()
                / scale
        })
        .fold(0.0, f64::max))
}

/// `kappa_m(t)` read off the equation: `t` times the coefficient of
/// `(iw)^m / m!` in `psi`.
pub fn symbol_cumulant(params: &ModelParams, m: usize, t: f64) -> f64 {
    let s2 = params.sigma * params.sigma;
    let eps = params.epsilon;
    match m {
        0 | 1 => 0.0,
        2 => s2 * t,
        _ if m.is_multiple_of(2) => s2 * eps.powi(m as i32 - 2) * t,
        _ => s2 * params.eta * eps.powi(m as i32 - 2) * t,
    }
}

/// `(kappa_1, kappa_2, kappa_3, kappa_4)` of the exact law at time `t`.
pub fn oracle_cumulants(params: &ModelParams, t: f64) -> [f64; 4] {
    [1, 2, 3, 4].map(|m| symbol_cumulant(params, m, t))
}

/// Jump rates and drift of the lattice process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpRates {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub drift: f64,
    pub epsilon: f64,
}

impl JumpRates {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let eps = params.epsilon;
        if eps <= 0.0 {
            return Err(Error::InvalidParams(
                "the lattice law needs a positive spread; use the Gaussian for eps = 0".into(),
            ));
        }
        let s2 = params.sigma * params.sigma;
        let base = s2 / (2.0 * eps * eps);
        Ok(Self {
            lambda_plus: base * (1.0 + params.eta),
            lambda_minus: base * (1.0 - params.eta),
            drift: -s2 * params.eta / eps,
            epsilon: eps,
        })
    }
}

/// Exact law at time `t`: masses on `x_j = j eps + drift t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeDistribution {
    pub t: f64,
    pub rates: JumpRates,
    pub js: Vec<i64>,
    pub support: Vec<f64>,
    pub masses: Vec<f64>,
}

impl LatticeDistribution {
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Mass at lattice index `j` (zero outside the window).
    pub fn mass(&self, j: i64) -> f64 {
        let first = self.js[0];
        usize::try_from(j - first)
            .ok()
            .and_then(|i| self.masses.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    /// First four cumulants of the tabulated masses.
    pub fn cumulants(&self) -> [f64; 4] {
        // Central moments in lattice units, then rescaled; the fourth
        // cumulant is a difference of nearly equal terms.
        let total = self.total_mass();
        let mean_j: f64 = self
            .js
            .iter()
            .zip(&self.masses)
            .map(|(&j, &p)| j as f64 * p)
            .sum::<f64>()
            / total;
        let mut central = [0.0; 5];
        for (&j, &p) in self.js.iter().zip(&self.masses) {
            let d = j as f64 - mean_j;
            let mut pw = 1.0;
            for c in central.iter_mut() {
                *c += pw * p;
                pw *= d;
            }
        }
        let mu: Vec<f64> = central.iter().map(|c| c / total).collect();
        let e = self.rates.epsilon;
        let mean = mean_j * e + self.rates.drift * self.t;
        [
            mean,
            mu[2] * e * e,
            mu[3] * e.powi(3),
            (mu[4] - 3.0 * mu[2] * mu[2]) * e.powi(4),
        ]
    }
}

/// `ln P(N+ - N- = j)` for Poisson means `a`, `b`.
fn skellam_ln_mass(j: i64, a: f64, b: f64) -> f64 {
    let k0 = if j < 0 { (-j) as u64 } else { 0 };
    let ln_term = |k: u64| -> f64 {
        let up = (j + k as i64) as u64;
        let mut v = -(a + b) - ln_gamma(up as f64 + 1.0) - ln_gamma(k as f64 + 1.0);
        // 0^0 = 1 for vanishing rates.
        if up > 0 {
            v += up as f64 * a.ln();
        }
        if k > 0 {
            v += k as f64 * b.ln();
        }
        v
    };
    if b == 0.0 || a == 0.0 {
        // Only the k = k0 term survives (and j must have the right sign).
        if (b == 0.0 && j < 0) || (a == 0.0 && j > 0) {
            return f64::NEG_INFINITY;
        }
        return ln_term(k0);
    }
    // Terms rise to a peak near k ~ sqrt(ab) and then fall off faster than
    // geometrically; collect until they are negligible.
    let mut terms = Vec::new();
    let mut peak = f64::NEG_INFINITY;
    let mut k = k0;
    loop {
        let v = ln_term(k);
        peak = peak.max(v);
        terms.push(v);
        let ratio_ln = a.ln() + b.ln()
            - ((j + k as i64 + 1) as f64).ln()
            - ((k + 1) as f64).ln();
        if ratio_ln < 0.0 && v < peak - 50.0 {
            break;
        }
        k += 1;
    }
    peak + terms.iter().map(|v| (v - peak).exp()).sum::<f64>().ln()
}

/// Skellam masses on a window around the mean large enough that the
/// discarded mass is below `mass_tolerance`.
pub fn lattice_pmf(params: &ModelParams, t: f64, mass_tolerance: f64) -> Result<LatticeDistribution> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    if !(mass_tolerance > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mass tolerance {mass_tolerance} must be positive"
        )));
    }
    let rates = JumpRates::new(params)?;
    let (a, b) = (rates.lambda_plus * t, rates.lambda_minus * t);
    let center = (a - b).round() as i64;
    let spread = (a + b).sqrt();
    // Beyond |j - center| > 10 sd + 20 the tail masses are decaying at
    // least geometrically; stop once an edge mass is tiny relative to the
    // tolerance.
    let floor = 10.0 * spread + 20.0;
    let edge_ok = |j: i64, p: f64| (j - center).abs() as f64 > floor && p < 1e-3 * mass_tolerance;

    let mut right = Vec::new();
    let mut j = center;
    loop {
        let p = skellam_ln_mass(j, a, b).exp();
        right.push(p);
        if edge_ok(j, p) {
            break;
        }
        j += 1;
    }
    let mut left = Vec::new();
    let mut j = center - 1;
    loop {
        let p = skellam_ln_mass(j, a, b).exp();
        left.push(p);
        if edge_ok(j, p) {
            break;
        }
        j -= 1;
    }
    let first = center - left.len() as i64;
    left.reverse();
    let masses: Vec<f64> = left.into_iter().chain(right).collect();
    let js: Vec<i64> = (0..masses.len() as i64).map(|i| first + i).collect();
    let support = js
        .iter()
        .map(|&j| j as f64 * rates.epsilon + rates.drift * t)
        .collect();
    Ok(LatticeDistribution {
        t,
        rates,
        js,
        support,
        masses,
    })
}

/// Pointwise agreement between a series grid and the lattice law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub points: usize,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    /// Lattice offset where the maximum occurs.
    pub worst_x: f64,
}

/// Compares `mass_j / eps` with the series density (linearly interpolated on
/// the grid) at lattice points `|x_j| <= bulk sigma sqrt(t)`.
pub fn compare_series_to_oracle(
    grid: &DensityGrid,
    lattice: &LatticeDistribution,
    bulk: f64,
) -> Result<ErrorReport> {
    let params = grid.table.params;
    let intensity = params.jump_intensity(grid.t);
    if !(intensity >= MIN_JUMP_INTENSITY) {
        return Err(Error::Regime(format!(
            "sigma^2 t / eps^2 = {intensity:.4} < {MIN_JUMP_INTENSITY}: the lattice law is too discrete for a smooth comparison"
        )));
    }
    if (lattice.t - grid.t).abs() > 1e-12 * grid.t {
        return Err(Error::InvalidArgument(format!(
            "grid at t = {} but lattice at t = {}",
            grid.t, lattice.t
        )));
    }
    let limit = bulk * params.std_dev(grid.t);
    let ys = grid.values();
    let eps = lattice.rates.epsilon;
    let mut count = 0;
    let mut sum = 0.0;
    let mut worst = (0.0, 0.0);
    for (&x, &mass) in lattice.support.iter().zip(&lattice.masses) {
        if x.abs() > limit {
            continue;
        }
        let series = interpolate(&grid.xs, &ys, x)?;
        let exact = mass / eps;
        let rel = ((series - exact) / exact).abs();
        count += 1;
        sum += rel;
        if rel > worst.0 {
            worst = (rel, x);
        }
    }
    if count == 0 {
        return Err(Error::Coverage("no lattice points inside the bulk".into()));
    }
    Ok(ErrorReport {
        points: count,
        max_rel_error: worst.0,
        mean_rel_error: sum / count as f64,
        worst_x: worst.1,
    })
}
