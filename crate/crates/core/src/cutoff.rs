//! Truncation-error control.
//!
//! Consecutive diagonal sub-series satisfy
//!
//! ```text
//! phi_j(x, y) / phi_(j-1)(x, y) = c1 y + c2 x^2 y^2 + O(y^3),   y = 1/t,
//! c1 = a_j2 / a_(j-1)2,
//! c2 = (a_(j+1)4 - c1 a_j4) / a_(j-1)2,
//! ```
//!
//! so requiring the first omitted term to stay below a fraction `tol` of
//! the last kept one bounds `y` from above, i.e. gives a minimum time from
//! which a series with `K = j - 1` diagonals can be trusted.

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::coefficients::{build_full, CoefficientTable, EquationForm};
use crate::exec::Execution;
use crate::params::{ModelParams, Truncation};
use crate::series::{eval_grid_with, phi_term};
use crate::{Error, Result};

/// Relative slack when comparing a cutoff time against the requested time,
/// so that a printed `t_min = 0.08` admits `t = 0.08`.
pub const TIME_TIE_SLACK: f64 = 1e-9;

/// Leading coefficients of the ratio `phi_j / phi_(j-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub j: usize,
    pub c1: f64,
    pub c2: f64,
}

impl RatioEstimate {
    /// The series order this ratio certifies: `K = j - 1`.
    pub fn order(&self) -> usize {
        self.j - 1
    }

    /// `c1 y + c2 x^2 y^2`.
    pub fn model(&self, x: f64, y: f64) -> f64 {
        self.c1 * y + self.c2 * x * x * y * y
    }
}

/// Outcome of [`min_time`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    /// The ratio bound holds for every `t >= time`.
    Time(f64),
    /// `c1 = c2 x^2 = 0`: the bound never binds.
    Unconstrained,
}

impl Cutoff {
    /// Cutoff as a number, `0` when unconstrained.
    pub fn time(&self) -> f64 {
        match *self {
            Cutoff::Time(t) => t,
            Cutoff::Unconstrained => 0.0,
        }
    }

    pub fn admits(&self, t: f64) -> bool {
        match *self {
            Cutoff::Time(tmin) => tmin <= t * (1.0 + TIME_TIE_SLACK),
            Cutoff::Unconstrained => true,
        }
    }
}

fn entry(table: &CoefficientTable, n: usize, m: usize) -> Result<&Float> {
    table
        .get(n, m)
        .ok_or_else(|| Error::MissingEntry(format!("a_{n},{m} (table N = {})", table.max_n())))
}

/// `(c1, c2)` for the ratio `phi_j / phi_(j-1)`, `j >= 2`.
///
/// Needs rows up to `n = j + 1` and, for a truncated table, `K >= j` (the
/// required entries sit on diagonals `j - 1` and `j`).
pub fn ratio_coefficients(table: &CoefficientTable, j: usize) -> Result<RatioEstimate> {
    if j < 2 {
        return Err(Error::InvalidArgument(format!("ratio index j = {j} < 2")));
    }
    if table.form() == EquationForm::Truncated && table.truncation().order < j {
        return Err(Error::MissingEntry(format!(
            "j = {j} needs diagonal {j}, table keeps K = {}",
            table.truncation().order
        )));
    }
    let prec = table.precision();
    let base = entry(table, j - 1, 2)?;
    let a_j2 = entry(table, j, 2)?;
    let a_j4 = entry(table, j, 4)?;
    let a_next4 = entry(table, j + 1, 4)?;
    if base.is_zero() {
        return Err(Error::DivisionByZero(format!("a_{},2 = 0", j - 1)));
    }
    let c1 = Float::with_val(prec, a_j2 / base);
    let c2 = (Float::with_val(prec, a_next4 - Float::with_val(prec, &c1 * a_j4))) / base;
    Ok(RatioEstimate {
        j,
        c1: c1.to_f64(),
        c2: c2.to_f64(),
    })
}

/// Full table just large enough for ratios `j = 2..=k_max + 1`.
pub fn ratio_table(params: &ModelParams, k_max: usize, precision: u32) -> Result<CoefficientTable> {
    let trunc = Truncation::new(k_max + 2, 1, precision)?;
    build_full(params, &trunc)
}

/// Ratio estimates certifying `K = 1..=k_max` (i.e. `j = 2..=k_max + 1`).
pub fn ratio_family(params: &ModelParams, k_max: usize, precision: u32) -> Result<Vec<RatioEstimate>> {
    let table = ratio_table(params, k_max, precision)?;
    (2..=k_max + 1).map(|j| ratio_coefficients(&table, j)).collect()
}

fn check_tolerance(tolerance: f64) -> Result<()> {
    if tolerance > 0.0 && tolerance < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "tolerance {tolerance} outside (0, 1)"
        )))
    }
}

/// Smallest positive root of `b y^2 + c y = s`, if any.
fn first_root(b: f64, c: f64, s: f64) -> Option<f64> {
    if b == 0.0 {
        return (c != 0.0).then(|| s / c).filter(|&y| y > 0.0);
    }
    let disc = c * c + 4.0 * b * s;
    if disc < 0.0 {
        return None;
    }
    // Cancellation-free pair of roots of b y^2 + c y - s = 0.
    let q = -0.5 * (c + c.signum() * disc.sqrt());
    let mut roots = Vec::with_capacity(2);
    if q != 0.0 {
        roots.push(q / b);
        roots.push(-s / q);
    } else {
        // c = 0 and disc = 0 only when s = 0, excluded by tol > 0.
        let r = (s / b).abs().sqrt();
        roots.extend([r, -r]);
    }
    roots.into_iter().filter(|&y| y > 0.0).reduce(f64::min)
}

/// Minimum valid time: `1 / y_max`, where `y_max` is the first `y > 0` at
/// which `|c1 y + c2 x^2 y^2|` reaches `tolerance`. At `x = 0` this is
/// `|c1| / tolerance`.
pub fn min_time(est: &RatioEstimate, x: f64, tolerance: f64) -> Result<Cutoff> {
    check_tolerance(tolerance)?;
    let b = est.c2 * x * x;
    let c = est.c1;
    if b == 0.0 && c == 0.0 {
        return Ok(Cutoff::Unconstrained);
    }
    let y = [tolerance, -tolerance]
        .into_iter()
        .filter_map(|s| first_root(b, c, s))
        .reduce(f64::min);
    Ok(match y {
        Some(y) => Cutoff::Time(1.0 / y),
        None => Cutoff::Unconstrained,
    })
}

/// Cutoff valid on the whole region `|x'| <= x_max`: the larger of the
/// pointwise cutoffs at `0` and `x_max`.
///
/// The pointwise cutoff is not monotone in `|x|`. With `c1 > 0 > c2` the
/// quadratic term first lowers the ratio (earlier cutoff), and once its
/// peak drops below `tolerance` the first crossing moves to `-tolerance`
/// and then comes earlier in `y` as `|x|` grows. Along `b = c2 x^2` each
/// branch is monotone, so the supremum over `[0, x_max]` sits at an
/// endpoint, and this value is non-decreasing in `x_max`.
pub fn min_time_region(est: &RatioEstimate, x_max: f64, tolerance: f64) -> Result<Cutoff> {
    let at_zero = min_time(est, 0.0, tolerance)?;
    let at_edge = min_time(est, x_max, tolerance)?;
    Ok(match (at_zero, at_edge) {
        (Cutoff::Time(a), Cutoff::Time(b)) => Cutoff::Time(a.max(b)),
        (Cutoff::Time(a), Cutoff::Unconstrained) | (Cutoff::Unconstrained, Cutoff::Time(a)) => {
            Cutoff::Time(a)
        }
        (Cutoff::Unconstrained, Cutoff::Unconstrained) => Cutoff::Unconstrained,
    })
}

/// Largest `K` whose ratios `j = 2..=K + 1` all admit time `t`; `0` when
/// even `j = 2` does not. `estimates` must be ordered by `j` from 2.
pub fn max_safe_k(estimates: &[RatioEstimate], t: f64, x: f64, tolerance: f64) -> Result<usize> {
    let mut safe = 0;
    for (i, est) in estimates.iter().enumerate() {
        if est.j != i + 2 {
            return Err(Error::InvalidArgument(format!(
                "estimate {i} has j = {}, expected {}",
                est.j,
                i + 2
            )));
        }
        if !min_time(est, x, tolerance)?.admits(t) {
            break;
        }
        safe = est.order();
    }
    Ok(safe)
}

/// `phi_j / phi_(j-1)` at `(x, 1/t)`, for comparison with the quadratic
/// model. Zero when `phi_j` vanishes identically.
pub fn empirical_term_ratio(table: &CoefficientTable, j: usize, x: f64, t: f64) -> Result<f64> {
    if j < 2 {
        return Err(Error::InvalidArgument(format!("ratio index j = {j} < 2")));
    }
    let num = phi_term(table, j, x, t)?;
    if num.is_zero() {
        return Ok(0.0);
    }
    let den = phi_term(table, j - 1, x, t)?;
    if den.is_zero() {
        return Err(Error::DivisionByZero(format!("phi_{} = 0 at x = {x}", j - 1)));
    }
    Ok(Float::with_val(table.precision(), &num / &den).to_f64())
}

/// Least-squares slope of `log|ratio - model|` against `log y` over the
/// given `ys`: the observed order of the remainder.
pub fn remainder_order(
    table: &CoefficientTable,
    est: &RatioEstimate,
    x: f64,
    ys: &[f64],
) -> Result<f64> {
    let mut pts = Vec::with_capacity(ys.len());
    for &y in ys {
        let prec = table.precision();
        let t = 1.0 / y;
        let num = phi_term(table, est.j, x, t)?;
        let den = phi_term(table, est.j - 1, x, t)?;
        if den.is_zero() {
            return Err(Error::DivisionByZero(format!("phi_{} = 0", est.j - 1)));
        }
        // Keep the subtraction in the table's precision: the remainder is
        // many orders below the ratio itself.
        let ratio = Float::with_val(prec, &num / &den);
        let model = Float::with_val(prec, est.c1) * y
            + Float::with_val(prec, est.c2) * (x * x * y * y);
        let rem = Float::with_val(prec, &ratio - &model).abs();
        if rem.is_zero() {
            return Err(Error::DivisionByZero("zero remainder".into()));
        }
        pts.push((y.ln(), rem.ln().to_f64()));
    }
    Ok(slope(&pts))
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Offsets with `lo_sd <= |x| / (sigma sqrt t) <= hi_sd`, `per_side` points
/// on each side, increasing.
pub fn mid_tail_grid(sigma: f64, t: f64, lo_sd: f64, hi_sd: f64, per_side: usize) -> Vec<f64> {
    let sd = sigma * t.sqrt();
    let right: Vec<f64> = (0..per_side)
        .map(|i| {
            let w = if per_side == 1 {
                0.0
            } else {
                i as f64 / (per_side - 1) as f64
            };
            sd * (lo_sd + w * (hi_sd - lo_sd))
        })
        .collect();
    right
        .iter()
        .rev()
        .map(|x| -x)
        .chain(right.iter().copied())
        .collect()
}

/// One step of a [`divergence_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceStep {
    #[serde(rename = "K")]
    pub k: usize,
    pub sup_diff: f64,
}

/// `d_K = sup_x |p_(K+1)(x) - p_K(x)|` over `xs` for a family ordered by
/// increasing `K`. Entry `i` compares `tables[i + 1]` with `tables[i]`.
pub fn divergence_scan(
    tables: &[CoefficientTable],
    xs: &[f64],
    t: f64,
    exec: Execution,
) -> Result<Vec<DivergenceStep>> {
    for pair in tables.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.params() != b.params()
            || a.max_n() != b.max_n()
            || a.form() != EquationForm::Truncated
            || b.form() != EquationForm::Truncated
            || a.truncation().order >= b.truncation().order
        {
            return Err(Error::FamilyMismatch(
                "divergence scan needs truncated tables with shared parameters and N, K increasing".into(),
            ));
        }
    }
    let grids = tables
        .iter()
        .map(|tb| eval_grid_with(tb, xs, t, exec))
        .collect::<Result<Vec<_>>>()?;
    Ok(tables
        .windows(2)
        .zip(grids.windows(2))
        .map(|(tb, g)| {
            let prec = tb[0].precision();
            let sup = g[0]
                .points
                .iter()
                .zip(&g[1].points)
                .map(|(a, b)| Float::with_val(prec, &b.value - &a.value).abs().to_f64())
                .fold(0.0, f64::max);
            DivergenceStep {
                k: tb[0].truncation().order,
                sup_diff: sup,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(eps: f64) -> ModelParams {
        ModelParams::new(0.1, eps, 0.0).unwrap()
    }

    #[test]
    fn ratio_rejects_degenerate_inputs() {
        let tb = ratio_table(&params(0.0), 3, 128).unwrap();
        let e = ratio_coefficients(&tb, 2).unwrap();
        assert_eq!((e.c1, e.c2), (0.0, 0.0));
        assert!(matches!(ratio_coefficients(&tb, 3), Err(Error::DivisionByZero(_))));
        assert!(ratio_coefficients(&tb, 1).is_err());
        assert!(matches!(ratio_coefficients(&tb, 5), Err(Error::MissingEntry(_))));
    }

    #[test]
    fn truncated_table_needs_enough_diagonals() {
        let p = params(0.005);
        let t2 = crate::coefficients::build_truncated(&p, &Truncation::new(10, 2, 128).unwrap())
            .unwrap();
        assert!(matches!(ratio_coefficients(&t2, 3), Err(Error::MissingEntry(_))));
        let full = ratio_table(&p, 4, 128).unwrap();
        assert_eq!(
            ratio_coefficients(&t2, 2).unwrap(),
            ratio_coefficients(&full, 2).unwrap()
        );
    }

    #[test]
    fn first_ratio_closed_form() {
        // Hand-solved rows 1..3 of the full recurrence with eta = 0:
        // c1 = eps^2 / (4 sigma^2), c2 = -(eps^2 / sigma^4) * 7/48.
        for &(s, e) in &[(0.1, 0.005), (0.2, 0.01), (0.1, 0.002)] {
            let p = ModelParams::new(s, e, 0.0).unwrap();
            let est = ratio_family(&p, 1, 256).unwrap()[0];
            let c1 = e * e / (4.0 * s * s);
            assert_abs_diff_eq!(est.c1, c1, epsilon = 1e-15 * c1.abs().max(1.0));
            let c2 = -7.0 * e * e / (48.0 * s.powi(4));
            assert!((est.c2 - c2).abs() <= 1e-12 * c2.abs(), "{} vs {}", est.c2, c2);
        }
    }

    #[test]
    fn min_time_at_origin_and_sentinel() {
        let est = RatioEstimate { j: 2, c1: 0.0006, c2: 0.0 };
        assert_abs_diff_eq!(min_time(&est, 0.0, 0.05).unwrap().time(), 0.012, epsilon = 1e-15);
        let flat = RatioEstimate { j: 2, c1: 0.0, c2: 0.0 };
        assert_eq!(min_time(&flat, 0.3, 0.05).unwrap(), Cutoff::Unconstrained);
        let x0 = RatioEstimate { j: 2, c1: 0.0, c2: -0.1 };
        assert_eq!(min_time(&x0, 0.0, 0.05).unwrap(), Cutoff::Unconstrained);
        assert!(min_time(&est, 0.0, 0.0).is_err());
        assert!(min_time(&est, 0.0, 1.0).is_err());
    }

    #[test]
    fn min_time_takes_first_crossing() {
        // c1 > 0, c2 < 0: the model rises to a peak then falls through
        // -tol; the peak value c1^2 / (4|b|) exceeds tol here, so the first
        // crossing is the smaller root of b y^2 + c1 y = tol.
        let est = RatioEstimate { j: 2, c1: 0.01, c2: -0.0001 };
        let x = 1.0;
        let tol = 0.05;
        let y = 1.0 / min_time(&est, x, tol).unwrap().time();
        assert_abs_diff_eq!(est.model(x, y), tol, epsilon = 1e-12);
        for i in 1..100 {
            let yy = y * i as f64 / 100.0;
            assert!(est.model(x, yy).abs() < tol);
        }
        // Peak below tol: crossing happens on the way down, at -tol.
        let low = RatioEstimate { j: 2, c1: 0.001, c2: -0.0001 };
        let y = 1.0 / min_time(&low, x, tol).unwrap().time();
        assert_abs_diff_eq!(low.model(x, y), -tol, epsilon = 1e-12);
    }

    #[test]
    fn min_time_monotone_in_tolerance_and_offset() {
        let est = ratio_family(&params(0.005), 4, 256).unwrap()[3];
        let mut last = f64::INFINITY;
        for tol in [0.01, 0.02, 0.05, 0.1, 0.2] {
            let t = min_time(&est, 0.0, tol).unwrap().time();
            assert!(t <= last);
            last = t;
        }
        let mut last = 0.0;
        for x in [0.0, 0.01, 0.02, 0.05, 0.1, 0.3] {
            let t = min_time_region(&est, x, 0.05).unwrap().time();
            assert!(t >= last);
            last = t;
        }
    }

    #[test]
    fn pointwise_cutoff_dips_then_rises_in_offset() {
        // K = 4, eps = 0.005: c2 < 0 pulls the ratio down near the origin;
        // past |x| ~ 0.016 the model peaks below tol and the binding
        // crossing is at -tol.
        let est = ratio_family(&params(0.005), 4, 256).unwrap()[3];
        assert!(est.c1 > 0.0 && est.c2 < 0.0);
        let t0 = min_time(&est, 0.0, 0.05).unwrap().time();
        let near = min_time(&est, 0.01, 0.05).unwrap().time();
        let far = min_time(&est, 0.05, 0.05).unwrap().time();
        let farther = min_time(&est, 0.1, 0.05).unwrap().time();
        assert!(near < t0);
        assert!(far < farther);
    }

    #[test]
    fn safe_k_examples() {
        let fam5 = ratio_family(&params(0.005), 7, 256).unwrap();
        assert_eq!(max_safe_k(&fam5, 0.08, 0.0, 0.05).unwrap(), 4);
        assert_eq!(max_safe_k(&fam5, 0.0125, 0.0, 0.05).unwrap(), 1);
        assert_eq!(max_safe_k(&fam5, 0.001, 0.0, 0.05).unwrap(), 0);
        let fam2 = ratio_family(&params(0.002), 7, 256).unwrap();
        assert_eq!(max_safe_k(&fam2, 0.0167, 0.0, 0.05).unwrap(), 5);
        assert!(max_safe_k(&fam2[1..], 1.0, 0.0, 0.05).is_err());
    }

    #[test]
    fn empirical_ratio_limits() {
        let gauss = ratio_table(&params(0.0), 3, 128).unwrap();
        assert_eq!(empirical_term_ratio(&gauss, 2, 0.01, 0.1).unwrap(), 0.0);
        let p = params(0.005);
        let tb = build_full(&p, &Truncation::new(60, 1, 256).unwrap()).unwrap();
        let est = ratio_coefficients(&tb, 2).unwrap();
        // phi_j vanishes at x = 0, so probe just off the origin.
        assert_eq!(empirical_term_ratio(&tb, 2, 0.0, 1.0).unwrap(), 0.0);
        let t = 1e4;
        let r = empirical_term_ratio(&tb, 2, 1e-4, t).unwrap();
        assert!(((r * t) - est.c1).abs() < 1e-6 * est.c1);
    }

    #[test]
    fn mid_tail_grid_shape() {
        let xs = mid_tail_grid(0.1, 0.04, 3.0, 5.0, 5);
        assert_eq!(xs.len(), 10);
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
        assert_abs_diff_eq!(xs[0], -0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(xs[5], 0.06, epsilon = 1e-15);
    }

    #[test]
    fn gaussian_family_does_not_move() {
        let p = params(0.0);
        let tables: Vec<_> = (1..=4)
            .map(|k| {
                crate::coefficients::build_truncated(&p, &Truncation::new(40, k, 128).unwrap())
                    .unwrap()
            })
            .collect();
        let xs = mid_tail_grid(0.1, 0.004, 3.0, 5.0, 7);
        let d = divergence_scan(&tables, &xs, 0.004, Execution::Sequential).unwrap();
        assert_eq!(d.len(), 3);
        assert!(d.iter().all(|s| s.sup_diff == 0.0));
        let mut shuffled = tables.clone();
        shuffled.swap(0, 1);
        assert!(matches!(
            divergence_scan(&shuffled, &xs, 0.004, Execution::Sequential),
            Err(Error::FamilyMismatch(_))
        ));
    }
}
