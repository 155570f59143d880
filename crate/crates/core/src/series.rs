//! Evaluation of the truncated trial series
//!
//! ```text
//! p_N(x, t) = a00 / sqrt(t) + sum_{n=1..N} sum_m a_nm x^m / t^(n + 1/2)
//! ```
//!
//! in the table's precision, with the cancellation diagnostics used to
//! certify far-tail values: the largest single monomial and the ratio of
//! the final sum to it.

use std::cmp::Ordering;

use rug::ops::Pow;
use rug::Float;

use crate::coefficients::{CoefficientTable, TableId};
use crate::exec::Execution;
use crate::summation::{sum_ascending, CompensatedSum};
use crate::{Error, Result};

/// Density value at one `(x, t)` with its summation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityPoint {
    pub x: f64,
    pub t: f64,
    /// Series value; negative values in the far tail are kept as-is.
    pub value: Float,
    /// Largest `|a_nm x^m / t^(n + 1/2)|` over the included monomials.
    pub max_monomial: Float,
    /// `value / max_monomial` (zero when every monomial vanishes).
    pub final_over_max: Float,
}

impl DensityPoint {
    pub fn value_f64(&self) -> f64 {
        self.value.to_f64()
    }
}

/// Density evaluated along an increasing list of offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub t: f64,
    pub xs: Vec<f64>,
    pub points: Vec<DensityPoint>,
    pub table: TableId,
}

impl DensityGrid {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Density values rounded to `f64`.
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(DensityPoint::value_f64).collect()
    }
}

/// `points` equally spaced offsets on `[-half_width, half_width]`, exactly
/// symmetric about zero (`x_i == -x_(points-1-i)`).
pub fn symmetric_grid(half_width: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let steps = (points - 1) as f64;
            (0..points)
                .map(|i| half_width * (2.0 * i as f64 - steps) / steps)
                .collect()
        }
    }
}

/// Centered Gaussian density with variance `sigma^2 t`.
pub fn gaussian_density(sigma: f64, t: f64, x: f64) -> f64 {
    let var = sigma * sigma * t;
    (-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveTime(t))
    }
}

/// Evaluates the series using every row of `table`.
pub fn eval_density(table: &CoefficientTable, x: f64, t: f64) -> Result<DensityPoint> {
    eval_density_upto(table, x, t, table.max_n())
}

/// Evaluates the series using rows `n <= max_n` only.
///
/// Rows never depend on later ones, so this equals [`eval_density`] on a
/// table freshly built at `N = max_n`.
pub fn eval_density_upto(
    table: &CoefficientTable,
    x: f64,
    t: f64,
    max_n: usize,
) -> Result<DensityPoint> {
    check_time(t)?;
    if max_n > table.max_n() {
        return Err(Error::InvalidArgument(format!(
            "max_n = {max_n} exceeds table N = {}",
            table.max_n()
        )));
    }
    let (row_sums, max_monomial) = row_sums(table, x, t, max_n);
    let prec = table.precision();
    let value = sum_ascending(row_sums, prec);
    let final_over_max = if max_monomial.is_zero() {
        Float::new(prec)
    } else {
        Float::with_val(prec, &value / &max_monomial)
    };
    Ok(DensityPoint {
        x,
        t,
        value,
        max_monomial,
        final_over_max,
    })
}

/// Per-row sums `sum_m a_nm x^m y^(n + 1/2)` for `n <= max_n` and the
/// largest single monomial.
fn row_sums(table: &CoefficientTable, x: f64, t: f64, max_n: usize) -> (Vec<Float>, Float) {
    let prec = table.precision();
    let xf = Float::with_val(prec, x);
    let y = Float::with_val(prec, t).recip();

    // x^m for m <= 2N, and y^(n + 1/2) for n <= N.
    let mut xpow = Vec::with_capacity(2 * max_n + 1);
    xpow.push(Float::with_val(prec, 1));
    for m in 1..=2 * max_n {
        let next = Float::with_val(prec, &xpow[m - 1] * &xf);
        xpow.push(next);
    }
    let mut ypow = Vec::with_capacity(max_n + 1);
    ypow.push(Float::with_val(prec, y.sqrt_ref()));
    for n in 1..=max_n {
        let next = Float::with_val(prec, &ypow[n - 1] * &y);
        ypow.push(next);
    }

    let mut max_monomial = Float::with_val(prec, table.a00() * &ypow[0]);
    let mut row_sums = Vec::with_capacity(max_n + 1);
    row_sums.push(max_monomial.clone());
    max_monomial.abs_mut();

    for (n, yn) in ypow.iter().enumerate().skip(1) {
        let Some((lo, hi)) = table.row_support(n) else {
            continue;
        };
        let row = table.row(n);
        let mut acc = CompensatedSum::new(prec);
        for m in lo..=hi {
            let a = &row[m];
            if a.is_zero() {
                continue;
            }
            let term = Float::with_val(prec, a * &xpow[m]) * yn;
            if term.cmp_abs(&max_monomial) == Some(Ordering::Greater) {
                max_monomial = Float::with_val(prec, term.abs_ref());
            }
            acc.add(&term);
        }
        row_sums.push(acc.total());
    }

    (row_sums, max_monomial)
}

/// Density at `(x, t)` using rows `n <= N` for each `N` in `ns`; entry `i`
/// equals [`eval_density_upto`] at `ns[i]` bit for bit.
pub fn eval_density_prefixes(
    table: &CoefficientTable,
    x: f64,
    t: f64,
    ns: &[usize],
) -> Result<Vec<Float>> {
    check_time(t)?;
    let Some(&top) = ns.iter().max() else {
        return Ok(Vec::new());
    };
    if top > table.max_n() {
        return Err(Error::InvalidArgument(format!(
            "max_n = {top} exceeds table N = {}",
            table.max_n()
        )));
    }
    let (sums, _) = row_sums(table, x, t, top);
    let prec = table.precision();
    Ok(ns
        .iter()
        .map(|&n| sum_ascending(sums[..=n].to_vec(), prec))
        .collect())
}

/// Evaluates the series at every offset in `xs` (strictly increasing).
pub fn eval_grid(table: &CoefficientTable, xs: &[f64], t: f64) -> Result<DensityGrid> {
    eval_grid_with(table, xs, t, Execution::default())
}

/// [`eval_grid`] with an explicit schedule. Output does not depend on it.
pub fn eval_grid_with(
    table: &CoefficientTable,
    xs: &[f64],
    t: f64,
    exec: Execution,
) -> Result<DensityGrid> {
    check_time(t)?;
    if xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::UnsortedGrid);
    }
    let points = exec
        .map(xs, |&x| eval_density(table, x, t))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityGrid {
        t,
        xs: xs.to_vec(),
        points,
        table: table.id(),
    })
}

/// The `j`-th diagonal sub-series
///
/// ```text
/// phi_j(x, y) = sum_{n>=j} a_n(2n-2j+2) x^(2n-2j+2) y^(n + 1/2),  y = 1/t,
/// ```
///
/// truncated at the table's `N`. Zero when the diagonal lies outside a
/// truncated table's band (`j > K`).
pub fn phi_term(table: &CoefficientTable, j: usize, x: f64, t: f64) -> Result<Float> {
    check_time(t)?;
    if table.params().eta != 0.0 {
        return Err(Error::SkewedTable(table.params().eta));
    }
    if j == 0 {
        return Err(Error::InvalidArgument("phi_j needs j >= 1".into()));
    }
    let prec = table.precision();
    let x2 = Float::with_val(prec, x).square();
    let y = Float::with_val(prec, t).recip();
    if j > table.max_n() {
        return Ok(Float::new(prec));
    }

    // Term n = j carries x^2 y^(j + 1/2); each later term multiplies by x^2 y.
    let mut xpow = x2.clone();
    let mut ypow = Float::with_val(prec, y.sqrt_ref()) * Float::with_val(prec, (&y).pow(j as u32));
    let mut terms = Vec::with_capacity(table.max_n() + 1 - j);
    for n in j..=table.max_n() {
        if n > j {
            xpow *= &x2;
            ypow *= &y;
        }
        let a = &table.row(n)[2 * n - 2 * j + 2];
        if !a.is_zero() {
            terms.push(Float::with_val(prec, a * &xpow) * &ypow);
        }
    }
    Ok(sum_ascending(terms, prec))
}

/// Smallest `N0` among the increasing `ns` such that every successive pair
/// from `N0` on changes the density at `(x, t)` by less than `tolerance`
/// relative. `None` when no `N0 <= max(ns)` qualifies.
///
/// Uses row prefixes of `table`, which coincide with fresh builds at each
/// `N`.
pub fn convergence_in_n(
    table: &CoefficientTable,
    ns: &[usize],
    x: f64,
    t: f64,
    tolerance: f64,
) -> Result<Option<usize>> {
    if ns.len() < 2 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "need at least two strictly increasing N values".into(),
        ));
    }
    let values = eval_density_prefixes(table, x, t, ns)?;
    Ok(stabilization_index(ns, &values, tolerance))
}

pub(crate) fn stabilization_index(ns: &[usize], values: &[Float], tolerance: f64) -> Option<usize> {
    let settled = |i: usize| {
        let (a, b) = (&values[i], &values[i + 1]);
        let diff = Float::with_val(b.prec(), a - b).abs();
        let scale = Float::with_val(b.prec(), b.abs_ref());
        if scale.is_zero() {
            diff.is_zero()
        } else {
            (diff / scale).to_f64() < tolerance
        }
    };
    let mut first = None;
    for i in (0..values.len() - 1).rev() {
        if settled(i) {
            first = Some(ns[i]);
        } else {
            break;
        }
    }
    first
}
