//! Quadrature over sampled densities.
//!
//! [`simpson`] integrates the piecewise-quadratic interpolant through
//! consecutive sample triples. On a uniform grid with an odd number of
//! points and limits at the grid ends it is the composite Simpson rule;
//! limits strictly inside a panel integrate the same quadratic over the
//! covered part, so tail integrals can start at any `q` standard deviations.

use crate::{Error, Result};

fn check_samples(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!(
            "{} abscissae but {} values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::UnsortedGrid);
    }
    Ok(())
}

fn check_limits(xs: &[f64], lo: f64, hi: f64) -> Result<()> {
    if !(lo <= hi) {
        return Err(Error::InvalidArgument(format!("limits {lo} > {hi}")));
    }
    let (first, last) = (xs[0], xs[xs.len() - 1]);
    if lo < first || hi > last {
        return Err(Error::Coverage(format!(
            "[{lo}, {hi}] is not inside the grid [{first}, {last}]"
        )));
    }
    Ok(())
}

/// Integral of the quadratic through `(x0,f0), (x1,f1), (x2,f2)` over
/// `[u, v]`.
fn panel(x: [f64; 3], f: [f64; 3], u: f64, v: f64) -> f64 {
    let (h0, h1) = (x[1] - x[0], x[2] - x[1]);
    let d1 = (f[1] - f[0]) / h0;
    let d2 = (f[2] - f[1]) / h1;
    let dd = (d2 - d1) / (h0 + h1);
    // Newton form about x0: f0 + d1 s + dd s (s - h0), s = x - x0.
    let antiderivative =
        |s: f64| s * (f[0] + s * (0.5 * d1 + dd * (s / 3.0 - 0.5 * h0)));
    antiderivative(v - x[0]) - antiderivative(u - x[0])
}

/// Integrates samples `ys` at strictly increasing `xs` over `[lo, hi]`.
///
/// Needs at least three points. With an even point count the final
/// interval borrows the preceding panel.
pub fn simpson(xs: &[f64], ys: &[f64], lo: f64, hi: f64) -> Result<f64> {
    check_samples(xs, ys)?;
    if xs.len() < 3 {
        return Err(Error::Coverage("Simpson needs at least three points".into()));
    }
    check_limits(xs, lo, hi)?;
    let n = xs.len();
    let mut total = 0.0;
    let mut start = 0;
    while start + 2 < n {
        let (a, b) = (xs[start], xs[start + 2]);
        let (u, v) = (lo.max(a), hi.min(b));
        if u < v {
            let x = [xs[start], xs[start + 1], xs[start + 2]];
            let f = [ys[start], ys[start + 1], ys[start + 2]];
            total += panel(x, f, u, v);
        }
        start += 2;
    }
    if start + 1 == n - 1 {
        // One interval left over.
        let (u, v) = (lo.max(xs[n - 2]), hi.min(xs[n - 1]));
        if u < v {
            let x = [xs[n - 3], xs[n - 2], xs[n - 1]];
            let f = [ys[n - 3], ys[n - 2], ys[n - 1]];
            total += panel(x, f, u, v);
        }
    }
    Ok(total)
}

/// Simpson over the whole grid.
pub fn simpson_all(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let (Some(&lo), Some(&hi)) = (xs.first(), xs.last()) else {
        return Err(Error::Coverage("empty grid".into()));
    };
    simpson(xs, ys, lo, hi)
}

/// Trapezoid rule over the whole grid.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_samples(xs, ys)?;
    Ok(xs
        .windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum())
}

/// Linear interpolation of the samples at `x` (inside the grid).
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    check_samples(xs, ys)?;
    if xs.is_empty() {
        return Err(Error::Coverage("empty grid".into()));
    }
    check_limits(xs, x, x)?;
    let i = xs.partition_point(|&v| v <= x);
    if i == xs.len() {
        return Ok(ys[xs.len() - 1]);
    }
    let i = i.max(1);
    let w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    Ok(ys[i - 1] + w * (ys[i] - ys[i - 1]))
}
