//! Series coefficients `a_nm` of the trial solution
//!
//! ```text
//! p(x, t) = a00 / sqrt(t) + sum_{n>=1} sum_{m} a_nm x^m / t^(n + 1/2)
//! ```
//!
//! Substituting the trial function into the PDE and matching the
//! coefficients of `x^m / t^(n + 1/2)` gives, for `0 <= m <= 2n - 2`,
//!
//! ```text
//! (1/2 - n) a_(n-1)m = sigma^2 sum_{l>=1} C(m+2l, 2l) eps^(2l-2) a_n(m+2l)
//!                    - sigma^2 eta sum_{l>=2} C(m+2l-1, 2l-1) eps^(2l-3) a_n(m+2l-1)
//! ```
//!
//! Row `n` is solved from row `n - 1` with `m` descending from `2n - 2` to
//! `0`; at each step the `l = 1` term `a_n(m+2)` is the only unknown.
//!
//! Every entry is homogeneous in the spread: `a_nm` carries exactly
//! `eps^(2n - m)`. The equation truncated at derivative order `K` (both sums
//! capped at `l <= K`) is paired with the band `2(n - K + 1) <= m <= 2n`,
//! i.e. terms up to `eps^(2K - 2)`; entries below the band are zero and
//! their equations are not solved.

use std::cmp::Ordering;

use rug::float::Constant;
use rug::{Float, Integer};
use serde::{Deserialize, Serialize};

use crate::params::{ModelParams, Truncation};
use crate::{Error, Result};

/// Which equation a table solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationForm {
    /// Every derivative order of the infinite-order equation.
    Full,
    /// Derivative families capped at `l <= K`.
    Truncated,
}

/// Identifies the table a derived quantity was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableId {
    pub params: ModelParams,
    pub trunc: Truncation,
    pub form: EquationForm,
}

/// Dense coefficient array `a_nm`, `0 <= n <= N`, `0 <= m <= 2n`.
///
/// Immutable once built; share freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    params: ModelParams,
    trunc: Truncation,
    form: EquationForm,
    /// `rows[n][m]`; `rows[0] == [a00]`.
    rows: Vec<Vec<Float>>,
    /// Index range of nonzero entries in each row (empty when `lo > hi`).
    support: Vec<(usize, usize)>,
}

/// `a00 = 1 / (sigma sqrt(2 pi))`, making the `epsilon = 0` series the
/// unit-mass Gaussian density with variance `sigma^2 t`.
pub fn normalization_constant(params: &ModelParams, precision: u32) -> Float {
    let two_pi = Float::with_val(precision, Constant::Pi) * 2u32;
    let denom = two_pi.sqrt() * params.sigma;
    denom.recip()
}

/// Builds the table for the full (infinite-order) equation. `trunc.order`
/// is ignored.
pub fn build_full(params: &ModelParams, trunc: &Truncation) -> Result<CoefficientTable> {
    let a00 = normalization_constant(params, trunc.precision_bits);
    build_with_leading(params, trunc, EquationForm::Full, a00)
}

/// Builds the table for the equation truncated at derivative order `K`.
pub fn build_truncated(params: &ModelParams, trunc: &Truncation) -> Result<CoefficientTable> {
    let a00 = normalization_constant(params, trunc.precision_bits);
    build_with_leading(params, trunc, EquationForm::Truncated, a00)
}

/// Builds a table with a caller-supplied leading coefficient `a00`.
///
/// Every `a_nm` is linear in `a00`.
pub fn build_with_leading(
    params: &ModelParams,
    trunc: &Truncation,
    form: EquationForm,
    a00: Float,
) -> Result<CoefficientTable> {
    params.validate()?;
    trunc.validate()?;
    let prec = trunc.precision_bits;
    let consts = RecurrenceConstants::new(params, trunc, form);

    let mut rows: Vec<Vec<Float>> = Vec::with_capacity(trunc.max_n + 1);
    rows.push(vec![Float::with_val(prec, a00)]);

    for n in 1..=trunc.max_n {
        let prev = &rows[n - 1];
        let mut row = vec![Float::new(prec); 2 * n + 1];
        let half_minus_n = Float::with_val(prec, 0.5 - n as f64);
        for m in (consts.lowest_equation(n)..=2 * n - 2).rev() {
            let mut acc = Float::with_val(prec, &prev[m] * &half_minus_n);
            let higher = consts.known_terms(&row, n, m);
            acc -= higher;
            let pivot = consts.pivot(m);
            row[m + 2] = acc / pivot;
            // Exact cancellations may leave -0; keep tables sign-canonical.
            if row[m + 2].is_zero() {
                row[m + 2] = Float::new(prec);
            }
        }
        rows.push(row);
    }

    Ok(CoefficientTable::from_rows(*params, *trunc, form, rows))
}

/// Precomputed factors shared by the solve and the residual audit.
struct RecurrenceConstants {
    prec: u32,
    cap: usize,
    sigma2: Float,
    sigma2_eta: Float,
    skewed: bool,
    eps_pow: Vec<Float>,
    binom: Vec<Vec<Float>>,
}

impl RecurrenceConstants {
    fn new(params: &ModelParams, trunc: &Truncation, form: EquationForm) -> Self {
        let prec = trunc.precision_bits;
        let top = 2 * trunc.max_n;
        let sigma = Float::with_val(prec, params.sigma);
        let sigma2 = Float::with_val(prec, sigma.square_ref());
        let sigma2_eta = Float::with_val(prec, &sigma2 * params.eta);
        let eps = Float::with_val(prec, params.epsilon);
        let mut eps_pow = Vec::with_capacity(top + 1);
        eps_pow.push(Float::with_val(prec, 1));
        for k in 1..=top {
            let next = Float::with_val(prec, &eps_pow[k - 1] * &eps);
            eps_pow.push(next);
        }
        let cap = match form {
            EquationForm::Full => usize::MAX,
            EquationForm::Truncated => trunc.order,
        };
        Self {
            prec,
            cap,
            sigma2,
            sigma2_eta,
            skewed: params.eta != 0.0,
            eps_pow,
            binom: binomial_table(top, prec),
        }
    }

    /// Smallest `m` whose equation is solved in row `n`: the unknown
    /// `a_n(m+2)` must lie in the band.
    fn lowest_equation(&self, n: usize) -> usize {
        if self.cap == usize::MAX {
            0
        } else {
            (2 * n).saturating_sub(2 * self.cap)
        }
    }

    /// `sigma^2 C(m+2, 2)`, the coefficient of the unknown `a_n(m+2)`.
    fn pivot(&self, m: usize) -> Float {
        Float::with_val(self.prec, &self.sigma2 * &self.binom[m + 2][2])
    }

    /// Right-hand side of equation `(n, m)` excluding the `l = 1` term.
    fn known_terms(&self, row: &[Float], n: usize, m: usize) -> Float {
        let prec = self.prec;
        let mut even = Float::new(prec);
        let even_top = ((2 * n - m) / 2).min(self.cap);
        for l in 2..=even_top {
            let idx = m + 2 * l;
            if row[idx].is_zero() {
                continue;
            }
            let w = Float::with_val(prec, &self.binom[idx][2 * l] * &self.eps_pow[2 * l - 2]);
            even += w * &row[idx];
        }
        let mut total = Float::with_val(prec, &even * &self.sigma2);
        if self.skewed {
            let mut odd = Float::new(prec);
            let odd_top = ((2 * n + 1 - m) / 2).min(self.cap);
            for l in 2..=odd_top {
                let idx = m + 2 * l - 1;
                if row[idx].is_zero() {
                    continue;
                }
                let w = Float::with_val(
                    prec,
                    &self.binom[idx][2 * l - 1] * &self.eps_pow[2 * l - 3],
                );
                odd += w * &row[idx];
            }
            total -= odd * &self.sigma2_eta;
        }
        total
    }
}

/// Pascal triangle `C(i, k)` for `i <= top`, built in exact integers.
fn binomial_table(top: usize, prec: u32) -> Vec<Vec<Float>> {
    let mut exact: Vec<Integer> = vec![Integer::from(1)];
    let mut out = Vec::with_capacity(top + 1);
    out.push(vec![Float::with_val(prec, 1)]);
    for i in 1..=top {
        let mut next = Vec::with_capacity(i + 1);
        next.push(Integer::from(1));
        for k in 1..i {
            next.push(Integer::from(&exact[k - 1] + &exact[k]));
        }
        next.push(Integer::from(1));
        out.push(next.iter().map(|c| Float::with_val(prec, c)).collect());
        exact = next;
    }
    out
}

impl CoefficientTable {
    fn from_rows(
        params: ModelParams,
        trunc: Truncation,
        form: EquationForm,
        rows: Vec<Vec<Float>>,
    ) -> Self {
        let support = rows
            .iter()
            .map(|row| {
                let lo = row.iter().position(|a| !a.is_zero());
                let hi = row.iter().rposition(|a| !a.is_zero());
                match (lo, hi) {
                    (Some(lo), Some(hi)) => (lo, hi),
                    _ => (1, 0),
                }
            })
            .collect();
        Self {
            params,
            trunc,
            form,
            rows,
            support,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn truncation(&self) -> &Truncation {
        &self.trunc
    }

    pub fn form(&self) -> EquationForm {
        self.form
    }

    pub fn id(&self) -> TableId {
        TableId {
            params: self.params,
            trunc: self.trunc,
            form: self.form,
        }
    }

    pub fn precision(&self) -> u32 {
        self.trunc.precision_bits
    }

    pub fn max_n(&self) -> usize {
        self.rows.len() - 1
    }

    /// Number of derivative families the table resolves exactly: `K` for a
    /// truncated table, every family for a full one.
    pub fn resolved_order(&self) -> usize {
        match self.form {
            EquationForm::Full => usize::MAX,
            EquationForm::Truncated => self.trunc.order,
        }
    }

    pub fn a00(&self) -> &Float {
        &self.rows[0][0]
    }

    /// `a_nm`, or `None` outside `0 <= m <= 2n`, `n <= N`.
    pub fn get(&self, n: usize, m: usize) -> Option<&Float> {
        self.rows.get(n).and_then(|row| row.get(m))
    }

    pub fn row(&self, n: usize) -> &[Float] {
        &self.rows[n]
    }

    /// Inclusive index range of the nonzero entries in row `n`, if any.
    pub fn row_support(&self, n: usize) -> Option<(usize, usize)> {
        let (lo, hi) = self.support[n];
        (lo <= hi).then_some((lo, hi))
    }

    /// The same table restricted to rows `n <= max_n`.
    ///
    /// Row `n` of the recurrence depends only on earlier rows, so this is
    /// exactly the table a fresh build at `N = max_n` would produce.
    pub fn prefix(&self, max_n: usize) -> Result<CoefficientTable> {
        let mut trunc = self.trunc;
        trunc.max_n = max_n;
        if max_n > self.max_n() {
            return Err(Error::InvalidTruncation(format!(
                "prefix N = {max_n} exceeds table N = {}",
                self.max_n()
            )));
        }
        if self.form == EquationForm::Truncated {
            trunc.validate()?;
        } else if max_n < 1 {
            return Err(Error::InvalidTruncation("N must be at least 1".into()));
        }
        Ok(Self::from_rows(
            self.params,
            trunc,
            self.form,
            self.rows[..=max_n].to_vec(),
        ))
    }

    /// Overwrites one coefficient. Only used to probe the residual audit.
    #[doc(hidden)]
    pub fn perturb(&mut self, n: usize, m: usize, relative: f64) {
        let entry = &mut self.rows[n][m];
        let delta = Float::with_val(entry.prec(), &*entry * relative);
        *entry += delta;
        let fresh = Self::from_rows(self.params, self.trunc, self.form, std::mem::take(&mut self.rows));
        *self = fresh;
    }

    pub(crate) fn from_parts(
        params: ModelParams,
        trunc: Truncation,
        form: EquationForm,
        rows: Vec<Vec<Float>>,
    ) -> Result<Self> {
        params.validate()?;
        if rows.len() != trunc.max_n + 1 {
            return Err(Error::Format(format!(
                "expected {} rows, found {}",
                trunc.max_n + 1,
                rows.len()
            )));
        }
        for (n, row) in rows.iter().enumerate() {
            if row.len() != 2 * n + 1 {
                return Err(Error::Format(format!("row {n} has {} entries", row.len())));
            }
        }
        Ok(Self::from_rows(params, trunc, form, rows))
    }
}

/// Re-evaluates every recurrence equation that defines a stored
/// coefficient (all of them for a full table, those whose unknown lies in
/// the band for a truncated one, structurally zero ones included) and
/// returns the largest absolute residual, each normalized by the largest
/// `|a_nm|` in its row `n`.
pub fn residual_check(table: &CoefficientTable) -> Float {
    let prec = table.precision();
    let consts = RecurrenceConstants::new(&table.params, &table.trunc, table.form);
    let mut worst = Float::new(prec);
    for n in 1..=table.max_n() {
        let row = table.row(n);
        let prev = table.row(n - 1);
        let scale = row
            .iter()
            .max_by(|a, b| a.cmp_abs(b).unwrap_or(Ordering::Equal))
            .map(|a| Float::with_val(prec, a.abs_ref()))
            .unwrap_or_else(|| Float::new(prec));
        if scale.is_zero() {
            continue;
        }
        let half_minus_n = Float::with_val(prec, 0.5 - n as f64);
        for m in consts.lowest_equation(n)..=2 * n - 2 {
            let lhs = Float::with_val(prec, &prev[m] * &half_minus_n);
            let mut rhs = consts.known_terms(row, n, m);
            rhs += consts.pivot(m) * &row[m + 2];
            let residual = (lhs - rhs).abs() / &scale;
            if residual > worst {
                worst = residual;
            }
        }
    }
    worst
}
