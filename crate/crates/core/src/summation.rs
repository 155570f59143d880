//! Compensated summation in arbitrary precision.

use std::cmp::Ordering;

use rug::Float;

/// Neumaier compensated accumulator over bigfloats.
///
/// The running compensation captures the low-order bits lost by each
/// addition, so the error is independent of the number of terms.
#[derive(Debug, Clone)]
pub struct CompensatedSum {
    sum: Float,
    compensation: Float,
}

impl CompensatedSum {
    pub fn new(precision: u32) -> Self {
        Self {
            sum: Float::new(precision),
            compensation: Float::new(precision),
        }
    }

    pub fn add(&mut self, value: &Float) {
        let prec = self.sum.prec();
        let total = Float::with_val(prec, &self.sum + value);
        let lost = if self.sum.cmp_abs(value) != Some(Ordering::Less) {
            Float::with_val(prec, &self.sum - &total) + value
        } else {
            Float::with_val(prec, value - &total) + &self.sum
        };
        self.compensation += lost;
        self.sum = total;
    }

    pub fn total(&self) -> Float {
        Float::with_val(self.sum.prec(), &self.sum + &self.compensation)
    }
}

/// Sums `values` in ascending order of magnitude with compensation.
pub fn sum_ascending(mut values: Vec<Float>, precision: u32) -> Float {
    values.sort_by(|a, b| a.cmp_abs(b).unwrap_or(Ordering::Equal));
    let mut acc = CompensatedSum::new(precision);
    for v in &values {
        acc.add(v);
    }
    acc.total()
}
