//! Small numeric helpers shared by the exact evaluators.

use std::iter::Sum;
use std::ops::AddAssign;

/// Absolute tolerance used wherever doubles are compared against exact
/// probabilistic identities.
pub const TOLERANCE: f64 = 1e-9;

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub const fn new() -> Self {
        Self {
            sum: 0.0,
            compensation: 0.0,
        }
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl AddAssign<f64> for CompensatedSum {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}

impl Sum<f64> for CompensatedSum {
    fn sum<I: Iterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of a slice.
pub fn sum(values: &[f64]) -> f64 {
    values.iter().copied().sum::<CompensatedSum>().value()
}

/// Clamp a probability that is allowed to overshoot 1 by floating error only.
/// Returns `None` when the overshoot exceeds [`TOLERANCE`].
pub fn clamp_probability(p: f64) -> Option<f64> {
    if !p.is_finite() || !(-TOLERANCE..=1.0 + TOLERANCE).contains(&p) {
        None
    } else {
        Some(p.clamp(0.0, 1.0))
    }
}

/// Mean and sample standard error of a sequence, with compensated sums.
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = sum(values) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: CompensatedSum = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let variance = sq.value() / (n - 1) as f64;
    (mean, (variance / n as f64).sqrt())
}
