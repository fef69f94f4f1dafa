//! Log-space helpers for powers of probabilities close to one.
//!
//! `(1 - x)^m` with `m` in the billions underflows or loses every digit when
//! evaluated directly. Everything here goes through `ln_1p`/`exp_m1` so the
//! small quantity `x` is never added to 1 before taking the logarithm.

/// `ln(1 - x)` for `x` in `[0, 1]`, accurate for tiny `x`.
#[inline]
pub fn ln_one_minus(x: f64) -> f64 {
    (-x).ln_1p()
}

/// `(1 - x)^m`, evaluated as `exp(m * ln(1 - x))`.
///
/// `0^0` is taken as 1.
#[inline]
pub fn pow_one_minus(x: f64, m: f64) -> f64 {
    if m == 0.0 {
        return 1.0;
    }
    (m * ln_one_minus(x)).exp()
}

/// `1 - (1 - x)^m` without cancellation when the result is small.
#[inline]
pub fn one_minus_pow_one_minus(x: f64, m: f64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    -(m * ln_one_minus(x)).exp_m1()
}

/// Probability stored by its natural logarithm.
///
/// Used for round success probabilities, which routinely fall below the
/// smallest positive `f64` (e.g. `0.9^(2^31)`), yet still need to be compared
/// and combined.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct LogProb(f64);

impl LogProb {
    pub const ONE: LogProb = LogProb(0.0);
    pub const ZERO: LogProb = LogProb(f64::NEG_INFINITY);

    /// Wraps a natural logarithm. Values above zero are clamped to zero.
    pub fn from_ln(ln: f64) -> Self {
        LogProb(ln.min(0.0))
    }

    pub fn from_prob(p: f64) -> Self {
        LogProb(p.ln().min(0.0))
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    /// Linear value; may underflow to `0.0`.
    pub fn value(self) -> f64 {
        self.0.exp()
    }

    /// True when the represented probability is exactly zero.
    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// `1 / p` as a logarithm, i.e. `-ln p`.
    pub fn ln_reciprocal(self) -> f64 {
        -self.0
    }
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_one_minus_matches_powf_in_safe_range() {
        for &(x, m) in &[(0.1, 10.0), (0.5, 3.0), (0.01, 200.0)] {
            let direct = (1.0f64 - x).powf(m);
            assert!((pow_one_minus(x, m) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn tiny_x_does_not_lose_digits() {
        // 1 - (1 - 1e-20)^1e10 = 1e-10 to first order
        let v = one_minus_pow_one_minus(1e-20, 1e10);
        assert!((v - 1e-10).abs() / 1e-10 < 1e-9);
    }

    #[test]
    fn zero_power_is_one() {
        assert_eq!(pow_one_minus(1.0, 0.0), 1.0);
        assert_eq!(one_minus_pow_one_minus(1.0, 0.0), 0.0);
    }

    #[test]
    fn log_prob_underflow_keeps_log() {
        let lp = LogProb::from_ln(2f64.powi(31) * 0.9f64.ln());
        assert!(lp.ln().is_finite());
        assert_eq!(lp.value(), 0.0);
        assert!(!lp.is_zero());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..10_000 {
            s.add(1e-17);
        }
        assert!((s.value() - (1.0 + 1e-13)).abs() < 1e-18);
    }
}
