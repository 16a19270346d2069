use std::fmt;

use crate::numkit::McEstimate;
use crate::scalar::Scalar;

/// Outcome of a statistical or deterministic check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

/// Z-score threshold for statistical identities.
pub const Z_THRESHOLD: f64 = 3.0;

/// Exact dual cost against a Monte-Carlo mean-squared error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityReport<T: Scalar = f64> {
    pub j_exact: T,
    pub mse_mc: T,
    pub mse_se: T,
    pub n_paths: usize,
    /// `(mse_mc − j_exact)/mse_se`; zero when the two sides agree to
    /// round-off, infinite when they differ with a zero standard error.
    pub z_score: T,
    pub verdict: Verdict,
}

impl<T: Scalar> DualityReport<T> {
    pub fn new(j_exact: T, mc: McEstimate<T>) -> Self {
        let diff = mc.mean - j_exact;
        let z_score = if diff.abs() <= T::lit(1e-12) * (T::one() + j_exact.abs()) {
            T::zero()
        } else if mc.se > T::zero() {
            diff / mc.se
        } else if diff > T::zero() {
            T::lit(f64::INFINITY)
        } else {
            T::lit(f64::NEG_INFINITY)
        };
        let verdict = Verdict::from_bool(z_score.abs() <= T::lit(Z_THRESHOLD));
        Self { j_exact, mse_mc: mc.mean, mse_se: mc.se, n_paths: mc.n, z_score, verdict }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mc(mean: f64, se: f64) -> McEstimate<f64> {
        McEstimate { mean, se, n: 100 }
    }

    #[test]
    fn z_score_and_verdict() {
        let r = DualityReport::new(1.0, mc(1.2, 0.1));
        assert!((r.z_score - 2.0).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(DualityReport::new(1.0, mc(1.4, 0.1)).verdict, Verdict::Fail);
    }

    #[test]
    fn zero_standard_error() {
        assert_eq!(DualityReport::new(0.0, mc(0.0, 0.0)).z_score, 0.0);
        let r = DualityReport::new(0.0, mc(0.5, 0.0));
        assert!(r.z_score.is_infinite());
        assert_eq!(r.verdict, Verdict::Fail);
    }
}
