use nalgebra::{DMatrix, DVector};

use crate::error::{check_dims, Error, Result};
use crate::numkit::spd_factor;
use crate::scalar::Scalar;

/// Rate matrix `A`, observation function `H` (row `x` is `h(x)ᵀ`), observation
/// noise covariance `R` and initial law `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteHmm<T: Scalar = f64> {
    pub rate: DMatrix<T>,
    pub h_mat: DMatrix<T>,
    pub r_cov: DMatrix<T>,
    pub prior: DVector<T>,
}

impl<T: Scalar> FiniteHmm<T> {
    /// Builds and validates.
    pub fn new(rate: DMatrix<T>, h_mat: DMatrix<T>, r_cov: DMatrix<T>, prior: DVector<T>) -> Result<Self> {
        let hmm = Self { rate, h_mat, r_cov, prior };
        validate_hmm(&hmm)?;
        Ok(hmm)
    }

    /// Number of states.
    pub fn dim(&self) -> usize {
        self.prior.len()
    }

    pub fn obs_dim(&self) -> usize {
        self.h_mat.ncols()
    }

    /// Exit rate `−A(x,x)` of state `x`.
    pub fn exit_rate(&self, x: usize) -> T {
        -self.rate[(x, x)]
    }
}

/// Tolerance for "sums to zero / one": `1e−12`, loosened to a few ulps of the
/// row magnitude in single precision.
fn sum_tol<T: Scalar>(magnitude: T) -> T {
    let eps = T::default_epsilon() * T::lit(64.0) * (T::one() + magnitude);
    T::lit(1e-12).max(eps)
}

/// Checks every structural constraint on `hmm`, naming the first one violated.
pub fn validate_hmm<T: Scalar>(hmm: &FiniteHmm<T>) -> Result<()> {
    let d = hmm.dim();
    let m = hmm.obs_dim();
    if d == 0 {
        return Err(Error::InvalidArgument("HMM needs at least one state".into()));
    }
    check_dims("HMM rate matrix", (d, d), hmm.rate.shape())?;
    check_dims("HMM observation matrix", (d, m), hmm.h_mat.shape())?;
    check_dims("HMM noise covariance", (m, m), hmm.r_cov.shape())?;
    for row in 0..d {
        let mut sum = T::zero();
        let mut magnitude = T::zero();
        for col in 0..d {
            let v = hmm.rate[(row, col)];
            if !v.is_finite_value() {
                return Err(Error::InvalidArgument(format!("rate ({row}, {col}) is not finite")));
            }
            if row != col && v < T::zero() {
                return Err(Error::NegativeRate { row, col, value: v.to_f64_lossy() });
            }
            sum += v;
            magnitude += v.abs();
        }
        if sum.abs() > sum_tol(magnitude) {
            return Err(Error::RowSum { row, sum: sum.to_f64_lossy() });
        }
    }
    if let Some((x, p)) = hmm.prior.iter().enumerate().find(|(_, p)| !(**p >= T::zero())) {
        return Err(Error::PriorSimplex(format!("entry {x} is {p}")));
    }
    let total = hmm.prior.sum();
    if (total - T::one()).abs() > sum_tol(T::one()) {
        return Err(Error::PriorSimplex(format!("entries sum to {total}")));
    }
    spd_factor(&hmm.r_cov).map_err(|_| Error::NoiseNotSpd)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(rate: [f64; 4], prior: [f64; 2]) -> FiniteHmm<f64> {
        FiniteHmm {
            rate: DMatrix::from_row_slice(2, 2, &rate),
            h_mat: DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
            r_cov: DMatrix::identity(1, 1),
            prior: DVector::from_row_slice(&prior),
        }
    }

    #[test]
    fn symmetric_chain_is_valid() {
        assert!(validate_hmm(&two_state([-1.0, 1.0, 1.0, -1.0], [0.5, 0.5])).is_ok());
    }

    #[test]
    fn each_violation_is_named() {
        assert!(matches!(
            validate_hmm(&two_state([-1.0, 1.1, 1.0, -1.0], [0.5, 0.5])),
            Err(Error::RowSum { row: 0, .. })
        ));
        assert!(matches!(
            validate_hmm(&two_state([1.0, -1.0, 1.0, -1.0], [0.5, 0.5])),
            Err(Error::NegativeRate { row: 0, col: 1, .. })
        ));
        assert!(matches!(
            validate_hmm(&two_state([-1.0, 1.0, 1.0, -1.0], [0.6, 0.6])),
            Err(Error::PriorSimplex(_))
        ));
        assert!(matches!(
            validate_hmm(&two_state([-1.0, 1.0, 1.0, -1.0], [1.5, -0.5])),
            Err(Error::PriorSimplex(_))
        ));
        let mut hmm = two_state([-1.0, 1.0, 1.0, -1.0], [0.5, 0.5]);
        hmm.r_cov[(0, 0)] = 0.0;
        assert_eq!(validate_hmm(&hmm), Err(Error::NoiseNotSpd));
    }
}
