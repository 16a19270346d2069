use nalgebra::{DMatrix, DVector};

use crate::error::{check_dims, Error, Result};
use crate::numkit::{is_symmetric, psd_sqrt, spd_factor, spd_inverse};
use crate::scalar::Scalar;

/// Matrices and prior of the linear-Gaussian model.
///
/// `a_mat` and `h_mat` enter the state and observation drifts transposed
/// (`AᵀX`, `HᵀX`), so the same pair drives the dual system `−dy/dt = Ay + Hu`
/// untransposed.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianModel<T: Scalar = f64> {
    /// `d × d`.
    pub a_mat: DMatrix<T>,
    /// `d × m`.
    pub h_mat: DMatrix<T>,
    /// `d × n` process-noise gain.
    pub sigma: DMatrix<T>,
    /// `m × m` observation-noise covariance, SPD.
    pub r_cov: DMatrix<T>,
    pub m0: DVector<T>,
    /// `d × d` prior covariance, symmetric PSD.
    pub sigma0: DMatrix<T>,
}

impl<T: Scalar> LinearGaussianModel<T> {
    pub fn new(
        a_mat: DMatrix<T>,
        h_mat: DMatrix<T>,
        sigma: DMatrix<T>,
        r_cov: DMatrix<T>,
        m0: DVector<T>,
        sigma0: DMatrix<T>,
    ) -> Result<Self> {
        let model = Self { a_mat, h_mat, sigma, r_cov, m0, sigma0 };
        model.validate()?;
        Ok(model)
    }

    /// One-dimensional model with a single noise channel.
    pub fn scalar(a: T, sigma: T, h: T, r: T, m0: T, sigma0: T) -> Result<Self> {
        let one = |v| DMatrix::from_element(1, 1, v);
        Self::new(one(a), one(h), one(sigma), one(r), DVector::from_element(1, m0), one(sigma0))
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let m = self.obs_dim();
        check_dims("model A", (d, d), self.a_mat.shape())?;
        check_dims("model H", (d, m), self.h_mat.shape())?;
        check_dims("model sigma", (d, self.noise_dim()), self.sigma.shape())?;
        check_dims("model R", (m, m), self.r_cov.shape())?;
        check_dims("model m0", (d, 1), self.m0.shape())?;
        check_dims("model Sigma0", (d, d), self.sigma0.shape())?;
        spd_factor(&self.r_cov).map_err(|_| Error::NoiseNotSpd)?;
        if !is_symmetric(&self.sigma0, T::lit(1e-9)) {
            return Err(Error::NotSymmetric { context: "prior covariance" });
        }
        psd_sqrt(&self.sigma0)?;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.a_mat.nrows()
    }

    pub fn obs_dim(&self) -> usize {
        self.h_mat.ncols()
    }

    pub fn noise_dim(&self) -> usize {
        self.sigma.ncols()
    }

    /// `Q = σσᵀ`.
    pub fn q_cov(&self) -> DMatrix<T> {
        &self.sigma * self.sigma.transpose()
    }

    pub(crate) fn r_inv(&self) -> Result<DMatrix<T>> {
        spd_inverse(&self.r_cov).map_err(|_| Error::NoiseNotSpd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_catches_bad_inputs() {
        assert!(LinearGaussianModel::<f64>::scalar(0.0, 1.0, 1.0, 1.0, 0.0, 1.0).is_ok());
        assert_eq!(
            LinearGaussianModel::<f64>::scalar(0.0, 1.0, 1.0, 0.0, 0.0, 1.0).unwrap_err(),
            Error::NoiseNotSpd
        );
        assert!(LinearGaussianModel::<f64>::scalar(0.0, 1.0, 1.0, 1.0, 0.0, -1.0).is_err());
        let bad = LinearGaussianModel::<f64>::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(3, 1),
            DMatrix::zeros(2, 1),
            DMatrix::identity(1, 1),
            DVector::zeros(2),
            DMatrix::zeros(2, 2),
        );
        assert!(matches!(bad, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn q_is_sigma_sigma_t() {
        let m = LinearGaussianModel::new(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 1),
            DMatrix::from_row_slice(2, 1, &[1.0, 2.0]),
            DMatrix::identity(1, 1),
            DVector::zeros(2),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        assert_eq!(m.q_cov(), DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
        assert_eq!(m.noise_dim(), 1);
    }
}
