//! Estimating a Gaussian vector `X₀ ~ N(m₀, Σ₀)` from `Z = HᵀX₀ + W`, once as
//! a minimum-variance problem and once as a maximum-likelihood problem.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dims, Error, Result};
use crate::numkit::{cholesky_solve, spd_factor, spd_inverse};
use crate::scalar::Scalar;

fn check_static<T: Scalar>(
    m0: &DVector<T>,
    sigma0: &DMatrix<T>,
    h: &DMatrix<T>,
    r: &DMatrix<T>,
    z: &DVector<T>,
) -> Result<()> {
    let d = m0.len();
    let m = z.len();
    check_dims("static Sigma0", (d, d), sigma0.shape())?;
    check_dims("static H", (d, m), h.shape())?;
    check_dims("static R", (m, m), r.shape())
}

/// `m₀ + Σ₀H(HᵀΣ₀H + R)⁻¹(z − Hᵀm₀)`.
pub fn static_mv<T: Scalar>(
    m0: &DVector<T>,
    sigma0: &DMatrix<T>,
    h: &DMatrix<T>,
    r: &DMatrix<T>,
    z: &DVector<T>,
) -> Result<DVector<T>> {
    check_static(m0, sigma0, h, r, z)?;
    let gram = h.transpose() * sigma0 * h + r;
    let innovation = z - h.transpose() * m0;
    let weights = gram
        .lu()
        .solve(&innovation)
        .filter(|w| w.iter().all(|v| v.is_finite_value()))
        .ok_or(Error::Singular("static_mv gain matrix"))?;
    Ok(m0 + sigma0 * h * weights)
}

/// `(Σ₀⁻¹ + HR⁻¹Hᵀ)⁻¹(Σ₀⁻¹m₀ + HR⁻¹z)`.
pub fn static_ml<T: Scalar>(
    m0: &DVector<T>,
    sigma0: &DMatrix<T>,
    h: &DMatrix<T>,
    r: &DMatrix<T>,
    z: &DVector<T>,
) -> Result<DVector<T>> {
    check_static(m0, sigma0, h, r, z)?;
    let prior_inv = spd_inverse(sigma0).map_err(|_| Error::Singular("static_ml prior covariance"))?;
    let r_inv = spd_inverse(r).map_err(|_| Error::NoiseNotSpd)?;
    let info = &prior_inv + h * &r_inv * h.transpose();
    let rhs = &prior_inv * m0 + h * &r_inv * z;
    let l = spd_factor(&info).map_err(|_| Error::Singular("static_ml information matrix"))?;
    let rhs = DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice());
    Ok(cholesky_solve(&l, &rhs).column(0).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn scalar_hand_value() {
        let got = static_mv(&DVector::zeros(1), &one(1.0), &one(1.0), &one(1.0), &DVector::from_element(1, 2.0)).unwrap();
        assert_eq!(got[0], 1.0);
    }

    #[test]
    fn zero_innovation_returns_prior_mean() {
        let m0 = DVector::from_vec(vec![1.0, -2.0]);
        let s0 = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let h = DMatrix::from_row_slice(2, 1, &[1.0, 0.5]);
        let z = h.transpose() * &m0;
        assert!((static_mv(&m0, &s0, &h, &one(0.2), &z).unwrap() - &m0).norm() < 1e-14);
        assert!((static_ml(&m0, &s0, &h, &one(0.2), &z).unwrap() - &m0).norm() < 1e-14);
    }

    #[test]
    fn dogmatic_prior_ignores_data() {
        let m0 = DVector::from_vec(vec![1.0, -2.0]);
        let h = DMatrix::from_row_slice(2, 1, &[1.0, 0.5]);
        let got = static_mv(&m0, &DMatrix::zeros(2, 2), &h, &one(1.0), &DVector::from_element(1, 9.0)).unwrap();
        assert_eq!(got, m0);
    }

    #[test]
    fn uninformative_data_limit() {
        let m0 = DVector::from_vec(vec![0.5, 1.5]);
        let s0 = DMatrix::identity(2, 2);
        let h = DMatrix::identity(2, 1);
        let got = static_ml(&m0, &s0, &h, &one(1e12), &DVector::from_element(1, 100.0)).unwrap();
        assert!((got - &m0).norm() < 1e-6);
    }

    #[test]
    fn singular_inputs_error() {
        let m0 = DVector::zeros(1);
        let z = DVector::zeros(1);
        assert!(static_ml(&m0, &one(0.0), &one(1.0), &one(1.0), &z).is_err());
        assert!(static_mv(&m0, &one(0.0), &one(1.0), &one(0.0), &z).is_err());
    }
}
