use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn symmetry_tolerance<T: Scalar>() -> T {
    let eps = T::default_epsilon() * T::lit(16.0);
    if eps > T::lit(1e-12) {
        eps
    } else {
        T::lit(1e-12)
    }
}

/// `‖M − Mᵀ‖ ≤ rel·‖M‖` (Frobenius).
pub fn is_symmetric<T: Scalar>(m: &DMatrix<T>, rel: T) -> bool {
    m.is_square() && (m - m.transpose()).norm() <= rel * m.norm()
}

pub fn symmetrize<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ = M`.
pub fn spd_factor<T: Scalar>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            context: "spd_factor",
            expected: "square matrix".into(),
            got: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    if !is_symmetric(m, symmetry_tolerance()) {
        return Err(Error::NotSymmetric { context: "spd_factor" });
    }
    let n = m.nrows();
    let mut l = DMatrix::<T>::zeros(n, n);
    for j in 0..n {
        let mut pivot = m[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > T::zero()) {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L·Lᵀ·x = b` given the Cholesky factor `L`.
pub fn cholesky_solve<T: Scalar>(l: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let n = l.nrows();
    let mut x = b.clone();
    for c in 0..b.ncols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

pub fn spd_inverse<T: Scalar>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    let l = spd_factor(m)?;
    let n = m.nrows();
    Ok(symmetrize(&cholesky_solve(&l, &DMatrix::identity(n, n))))
}

/// Symmetric square root factor `S` with `S·Sᵀ = M` for PSD `M` (possibly singular).
/// Slightly negative eigenvalues from roundoff are clamped to zero.
pub fn psd_sqrt<T: Scalar>(m: &DMatrix<T>) -> Result<DMatrix<T>> {
    if !is_symmetric(m, symmetry_tolerance()) {
        return Err(Error::NotSymmetric { context: "psd_sqrt" });
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let scale = eig.eigenvalues.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
    let floor = -scale * T::lit(1e-9);
    let mut roots = DVector::zeros(eig.eigenvalues.len());
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v < floor {
            return Err(Error::NotPositiveDefinite { pivot: i });
        }
        roots[i] = v.max(T::zero()).sqrt();
    }
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// Ratio of extreme eigenvalues of a symmetric matrix; infinite when singular.
pub fn condition_number_spd<T: Scalar>(m: &DMatrix<T>) -> f64 {
    let eig = SymmetricEigen::new(symmetrize(m));
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for v in eig.eigenvalues.iter() {
        let v = v.to_f64_lossy();
        lo = lo.min(v);
        hi = hi.max(v.abs());
    }
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Rank of a symmetric PSD matrix: eigenvalues above `rel·λ_max`.
pub fn symmetric_rank<T: Scalar>(m: &DMatrix<T>, rel: T) -> usize {
    let eig = SymmetricEigen::new(symmetrize(m));
    let lmax = eig.eigenvalues.iter().fold(T::zero(), |a, &v| a.max(v));
    if lmax <= T::zero() {
        return 0;
    }
    eig.eigenvalues.iter().filter(|&&v| v > rel * lmax).count()
}

/// Rank of a general matrix: singular values above `rel·σ_max`.
pub fn matrix_rank<T: Scalar>(m: &DMatrix<T>, rel: T) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().fold(T::zero(), |a, &v| a.max(v));
    if smax <= T::zero() {
        return 0;
    }
    sv.iter().filter(|&&v| v > rel * smax).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::SeededRng;
    use rand::Rng;

    #[test]
    fn identity_and_scalar() {
        let i3 = DMatrix::<f64>::identity(3, 3);
        assert_eq!(spd_factor(&i3).unwrap(), i3);
        let four = DMatrix::from_element(1, 1, 4.0);
        assert_eq!(spd_factor(&four).unwrap()[(0, 0)], 2.0);
    }

    #[test]
    fn random_spd_reconstructs() {
        let mut rng = SeededRng::new(7).stream();
        for _ in 0..20 {
            let b = DMatrix::<f64>::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
            let m = &b * b.transpose() + DMatrix::identity(3, 3) * 0.1;
            let l = spd_factor(&m).unwrap();
            assert!((&l * l.transpose() - &m).norm() <= 1e-10 * m.norm());
            for r in 0..3 {
                for c in r + 1..3 {
                    assert_eq!(l[(r, c)], 0.0);
                }
            }
        }
    }

    #[test]
    fn reports_failing_pivot() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(spd_factor(&m), Err(Error::NotPositiveDefinite { pivot: 1 }));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(spd_factor(&asym), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn inverse_and_solve() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let inv = spd_inverse(&m).unwrap();
        assert!((&m * &inv - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn psd_sqrt_handles_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let s = psd_sqrt(&m).unwrap();
        assert!((&s * s.transpose() - &m).norm() < 1e-14);
        assert_eq!(psd_sqrt(&DMatrix::<f64>::zeros(2, 2)).unwrap(), DMatrix::zeros(2, 2));
    }

    #[test]
    fn ranks() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 0.0, 0.0]);
        assert_eq!(matrix_rank(&m, 1e-9), 1);
        let g = &m * m.transpose();
        assert_eq!(symmetric_rank(&g, 1e-9), 1);
        assert_eq!(symmetric_rank(&DMatrix::<f64>::zeros(2, 2), 1e-9), 0);
        assert!(condition_number_spd(&g).is_infinite());
    }
}
