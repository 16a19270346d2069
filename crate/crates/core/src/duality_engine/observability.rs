use nalgebra::{DMatrix, DVector};

use super::kalman_matrix;
use crate::finite_hmm::FiniteHmm;
use crate::numkit::matrix_rank;
use crate::scalar::Scalar;

/// Relative residual below which a candidate is taken as already in the span.
pub const SPAN_TOL: f64 = 1e-9;

/// Result of the algebraic observability test for a finite-state HMM.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservabilityReport<T: Scalar = f64> {
    /// Dimension of the smallest space of functions containing `1` and the
    /// observation columns, closed under `𝒜` and multiplication by each column.
    pub span_dim: usize,
    /// `span_dim == d`. Full span is sufficient for observability; a smaller
    /// span is reported as "not shown observable" rather than a proof of the
    /// converse.
    pub observable: bool,
    /// Orthonormal basis of the span, one column per direction.
    pub basis: DMatrix<T>,
    /// Dimension of `span{1} + range[H, AH, …]`, the set of initial dual
    /// values reachable with deterministic controls.
    pub deterministic_reachable_dim: usize,
}

/// Adds `v` to the orthonormal set if it has a component outside it.
fn try_extend<T: Scalar>(basis: &mut Vec<DVector<T>>, v: &DVector<T>) -> Option<DVector<T>> {
    let norm = v.norm();
    if !(norm > T::zero()) {
        return None;
    }
    let mut r = v.clone();
    // Two passes of classical Gram–Schmidt.
    for _ in 0..2 {
        for q in basis.iter() {
            let c = q.dot(&r);
            r.axpy(-c, q, T::one());
        }
    }
    let rn = r.norm();
    if rn <= T::lit(SPAN_TOL) * norm {
        return None;
    }
    let q = r / rn;
    basis.push(q.clone());
    Some(q)
}

/// Span-closure observability test.
pub fn hmm_observability_test<T: Scalar>(hmm: &FiniteHmm<T>) -> ObservabilityReport<T> {
    let d = hmm.dim();
    let m = hmm.obs_dim();
    let mut basis: Vec<DVector<T>> = Vec::with_capacity(d);
    let mut pending: Vec<DVector<T>> = Vec::new();
    let seeds = std::iter::once(DVector::from_element(d, T::one()))
        .chain((0..m).map(|k| hmm.h_mat.column(k).into_owned()));
    for s in seeds {
        if let Some(q) = try_extend(&mut basis, &s) {
            pending.push(q);
        }
    }
    while let Some(v) = pending.pop() {
        if basis.len() == d {
            break;
        }
        let images = std::iter::once(&hmm.rate * &v)
            .chain((0..m).map(|k| hmm.h_mat.column(k).component_mul(&v)));
        for w in images.collect::<Vec<_>>() {
            if let Some(q) = try_extend(&mut basis, &w) {
                pending.push(q);
            }
        }
    }
    let span_dim = basis.len();
    let basis = if basis.is_empty() { DMatrix::zeros(d, 0) } else { DMatrix::from_columns(&basis) };

    let kalman = kalman_matrix(&hmm.rate, &hmm.h_mat);
    let mut reach = DMatrix::from_element(d, 1 + kalman.ncols(), T::one());
    reach.view_mut((0, 1), (d, kalman.ncols())).copy_from(&kalman);
    ObservabilityReport {
        span_dim,
        observable: span_dim == d,
        basis,
        deterministic_reachable_dim: matrix_rank(&reach, T::lit(SPAN_TOL)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hmm(rate: &[f64], d: usize, h: &[f64]) -> FiniteHmm<f64> {
        FiniteHmm {
            rate: DMatrix::from_row_slice(d, d, rate),
            h_mat: DMatrix::from_row_slice(d, h.len() / d, h),
            r_cov: DMatrix::identity(h.len() / d, h.len() / d),
            prior: DVector::from_element(d, 1.0 / d as f64),
        }
    }

    const FLIP: [f64; 4] = [-1.0, 1.0, 1.0, -1.0];

    #[test]
    fn blind_chain_sees_only_constants() {
        let r = hmm_observability_test(&hmm(&FLIP, 2, &[0.0, 0.0]));
        assert_eq!(r.span_dim, 1);
        assert!(!r.observable);
    }

    #[test]
    fn two_state_verdicts() {
        assert!(hmm_observability_test(&hmm(&FLIP, 2, &[0.0, 1.0])).observable);
        assert_eq!(hmm_observability_test(&hmm(&FLIP, 2, &[1.0, 1.0])).span_dim, 1);
    }

    #[test]
    fn lumpable_chain_hides_a_direction() {
        let rate = [-2.0, 1.0, 1.0, 1.0, -2.0, 1.0, 1.0, 1.0, -2.0];
        let r = hmm_observability_test(&hmm(&rate, 3, &[0.0, 0.0, 1.0]));
        assert_eq!(r.span_dim, 2);
        assert!(hmm_observability_test(&hmm(&rate, 3, &[0.0, 1.0, 2.0])).observable);
    }

    #[test]
    fn basis_is_orthonormal() {
        let rate = [-2.0, 1.0, 1.0, 0.5, -1.0, 0.5, 0.0, 3.0, -3.0];
        let r = hmm_observability_test(&hmm(&rate, 3, &[0.0, 0.0, 1.0]));
        let gram = r.basis.transpose() * &r.basis;
        assert!((gram - DMatrix::identity(r.span_dim, r.span_dim)).amax() < 1e-12);
    }
}
