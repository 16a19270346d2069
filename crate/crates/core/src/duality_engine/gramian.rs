use nalgebra::{DMatrix, DVector};

use super::adjoint_output;
use crate::error::{check_dims, Result};
use crate::numkit::{integrate_ode, matrix_rank, simpson, symmetric_rank, Direction, TimeGrid};
use crate::scalar::Scalar;

/// Relative eigenvalue threshold for Gramian ranks.
pub const GRAMIAN_RANK_TOL: f64 = 1e-9;

/// Controllability Gramian of `(A, H)` next to the observability Gramian of
/// `(Aᵀ, Hᵀ)`, each computed along its own route.
#[derive(Debug, Clone, PartialEq)]
pub struct GramianReport<T: Scalar = f64> {
    pub ctrl_gramian: DMatrix<T>,
    pub obs_gramian: DMatrix<T>,
    pub ctrl_rank: usize,
    pub obs_rank: usize,
    pub controllable: bool,
    pub observable: bool,
}

/// `∫₀ᵀ e^{At}HHᵀe^{Aᵀt} dt` from the Lyapunov equation
/// `dG/dt = AG + GAᵀ + HHᵀ`, `G(0) = 0`.
pub fn controllability_gramian<T: Scalar>(
    a_mat: &DMatrix<T>,
    h_mat: &DMatrix<T>,
    grid: &TimeGrid<T>,
) -> Result<DMatrix<T>> {
    let d = a_mat.nrows();
    check_dims("Gramian A", (d, d), a_mat.shape())?;
    check_dims("Gramian H", (d, h_mat.ncols()), h_mat.shape())?;
    let hh = h_mat * h_mat.transpose();
    let path = integrate_ode(
        |_, g: &DVector<T>| {
            let g = DMatrix::from_column_slice(d, d, g.as_slice());
            let dg = a_mat * &g + &g * a_mat.transpose() + &hh;
            DVector::from_column_slice(dg.as_slice())
        },
        grid,
        &DVector::zeros(d * d),
        Direction::Forward,
    )?;
    let g = DMatrix::from_column_slice(d, d, path[grid.n_steps()].as_slice());
    Ok((&g + g.transpose()) * T::lit(0.5))
}

/// `∫₀ᵀ Φ(t)ᵀΦ(t) dt` where column `i` of `Φ(t)` is the output `Hᵀe^{Aᵀt}e_i`
/// of `dx/dt = Aᵀx`, `x₀ = e_i`: the observability Gramian of `(Aᵀ, Hᵀ)`.
/// Entries are integrated with Simpson's rule on a grid refined by two.
pub fn observability_gramian<T: Scalar>(
    a_mat: &DMatrix<T>,
    h_mat: &DMatrix<T>,
    grid: &TimeGrid<T>,
) -> Result<DMatrix<T>> {
    let d = a_mat.nrows();
    let fine = grid.refined(2);
    let outputs = (0..d)
        .map(|i| adjoint_output(a_mat, h_mat, &DVector::from_fn(d, |r, _| if r == i { T::one() } else { T::zero() }), &fine))
        .collect::<Result<Vec<_>>>()?;
    let mut w = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let inner: Vec<T> = outputs[i].iter().zip(&outputs[j]).map(|(a, b)| a.dot(b)).collect();
            let v = simpson(&inner, fine.dt());
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok(w)
}

/// Both Gramians over `grid`, their ranks (eigenvalues above `1e−9·λ_max`)
/// and the resulting verdicts.
pub fn gramian_duality<T: Scalar>(
    a_mat: &DMatrix<T>,
    h_mat: &DMatrix<T>,
    grid: &TimeGrid<T>,
) -> Result<GramianReport<T>> {
    let d = a_mat.nrows();
    let ctrl_gramian = controllability_gramian(a_mat, h_mat, grid)?;
    let obs_gramian = observability_gramian(a_mat, h_mat, grid)?;
    let tol = T::lit(GRAMIAN_RANK_TOL);
    let ctrl_rank = symmetric_rank(&ctrl_gramian, tol);
    let obs_rank = symmetric_rank(&obs_gramian, tol);
    Ok(GramianReport {
        ctrl_gramian,
        obs_gramian,
        ctrl_rank,
        obs_rank,
        controllable: ctrl_rank == d,
        observable: obs_rank == d,
    })
}

/// `[H, AH, …, A^{d−1}H]`.
pub fn kalman_matrix<T: Scalar>(a_mat: &DMatrix<T>, h_mat: &DMatrix<T>) -> DMatrix<T> {
    let d = a_mat.nrows();
    let m = h_mat.ncols();
    let mut out = DMatrix::zeros(d, d * m);
    let mut block = h_mat.clone();
    for k in 0..d {
        out.view_mut((0, k * m), (d, m)).copy_from(&block);
        block = a_mat * block;
    }
    out
}

/// Rank of the Kalman controllability matrix (singular values above
/// `1e−9·σ_max`).
pub fn kalman_rank<T: Scalar>(a_mat: &DMatrix<T>, h_mat: &DMatrix<T>) -> usize {
    matrix_rank(&kalman_matrix(a_mat, h_mat), T::lit(GRAMIAN_RANK_TOL))
}
