use nalgebra::DVector;
use rayon::prelude::*;

use super::{dual_backward_ode, DualTrajectory, DualityReport, Verdict, Z_THRESHOLD};
use crate::error::{check_dims, Error, Result};
use crate::finite_hmm::{conditional_mse_mc, forward_kolmogorov, gamma_operator, FiniteHmm, HmmSimulator};
use crate::linear_gaussian::{ito_sum, quad_form};
use crate::numkit::{node_quadrature, ControlPath, McEstimate, ObservationPath, SeededRng, TimeGrid};
use crate::scalar::Scalar;

fn hmm_dual<T: Scalar>(
    hmm: &FiniteHmm<T>,
    u: &ControlPath<T>,
    f: &DVector<T>,
    grid: &TimeGrid<T>,
) -> Result<DualTrajectory<T>> {
    check_dims("terminal function", (hmm.dim(), 1), f.shape())?;
    if u.dim() != hmm.obs_dim() {
        return Err(Error::GridMismatch(format!(
            "control dimension {} vs observation dimension {}",
            u.dim(),
            hmm.obs_dim()
        )));
    }
    dual_backward_ode(&hmm.rate, &hmm.h_mat, u, f, grid)
}

/// Dual cost for a deterministic control:
/// `J_T(u) = Var_μ(Y₀) + ∫ μ_t·(ΓY_t) + |u_t|²_R dt`, with `μ_t` the exact
/// marginals and Simpson's rule on `grid` (trapezoid
/// for an odd step count).
pub fn hmm_dual_cost<T: Scalar>(
    hmm: &FiniteHmm<T>,
    u: &ControlPath<T>,
    f: &DVector<T>,
    grid: &TimeGrid<T>,
) -> Result<T> {
    let dual = hmm_dual(hmm, u, f, grid)?;
    let marginals = forward_kolmogorov(hmm, grid)?;
    let y0 = dual.initial();
    let mean = hmm.prior.dot(y0);
    let second = hmm.prior.dot(&y0.component_mul(y0));
    let running: Vec<T> = dual
        .y_path
        .iter()
        .zip(&marginals)
        .zip(&u.values)
        .map(|((y, mu), ut)| mu.dot(&gamma_operator(&hmm.rate, y)) + quad_form(&hmm.r_cov, ut))
        .collect();
    Ok((second - mean * mean).max(T::zero()) + node_quadrature(&running, grid.dt()))
}

/// Estimator `S_T = μ(Y₀) − Σ_k u_{t_k}ᵀ ΔZ_k`.
pub fn hmm_estimator<T: Scalar>(
    hmm: &FiniteHmm<T>,
    u: &ControlPath<T>,
    f: &DVector<T>,
    zpath: &ObservationPath<T>,
    grid: &TimeGrid<T>,
) -> Result<T> {
    if !zpath.grid.same_as(grid) {
        return Err(Error::GridMismatch("observations are not on the estimator grid".into()));
    }
    let dual = hmm_dual(hmm, u, f, grid)?;
    Ok(hmm.prior.dot(dual.initial()) - ito_sum(u, zpath))
}

/// Checks `J_T(u) = E|f(X_T) − S_T|²` for every control in `controls`.
///
/// All controls are scored on the same simulated paths; path `p` comes from
/// `rng.substream(p)` and the reduction is in path order.
pub fn verify_duality_principle_many<T: Scalar>(
    hmm: &FiniteHmm<T>,
    controls: &[ControlPath<T>],
    f: &DVector<T>,
    grid: &TimeGrid<T>,
    n_paths: usize,
    rng: &SeededRng,
) -> Result<Vec<DualityReport<T>>> {
    let mut exact = Vec::with_capacity(controls.len());
    let mut offsets = Vec::with_capacity(controls.len());
    for u in controls {
        exact.push(hmm_dual_cost(hmm, u, f, grid)?);
        offsets.push(hmm.prior.dot(hmm_dual(hmm, u, f, grid)?.initial()));
    }
    let sim = HmmSimulator::new(hmm, grid)?;
    let per_path: Vec<Vec<T>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut sums = vec![T::zero(); controls.len()];
            let x_t = sim.run(&rng.substream(p), |k, _, dz| {
                for (s, u) in sums.iter_mut().zip(controls) {
                    *s += u.values[k].dot(dz);
                }
            });
            offsets
                .iter()
                .zip(&sums)
                .map(|(&c, &s)| {
                    let err = f[x_t] - (c - s);
                    err * err
                })
                .collect()
        })
        .collect();
    Ok((0..controls.len())
        .map(|i| {
            let samples: Vec<T> = per_path.iter().map(|v| v[i]).collect();
            DualityReport::new(exact[i], McEstimate::from_samples(&samples))
        })
        .collect())
}

/// Single-control form of [`verify_duality_principle_many`].
pub fn verify_duality_principle<T: Scalar>(
    hmm: &FiniteHmm<T>,
    u: &ControlPath<T>,
    f: &DVector<T>,
    grid: &TimeGrid<T>,
    n_paths: usize,
    rng: &SeededRng,
) -> Result<DualityReport<T>> {
    Ok(verify_duality_principle_many(hmm, std::slice::from_ref(u), f, grid, n_paths, rng)?.remove(0))
}

/// One control's comparison against the filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundRow<T: Scalar = f64> {
    pub j_exact: T,
    /// `J(u) + 3·SE − filter m.s.e.`; non-negative when the bound holds.
    pub slack: T,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundReport<T: Scalar = f64> {
    pub filter_mse: McEstimate<T>,
    pub rows: Vec<LowerBoundRow<T>>,
    pub verdict: Verdict,
}

/// Checks that the filter error lower-bounds the dual cost of every control:
/// `E|f(X_T) − π_T(f)|² ≤ J_T(u) + 3·SE`. `J` is exact, so the only
/// statistical error is the filter estimate's.
pub fn filter_lower_bound_check<T: Scalar>(
    hmm: &FiniteHmm<T>,
    f: &DVector<T>,
    grid: &TimeGrid<T>,
    controls: &[ControlPath<T>],
    n_paths: usize,
    rng: &SeededRng,
) -> Result<LowerBoundReport<T>> {
    if controls.is_empty() {
        return Err(Error::InvalidArgument("lower-bound check needs at least one control".into()));
    }
    let filter_mse = conditional_mse_mc(hmm, f, grid, n_paths, rng)?;
    let rows = controls
        .iter()
        .map(|u| {
            let j_exact = hmm_dual_cost(hmm, u, f, grid)?;
            let slack = j_exact + T::lit(Z_THRESHOLD) * filter_mse.se - filter_mse.mean;
            let tol = T::lit(1e-12) * (T::one() + j_exact.abs());
            Ok(LowerBoundRow { j_exact, slack, verdict: Verdict::from_bool(slack >= -tol) })
        })
        .collect::<Result<Vec<_>>>()?;
    let verdict = Verdict::from_bool(rows.iter().all(|r| r.verdict.passed()));
    Ok(LowerBoundReport { filter_mse, rows, verdict })
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;

    fn chain(rate: f64, h: [f64; 2]) -> FiniteHmm<f64> {
        FiniteHmm {
            rate: DMatrix::from_row_slice(2, 2, &[-rate, rate, rate, -rate]),
            h_mat: DMatrix::from_row_slice(2, 1, &h),
            r_cov: DMatrix::identity(1, 1),
            prior: DVector::from_vec(vec![0.5, 0.5]),
        }
    }

    fn grid() -> TimeGrid<f64> {
        TimeGrid::<f64>::new(0.0, 1.0, 200).unwrap()
    }

    #[test]
    fn constant_terminal_costs_nothing() {
        let hmm = chain(1.3, [0.0, 1.0]);
        let f = DVector::from_element(2, 2.5);
        let j = hmm_dual_cost(&hmm, &ControlPath::zero(grid(), 1), &f, &grid()).unwrap();
        assert!(j.abs() < 1e-28, "{j}");
    }

    #[test]
    fn static_variance() {
        let hmm = chain(0.0, [0.0, 0.0]);
        let j = hmm_dual_cost(&hmm, &ControlPath::zero(grid(), 1), &DVector::from_vec(vec![0.0, 1.0]), &grid()).unwrap();
        assert_eq!(j, 0.25);
    }

    #[test]
    fn uncontrolled_symmetric_chain_closed_form() {
        // Y_t(1) − Y_t(2) = −e^{−2(T−t)}, μ_t uniform: J = e^{−4T}/4 + (1 − e^{−4T})/4.
        let hmm = chain(1.0, [0.0, 1.0]);
        let g = TimeGrid::<f64>::new(0.0, 1.0, 2000).unwrap();
        let j = hmm_dual_cost(&hmm, &ControlPath::zero(g, 1), &DVector::from_vec(vec![0.0, 1.0]), &g).unwrap();
        assert!((j - 0.25).abs() < 1e-6, "{j}");
    }

    #[test]
    fn estimator_without_data_or_control() {
        let hmm = chain(1.0, [0.0, 1.0]);
        let g = grid();
        let f = DVector::from_vec(vec![0.0, 1.0]);
        let z = ObservationPath::zeros(g, 1);
        // e^{AT}f = ½·1 + ½e^{−2T}(−1, 1); the uniform prior averages out the second term.
        let s = hmm_estimator(&hmm, &ControlPath::zero(g, 1), &f, &z, &g).unwrap();
        assert!((s - 0.5).abs() < 1e-12);
        // Uniform μ is stationary, so −d(μ·Y)/dt = μ·Hu = 0.35.
        let s = hmm_estimator(&hmm, &ControlPath::constant(g, DVector::from_element(1, 0.7)), &f, &z, &g).unwrap();
        assert!((s - 0.85).abs() < 1e-12);
    }

    #[test]
    fn constant_functional_is_estimated_exactly() {
        let hmm = chain(1.0, [0.0, 1.0]);
        let r = verify_duality_principle(
            &hmm,
            &ControlPath::zero(grid(), 1),
            &DVector::from_element(2, 3.0),
            &grid(),
            200,
            &SeededRng::new(1),
        )
        .unwrap();
        assert!(r.j_exact.abs() < 1e-20 && r.mse_mc < 1e-20, "{r:?}");
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn lower_bound_needs_controls() {
        let hmm = chain(1.0, [0.0, 1.0]);
        let f = DVector::from_vec(vec![0.0, 1.0]);
        assert!(filter_lower_bound_check(&hmm, &f, &grid(), &[], 10, &SeededRng::new(0)).is_err());
    }
}
