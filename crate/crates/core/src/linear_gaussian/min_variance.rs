use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::filter::LgSimulator;
use super::{solve_dre, LinearGaussianModel};
use crate::duality_engine::dual_backward_ode;
use crate::error::{check_dims, Error, Result};
use crate::numkit::{
    integrate_ode, lerp_matrix, node_quadrature, ControlPath, Direction, McEstimate, ObservationPath, SeededRng,
    TimeGrid,
};
use crate::scalar::Scalar;

/// Minimum-variance dual cost
/// `J_T(u) = |y₀|²_{Σ₀} + ∫ |y_t|²_Q + |u_t|²_R dt`, with `y` from
/// `−dy/dt = Ay + Hu`, `y_T = f`. The integral uses Simpson's rule on `grid`
/// (trapezoid when the step count is odd).
pub fn mv_cost<T: Scalar>(
    model: &LinearGaussianModel<T>,
    u: &ControlPath<T>,
    f: &DVector<T>,
    grid: &TimeGrid<T>,
) -> Result<T> {
    let dual = dual_backward_ode(&model.a_mat, &model.h_mat, u, f, grid)?;
    let q = model.q_cov();
    let running: Vec<T> = dual
        .y_path
        .iter()
        .zip(&u.values)
        .map(|(y, ut)| quad_form(&q, y) + quad_form(&model.r_cov, ut))
        .collect();
    Ok(quad_form(&model.sigma0, dual.initial()) + node_quadrature(&running, grid.dt()))
}

pub(crate) fn quad_form<T: Scalar>(m: &DMatrix<T>, x: &DVector<T>) -> T {
    x.dot(&(m * x))
}

/// Optimal solution of the minimum-variance dual problem for terminal `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualLqSolution<T: Scalar = f64> {
    pub grid: TimeGrid<T>,
    pub y_path: Vec<DVector<T>>,
    pub u_path: ControlPath<T>,
    pub cost: T,
}

/// Solves the dual LQ problem in feedback form `u_t = −R⁻¹HᵀΣ_t y_t`.
///
/// `Σ_t` comes from the DRE on a grid refined by two, so the RK4 stages of the
/// backward closed loop read it at nodes rather than interpolating.
pub fn dual_lq_optimal<T: Scalar>(
    model: &LinearGaussianModel<T>,
    f: &DVector<T>,
    grid: &TimeGrid<T>,
) -> Result<DualLqSolution<T>> {
    check_dims("terminal f", (model.dim(), 1), f.shape())?;
    if f.iter().any(|v| !v.is_finite_value()) {
        return Err(Error::InvalidArgument("terminal vector must be finite".into()));
    }
    let fine = grid.refined(2);
    let sigmas = solve_dre(model, &fine)?;
    let r_inv = model.r_inv()?;
    let feedback: Vec<DMatrix<T>> = sigmas
        .iter()
        .map(|s| -(&r_inv * model.h_mat.transpose() * s))
        .collect();
    let closed_loop: Vec<DMatrix<T>> = feedback.iter().map(|k| &model.a_mat + &model.h_mat * k).collect();
    let y_path = integrate_ode(
        |t, y: &DVector<T>| lerp_matrix(&fine, &closed_loop, t) * y,
        grid,
        f,
        Direction::Backward,
    )?;
    let u_values = y_path.iter().enumerate().map(|(k, y)| &feedback[2 * k] * y).collect();
    let u_path = ControlPath::new(*grid, u_values)?;
    let cost = mv_cost(model, &u_path, f, grid)?;
    Ok(DualLqSolution { grid: *grid, y_path, u_path, cost })
}

/// Linear predictor `S_T = y₀ᵀm₀ − Σ_k u_{t_k}ᵀ ΔZ_k` (left-endpoint Itô sum).
pub fn lg_estimator<T: Scalar>(
    y0: &DVector<T>,
    m0: &DVector<T>,
    u: &ControlPath<T>,
    zpath: &ObservationPath<T>,
) -> Result<T> {
    if !u.grid.same_as(&zpath.grid) {
        return Err(Error::GridMismatch("control and observations use different grids".into()));
    }
    check_dims("estimator y0", (m0.len(), 1), y0.shape())?;
    if u.dim() != zpath.dim() {
        return Err(Error::GridMismatch(format!(
            "control dimension {} vs observation dimension {}",
            u.dim(),
            zpath.dim()
        )));
    }
    Ok(y0.dot(m0) - ito_sum(u, zpath))
}

pub(crate) fn ito_sum<T: Scalar>(u: &ControlPath<T>, zpath: &ObservationPath<T>) -> T {
    u.values
        .iter()
        .zip(&zpath.increments)
        .fold(T::zero(), |acc, (ut, dz)| acc + ut.dot(dz))
}

/// `fᵀm_T` reconstructed from the optimal dual control and the data.
pub fn filter_from_dual<T: Scalar>(
    model: &LinearGaussianModel<T>,
    f: &DVector<T>,
    zpath: &ObservationPath<T>,
) -> Result<T> {
    let sol = dual_lq_optimal(model, f, &zpath.grid)?;
    lg_estimator(&sol.y_path[0], &model.m0, &sol.u_path, zpath)
}

/// Monte-Carlo estimate of `E|fᵀX_T − S_T(u)|²` for each control.
///
/// All controls share the same simulated paths; path `p` draws from
/// `rng.substream(p)` and the reduction runs in path order, so the result does
/// not depend on the worker count.
pub fn lg_mse_mc<T: Scalar>(
    model: &LinearGaussianModel<T>,
    f: &DVector<T>,
    controls: &[ControlPath<T>],
    grid: &TimeGrid<T>,
    n_paths: usize,
    rng: &SeededRng,
) -> Result<Vec<McEstimate<T>>> {
    let offsets = controls
        .iter()
        .map(|u| {
            if u.dim() != model.obs_dim() {
                return Err(Error::GridMismatch("control dimension differs from observation dimension".into()));
            }
            let dual = dual_backward_ode(&model.a_mat, &model.h_mat, u, f, grid)?;
            Ok(dual.initial().dot(&model.m0))
        })
        .collect::<Result<Vec<T>>>()?;
    let sim = LgSimulator::new(model, grid)?;
    let per_path: Vec<Vec<T>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut sums = vec![T::zero(); controls.len()];
            let x_t = sim.run(&rng.substream(p), |k, _, dz| {
                for (s, u) in sums.iter_mut().zip(controls) {
                    *s += u.values[k].dot(dz);
                }
            });
            let target = f.dot(&x_t);
            offsets
                .iter()
                .zip(&sums)
                .map(|(&c, &s)| {
                    let err = target - (c - s);
                    err * err
                })
                .collect()
        })
        .collect();
    Ok((0..controls.len())
        .map(|i| {
            let samples: Vec<T> = per_path.iter().map(|v| v[i]).collect();
            McEstimate::from_samples(&samples)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_gaussian::{kalman_bucy, simulate_lg};

    fn planar() -> LinearGaussianModel<f64> {
        LinearGaussianModel::new(
            DMatrix::from_row_slice(2, 2, &[-0.4, 0.6, -0.5, -0.1]),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.3]),
            DMatrix::from_row_slice(2, 2, &[0.6, 0.0, 0.2, 0.4]),
            DMatrix::from_element(1, 1, 0.5),
            DVector::from_vec(vec![0.5, -1.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.8]),
        )
        .unwrap()
    }

    #[test]
    fn null_problem_costs_nothing() {
        let m = planar();
        let g = TimeGrid::<f64>::new(0.0, 1.0, 100).unwrap();
        let j = mv_cost(&m, &ControlPath::zero(g, 1), &DVector::zeros(2), &g).unwrap();
        assert_eq!(j, 0.0);
    }

    #[test]
    fn uncontrolled_static_dual_cost() {
        let mut m = planar();
        m.a_mat = DMatrix::zeros(2, 2);
        let g = TimeGrid::<f64>::new(0.0, 2.0, 100).unwrap();
        let f = DVector::from_vec(vec![1.0, -2.0]);
        let j = mv_cost(&m, &ControlPath::zero(g, 1), &f, &g).unwrap();
        let expected = quad_form(&m.sigma0, &f) + 2.0 * quad_form(&m.q_cov(), &f);
        assert!((j - expected).abs() < 1e-12);
    }

    #[test]
    fn optimal_cost_is_conditional_variance() {
        let m = planar();
        let g = TimeGrid::<f64>::new(0.0, 1.0, 2000).unwrap();
        let f = DVector::from_vec(vec![0.7, -0.4]);
        let sol = dual_lq_optimal(&m, &f, &g).unwrap();
        let sigma_t = solve_dre(&m, &g).unwrap();
        let target = quad_form(&sigma_t[2000], &f);
        assert!(((sol.cost - target) / target).abs() < 1e-6, "{} vs {}", sol.cost, target);
        assert_eq!(sol.y_path[2000], f);
    }

    #[test]
    fn null_terminal_gives_null_solution() {
        let m = planar();
        let g = TimeGrid::<f64>::new(0.0, 1.0, 50).unwrap();
        let sol = dual_lq_optimal(&m, &DVector::zeros(2), &g).unwrap();
        assert!(sol.y_path.iter().all(|y| y.norm() == 0.0));
        assert!(sol.u_path.values.iter().all(|u| u.norm() == 0.0));
        assert_eq!(sol.cost, 0.0);
    }

    #[test]
    fn no_observations_means_no_control() {
        let mut m = planar();
        m.h_mat = DMatrix::zeros(2, 1);
        let g = TimeGrid::<f64>::new(0.0, 1.0, 400).unwrap();
        let f = DVector::from_vec(vec![1.0, 1.0]);
        let sol = dual_lq_optimal(&m, &f, &g).unwrap();
        assert!(sol.u_path.values.iter().all(|u| u.norm() == 0.0));
        assert!((sol.y_path[0].clone() - m.a_mat.clone().exp() * &f).norm() < 1e-8);
        let j0 = mv_cost(&m, &ControlPath::zero(g, 1), &f, &g).unwrap();
        assert_eq!(sol.cost, j0);
    }

    #[test]
    fn perturbing_the_optimum_costs_more() {
        let m = planar();
        let g = TimeGrid::<f64>::new(0.0, 1.0, 1000).unwrap();
        let f = DVector::from_vec(vec![0.7, -0.4]);
        let sol = dual_lq_optimal(&m, &f, &g).unwrap();
        for (i, eps) in [0.05, -0.1, 0.3].into_iter().enumerate() {
            let w = i as f64 + 1.0;
            let delta = ControlPath::from_fn(g, |t| DVector::from_element(1, (w * t).sin() + 0.2));
            let j = mv_cost(&m, &sol.u_path.perturbed(&delta, eps).unwrap(), &f, &g).unwrap();
            assert!(j > sol.cost);
        }
    }

    #[test]
    fn estimator_degenerate_cases() {
        let g = TimeGrid::<f64>::new(0.0, 1.0, 10).unwrap();
        let y0 = DVector::from_vec(vec![2.0, 1.0]);
        let m0 = DVector::from_vec(vec![0.5, -1.0]);
        let z = ObservationPath::new(g, vec![DVector::from_element(1, 0.3); 10]).unwrap();
        assert_eq!(lg_estimator(&y0, &m0, &ControlPath::zero(g, 1), &z).unwrap(), 0.0);
        let u = ControlPath::constant(g, DVector::from_element(1, 4.0));
        assert_eq!(lg_estimator(&y0, &m0, &u, &ObservationPath::zeros(g, 1)).unwrap(), 0.0);
        let other = TimeGrid::<f64>::new(0.0, 1.0, 11).unwrap();
        assert!(lg_estimator(&y0, &m0, &ControlPath::zero(other, 1), &z).is_err());
    }

    #[test]
    fn dual_filter_matches_kalman_bucy() {
        let m = LinearGaussianModel::<f64>::scalar(0.0, 1.0, 1.0, 1.0, 0.0, 1.0).unwrap();
        let g = TimeGrid::<f64>::new(0.0, 1.0, 10_000).unwrap();
        let f = DVector::from_element(1, 1.0);
        for seed in 0..3 {
            let z = simulate_lg(&m, &g, &SeededRng::new(seed)).unwrap().observations;
            let kb = kalman_bucy(&m, &z).unwrap();
            let dual = filter_from_dual(&m, &f, &z).unwrap();
            assert!((dual - kb.terminal_mean()[0]).abs() <= 1e-3);
        }
    }

    #[test]
    fn dual_filter_is_linear_in_f() {
        let m = planar();
        let g = TimeGrid::<f64>::new(0.0, 1.0, 500).unwrap();
        let z = simulate_lg(&m, &g, &SeededRng::new(8)).unwrap().observations;
        let f1 = DVector::from_vec(vec![1.0, 0.0]);
        let f2 = DVector::from_vec(vec![0.3, -2.0]);
        let a = filter_from_dual(&m, &f1, &z).unwrap();
        let b = filter_from_dual(&m, &f2, &z).unwrap();
        let sum = filter_from_dual(&m, &(&f1 + &f2), &z).unwrap();
        let twice = filter_from_dual(&m, &(&f1 * 2.0), &z).unwrap();
        assert!((sum - a - b).abs() < 1e-9);
        assert!((twice - 2.0 * a).abs() < 1e-9);
    }

    #[test]
    fn no_information_dual_filter_is_prior_mean() {
        let mut m = planar();
        m.h_mat = DMatrix::zeros(2, 1);
        let g = TimeGrid::<f64>::new(0.0, 1.0, 400).unwrap();
        let z = simulate_lg(&m, &g, &SeededRng::new(2)).unwrap().observations;
        let f = DVector::from_vec(vec![1.0, -1.0]);
        let got = filter_from_dual(&m, &f, &z).unwrap();
        let mean_t = m.a_mat.transpose().exp() * &m.m0;
        assert!((got - f.dot(&mean_t)).abs() < 1e-8);
    }
}
