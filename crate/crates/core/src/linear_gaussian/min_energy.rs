use nalgebra::{DMatrix, DVector};

use super::min_variance::quad_form;
use super::{solve_dre, LinearGaussianModel};
use crate::error::{check_dims, Error, Result};
use crate::numkit::{
    condition_number_spd, integrate_ode, lerp_matrix, lerp_vector, rk4_step, spd_inverse, trapezoid, ControlPath,
    Direction, TimeGrid,
};
use crate::scalar::Scalar;

/// Largest condition number of `Σ_t` the smoother accepts before refusing to invert it.
pub const MAX_COVARIANCE_CONDITION: f64 = 1e12;

fn check_rates<T: Scalar>(model: &LinearGaussianModel<T>, grid: &TimeGrid<T>, zdot: &[DVector<T>]) -> Result<()> {
    if zdot.len() != grid.n_steps() {
        return Err(Error::GridMismatch(format!(
            "{} observation rates for a grid of {} steps",
            zdot.len(),
            grid.n_steps()
        )));
    }
    if zdot.iter().any(|z| z.len() != model.obs_dim()) {
        return Err(Error::GridMismatch("observation rate dimension differs from the model".into()));
    }
    Ok(())
}

/// Minimum-energy cost
/// `|m₀ − x₀|²_{Σ₀⁻¹} + ∫ |v_t|² + |ż_t − Hᵀx_t|²_{R⁻¹} dt` subject to
/// `dx/dt = Aᵀx + σv`.
///
/// `zdot[k]` is the observation rate on `[t_k, t_{k+1})` (typically `ΔZ_k/dt`);
/// `v` is sampled at the nodes of its grid. Both integrals are trapezoid sums.
pub fn min_energy_cost<T: Scalar>(
    model: &LinearGaussianModel<T>,
    v: &ControlPath<T>,
    x0: &DVector<T>,
    zdot: &[DVector<T>],
) -> Result<T> {
    let grid = v.grid;
    check_dims("control v", (model.noise_dim(), 1), (v.dim(), 1))?;
    check_dims("initial state", (model.dim(), 1), x0.shape())?;
    check_rates(model, &grid, zdot)?;
    let prior_inv = spd_inverse(&model.sigma0).map_err(|_| Error::SingularPrior)?;
    let r_inv = model.r_inv()?;
    let at = model.a_mat.transpose();
    let states = integrate_ode(|t, x: &DVector<T>| &at * x + &model.sigma * v.at(t), &grid, x0, Direction::Forward)?;

    let energy: Vec<T> = v.values.iter().map(|vt| vt.norm_squared()).collect();
    let ht = model.h_mat.transpose();
    let half = T::lit(0.5);
    let mismatch = zdot.iter().enumerate().fold(T::zero(), |acc, (k, z)| {
        let left = quad_form(&r_inv, &(z - &ht * &states[k]));
        let right = quad_form(&r_inv, &(z - &ht * &states[k + 1]));
        acc + half * (left + right)
    }) * grid.dt();
    Ok(quad_form(&prior_inv, &(&model.m0 - x0)) + trapezoid(&energy, grid.dt()) + mismatch)
}

/// Forward filter path, backward optimal path and optimal control of the
/// minimum-energy problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SmootherOutput<T: Scalar = f64> {
    pub grid: TimeGrid<T>,
    /// `x̂_t`.
    pub xhat: Vec<DVector<T>>,
    /// `x_t^(opt)`.
    pub xopt: Vec<DVector<T>>,
    /// `v_t^(opt) = σᵀΣ_t⁻¹(x_t^(opt) − x̂_t)`.
    pub vopt: ControlPath<T>,
}

/// Rauch–Tung–Striebel smoother for the rates `zdot` (one per grid step).
///
/// The forward pass runs on a grid refined by two so the backward pass reads
/// `x̂` and `Σ⁻¹` at its RK4 stage times without interpolation.
pub fn rts_smooth<T: Scalar>(
    model: &LinearGaussianModel<T>,
    grid: &TimeGrid<T>,
    zdot: &[DVector<T>],
) -> Result<SmootherOutput<T>> {
    check_rates(model, grid, zdot)?;
    let fine = grid.refined(2);
    let sigmas = solve_dre(model, &fine)?;
    let mut sigma_inv = Vec::with_capacity(sigmas.len());
    for (j, s) in sigmas.iter().enumerate() {
        let condition = condition_number_spd(s);
        if !(condition <= MAX_COVARIANCE_CONDITION) {
            return Err(Error::SingularCovariance { index: j / 2, condition });
        }
        sigma_inv.push(spd_inverse(s).map_err(|_| Error::SingularCovariance { index: j / 2, condition })?);
    }

    let r_inv = model.r_inv()?;
    let at = model.a_mat.transpose();
    let ht = model.h_mat.transpose();
    let gains: Vec<DMatrix<T>> = sigmas.iter().map(|s| s * &model.h_mat * &r_inv).collect();
    let fdt = fine.dt();
    let mut xhat_fine = Vec::with_capacity(fine.len());
    xhat_fine.push(model.m0.clone());
    for j in 0..fine.n_steps() {
        let z = &zdot[j / 2];
        let field = |t: T, x: &DVector<T>| &at * x + lerp_matrix(&fine, &gains, t) * (z - &ht * x);
        let next = rk4_step(&field, fine.time(j), fdt, &xhat_fine[j]);
        if next.iter().any(|v| !v.is_finite_value()) {
            return Err(Error::IntegrationDiverged { step: j });
        }
        xhat_fine.push(next);
    }

    let q = model.q_cov();
    let pull: Vec<DMatrix<T>> = sigma_inv.iter().map(|si| &q * si).collect();
    let terminal = xhat_fine[fine.n_steps()].clone();
    // Backward convention: the closure returns −dx/dt.
    let xopt = integrate_ode(
        |t, x: &DVector<T>| -(&at * x + lerp_matrix(&fine, &pull, t) * (x - lerp_vector(&fine, &xhat_fine, t))),
        grid,
        &terminal,
        Direction::Backward,
    )?;
    let xhat: Vec<DVector<T>> = (0..grid.len()).map(|k| xhat_fine[2 * k].clone()).collect();
    let sigma_t = model.sigma.transpose();
    let v_values = (0..grid.len())
        .map(|k| &sigma_t * (&sigma_inv[2 * k] * (&xopt[k] - &xhat[k])))
        .collect();
    Ok(SmootherOutput { grid: *grid, xhat, xopt, vopt: ControlPath::new(*grid, v_values)? })
}
