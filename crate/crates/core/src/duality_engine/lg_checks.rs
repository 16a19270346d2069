use nalgebra::DVector;

use super::{dual_backward_ode, DualityReport};
use crate::error::{check_dims, Result};
use crate::linear_gaussian::{lg_mse_mc, mv_cost, quad_form, LinearGaussianModel};
use crate::numkit::{standard_normal, ControlPath, SeededRng, TimeGrid};
use crate::scalar::Scalar;

/// Checks `J_T(u) = E|fᵀX_T − S_T|²` for every control, all controls scored on
/// the same simulated paths.
pub fn verify_lg_duality<T: Scalar>(
    model: &LinearGaussianModel<T>,
    controls: &[ControlPath<T>],
    f: &DVector<T>,
    grid: &TimeGrid<T>,
    n_paths: usize,
    rng: &SeededRng,
) -> Result<Vec<DualityReport<T>>> {
    let exact = controls
        .iter()
        .map(|u| mv_cost(model, u, f, grid))
        .collect::<Result<Vec<T>>>()?;
    let mc = lg_mse_mc(model, f, controls, grid, n_paths, rng)?;
    Ok(exact.into_iter().zip(mc).map(|(j, est)| DualityReport::new(j, est)).collect())
}

/// Seed for the state points at which the generator form is evaluated.
const PROBE_SEED: u64 = 0x1c0f_fee5;
const N_PROBES: usize = 6;

/// Compares the general running cost `(ΓY_t)(x) + |u_t|²_R`, with
/// `Y_t(x) = y_tᵀx` and `Γ` evaluated both as `|σᵀ∇Y|²` and through
/// `𝒜(Y²) − 2Y𝒜Y` for the diffusion generator, against the linear-Gaussian
/// running cost `|y_t|²_Q + |u_t|²_R`. Returns the largest absolute
/// discrepancy over grid nodes and a fixed set of probe points `x`.
pub fn lg_reduction_check<T: Scalar>(
    model: &LinearGaussianModel<T>,
    f: &DVector<T>,
    u: &ControlPath<T>,
    grid: &TimeGrid<T>,
) -> Result<T> {
    let d = model.dim();
    check_dims("reduction terminal", (d, 1), f.shape())?;
    let dual = dual_backward_ode(&model.a_mat, &model.h_mat, u, f, grid)?;
    let q = model.q_cov();
    let mut gen = SeededRng::new(PROBE_SEED).stream();
    let probes: Vec<DVector<T>> = std::iter::once(DVector::zeros(d))
        .chain((0..N_PROBES).map(|_| DVector::from_fn(d, |_, _| standard_normal::<T, _>(&mut gen))))
        .collect();
    let mut worst = T::zero();
    for (y, ut) in dual.y_path.iter().zip(&u.values) {
        let control = quad_form(&model.r_cov, ut);
        let lg = quad_form(&q, y) + control;
        let direct = (model.sigma.transpose() * y).norm_squared() + control;
        worst = worst.max((direct - lg).abs());
        // 𝒜g(x) = (Aᵀx)·∇g + ½ tr(σσᵀ∇²g); for Y = yᵀx: 𝒜Y = yᵀAᵀx and
        // 𝒜(Y²) = 2(yᵀx)(yᵀAᵀx) + yᵀQy.
        let drift_dir = &model.a_mat * y;
        for x in &probes {
            let yx = y.dot(x);
            let a_y = drift_dir.dot(x);
            let a_y2 = T::lit(2.0) * yx * a_y + quad_form(&q, y);
            let generator = a_y2 - T::lit(2.0) * yx * a_y + control;
            worst = worst.max((generator - lg).abs());
        }
    }
    Ok(worst)
}
