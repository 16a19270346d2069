//! Brute-force reference solutions used by scenario checks.
//!
//! These solve discretised versions of the estimation problems directly and
//! share no code path with the smoother they are compared against.

use nalgebra::{DMatrix, DVector};

use super::LinearGaussianModel;
use crate::error::{Error, Result};
use crate::numkit::{spd_factor, TimeGrid};
use crate::scalar::Scalar;

/// Minimises the Euler-discretised minimum-energy cost
///
/// `|m₀ − x₀|²_{Σ₀⁻¹} + Σ_k dt·(|v_k|² + |ż_k − Hᵀx_k|²_{R⁻¹})`,
/// `x_{k+1} = x_k + dt·(Aᵀx_k + σv_k)`
///
/// over `(x₀, v₀ … v_{n−1})` by forming and solving the normal equations of the
/// weighted residual map. Returns the state at every node.
pub fn discrete_least_squares<T: Scalar>(
    model: &LinearGaussianModel<T>,
    grid: &TimeGrid<T>,
    zdot: &[DVector<T>],
) -> Result<Vec<DVector<T>>> {
    let d = model.dim();
    let p = model.noise_dim();
    let n = grid.n_steps();
    if zdot.len() != n {
        return Err(Error::GridMismatch("one observation rate per step expected".into()));
    }
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();
    let unknowns = d + n * p;

    // Whitening: |x|²_{M⁻¹} = |L⁻¹x|² with M = LLᵀ.
    let prior_white = spd_factor(&model.sigma0)
        .map_err(|_| Error::SingularPrior)?
        .try_inverse()
        .ok_or(Error::SingularPrior)?;
    let obs_white = spd_factor(&model.r_cov)
        .map_err(|_| Error::NoiseNotSpd)?
        .try_inverse()
        .ok_or(Error::NoiseNotSpd)?;

    // Normal equations JᵀJ w = Jᵀb of the whitened residual map J, accumulated
    // block by block: the observation rows of step k only touch the first
    // d + k·p unknowns.
    let mut normal = DMatrix::<T>::zeros(unknowns, unknowns);
    let mut target = DVector::<T>::zeros(unknowns);
    let prior_gram = prior_white.transpose() * &prior_white;
    normal.view_mut((0, 0), (d, d)).copy_from(&prior_gram);
    target.rows_mut(0, d).copy_from(&(&prior_gram * &model.m0));
    for k in 0..n * p {
        normal[(d + k, d + k)] = dt;
    }

    // state_map = ∂x_k/∂(x₀, v), advanced one Euler step at a time.
    let phi = DMatrix::<T>::identity(d, d) + model.a_mat.transpose() * dt;
    let sigma_dt = &model.sigma * dt;
    let obs_rows = &obs_white * model.h_mat.transpose() * sqrt_dt;
    let mut state_map = DMatrix::<T>::zeros(d, unknowns);
    state_map.view_mut((0, 0), (d, d)).fill_with_identity();
    for k in 0..n {
        let c = d + k * p;
        let g = &obs_rows * state_map.columns(0, c);
        let b = &obs_white * &zdot[k] * sqrt_dt;
        normal.view_mut((0, 0), (c, c)).gemm_tr(T::one(), &g, &g, T::one());
        target.rows_mut(0, c).gemv_tr(T::one(), &g, &b, T::one());
        let mut next = &phi * &state_map;
        let mut block = next.view_mut((0, c), (d, p));
        block += &sigma_dt;
        state_map = next;
    }

    let chol = normal.cholesky().ok_or(Error::Singular("least-squares normal equations"))?;
    let w = chol.solve(&target);

    let x0 = w.rows(0, d).into_owned();
    let mut states = Vec::with_capacity(n + 1);
    states.push(x0);
    for k in 0..n {
        let v = w.rows(d + k * p, p).into_owned();
        let x = &states[k];
        states.push(&phi * x + &sigma_dt * v);
    }
    Ok(states)
}
