//! Backward dual control system `−dy/dt = A y + H u` and its adjoint.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dims, Error, Result};
use crate::numkit::{integrate_ode, simpson, trapezoid, ControlPath, Direction, TimeGrid};
use crate::scalar::Scalar;

/// Solution of the backward dual system for a deterministic input.
///
/// For a finite-state HMM this is the dual BSDE with `V ≡ 0` (the rate matrix
/// acts on functions, `(H u)(x) = h(x)ᵀu`); for the linear-Gaussian model it
/// is the coefficient vector of the linear function `Y_t(x) = y_tᵀx`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualTrajectory<T: Scalar = f64> {
    pub grid: TimeGrid<T>,
    pub y_path: Vec<DVector<T>>,
    pub u_path: ControlPath<T>,
    pub terminal: DVector<T>,
}

impl<T: Scalar> DualTrajectory<T> {
    /// `y` at the initial time.
    pub fn initial(&self) -> &DVector<T> {
        &self.y_path[0]
    }
}

/// Integrates `−dy/dt = A y + H u_t` backward from `y(t1) = terminal`.
pub fn dual_backward_ode<T: Scalar>(
    a_mat: &DMatrix<T>,
    h_mat: &DMatrix<T>,
    u: &ControlPath<T>,
    terminal: &DVector<T>,
    grid: &TimeGrid<T>,
) -> Result<DualTrajectory<T>> {
    let d = a_mat.nrows();
    check_dims("dual system A", (d, d), a_mat.shape())?;
    check_dims("dual system H", (d, u.dim()), h_mat.shape())?;
    check_dims("dual terminal", (d, 1), terminal.shape())?;
    if !u.grid.same_as(grid) {
        return Err(Error::GridMismatch("control path is not on the dual grid".into()));
    }
    let y_path = integrate_ode(
        |t, y: &DVector<T>| a_mat * y + h_mat * u.at(t),
        grid,
        terminal,
        Direction::Backward,
    )?;
    Ok(DualTrajectory {
        grid: *grid,
        y_path,
        u_path: u.clone(),
        terminal: terminal.clone(),
    })
}

/// Output `z_t = Hᵀ e^{Aᵀt} ξ` of the state-output system `dx/dt = Aᵀx`, `x_0 = ξ`,
/// evaluated at every grid node.
pub fn adjoint_output<T: Scalar>(
    a_mat: &DMatrix<T>,
    h_mat: &DMatrix<T>,
    xi: &DVector<T>,
    grid: &TimeGrid<T>,
) -> Result<Vec<DVector<T>>> {
    let d = a_mat.nrows();
    check_dims("adjoint A", (d, d), a_mat.shape())?;
    check_dims("adjoint H rows", (d, h_mat.ncols()), h_mat.shape())?;
    check_dims("adjoint initial state", (d, 1), xi.shape())?;
    let at = a_mat.transpose();
    let states = integrate_ode(|_, x: &DVector<T>| &at * x, grid, xi, Direction::Forward)?;
    let ht = h_mat.transpose();
    Ok(states.iter().map(|x| &ht * x).collect())
}

/// Both sides of `⟨ξ, 𝓛u⟩ = ⟨𝓛†ξ, u⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingCheck<T: Scalar = f64> {
    /// `ξᵀ y_0` with `y` driven by `u` from `y_T = 0`.
    pub state_side: T,
    /// `∫ z_tᵀ u_t dt` with `z` the output started from `ξ`.
    pub signal_side: T,
    pub residual: T,
    /// Residual over `|ξ|·|y_0| + ∫|z_t||u_t| dt`; zero when that scale is zero.
    pub relative: T,
}

/// Evaluates the adjoint pairing. The signal-side integral uses Simpson's rule
/// on a grid refined by two, with `u` linearly interpolated; this is a
/// different discretisation from the RK4 route that produces `y_0`.
pub fn pairing_check<T: Scalar>(
    a_mat: &DMatrix<T>,
    h_mat: &DMatrix<T>,
    xi: &DVector<T>,
    u: &ControlPath<T>,
    grid: &TimeGrid<T>,
) -> Result<PairingCheck<T>> {
    let d = a_mat.nrows();
    let dual = dual_backward_ode(a_mat, h_mat, u, &DVector::zeros(d), grid)?;
    let y0 = dual.initial();
    let state_side = xi.dot(y0);

    let fine = grid.refined(2);
    let z = adjoint_output(a_mat, h_mat, xi, &fine)?;
    let (inner, scale_integrand): (Vec<T>, Vec<T>) = fine
        .times()
        .zip(&z)
        .map(|(t, zt)| {
            let ut = u.at(t);
            (zt.dot(&ut), zt.norm() * ut.norm())
        })
        .unzip();
    let signal_side = simpson(&inner, fine.dt());
    let residual = (state_side - signal_side).abs();
    let scale = xi.norm() * y0.norm() + trapezoid(&scale_integrand, fine.dt());
    let relative = if scale > T::zero() { residual / scale } else { T::zero() };
    Ok(PairingCheck { state_side, signal_side, residual, relative })
}

/// `|ξᵀ y_0(u) − ∫ z_tᵀ u_t dt|`.
pub fn pairing_residual<T: Scalar>(
    a_mat: &DMatrix<T>,
    h_mat: &DMatrix<T>,
    xi: &DVector<T>,
    u: &ControlPath<T>,
    grid: &TimeGrid<T>,
) -> Result<T> {
    Ok(pairing_check(a_mat, h_mat, xi, u, grid)?.residual)
}
