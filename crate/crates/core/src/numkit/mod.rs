//! Deterministic numerical substrate shared by every model family.

mod grid;
mod linalg;
mod ode;
mod paths;
mod rng;
mod stats;

pub use grid::{node_quadrature, simpson, trapezoid, TimeGrid};
pub use linalg::{
    cholesky_solve, condition_number_spd, is_symmetric, matrix_rank, psd_sqrt, spd_factor,
    spd_inverse, symmetric_rank, symmetrize,
};
pub use ode::{integrate_ode, rk4_linear_propagator, rk4_step, Direction};
pub use paths::{lerp_matrix, lerp_vector, ControlPath, ObservationPath};
pub use rng::{sample_gaussian_increments, standard_normal, GaussianSampler, SeededRng};
pub use stats::McEstimate;
