//! Linear-Gaussian model `dX = AᵀX dt + σ dB`, `dZ = HᵀX dt + dW` and both of
//! its dual constructions.
//!
//! Norms follow `|x|²_M = xᵀMx` throughout.

mod filter;
mod min_energy;
mod min_variance;
mod model;
pub mod reference;
mod static_example;

pub use filter::{kalman_bucy, simulate_lg, solve_dre, FilterOutput, LgSample};
pub use min_energy::{min_energy_cost, rts_smooth, SmootherOutput};
pub use min_variance::{
    dual_lq_optimal, filter_from_dual, lg_estimator, lg_mse_mc, mv_cost, DualLqSolution,
};
pub use model::LinearGaussianModel;
pub use static_example::{static_ml, static_mv};

pub(crate) use min_variance::{ito_sum, quad_form};
