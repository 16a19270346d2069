//! Numerical laboratory for estimation/control duality.
//!
//! The crate pairs each estimator with its dual optimal-control problem and
//! provides the machinery to check the identities tying them together:
//!
//! * [`linear_gaussian`]: Kalman–Bucy filter, the minimum-variance dual LQ
//!   problem, the minimum-energy cost and the RTS smoother, and the static
//!   Gaussian example.
//! * [`finite_hmm`]: finite-state hidden Markov models observed in white
//!   noise, the Zakai filter and the carré du champ operator.
//! * [`duality_engine`]: backward dual systems, adjoint pairing, Gramian
//!   tests, exact HMM dual costs and Monte-Carlo verdict reports.
//! * [`numkit`]: fixed-grid RK4, SPD factorization and seeded random streams.
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below pin the `f64` instantiation used by the runner.

// `!(x > 0)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod duality_engine;
pub mod error;
pub mod finite_hmm;
pub mod linear_gaussian;
pub mod numkit;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Dense `f64` matrix.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Dense `f64` column vector.
pub type Vector = nalgebra::DVector<f64>;
/// Dense `f32` matrix.
pub type Matrix32 = nalgebra::DMatrix<f32>;
/// Dense `f32` column vector.
pub type Vector32 = nalgebra::DVector<f32>;

pub type TimeGrid = numkit::TimeGrid<f64>;
pub type ObservationPath = numkit::ObservationPath<f64>;
pub type ControlPath = numkit::ControlPath<f64>;
pub type LinearGaussianModel = linear_gaussian::LinearGaussianModel<f64>;
pub type FiniteHmm = finite_hmm::FiniteHmm<f64>;
pub type DualTrajectory = duality_engine::DualTrajectory<f64>;
pub type DualityReport = duality_engine::DualityReport<f64>;
