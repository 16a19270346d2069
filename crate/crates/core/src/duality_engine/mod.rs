//! Backward dual systems, adjoint pairing, Gramian tests and the
//! duality-principle checks for both model families.

mod dual_system;
mod gramian;
mod hmm_duality;
mod lg_checks;
mod observability;
mod report;

pub use dual_system::{adjoint_output, dual_backward_ode, pairing_check, pairing_residual, DualTrajectory, PairingCheck};
pub use gramian::{
    controllability_gramian, gramian_duality, kalman_matrix, kalman_rank, observability_gramian, GramianReport,
    GRAMIAN_RANK_TOL,
};
pub use hmm_duality::{
    filter_lower_bound_check, hmm_dual_cost, hmm_estimator, verify_duality_principle, verify_duality_principle_many,
    LowerBoundReport, LowerBoundRow,
};
pub use lg_checks::{lg_reduction_check, verify_lg_duality};
pub use observability::{hmm_observability_test, ObservabilityReport, SPAN_TOL};
pub use report::{DualityReport, Verdict, Z_THRESHOLD};
