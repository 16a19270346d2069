//! Finite-state hidden Markov models observed in additive white noise.
//!
//! States are indexed `0..d` internally. Functions on the state space are
//! `d`-vectors; the rate matrix acts on them as `(𝒜f)(x) = Σ_y A(x,y) f(y)` and
//! its transpose propagates distributions.

mod filter;
mod model;
mod simulate;

pub use filter::{carre_du_champ, conditional_mse_mc, forward_kolmogorov, zakai_filter, zakai_filter_from, BeliefPath};
pub use model::{validate_hmm, FiniteHmm};
pub use simulate::{sample_ctmc, simulate_observations, JumpPath};

pub(crate) use filter::gamma_operator;
pub(crate) use simulate::HmmSimulator;
