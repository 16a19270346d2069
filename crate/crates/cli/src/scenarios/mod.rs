//! The registered scenarios. Each is validated in full by [`prepare`] before
//! anything runs or is written.

mod controls;
mod elementary;
mod hmm;
mod lg;
mod random;
mod reduction;
mod static_gaussian;

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::error::CliResult;
use crate::report::{Row, Table};

pub use controls::build_controls;

/// Rows and tables produced by one scenario run.
#[derive(Debug, Default)]
pub struct ScenarioOutput {
    pub rows: Vec<Row>,
    pub tables: Vec<Table>,
}

/// A validated scenario, ready to run.
pub trait Scenario: Send + Sync {
    fn run(&self) -> CliResult<ScenarioOutput>;
}

/// Validates `cfg` and builds its scenario.
pub fn prepare(cfg: &ScenarioConfig) -> CliResult<Box<dyn Scenario>> {
    Ok(match cfg.scenario {
        ScenarioKind::HmmDuality => Box::new(hmm::HmmDuality::prepare(cfg)?),
        ScenarioKind::HmmLowerBound => Box::new(hmm::HmmLowerBound::prepare(cfg)?),
        ScenarioKind::HmmObservability => Box::new(hmm::HmmObservability::prepare(cfg)?),
        ScenarioKind::LgDualFilter => Box::new(lg::LgDualFilter::prepare(cfg)?),
        ScenarioKind::LgDuality => Box::new(lg::LgDuality::prepare(cfg)?),
        ScenarioKind::LgReduction => Box::new(reduction::LgReduction::prepare(cfg)?),
        ScenarioKind::ObsvCtrlDuality => Box::new(elementary::ObsvCtrlDuality::prepare(cfg)?),
        ScenarioKind::RtsVsLsq => Box::new(lg::RtsVsLsq::prepare(cfg)?),
        ScenarioKind::StaticGaussian => Box::new(static_gaussian::StaticGaussian::prepare(cfg)?),
    })
}

/// One line of `duality-lab list`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub anchor: &'static str,
    pub required: &'static str,
}

/// Every registered scenario, alphabetized by name.
pub fn list_scenarios() -> Vec<ScenarioInfo> {
    ScenarioKind::ALL
        .iter()
        .map(|&kind| {
            let (description, anchor, required) = match kind {
                ScenarioKind::HmmDuality => (
                    "dual cost J(u) vs Monte-Carlo m.s.e. of S_T for a finite-state HMM",
                    "duality principle for the HMM",
                    "seed, grid, mc, hmm, probes, controls",
                ),
                ScenarioKind::HmmLowerBound => (
                    "nonlinear filter m.s.e. lower-bounds J(u) over deterministic controls",
                    "optimal value of the HMM dual problem",
                    "seed, grid, mc, hmm, probes, controls",
                ),
                ScenarioKind::HmmObservability => (
                    "span-closure observability verdicts vs brute-force distinguishability",
                    "observability of the HMM",
                    "seed, cases",
                ),
                ScenarioKind::LgDualFilter => (
                    "Kalman-Bucy mean rebuilt from the optimal dual control",
                    "minimum-variance duality, Kalman-Bucy filter",
                    "seed, grid, mc, lg, probes",
                ),
                ScenarioKind::LgDuality => (
                    "LG dual cost J(u) vs Monte-Carlo m.s.e.; optimal cost vs Riccati",
                    "minimum-variance duality, linear-Gaussian model",
                    "seed, grid (fine_steps), mc, lg, probes, controls",
                ),
                ScenarioKind::LgReduction => (
                    "carre du champ identity and HMM-to-LG running-cost reduction",
                    "carre du champ, linear-Gaussian special case",
                    "seed, grid, corpus (gamma_instances)",
                ),
                ScenarioKind::ObsvCtrlDuality => (
                    "adjoint pairing and controllability/observability Gramian duality",
                    "elementary duality by time reversal",
                    "seed, grid, corpus (n_steps, gramian_instances), pairs",
                ),
                ScenarioKind::RtsVsLsq => (
                    "RTS smoothed path vs discrete least-squares oracle",
                    "minimum-energy duality, RTS smoother",
                    "seed, grid, mc, lg",
                ),
                ScenarioKind::StaticGaussian => (
                    "minimum-variance vs maximum-likelihood estimate of a Gaussian vector",
                    "matrix inversion lemma, static example",
                    "seed, corpus",
                ),
            };
            ScenarioInfo { name: kind.as_str(), description, anchor, required }
        })
        .collect()
}

/// `{prefix}[{i}]` labels for nested loops.
pub(crate) fn label(prefix: &str, parts: &[&str]) -> String {
    format!("{prefix}[{}]", parts.join("/"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_complete_and_sorted() {
        let rows = list_scenarios();
        assert_eq!(rows.len(), 9);
        assert!(rows.windows(2).all(|w| w[0].name < w[1].name));
        assert!(rows.iter().all(|r| !r.anchor.is_empty() && r.required.starts_with("seed")));
        assert_eq!(rows, list_scenarios());
    }

    #[test]
    fn prepare_rejects_missing_sections() {
        let cfg: ScenarioConfig = toml::from_str("scenario = \"lg-duality\"\nseed = 1\n").unwrap();
        assert!(prepare(&cfg).is_err());
        let cfg: ScenarioConfig = toml::from_str("scenario = \"hmm-observability\"\nseed = 1\n").unwrap();
        assert!(prepare(&cfg).is_err());
    }
}
