//! Scenario files: TOML (or JSON when the extension is `.json`), matrices as
//! nested row-major arrays.

use std::fmt;
use std::path::Path;

use duality_core::finite_hmm::FiniteHmm;
use duality_core::linear_gaussian::LinearGaussianModel;
use duality_core::numkit::TimeGrid;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    HmmDuality,
    HmmLowerBound,
    HmmObservability,
    LgDualFilter,
    LgDuality,
    LgReduction,
    ObsvCtrlDuality,
    RtsVsLsq,
    StaticGaussian,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 9] = [
        ScenarioKind::HmmDuality,
        ScenarioKind::HmmLowerBound,
        ScenarioKind::HmmObservability,
        ScenarioKind::LgDualFilter,
        ScenarioKind::LgDuality,
        ScenarioKind::LgReduction,
        ScenarioKind::ObsvCtrlDuality,
        ScenarioKind::RtsVsLsq,
        ScenarioKind::StaticGaussian,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::HmmDuality => "hmm-duality",
            ScenarioKind::HmmLowerBound => "hmm-lower-bound",
            ScenarioKind::HmmObservability => "hmm-observability",
            ScenarioKind::LgDualFilter => "lg-dual-filter",
            ScenarioKind::LgDuality => "lg-duality",
            ScenarioKind::LgReduction => "lg-reduction",
            ScenarioKind::ObsvCtrlDuality => "obsv-ctrl-duality",
            ScenarioKind::RtsVsLsq => "rts-vs-lsq",
            ScenarioKind::StaticGaussian => "static-gaussian",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t1: f64,
    pub n_steps: usize,
    /// Resolution of the reference Riccati solve (lg-duality).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fine_steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSpec {
    pub n_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LgSpec {
    pub a: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub m0: Vec<f64>,
    pub sigma0: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HmmSpec {
    pub rate: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
}

/// Named HMM used by the observability scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HmmCase {
    pub name: String,
    pub rate: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<Vec<f64>>,
}

impl HmmCase {
    pub fn build(&self) -> CliResult<FiniteHmm> {
        HmmSpec { rate: self.rate.clone(), h: self.h.clone(), r: self.r.clone(), prior: self.prior.clone() }
            .build()
            .map_err(|e| invalid(format!("case {}: {e}", self.name)))
    }
}

/// Explicit `(A, H)` pair for the Gramian corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub name: String,
    pub a: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
}

/// Sizes of seeded random corpora.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub instances: usize,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    #[serde(default = "default_max_obs")]
    pub max_obs: usize,
    /// Grid resolution for the pairing identity (obsv-ctrl-duality).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    /// Total size of the Gramian corpus, explicit pairs included.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gramian_instances: Option<usize>,
    /// Number of random `(rate, f)` pairs for the carré du champ identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_instances: Option<usize>,
}

fn default_max_dim() -> usize {
    3
}

fn default_max_obs() -> usize {
    2
}

/// A deterministic control on the scenario grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ControlSpec {
    Zero {
        name: String,
    },
    Constant {
        name: String,
        value: Vec<f64>,
    },
    /// Rows `[t_start, v_1, …, v_m]`, first row at the grid start.
    Piecewise {
        name: String,
        table: Vec<Vec<f64>>,
    },
    /// Optimal feedback control of the minimum-variance dual problem
    /// (linear-Gaussian scenarios only).
    Optimal {
        name: String,
    },
    /// The optimal control plus `amplitude·sin(frequency·t)` in every component.
    OptimalPerturbed {
        name: String,
        amplitude: f64,
        frequency: f64,
    },
}

impl ControlSpec {
    pub fn name(&self) -> &str {
        match self {
            ControlSpec::Zero { name }
            | ControlSpec::Constant { name, .. }
            | ControlSpec::Piecewise { name, .. }
            | ControlSpec::Optimal { name }
            | ControlSpec::OptimalPerturbed { name, .. } => name,
        }
    }

    pub fn needs_optimal(&self) -> bool {
        matches!(self, ControlSpec::Optimal { .. } | ControlSpec::OptimalPerturbed { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lg: Option<LgSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hmm: Option<HmmSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub controls: Vec<ControlSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<CorpusSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<PairSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cases: Vec<HmmCase>,
}

impl ScenarioConfig {
    /// Reads a TOML file, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|message| CliError::Parse { path: path.display().to_string(), message })
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config is always serializable");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn time_grid(&self) -> CliResult<TimeGrid> {
        let g = self.grid.as_ref().ok_or_else(|| invalid(format!("{} needs a [grid] section", self.scenario)))?;
        TimeGrid::new(0.0, g.t1, g.n_steps).map_err(|e| invalid(e.to_string()))
    }

    pub fn n_paths(&self) -> CliResult<usize> {
        let mc = self.mc.as_ref().ok_or_else(|| invalid(format!("{} needs an [mc] section", self.scenario)))?;
        if mc.n_paths == 0 {
            return Err(invalid("mc.n_paths must be positive"));
        }
        Ok(mc.n_paths)
    }

    pub fn lg_model(&self) -> CliResult<LinearGaussianModel> {
        let spec = self.lg.as_ref().ok_or_else(|| invalid(format!("{} needs an [lg] section", self.scenario)))?;
        spec.build()
    }

    pub fn hmm_model(&self) -> CliResult<FiniteHmm> {
        let spec = self.hmm.as_ref().ok_or_else(|| invalid(format!("{} needs an [hmm] section", self.scenario)))?;
        spec.build()
    }

    pub fn corpus(&self) -> CliResult<&CorpusSpec> {
        self.corpus.as_ref().ok_or_else(|| invalid(format!("{} needs a [corpus] section", self.scenario)))
    }

    /// Probe vectors `f`, each of length `dim`.
    pub fn probe_vectors(&self, dim: usize) -> CliResult<Vec<DVector<f64>>> {
        if self.probes.is_empty() {
            return Err(invalid(format!("{} needs at least one probe vector", self.scenario)));
        }
        self.probes
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if p.len() != dim {
                    return Err(invalid(format!("probe {i} has length {}, expected {dim}", p.len())));
                }
                Ok(DVector::from_column_slice(p))
            })
            .collect()
    }
}

pub(crate) fn matrix(name: &str, rows: &[Vec<f64>]) -> CliResult<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Err(invalid(format!("{name} is empty")));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
        return Err(invalid(format!("{name}: row {i} has {} entries, expected {m}", r.len())));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid(format!("{name} has a non-finite entry")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn vector(name: &str, v: &[f64]) -> CliResult<DVector<f64>> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(invalid(format!("{name} must be a non-empty finite vector")));
    }
    Ok(DVector::from_column_slice(v))
}

impl LgSpec {
    pub fn build(&self) -> CliResult<LinearGaussianModel> {
        LinearGaussianModel::new(
            matrix("lg.a", &self.a)?,
            matrix("lg.h", &self.h)?,
            matrix("lg.sigma", &self.sigma)?,
            matrix("lg.r", &self.r)?,
            vector("lg.m0", &self.m0)?,
            matrix("lg.sigma0", &self.sigma0)?,
        )
        .map_err(|e| invalid(format!("lg model: {e}")))
    }
}

impl HmmSpec {
    pub fn build(&self) -> CliResult<FiniteHmm> {
        let rate = matrix("hmm.rate", &self.rate)?;
        let h = matrix("hmm.h", &self.h)?;
        let d = rate.nrows();
        let m = h.ncols();
        let r = match &self.r {
            Some(r) => matrix("hmm.r", r)?,
            None => DMatrix::identity(m, m),
        };
        let prior = match &self.prior {
            Some(p) => vector("hmm.prior", p)?,
            None => DVector::from_element(d, 1.0 / d as f64),
        };
        FiniteHmm::new(rate, h, r, prior).map_err(|e| invalid(format!("hmm model: {e}")))
    }
}
