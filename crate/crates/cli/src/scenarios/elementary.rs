//! Adjoint pairing and Gramian duality for deterministic linear systems.

use duality_core::duality_engine::{gramian_duality, kalman_rank, pairing_check};
use duality_core::numkit::{ControlPath, TimeGrid};
use nalgebra::{DMatrix, DVector};

use super::random::Corpus;
use super::{label, Scenario, ScenarioOutput};
use crate::config::{matrix, ScenarioConfig};
use crate::error::{invalid, CliResult};
use crate::report::{Row, Table};

const PAIRING_REL_TOL: f64 = 1e-8;
const DEFAULT_PAIRING_STEPS: usize = 4000;
const PAIRING_STREAM: u64 = 0x40;
const GRAMIAN_STREAM: u64 = 0x41;

pub(crate) struct ObsvCtrlDuality {
    horizon: f64,
    gramian_grid: TimeGrid,
    pairing_grid: TimeGrid,
    instances: usize,
    max_dim: usize,
    max_obs: usize,
    gramian_instances: usize,
    pairs: Vec<(String, DMatrix<f64>, DMatrix<f64>)>,
    seed: u64,
}

impl ObsvCtrlDuality {
    pub(crate) fn prepare(cfg: &ScenarioConfig) -> CliResult<Self> {
        let gramian_grid = cfg.time_grid()?;
        let c = cfg.corpus()?;
        if c.max_dim == 0 || c.max_obs == 0 {
            return Err(invalid("corpus dimensions must be positive"));
        }
        let pairing_grid = TimeGrid::new(0.0, gramian_grid.t1(), c.n_steps.unwrap_or(DEFAULT_PAIRING_STEPS))?;
        let pairs = cfg
            .pairs
            .iter()
            .map(|p| {
                let a = matrix(&format!("pair {} a", p.name), &p.a)?;
                let h = matrix(&format!("pair {} h", p.name), &p.h)?;
                if !a.is_square() || h.nrows() != a.nrows() {
                    return Err(invalid(format!("pair {}: A must be d×d and H d×m", p.name)));
                }
                Ok((p.name.clone(), a, h))
            })
            .collect::<CliResult<Vec<_>>>()?;
        let gramian_instances = c.gramian_instances.unwrap_or(pairs.len()).max(pairs.len());
        Ok(Self {
            horizon: gramian_grid.t1(),
            gramian_grid,
            pairing_grid,
            instances: c.instances,
            max_dim: c.max_dim,
            max_obs: c.max_obs,
            gramian_instances,
            pairs,
            seed: cfg.seed,
        })
    }

    /// Smooth random input `u_j(t) = a_j + b_j sin(ω_j t + φ_j)`.
    fn random_control(&self, corpus: &mut Corpus, m: usize) -> ControlPath {
        let coeffs: Vec<[f64; 4]> = (0..m)
            .map(|_| {
                [
                    corpus.uniform(-1.0, 1.0),
                    corpus.uniform(-1.0, 1.0),
                    corpus.uniform(0.5, 6.0) / self.horizon,
                    corpus.uniform(0.0, std::f64::consts::TAU),
                ]
            })
            .collect();
        ControlPath::from_fn(self.pairing_grid, |t| DVector::from_fn(m, |j, _| {
            let [a, b, w, phi] = coeffs[j];
            a + b * (w * t + phi).sin()
        }))
    }
}

impl Scenario for ObsvCtrlDuality {
    fn run(&self) -> CliResult<ScenarioOutput> {
        let mut out = ScenarioOutput::default();

        let mut pairing = Table::new("pairing.csv", ["instance", "d", "m", "state_side", "signal_side", "relative"]);
        let mut corpus = Corpus::new(self.seed, PAIRING_STREAM);
        for i in 0..self.instances {
            let d = corpus.dim(1, self.max_dim);
            let m = corpus.dim(1, self.max_obs);
            let a = corpus.uniform_matrix(d, d, -1.0, 1.0);
            let h = corpus.uniform_matrix(d, m, -1.0, 1.0);
            let xi = corpus.normal_vector(d);
            let u = self.random_control(&mut corpus, m);
            let check = pairing_check(&a, &h, &xi, &u, &self.pairing_grid)?;
            pairing.push(vec![i as f64, d as f64, m as f64, check.state_side, check.signal_side, check.relative]);
            out.rows.push(Row::at_most(label("pairing", &[&i.to_string()]), 0.0, check.relative, PAIRING_REL_TOL));
        }
        out.tables.push(pairing);

        let mut gramians = Table::new("gramians.csv", ["instance", "d", "m", "kalman_rank", "ctrl_rank", "obs_rank"]);
        let mut corpus = Corpus::new(self.seed, GRAMIAN_STREAM);
        let mut pairs = self.pairs.clone();
        for i in pairs.len()..self.gramian_instances {
            let d = corpus.dim(1, self.max_dim);
            let m = corpus.dim(1, self.max_obs);
            pairs.push((format!("random{i}"), corpus.uniform_matrix(d, d, -1.0, 1.0), corpus.uniform_matrix(d, m, -1.0, 1.0)));
        }
        for (i, (name, a, h)) in pairs.iter().enumerate() {
            let d = a.nrows();
            let kalman = kalman_rank(a, h);
            let rep = gramian_duality(a, h, &self.gramian_grid)?;
            gramians.push(vec![i as f64, d as f64, h.ncols() as f64, kalman as f64, rep.ctrl_rank as f64, rep.obs_rank as f64]);
            out.rows.push(Row::equal(label("gramian_vs_kalman", &[name]), kalman == d, rep.controllable));
            out.rows.push(Row::equal(label("controllable_iff_observable", &[name]), rep.controllable, rep.observable));
        }
        out.tables.push(gramians);
        Ok(out)
    }
}
