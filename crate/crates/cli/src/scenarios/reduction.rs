//! Carré du champ identity and the reduction of the HMM running cost to the
//! linear-Gaussian one.

use duality_core::duality_engine::lg_reduction_check;
use duality_core::finite_hmm::{carre_du_champ, FiniteHmm};
use duality_core::linear_gaussian::LinearGaussianModel;
use duality_core::numkit::{ControlPath, TimeGrid};
use nalgebra::{DMatrix, DVector};

use super::random::Corpus;
use super::{label, Scenario, ScenarioOutput};
use crate::config::ScenarioConfig;
use crate::error::{invalid, CliResult};
use crate::report::{Row, Table};

const IDENTITY_TOL: f64 = 1e-12;
const DEFAULT_GAMMA_INSTANCES: usize = 50;
const MAX_RATE: f64 = 2.0;
const LG_STREAM: u64 = 0x50;
const GAMMA_STREAM: u64 = 0x51;

pub(crate) struct LgReduction {
    grid: TimeGrid,
    instances: usize,
    gamma_instances: usize,
    max_dim: usize,
    max_obs: usize,
    seed: u64,
}

impl LgReduction {
    pub(crate) fn prepare(cfg: &ScenarioConfig) -> CliResult<Self> {
        let c = cfg.corpus()?;
        if c.max_dim == 0 || c.max_obs == 0 {
            return Err(invalid("corpus dimensions must be positive"));
        }
        Ok(Self {
            grid: cfg.time_grid()?,
            instances: c.instances,
            gamma_instances: c.gamma_instances.unwrap_or(DEFAULT_GAMMA_INSTANCES),
            max_dim: c.max_dim,
            max_obs: c.max_obs,
            seed: cfg.seed,
        })
    }
}

impl Scenario for LgReduction {
    fn run(&self) -> CliResult<ScenarioOutput> {
        let mut out = ScenarioOutput::default();

        let mut gamma = Table::new("carre_du_champ.csv", ["instance", "d", "identity_residual", "min_gamma"]);
        let mut corpus = Corpus::new(self.seed, GAMMA_STREAM);
        let (mut worst, mut lowest) = (0.0_f64, f64::INFINITY);
        for i in 0..self.gamma_instances {
            let d = corpus.dim(2, self.max_dim.max(2));
            let rate = corpus.rate_matrix(d, MAX_RATE);
            let f = corpus.normal_vector(d);
            let hmm = FiniteHmm::new(rate, DMatrix::zeros(d, 1), DMatrix::identity(1, 1), DVector::from_element(d, 1.0 / d as f64))?;
            let g = carre_du_champ(&hmm, &f)?;
            // 𝒜(f²) − 2f·𝒜f with the rate matrix acting on functions.
            let definitional = &hmm.rate * f.component_mul(&f) - 2.0 * f.component_mul(&(&hmm.rate * &f));
            let residual = (&g - definitional).amax();
            worst = worst.max(residual);
            lowest = lowest.min(g.min());
            gamma.push(vec![i as f64, d as f64, residual, g.min()]);
        }
        out.rows.push(Row::at_most("gamma_identity", 0.0, worst, IDENTITY_TOL));
        out.rows.push(Row::at_most("gamma_nonnegative", 0.0, -lowest, 0.0));
        out.tables.push(gamma);

        let mut lg = Table::new("lg_reduction.csv", ["instance", "d", "m", "residual"]);
        let mut corpus = Corpus::new(self.seed, LG_STREAM);
        for i in 0..self.instances {
            let d = corpus.dim(1, self.max_dim);
            let m = corpus.dim(1, self.max_obs);
            let p = corpus.dim(1, d);
            let model = LinearGaussianModel::new(
                corpus.uniform_matrix(d, d, -1.0, 1.0),
                corpus.uniform_matrix(d, m, -1.0, 1.0),
                corpus.uniform_matrix(d, p, -1.0, 1.0),
                corpus.spd(m, 0.1),
                corpus.normal_vector(d),
                corpus.spd(d, 0.1),
            )?;
            let f = corpus.normal_vector(d);
            let level = corpus.normal_vector(m);
            let slope = corpus.normal_vector(m);
            let u = ControlPath::from_fn(self.grid, |t| &level + &slope * t);
            let residual = lg_reduction_check(&model, &f, &u, &self.grid)?;
            lg.push(vec![i as f64, d as f64, m as f64, residual]);
            out.rows.push(Row::at_most(label("lg_reduction", &[&i.to_string()]), 0.0, residual, IDENTITY_TOL));
        }
        out.tables.push(lg);
        Ok(out)
    }
}
