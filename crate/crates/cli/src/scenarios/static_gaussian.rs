//! Minimum-variance vs maximum-likelihood estimates of a Gaussian vector.

use duality_core::linear_gaussian::{static_ml, static_mv};
use nalgebra::{DMatrix, DVector};

use super::random::Corpus;
use super::{label, Scenario, ScenarioOutput};
use crate::config::ScenarioConfig;
use crate::error::{invalid, CliResult};
use crate::report::{Row, Table};

const MV_ML_TOL: f64 = 1e-10;
const CORPUS_STREAM: u64 = 0x20;

pub(crate) struct StaticGaussian {
    instances: usize,
    max_dim: usize,
    max_obs: usize,
    seed: u64,
}

impl StaticGaussian {
    pub(crate) fn prepare(cfg: &ScenarioConfig) -> CliResult<Self> {
        let c = cfg.corpus()?;
        if c.instances == 0 || c.max_dim == 0 || c.max_obs == 0 {
            return Err(invalid("corpus sizes must be positive"));
        }
        Ok(Self { instances: c.instances, max_dim: c.max_dim, max_obs: c.max_obs, seed: cfg.seed })
    }
}

impl Scenario for StaticGaussian {
    fn run(&self) -> CliResult<ScenarioOutput> {
        let mut out = ScenarioOutput::default();
        let mut table = Table::new("static_gaussian.csv", ["instance", "d", "m", "max_abs_diff"]);
        let mut corpus = Corpus::new(self.seed, CORPUS_STREAM);
        let mut worst = 0.0_f64;
        for i in 0..self.instances {
            let d = corpus.dim(1, self.max_dim);
            let m = corpus.dim(1, self.max_obs);
            let m0 = corpus.normal_vector(d);
            let sigma0 = corpus.spd(d, 0.1);
            let h = corpus.normal_matrix(d, m);
            let r = corpus.spd(m, 0.1);
            let z = corpus.normal_vector(m);
            let mv = static_mv(&m0, &sigma0, &h, &r, &z)?;
            let ml = static_ml(&m0, &sigma0, &h, &r, &z)?;
            let diff = (mv - ml).amax();
            worst = worst.max(diff);
            table.push(vec![i as f64, d as f64, m as f64, diff]);
            out.rows.push(Row::at_most(label("mv_vs_ml", &[&i.to_string()]), 0.0, diff, MV_ML_TOL));
        }
        out.rows.insert(0, Row::at_most("mv_vs_ml", 0.0, worst, MV_ML_TOL));

        // m₀ = 0, Σ₀ = H = R = 1, z = 2: both estimates are Σ₀H(HᵀΣ₀H + R)⁻¹z = 1.
        let one = DMatrix::from_element(1, 1, 1.0);
        let z = DVector::from_element(1, 2.0);
        let mv = static_mv(&DVector::zeros(1), &one, &one, &one, &z)?[0];
        let ml = static_ml(&DVector::zeros(1), &one, &one, &one, &z)?[0];
        out.rows.push(Row::absolute("scalar_hand_value[mv]", 1.0, mv, MV_ML_TOL));
        out.rows.push(Row::absolute("scalar_hand_value[ml]", 1.0, ml, MV_ML_TOL));
        out.tables.push(table);
        Ok(out)
    }
}
