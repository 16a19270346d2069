//! Linear-Gaussian scenarios: duality principle, filter from the dual, RTS.

use duality_core::duality_engine::verify_lg_duality;
use duality_core::linear_gaussian::reference::discrete_least_squares;
use duality_core::linear_gaussian::{
    dual_lq_optimal, filter_from_dual, kalman_bucy, mv_cost, rts_smooth, simulate_lg, solve_dre,
    LinearGaussianModel,
};
use duality_core::numkit::{SeededRng, TimeGrid};
use nalgebra::DVector;

use super::controls::check_controls;
use super::{build_controls, label, Scenario, ScenarioOutput};
use crate::config::{ControlSpec, ScenarioConfig};
use crate::error::{invalid, CliResult};
use crate::report::{indexed, Row, Table};

const RICCATI_REL_TOL: f64 = 1e-6;
const REFERENCE_DT: f64 = 1e-4;
const DUAL_FILTER_TOL: f64 = 1e-3;
const OPTIMALITY_SLACK: f64 = 1e-9;

/// Stream tags keep the Monte-Carlo runs of different scenarios apart.
const LG_DUALITY_STREAM: u64 = 0x10;
const LG_FILTER_STREAM: u64 = 0x11;
const RTS_STREAM: u64 = 0x12;

fn matrix_columns(prefix: &str, d: usize) -> Vec<String> {
    (0..d).flat_map(|i| (0..d).map(move |j| format!("{prefix}[{i},{j}]"))).collect()
}

pub(crate) struct LgDuality {
    model: LinearGaussianModel,
    grid: TimeGrid,
    fine: TimeGrid,
    probes: Vec<DVector<f64>>,
    controls: Vec<ControlSpec>,
    n_paths: usize,
    seed: u64,
}

impl LgDuality {
    pub(crate) fn prepare(cfg: &ScenarioConfig) -> CliResult<Self> {
        let model = cfg.lg_model()?;
        let grid = cfg.time_grid()?;
        let fine_steps = match cfg.grid.as_ref().and_then(|g| g.fine_steps) {
            Some(n) => n,
            None => (grid.span() / REFERENCE_DT).round().max(1.0) as usize,
        };
        let fine = TimeGrid::new(0.0, grid.t1(), fine_steps).map_err(|e| invalid(format!("grid.fine_steps: {e}")))?;
        check_controls(&cfg.controls, model.obs_dim(), true)?;
        Ok(Self {
            probes: cfg.probe_vectors(model.dim())?,
            n_paths: cfg.n_paths()?,
            controls: cfg.controls.clone(),
            seed: cfg.seed,
            model,
            grid,
            fine,
        })
    }
}

impl Scenario for LgDuality {
    fn run(&self) -> CliResult<ScenarioOutput> {
        let mut out = ScenarioOutput::default();
        let d = self.model.dim();
        let m = self.model.obs_dim();
        let root = SeededRng::with_stream(self.seed, LG_DUALITY_STREAM);

        let sigmas = solve_dre(&self.model, &self.grid)?;
        let mut riccati = Table::new("riccati.csv", std::iter::once("t".to_string()).chain(matrix_columns("Sigma", d)));
        for (t, s) in self.grid.times().zip(&sigmas) {
            riccati.push(std::iter::once(t).chain(s.transpose().iter().copied()).collect());
        }
        out.tables.push(riccati);
        let sigma_t_fine = solve_dre(&self.model, &self.fine)?.pop().expect("grid has nodes");

        for (pi, f) in self.probes.iter().enumerate() {
            let tag = format!("f{pi}");
            let optimal = dual_lq_optimal(&self.model, f, &self.grid)?;
            let controls = build_controls(&self.controls, &self.grid, m, Some(&optimal.u_path))?;
            let paths: Vec<_> = controls.iter().map(|(_, u)| u.clone()).collect();
            let reports = verify_lg_duality(&self.model, &paths, f, &self.grid, self.n_paths, &root.substream(pi as u64))?;
            for ((name, _), rep) in controls.iter().zip(&reports) {
                out.rows.push(Row::statistical(label("mse", &[&tag, name]), rep));
            }

            let reference = dual_lq_optimal(&self.model, f, &self.fine)?;
            let riccati_value = f.dot(&(&sigma_t_fine * f));
            out.rows.push(Row::relative(label("optimal_cost_vs_riccati", &[&tag]), riccati_value, reference.cost, RICCATI_REL_TOL));

            for (name, u) in &controls {
                let j = mv_cost(&self.model, u, f, &self.grid)?;
                out.rows.push(Row::at_most(label("optimality", &[&tag, name]), j, optimal.cost, OPTIMALITY_SLACK * (1.0 + j.abs())));
            }

            let mut dual = Table::new(
                format!("dual_optimal_{tag}.csv"),
                std::iter::once("t".to_string()).chain(indexed("y", d)).chain(indexed("u", m)),
            );
            for (k, t) in self.grid.times().enumerate() {
                dual.push(
                    std::iter::once(t)
                        .chain(optimal.y_path[k].iter().copied())
                        .chain(optimal.u_path.values[k].iter().copied())
                        .collect(),
                );
            }
            out.tables.push(dual);
        }
        Ok(out)
    }
}

pub(crate) struct LgDualFilter {
    model: LinearGaussianModel,
    grid: TimeGrid,
    probes: Vec<DVector<f64>>,
    n_paths: usize,
    seed: u64,
}

impl LgDualFilter {
    pub(crate) fn prepare(cfg: &ScenarioConfig) -> CliResult<Self> {
        let model = cfg.lg_model()?;
        Ok(Self {
            grid: cfg.time_grid()?,
            probes: cfg.probe_vectors(model.dim())?,
            n_paths: cfg.n_paths()?,
            seed: cfg.seed,
            model,
        })
    }
}

impl Scenario for LgDualFilter {
    fn run(&self) -> CliResult<ScenarioOutput> {
        let mut out = ScenarioOutput::default();
        let root = SeededRng::with_stream(self.seed, LG_FILTER_STREAM);
        let mut table = Table::new("dual_filter.csv", ["path", "probe", "kalman", "dual", "abs_diff"]);
        for p in 0..self.n_paths {
            let sample = simulate_lg(&self.model, &self.grid, &root.substream(p as u64))?;
            let kb = kalman_bucy(&self.model, &sample.observations)?;
            for (pi, f) in self.probes.iter().enumerate() {
                let kalman = f.dot(kb.terminal_mean());
                let dual = filter_from_dual(&self.model, f, &sample.observations)?;
                table.push(vec![p as f64, pi as f64, kalman, dual, (dual - kalman).abs()]);
                out.rows.push(Row::absolute(
                    label("dual_vs_kalman", &[&format!("path{p}"), &format!("f{pi}")]),
                    kalman,
                    dual,
                    DUAL_FILTER_TOL,
                ));
            }
        }
        out.tables.push(table);
        Ok(out)
    }
}

pub(crate) struct RtsVsLsq {
    model: LinearGaussianModel,
    grid: TimeGrid,
    n_paths: usize,
    seed: u64,
}

impl RtsVsLsq {
    pub(crate) fn prepare(cfg: &ScenarioConfig) -> CliResult<Self> {
        let model = cfg.lg_model()?;
        if model.sigma0.clone().cholesky().is_none() {
            return Err(invalid("rts-vs-lsq needs a nonsingular prior covariance"));
        }
        Ok(Self { grid: cfg.time_grid()?, n_paths: cfg.n_paths()?, seed: cfg.seed, model })
    }

    /// Max-norm tolerance: `1e−3` in one dimension, `5e−3` otherwise.
    fn tolerance(&self) -> f64 {
        if self.model.dim() == 1 {
            1e-3
        } else {
            5e-3
        }
    }
}

impl Scenario for RtsVsLsq {
    fn run(&self) -> CliResult<ScenarioOutput> {
        let mut out = ScenarioOutput::default();
        let d = self.model.dim();
        let root = SeededRng::with_stream(self.seed, RTS_STREAM);
        let mut errors = Table::new("rts_vs_lsq.csv", ["path", "max_abs_diff"]);
        for p in 0..self.n_paths {
            let sample = simulate_lg(&self.model, &self.grid, &root.substream(p as u64))?;
            let zdot = sample.observations.rates();
            let smooth = rts_smooth(&self.model, &self.grid, &zdot)?;
            let oracle = discrete_least_squares(&self.model, &self.grid, &zdot)?;
            let worst = smooth
                .xopt
                .iter()
                .zip(&oracle)
                .map(|(a, b)| (a - b).amax())
                .fold(0.0, f64::max);
            errors.push(vec![p as f64, worst]);
            out.rows.push(Row::at_most(label("max_norm", &[&format!("path{p}")]), 0.0, worst, self.tolerance()));

            if p == 0 {
                let mut traj = Table::new(
                    "smoothed_path0.csv",
                    std::iter::once("t".to_string())
                        .chain(indexed("xhat", d))
                        .chain(indexed("xopt", d))
                        .chain(indexed("lsq", d)),
                );
                for (k, t) in self.grid.times().enumerate() {
                    traj.push(
                        std::iter::once(t)
                            .chain(smooth.xhat[k].iter().copied())
                            .chain(smooth.xopt[k].iter().copied())
                            .chain(oracle[k].iter().copied())
                            .collect(),
                    );
                }
                out.tables.push(traj);
            }
        }
        out.tables.push(errors);
        Ok(out)
    }
}
