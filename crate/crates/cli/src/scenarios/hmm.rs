//! Finite-state HMM scenarios: duality principle, filter lower bound,
//! observability.

use duality_core::duality_engine::{
    filter_lower_bound_check, hmm_dual_cost, hmm_observability_test, verify_duality_principle, verify_duality_principle_many,
    DualityReport,
};
use duality_core::finite_hmm::{conditional_mse_mc, forward_kolmogorov, zakai_filter_from, FiniteHmm};
use duality_core::numkit::{matrix_rank, sample_gaussian_increments, ControlPath, ObservationPath, SeededRng, TimeGrid};
use nalgebra::{DMatrix, DVector};

use super::controls::check_controls;
use super::{build_controls, label, Scenario, ScenarioOutput};
use crate::config::{ControlSpec, HmmCase, ScenarioConfig};
use crate::error::{invalid, CliResult};
use crate::report::{indexed, Row, Table};

const EXACT_TOL: f64 = 1e-12;
const BLIND_COST_TOL: f64 = 1e-8;
/// Paths for the constant-terminal Monte-Carlo check, whose samples are all zero.
const CONSTANT_TERMINAL_PATHS: usize = 1000;
const CONSTANT_TERMINAL_LEVEL: f64 = 1.75;

const HMM_DUALITY_STREAM: u64 = 0x30;
const LOWER_BOUND_STREAM: u64 = 0x31;
const BLIND_STREAM: u64 = 0x32;
const OBSERVABILITY_STREAM: u64 = 0x33;

fn variance(mu: &DVector<f64>, f: &DVector<f64>) -> f64 {
    let mean = mu.dot(f);
    (mu.dot(&f.component_mul(f)) - mean * mean).max(0.0)
}

/// Same prior and dimensions, no observation signal; `frozen` also stops the chain.
fn blind(hmm: &FiniteHmm, frozen: bool) -> FiniteHmm {
    let d = hmm.dim();
    FiniteHmm {
        rate: if frozen { DMatrix::zeros(d, d) } else { hmm.rate.clone() },
        h_mat: DMatrix::zeros(d, hmm.obs_dim()),
        r_cov: hmm.r_cov.clone(),
        prior: hmm.prior.clone(),
    }
}

struct HmmSetup {
    hmm: FiniteHmm,
    grid: TimeGrid,
    probes: Vec<DVector<f64>>,
    controls: Vec<ControlSpec>,
    n_paths: usize,
    seed: u64,
}

impl HmmSetup {
    fn prepare(cfg: &ScenarioConfig) -> CliResult<Self> {
        let hmm = cfg.hmm_model()?;
        check_controls(&cfg.controls, hmm.obs_dim(), false)?;
        Ok(Self {
            grid: cfg.time_grid()?,
            probes: cfg.probe_vectors(hmm.dim())?,
            controls: cfg.controls.clone(),
            n_paths: cfg.n_paths()?,
            seed: cfg.seed,
            hmm,
        })
    }

    fn controls(&self) -> CliResult<Vec<(String, ControlPath)>> {
        build_controls(&self.controls, &self.grid, self.hmm.obs_dim(), None)
    }
}

pub(crate) struct HmmDuality(HmmSetup);

impl HmmDuality {
    pub(crate) fn prepare(cfg: &ScenarioConfig) -> CliResult<Self> {
        HmmSetup::prepare(cfg).map(Self)
    }
}

impl Scenario for HmmDuality {
    fn run(&self) -> CliResult<ScenarioOutput> {
        let s = &self.0;
        let mut out = ScenarioOutput::default();
        let root = SeededRng::with_stream(s.seed, HMM_DUALITY_STREAM);
        let controls = s.controls()?;
        let paths: Vec<ControlPath> = controls.iter().map(|(_, u)| u.clone()).collect();
        let mut costs = Table::new("dual_costs.csv", ["probe", "control", "j_exact", "mse_mc", "mse_se", "z"]);
        for (pi, f) in s.probes.iter().enumerate() {
            let tag = format!("f{pi}");
            let reports = verify_duality_principle_many(&s.hmm, &paths, f, &s.grid, s.n_paths, &root.substream(pi as u64))?;
            for (ci, ((name, _), rep)) in controls.iter().zip(&reports).enumerate() {
                out.rows.push(Row::statistical(label("mse", &[&tag, name]), rep));
                costs.push(vec![pi as f64, ci as f64, rep.j_exact, rep.mse_mc, rep.mse_se, rep.z_score]);
            }
        }
        out.tables.push(costs);

        let zero = ControlPath::zero(s.grid, s.hmm.obs_dim());
        let f = &s.probes[0];
        let frozen = blind(&s.hmm, true);
        let j_frozen = hmm_dual_cost(&frozen, &zero, f, &s.grid)?;
        out.rows.push(Row::absolute("frozen_blind_variance", variance(&s.hmm.prior, f), j_frozen, EXACT_TOL));

        let constant = DVector::from_element(s.hmm.dim(), CONSTANT_TERMINAL_LEVEL);
        let j_const = hmm_dual_cost(&s.hmm, &zero, &constant, &s.grid)?;
        out.rows.push(Row::absolute("constant_terminal", 0.0, j_const, EXACT_TOL));
        let rep = verify_duality_principle(
            &s.hmm,
            &zero,
            &constant,
            &s.grid,
            CONSTANT_TERMINAL_PATHS.min(s.n_paths),
            &root.substream(u64::MAX),
        )?;
        out.rows.push(Row::absolute("constant_terminal_mse", 0.0, rep.mse_mc, EXACT_TOL));

        let marginals = forward_kolmogorov(&s.hmm, &s.grid)?;
        let d = s.hmm.dim();
        let mut table = Table::new("marginals.csv", std::iter::once("t".to_string()).chain(indexed("mu", d)));
        for (t, mu) in s.grid.times().zip(&marginals) {
            table.push(std::iter::once(t).chain(mu.iter().copied()).collect());
        }
        out.tables.push(table);
        Ok(out)
    }
}

pub(crate) struct HmmLowerBound(HmmSetup);

impl HmmLowerBound {
    pub(crate) fn prepare(cfg: &ScenarioConfig) -> CliResult<Self> {
        HmmSetup::prepare(cfg).map(Self)
    }
}

impl Scenario for HmmLowerBound {
    fn run(&self) -> CliResult<ScenarioOutput> {
        let s = &self.0;
        let mut out = ScenarioOutput::default();
        let controls = s.controls()?;
        let paths: Vec<ControlPath> = controls.iter().map(|(_, u)| u.clone()).collect();
        let mut table = Table::new("lower_bound.csv", ["probe", "control", "j_exact", "filter_mse", "filter_se", "slack"]);
        let root = SeededRng::with_stream(s.seed, LOWER_BOUND_STREAM);
        for (pi, f) in s.probes.iter().enumerate() {
            let tag = format!("f{pi}");
            let rep = filter_lower_bound_check(&s.hmm, f, &s.grid, &paths, s.n_paths, &root.substream(pi as u64))?;
            let (mse, se) = (rep.filter_mse.mean, rep.filter_mse.se);
            for (ci, ((name, _), row)) in controls.iter().zip(&rep.rows).enumerate() {
                let mut r = Row::at_most(label("filter_le_J", &[&tag, name]), row.j_exact, mse, 3.0 * se);
                r.se = Some(crate::report::num(se));
                out.rows.push(r);
                table.push(vec![pi as f64, ci as f64, row.j_exact, mse, se, row.slack]);
            }
        }
        out.tables.push(table);

        // Without observations the filter is the forward-Kolmogorov marginal,
        // so its error is exactly Var_{μ_T}(f) and u = 0 is optimal. The
        // tilted prior moves half the mass onto state 0, so the check is not
        // trivially stationary.
        let blind_hmm = blind(&s.hmm, false);
        let mut tilted = blind_hmm.clone();
        tilted.prior *= 0.5;
        tilted.prior[0] += 0.5;
        let blind_root = SeededRng::with_stream(s.seed, BLIND_STREAM);
        let zero = ControlPath::zero(s.grid, s.hmm.obs_dim());
        for (vi, (variant, model)) in [("prior", &blind_hmm), ("tilted", &tilted)].into_iter().enumerate() {
            let mu_t = forward_kolmogorov(model, &s.grid)?.pop().expect("grid has nodes");
            for (pi, f) in s.probes.iter().enumerate() {
                let tag = format!("f{pi}");
                let var = variance(&mu_t, f);
                let stream = blind_root.substream(vi as u64).substream(pi as u64);
                let mc = conditional_mse_mc(model, f, &s.grid, s.n_paths, &stream)?;
                out.rows.push(Row::statistical(label("blind_filter_vs_variance", &[&tag, variant]), &DualityReport::new(var, mc)));
                let j0 = hmm_dual_cost(model, &zero, f, &s.grid)?;
                out.rows.push(Row::absolute(label("blind_J0_vs_variance", &[&tag, variant]), var, j0, BLIND_COST_TOL));
            }
        }
        Ok(out)
    }
}

/// Paths, steps and horizon of the brute-force distinguishability probe.
const PROBE_PATHS: u64 = 3;
const PROBE_STEPS: usize = 200;
const PROBE_HORIZON: f64 = 1.0;
const PROBE_RANK_TOL: f64 = 1e-9;

/// Rank of the linear map `μ ↦ (σ_t^μ(1), σ_t^μ(h_j))` sampled over grid
/// nodes of a few seeded observation paths. Two priors give the same
/// observation law only if their difference lies in its kernel, and the
/// constant row always appears (at `t = 0`), so full rank means every pair
/// of priors is distinguished.
fn brute_force_rank(hmm: &FiniteHmm, seed: u64) -> CliResult<usize> {
    let d = hmm.dim();
    let m = hmm.obs_dim();
    let grid = TimeGrid::new(0.0, PROBE_HORIZON, PROBE_STEPS)?;
    let root = SeededRng::with_stream(seed, OBSERVABILITY_STREAM);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for p in 0..PROBE_PATHS {
        // Observation paths are arbitrary here: the map is linear in μ for each
        // fixed path, so pure noise increments exercise it as well as any.
        let increments = sample_gaussian_increments(&root.substream(p), &grid, &DMatrix::identity(m, m))?;
        let zpath = ObservationPath::new(grid, increments)?;
        let per_state = (0..d)
            .map(|i| zakai_filter_from(hmm, &DVector::from_fn(d, |r, _| if r == i { 1.0 } else { 0.0 }), &zpath))
            .collect::<Result<Vec<_>, _>>()?;
        for k in 0..grid.len() {
            rows.push(per_state.iter().map(|b| b.unnormalized[k].sum()).collect());
            for j in 0..m {
                let h = hmm.h_mat.column(j);
                rows.push(per_state.iter().map(|b| b.unnormalized[k].dot(&h)).collect());
            }
        }
    }
    let mat = DMatrix::from_fn(rows.len(), d, |r, c| rows[r][c]);
    Ok(matrix_rank(&mat, PROBE_RANK_TOL))
}

pub(crate) struct HmmObservability {
    cases: Vec<(HmmCase, FiniteHmm)>,
    seed: u64,
}

impl HmmObservability {
    pub(crate) fn prepare(cfg: &ScenarioConfig) -> CliResult<Self> {
        if cfg.cases.is_empty() {
            return Err(invalid("hmm-observability needs at least one [[cases]] entry"));
        }
        let cases = cfg.cases.iter().map(|c| Ok((c.clone(), c.build()?))).collect::<CliResult<Vec<_>>>()?;
        Ok(Self { cases, seed: cfg.seed })
    }
}

impl Scenario for HmmObservability {
    fn run(&self) -> CliResult<ScenarioOutput> {
        let mut out = ScenarioOutput::default();
        let mut table = Table::new(
            "observability.csv",
            ["case", "d", "span_dim", "closure_observable", "brute_force_rank", "brute_force_observable", "deterministic_reachable_dim"],
        );
        for (i, (case, hmm)) in self.cases.iter().enumerate() {
            let closure = hmm_observability_test(hmm);
            let rank = brute_force_rank(hmm, self.seed)?;
            let distinguishable = rank == hmm.dim();
            // The closure verdict is a sufficient condition: "false" means not shown observable.
            out.rows.push(Row::equal(label("closure_sufficient_vs_brute_force", &[&case.name]), distinguishable, closure.observable));
            table.push(vec![
                i as f64,
                hmm.dim() as f64,
                closure.span_dim as f64,
                f64::from(u8::from(closure.observable)),
                rank as f64,
                f64::from(u8::from(distinguishable)),
                closure.deterministic_reachable_dim as f64,
            ]);
        }
        out.tables.push(table);
        Ok(out)
    }
}
