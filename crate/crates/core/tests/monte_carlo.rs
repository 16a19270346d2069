//! Statistical oracles with pinned seeds.

use duality_core::duality_engine::{filter_lower_bound_check, hmm_dual_cost, verify_duality_principle, Verdict};
use duality_core::finite_hmm::{
    conditional_mse_mc, forward_kolmogorov, sample_ctmc, simulate_observations, zakai_filter, FiniteHmm,
};
use duality_core::linear_gaussian::{dual_lq_optimal, lg_mse_mc, mv_cost, LinearGaussianModel};
use duality_core::numkit::{ControlPath, McEstimate, SeededRng, TimeGrid};
use nalgebra::{DMatrix, DVector};

fn chain(l12: f64, l21: f64, h: [f64; 2], r: f64, prior: [f64; 2]) -> FiniteHmm<f64> {
    FiniteHmm::new(
        DMatrix::from_row_slice(2, 2, &[-l12, l12, l21, -l21]),
        DMatrix::from_row_slice(2, 1, &h),
        DMatrix::from_element(1, 1, r),
        DVector::from_row_slice(&prior),
    )
    .unwrap()
}

fn within(est: &McEstimate<f64>, target: f64) -> bool {
    (est.mean - target).abs() <= 3.0 * est.se
}

#[test]
fn occupancy_matches_stationary_law() {
    let hmm = chain(1.0, 1.0, [0.0, 1.0], 1.0, [1.0, 0.0]);
    let rng = SeededRng::new(17);
    let fractions: Vec<f64> = (0..1000)
        .map(|p| sample_ctmc(&hmm, 200.0, &rng.substream(p)).occupation(2)[0] / 200.0)
        .collect();
    let est = McEstimate::from_samples(&fractions);
    assert!(within(&est, 0.5), "{est:?}");
}

#[test]
fn observation_rate_of_frozen_chain() {
    let hmm = chain(0.0, 0.0, [0.0, 1.7], 0.4, [0.0, 1.0]);
    let grid = TimeGrid::new(0.0, 100.0, 100_000).unwrap();
    let path = sample_ctmc(&hmm, 100.0, &SeededRng::new(1));
    let z = simulate_observations(&hmm, &path, &grid, &SeededRng::new(2)).unwrap();
    let rates: Vec<f64> = z.rates().iter().map(|v| v[0]).collect();
    let est = McEstimate::from_samples(&rates);
    assert!(within(&est, 1.7), "{est:?}");
}

#[test]
fn filter_mean_is_the_marginal_law() {
    let mut hmm = chain(1.0, 1.0, [0.0, 1.0], 1.0, [0.8, 0.2]);
    hmm.prior = DVector::from_vec(vec![0.8, 0.2]);
    let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
    let mu = forward_kolmogorov(&hmm, &grid).unwrap();
    let rng = SeededRng::new(99);
    let paths: Vec<_> = (0..10_000u64)
        .map(|p| {
            let g = rng.substream(p);
            let path = sample_ctmc(&hmm, 1.0, &g.substream(0));
            let z = simulate_observations(&hmm, &path, &grid, &g.substream(1)).unwrap();
            zakai_filter(&hmm, &z).unwrap().normalized
        })
        .collect();
    for k in [10, 50, 100] {
        let first: Vec<f64> = paths.iter().map(|p| p[k][0]).collect();
        let est = McEstimate::from_samples(&first);
        assert!(within(&est, mu[k][0]), "node {k}: {est:?} vs {}", mu[k][0]);
    }
}

#[test]
fn strong_signal_identifies_frozen_state() {
    let hmm = chain(0.0, 0.0, [0.0, 1.0], 1.0, [0.5, 0.5]);
    let grid = TimeGrid::new(0.0, 50.0, 5000).unwrap();
    let rng = SeededRng::new(5);
    let n = 1000;
    let hits = (0..n)
        .filter(|&p| {
            let g = rng.substream(p);
            let path = sample_ctmc(&hmm, 50.0, &g.substream(0));
            let z = simulate_observations(&hmm, &path, &grid, &g.substream(1)).unwrap();
            let pi = zakai_filter(&hmm, &z).unwrap();
            pi.terminal()[path.terminal_state()] > 0.99
        })
        .count();
    assert!(hits as f64 / n as f64 > 0.99, "{hits}/{n}");
}

#[test]
fn near_perfect_observation_has_no_filter_error() {
    let hmm = chain(1.0, 1.0, [0.0, 1.0], 1e-6, [0.5, 0.5]);
    let grid = TimeGrid::new(0.0, 1.0, 1000).unwrap();
    let est = conditional_mse_mc(&hmm, &DVector::from_vec(vec![0.0, 1.0]), &grid, 500, &SeededRng::new(8)).unwrap();
    assert!(est.mean <= 3.0 * est.se + 1e-3, "{est:?}");
}

#[test]
fn filter_error_is_reproducible() {
    let hmm = chain(1.0, 2.0, [0.0, 1.0], 1.0, [0.5, 0.5]);
    let grid = TimeGrid::new(0.0, 1.0, 100).unwrap();
    let f = DVector::from_vec(vec![0.0, 1.0]);
    let a = conditional_mse_mc(&hmm, &f, &grid, 300, &SeededRng::new(3)).unwrap();
    let b = conditional_mse_mc(&hmm, &f, &grid, 300, &SeededRng::new(3)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn hmm_duality_static_case() {
    let hmm = chain(0.0, 0.0, [0.0, 0.0], 1.0, [0.5, 0.5]);
    let grid = TimeGrid::new(0.0, 1.0, 50).unwrap();
    let f = DVector::from_vec(vec![0.0, 1.0]);
    let r = verify_duality_principle(&hmm, &ControlPath::zero(grid, 1), &f, &grid, 5000, &SeededRng::new(21)).unwrap();
    assert_eq!(r.j_exact, 0.25);
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
}

#[test]
fn hmm_duality_with_control() {
    let hmm = chain(1.0, 1.0, [0.0, 1.0], 1.0, [0.5, 0.5]);
    let grid = TimeGrid::new(0.0, 1.0, 400).unwrap();
    let f = DVector::from_vec(vec![0.0, 1.0]);
    let u = ControlPath::from_fn(grid, |t| DVector::from_element(1, 0.8 * (1.0 - t)));
    let r = verify_duality_principle(&hmm, &u, &f, &grid, 20_000, &SeededRng::new(22)).unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
}

#[test]
fn blind_filter_error_is_the_marginal_variance() {
    let hmm = chain(1.0, 2.0, [0.0, 0.0], 1.0, [0.9, 0.1]);
    let grid = TimeGrid::new(0.0, 1.0, 200).unwrap();
    let f = DVector::from_vec(vec![0.0, 1.0]);
    let mu_t = forward_kolmogorov(&hmm, &grid).unwrap()[200].clone();
    let var = mu_t[1] * (1.0 - mu_t[1]);
    let j0 = hmm_dual_cost(&hmm, &ControlPath::zero(grid, 1), &f, &grid).unwrap();
    // Both sides carry O(dt⁴) discretisation error.
    assert!((j0 - var).abs() < 1e-8, "{j0} vs {var}");
    let report = filter_lower_bound_check(&hmm, &f, &grid, &[ControlPath::zero(grid, 1)], 20_000, &SeededRng::new(4)).unwrap();
    assert!(within(&report.filter_mse, var), "{report:?}");
    assert_eq!(report.verdict, Verdict::Pass);
}

#[test]
fn lg_dual_cost_is_the_estimator_error() {
    let model = LinearGaussianModel::scalar(-0.3, 0.8, 1.2, 0.6, 0.4, 1.5).unwrap();
    let grid = TimeGrid::new(0.0, 1.0, 500).unwrap();
    let f = DVector::from_element(1, 1.0);
    let opt = dual_lq_optimal(&model, &f, &grid).unwrap();
    let controls = [opt.u_path.clone(), ControlPath::constant(grid, DVector::from_element(1, 0.3))];
    let mc = lg_mse_mc(&model, &f, &controls, &grid, 20_000, &SeededRng::new(12)).unwrap();
    for (u, est) in controls.iter().zip(&mc) {
        let j = mv_cost(&model, u, &f, &grid).unwrap();
        assert!(within(est, j), "{est:?} vs {j}");
    }
    assert!(mc[0].mean < mc[1].mean);
}
