use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;

use super::FiniteHmm;
use crate::error::{Error, Result};
use crate::numkit::{GaussianSampler, ObservationPath, SeededRng, TimeGrid};
use crate::scalar::Scalar;

/// Piecewise-constant state trajectory on `[0, horizon]`.
///
/// The chain sits in `states[i]` on `[times[i], times[i+1])`, the last
/// interval running to `horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpPath<T: Scalar = f64> {
    pub times: Vec<T>,
    pub states: Vec<usize>,
    pub horizon: T,
}

impl<T: Scalar> JumpPath<T> {
    /// State occupied at time `t` (right-continuous).
    pub fn state_at(&self, t: T) -> usize {
        let i = self.times.partition_point(|&s| s <= t);
        self.states[i.saturating_sub(1)]
    }

    pub fn terminal_state(&self) -> usize {
        *self.states.last().expect("jump path has at least one state")
    }

    pub fn n_jumps(&self) -> usize {
        self.states.len() - 1
    }

    /// Time spent in each state over `[0, horizon]`.
    pub fn occupation(&self, d: usize) -> Vec<T> {
        let mut occ = vec![T::zero(); d];
        for (i, &x) in self.states.iter().enumerate() {
            let end = self.times.get(i + 1).copied().unwrap_or(self.horizon);
            occ[x] += end - self.times[i];
        }
        occ
    }
}

fn categorical<R: Rng + ?Sized>(rng: &mut R, weights: impl Iterator<Item = f64> + Clone) -> usize {
    let total: f64 = weights.clone().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
            acc += w;
            if target < acc {
                return i;
            }
        }
    }
    last
}

/// Exact simulation: exponential holding times at rate `−A(x,x)`, jumps to
/// `y ≠ x` with probability `A(x,y)/(−A(x,x))`; rows of zeros are absorbing.
pub fn sample_ctmc<T: Scalar>(hmm: &FiniteHmm<T>, horizon: T, rng: &SeededRng) -> JumpPath<T> {
    let mut gen = rng.stream();
    let d = hmm.dim();
    let horizon_f = horizon.to_f64_lossy();
    let mut state = categorical(&mut gen, hmm.prior.iter().map(|p| p.to_f64_lossy()));
    let mut times = vec![T::zero()];
    let mut states = vec![state];
    let mut now = 0.0;
    loop {
        let exit = hmm.exit_rate(state).to_f64_lossy();
        if exit <= 0.0 {
            break;
        }
        let hold: f64 = gen.sample::<f64, _>(Exp1) / exit;
        now += hold;
        if now >= horizon_f {
            break;
        }
        state = categorical(
            &mut gen,
            (0..d).map(|y| if y == state { 0.0 } else { hmm.rate[(state, y)].to_f64_lossy() }),
        );
        times.push(T::lit(now));
        states.push(state);
    }
    JumpPath { times, states, horizon }
}

fn check_covers<T: Scalar>(path: &JumpPath<T>, grid: &TimeGrid<T>) -> Result<()> {
    let slack = T::lit(1e-12) * (T::one() + path.horizon.abs());
    if grid.t1() > path.horizon + slack || grid.t0() < T::zero() {
        return Err(Error::PathTooShort { horizon: path.horizon.to_f64_lossy(), t1: grid.t1().to_f64_lossy() });
    }
    Ok(())
}

/// `ΔZ_k = h(X_{t_k}) dt + ΔW_k` with `ΔW_k ~ N(0, R dt)`, the state read at
/// the left endpoint. `R` may be zero here (noiseless observations).
pub fn simulate_observations<T: Scalar>(
    hmm: &FiniteHmm<T>,
    path: &JumpPath<T>,
    grid: &TimeGrid<T>,
    rng: &SeededRng,
) -> Result<ObservationPath<T>> {
    check_covers(path, grid)?;
    let noise = GaussianSampler::psd(&hmm.r_cov)?.scaled(grid.dt());
    let mut gen = rng.stream();
    let increments = (0..grid.n_steps())
        .map(|k| obs_increment(&hmm.h_mat, path.state_at(grid.time(k)), grid.dt(), &noise, &mut gen))
        .collect();
    ObservationPath::new(*grid, increments)
}

fn obs_increment<T: Scalar, R: Rng + ?Sized>(
    h_mat: &DMatrix<T>,
    x: usize,
    dt: T,
    noise: &GaussianSampler<T>,
    rng: &mut R,
) -> DVector<T> {
    let mut dz = h_mat.row(x).transpose() * dt;
    if !noise.is_degenerate() {
        dz += noise.sample(rng);
    }
    dz
}

/// Joint state/observation simulator shared by the Monte-Carlo routines.
///
/// For a path generator `g` the chain uses `g.substream(0)` and the
/// observation noise `g.substream(1)`, exactly as a caller composing
/// [`sample_ctmc`] and [`simulate_observations`] would.
pub(crate) struct HmmSimulator<'a, T: Scalar> {
    hmm: &'a FiniteHmm<T>,
    grid: TimeGrid<T>,
    noise: GaussianSampler<T>,
}

impl<'a, T: Scalar> HmmSimulator<'a, T> {
    pub(crate) fn new(hmm: &'a FiniteHmm<T>, grid: &TimeGrid<T>) -> Result<Self> {
        if grid.t0() < T::zero() {
            return Err(Error::InvalidGrid("HMM simulations start at a non-negative time".into()));
        }
        Ok(Self { hmm, grid: *grid, noise: GaussianSampler::psd(&hmm.r_cov)?.scaled(grid.dt()) })
    }

    /// Runs one path, handing `(k, X_{t_k}, ΔZ_k)` to `visit`; returns `X_T`.
    pub(crate) fn run(&self, rng: &SeededRng, mut visit: impl FnMut(usize, usize, &DVector<T>)) -> usize {
        let path = sample_ctmc(self.hmm, self.grid.t1(), &rng.substream(0));
        let mut gen = rng.substream(1).stream();
        let dt = self.grid.dt();
        for k in 0..self.grid.n_steps() {
            let x = path.state_at(self.grid.time(k));
            let dz = obs_increment(&self.hmm.h_mat, x, dt, &self.noise, &mut gen);
            visit(k, x, &dz);
        }
        path.terminal_state()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flip(rate: f64, h: [f64; 2], r: f64) -> FiniteHmm<f64> {
        FiniteHmm {
            rate: DMatrix::from_row_slice(2, 2, &[-rate, rate, rate, -rate]),
            h_mat: DMatrix::from_row_slice(2, 1, &h),
            r_cov: DMatrix::from_element(1, 1, r),
            prior: DVector::from_vec(vec![0.5, 0.5]),
        }
    }

    #[test]
    fn frozen_chain_never_jumps() {
        let path = sample_ctmc(&flip(0.0, [0.0, 1.0], 1.0), 10.0, &SeededRng::new(3));
        assert_eq!(path.n_jumps(), 0);
        assert_eq!(path.times, vec![0.0]);
    }

    #[test]
    fn jump_path_is_well_formed_and_deterministic() {
        let hmm = flip(2.0, [0.0, 1.0], 1.0);
        let a = sample_ctmc(&hmm, 20.0, &SeededRng::new(11));
        let b = sample_ctmc(&hmm, 20.0, &SeededRng::new(11));
        assert_eq!(a, b);
        assert!(a.n_jumps() > 5);
        assert!(a.times.windows(2).all(|w| w[0] < w[1]));
        assert!(*a.times.last().unwrap() < 20.0);
        assert!(a.states.windows(2).all(|w| w[0] != w[1]));
        let occ: f64 = a.occupation(2).iter().sum();
        assert!((occ - 20.0).abs() < 1e-12);
    }

    #[test]
    fn state_lookup_is_right_continuous() {
        let p = JumpPath { times: vec![0.0, 1.0, 2.5], states: vec![0, 1, 0], horizon: 4.0 };
        assert_eq!(p.state_at(0.0), 0);
        assert_eq!(p.state_at(0.999), 0);
        assert_eq!(p.state_at(1.0), 1);
        assert_eq!(p.state_at(2.5), 0);
        assert_eq!(p.state_at(4.0), 0);
    }

    #[test]
    fn noiseless_observations_are_exact() {
        let hmm = flip(1.0, [0.3, 2.0], 0.0);
        let grid = TimeGrid::<f64>::new(0.0, 5.0, 500).unwrap();
        let path = sample_ctmc(&hmm, 5.0, &SeededRng::new(1));
        let z = simulate_observations(&hmm, &path, &grid, &SeededRng::new(2)).unwrap();
        for k in 0..500 {
            let x = path.state_at(grid.time(k));
            assert_eq!(z.increments[k][0], hmm.h_mat[(x, 0)] * grid.dt());
        }
    }

    #[test]
    fn uninformative_observations_are_pure_noise() {
        let hmm = flip(1.0, [0.0, 0.0], 0.7);
        let grid = TimeGrid::<f64>::new(0.0, 1.0, 50).unwrap();
        let path = sample_ctmc(&hmm, 1.0, &SeededRng::new(1));
        let z = simulate_observations(&hmm, &path, &grid, &SeededRng::new(2)).unwrap();
        let noise = GaussianSampler::psd(&hmm.r_cov).unwrap().scaled(grid.dt());
        let mut gen = SeededRng::new(2).stream();
        for dz in &z.increments {
            assert_eq!(*dz, noise.sample(&mut gen));
        }
    }

    #[test]
    fn grid_past_horizon_is_rejected() {
        let hmm = flip(1.0, [0.0, 1.0], 1.0);
        let path = sample_ctmc(&hmm, 1.0, &SeededRng::new(1));
        let grid = TimeGrid::<f64>::new(0.0, 2.0, 10).unwrap();
        assert!(matches!(
            simulate_observations(&hmm, &path, &grid, &SeededRng::new(2)),
            Err(Error::PathTooShort { .. })
        ));
    }

    #[test]
    fn simulator_matches_public_composition() {
        let hmm = flip(1.5, [0.0, 1.0], 0.5);
        let grid = TimeGrid::<f64>::new(0.0, 2.0, 40).unwrap();
        let rng = SeededRng::new(9);
        let path = sample_ctmc(&hmm, 2.0, &rng.substream(0));
        let z = simulate_observations(&hmm, &path, &grid, &rng.substream(1)).unwrap();
        let sim = HmmSimulator::new(&hmm, &grid).unwrap();
        let mut seen = Vec::new();
        let x_t = sim.run(&rng, |_, _, dz| seen.push(dz.clone()));
        assert_eq!(seen, z.increments);
        assert_eq!(x_t, path.terminal_state());
    }
}
