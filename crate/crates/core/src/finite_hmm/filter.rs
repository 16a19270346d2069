use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{FiniteHmm, HmmSimulator};
use crate::error::{check_dims, Error, Result};
use crate::numkit::{rk4_linear_propagator, spd_factor, McEstimate, ObservationPath, SeededRng, TimeGrid};
use crate::scalar::Scalar;

/// Unnormalized (`σ_t`) and normalized (`π_t`) conditional laws on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefPath<T: Scalar = f64> {
    pub grid: TimeGrid<T>,
    pub unnormalized: Vec<DVector<T>>,
    pub normalized: Vec<DVector<T>>,
    /// Total mass removed by clipping negative entries to zero.
    pub clipped: T,
}

impl<T: Scalar> BeliefPath<T> {
    pub fn terminal(&self) -> &DVector<T> {
        self.normalized.last().expect("belief path has at least one node")
    }
}

/// Marginal laws `μ_t` from `dμ/dt = Aᵀμ`, `μ_0 = prior`, by RK4 with the
/// total mass reset to one after every step.
pub fn forward_kolmogorov<T: Scalar>(hmm: &FiniteHmm<T>, grid: &TimeGrid<T>) -> Result<Vec<DVector<T>>> {
    let d = hmm.dim();
    check_dims("Kolmogorov rate matrix", (d, d), hmm.rate.shape())?;
    let phi = rk4_linear_propagator(&hmm.rate.transpose(), grid.dt());
    let mut out = Vec::with_capacity(grid.len());
    out.push(hmm.prior.clone());
    for _ in 0..grid.n_steps() {
        let mut next = &phi * out.last().expect("non-empty");
        let mass = next.sum();
        if mass > T::zero() {
            next /= mass;
        }
        out.push(next);
    }
    Ok(out)
}

/// One step of the whitened Zakai recursion in splitting form
/// `σ ← Φ · diag(exp(h̃ᵀΔZ̃ − ½|h̃|²dt)) · σ`, with `Φ` the RK4 propagator of
/// `Aᵀ`, `h̃ = L⁻¹h` and `ΔZ̃ = L⁻¹ΔZ` for `R = LLᵀ`.
///
/// To first order this is the Euler step `σ + Aᵀσ dt + Σ_j (h̃_j ∘ σ) ΔZ̃_j`;
/// the exponential form is exact Bayes for the left-endpoint observation
/// model and stays non-negative at high signal-to-noise ratios.
pub(crate) struct ZakaiStepper<T: Scalar> {
    phi: DMatrix<T>,
    h_white: DMatrix<T>,
    half_energy: DVector<T>,
    l_inv: DMatrix<T>,
}

impl<T: Scalar> ZakaiStepper<T> {
    pub(crate) fn new(hmm: &FiniteHmm<T>, dt: T) -> Result<Self> {
        let d = hmm.dim();
        let m = hmm.obs_dim();
        check_dims("Zakai rate matrix", (d, d), hmm.rate.shape())?;
        check_dims("Zakai observation matrix", (d, m), hmm.h_mat.shape())?;
        let l = spd_factor(&hmm.r_cov).map_err(|_| Error::NoiseNotSpd)?;
        let l_inv = l.solve_lower_triangular(&DMatrix::identity(m, m)).ok_or(Error::NoiseNotSpd)?;
        let h_white = &hmm.h_mat * l_inv.transpose();
        let half_energy = DVector::from_fn(d, |x, _| h_white.row(x).norm_squared() * dt * T::lit(0.5));
        Ok(Self { phi: rk4_linear_propagator(&hmm.rate.transpose(), dt), h_white, half_energy, l_inv })
    }

    fn log_weights(&self, dz: &DVector<T>) -> DVector<T> {
        &self.h_white * (&self.l_inv * dz) - &self.half_energy
    }

    /// Advances `sigma` in place; negative entries left by the propagator are
    /// zeroed and the clipped magnitude returned.
    pub(crate) fn step(&self, sigma: &mut DVector<T>, dz: &DVector<T>) -> T {
        let w = self.log_weights(dz);
        self.apply(sigma, &w)
    }

    /// Same as [`step`](Self::step) up to a positive factor: the largest
    /// log-weight is subtracted first, so the state cannot overflow.
    pub(crate) fn step_rescaled(&self, sigma: &mut DVector<T>, dz: &DVector<T>) -> T {
        let mut w = self.log_weights(dz);
        let top = w.max();
        w.add_scalar_mut(-top);
        self.apply(sigma, &w)
    }

    fn apply(&self, sigma: &mut DVector<T>, log_w: &DVector<T>) -> T {
        let weighted = sigma.zip_map(log_w, |s, w| s * w.exp());
        let mut next = &self.phi * weighted;
        let mut clipped = T::zero();
        for v in next.iter_mut() {
            if *v < T::zero() {
                clipped -= *v;
                *v = T::zero();
            }
        }
        *sigma = next;
        clipped
    }
}

fn degenerate_mass<T: Scalar>(mass: T) -> bool {
    !(mass >= T::lit(1e-300))
}

/// Duncan–Mortensen–Zakai filter driven by `zpath`, started from the prior.
///
/// General `R` is handled by whitening the observations. The unnormalized
/// path is reported as computed, without rescaling.
pub fn zakai_filter<T: Scalar>(hmm: &FiniteHmm<T>, zpath: &ObservationPath<T>) -> Result<BeliefPath<T>> {
    zakai_filter_from(hmm, &hmm.prior, zpath)
}

/// [`zakai_filter`] with an arbitrary non-negative initial measure.
pub fn zakai_filter_from<T: Scalar>(
    hmm: &FiniteHmm<T>,
    initial: &DVector<T>,
    zpath: &ObservationPath<T>,
) -> Result<BeliefPath<T>> {
    check_dims("Zakai initial measure", (hmm.dim(), 1), initial.shape())?;
    check_dims("Zakai observations", (hmm.obs_dim(), 1), (zpath.dim(), 1))?;
    let grid = zpath.grid;
    let stepper = ZakaiStepper::new(hmm, grid.dt())?;
    let normalize = |sigma: &DVector<T>, step: usize| -> Result<DVector<T>> {
        let mass = sigma.sum();
        if degenerate_mass(mass) {
            return Err(Error::FilterDegenerate { step, mass: mass.to_f64_lossy() });
        }
        if !mass.is_finite_value() {
            return Err(Error::IntegrationDiverged { step });
        }
        Ok(sigma / mass)
    };
    let mut unnormalized = Vec::with_capacity(grid.len());
    let mut normalized = Vec::with_capacity(grid.len());
    let mut clipped = T::zero();
    let mut sigma = initial.clone();
    normalized.push(normalize(&sigma, 0)?);
    unnormalized.push(sigma.clone());
    for (k, dz) in zpath.increments.iter().enumerate() {
        clipped += stepper.step(&mut sigma, dz);
        normalized.push(normalize(&sigma, k + 1)?);
        unnormalized.push(sigma.clone());
    }
    Ok(BeliefPath { grid, unnormalized, normalized, clipped })
}

/// `(Γf)(x) = Σ_y A(x,y)(f(x) − f(y))²` for a rate matrix `A`.
pub(crate) fn gamma_operator<T: Scalar>(rate: &DMatrix<T>, f: &DVector<T>) -> DVector<T> {
    DVector::from_fn(f.len(), |x, _| {
        (0..f.len()).fold(T::zero(), |acc, y| {
            let diff = f[x] - f[y];
            acc + rate[(x, y)] * diff * diff
        })
    })
}

/// Carré du champ of the chain applied to `f`.
pub fn carre_du_champ<T: Scalar>(hmm: &FiniteHmm<T>, f: &DVector<T>) -> Result<DVector<T>> {
    check_dims("carre du champ argument", (hmm.dim(), 1), f.shape())?;
    Ok(gamma_operator(&hmm.rate, f))
}

/// Monte-Carlo estimate of the filter error `E|f(X_T) − π_T(f)|²`.
///
/// Path `p` is generated from `rng.substream(p)` (chain from its substream 0,
/// observation noise from substream 1) and filtered with per-step
/// renormalization, which leaves `π` unchanged because the recursion is
/// linear and positively homogeneous.
pub fn conditional_mse_mc<T: Scalar>(
    hmm: &FiniteHmm<T>,
    f: &DVector<T>,
    grid: &TimeGrid<T>,
    n_paths: usize,
    rng: &SeededRng,
) -> Result<McEstimate<T>> {
    check_dims("filtered function", (hmm.dim(), 1), f.shape())?;
    let sim = HmmSimulator::new(hmm, grid)?;
    let stepper = ZakaiStepper::new(hmm, grid.dt())?;
    let errors = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut pi = hmm.prior.clone();
            let mut failure = None;
            let x_t = sim.run(&rng.substream(p), |k, _, dz| {
                if failure.is_some() {
                    return;
                }
                stepper.step_rescaled(&mut pi, dz);
                let mass = pi.sum();
                if degenerate_mass(mass) || !mass.is_finite_value() {
                    failure = Some(Error::FilterDegenerate { step: k + 1, mass: mass.to_f64_lossy() });
                } else {
                    pi /= mass;
                }
            });
            match failure {
                Some(e) => Err(e),
                None => {
                    let err = f[x_t] - pi.dot(f);
                    Ok(err * err)
                }
            }
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(McEstimate::from_samples(&errors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_hmm::sample_ctmc;
    use crate::finite_hmm::simulate_observations;

    fn chain(l12: f64, l21: f64, h: [f64; 2]) -> FiniteHmm<f64> {
        FiniteHmm {
            rate: DMatrix::from_row_slice(2, 2, &[-l12, l12, l21, -l21]),
            h_mat: DMatrix::from_row_slice(2, 1, &h),
            r_cov: DMatrix::identity(1, 1),
            prior: DVector::from_vec(vec![0.5, 0.5]),
        }
    }

    #[test]
    fn gamma_hand_value() {
        let g = carre_du_champ(&chain(2.0, 3.0, [0.0, 1.0]), &DVector::from_vec(vec![0.0, 1.0])).unwrap();
        assert_eq!(g, DVector::from_vec(vec![2.0, 3.0]));
    }

    #[test]
    fn gamma_of_constant_vanishes() {
        let g = carre_du_champ(&chain(2.0, 3.0, [0.0, 1.0]), &DVector::from_element(2, 4.2)).unwrap();
        assert_eq!(g, DVector::zeros(2));
    }

    #[test]
    fn stationary_law_is_preserved() {
        let mut hmm = chain(2.0, 3.0, [0.0, 1.0]);
        hmm.prior = DVector::from_vec(vec![0.6, 0.4]);
        let grid = TimeGrid::<f64>::new(0.0, 5.0, 500).unwrap();
        for mu in forward_kolmogorov(&hmm, &grid).unwrap() {
            assert!((mu - &hmm.prior).amax() < 1e-8);
        }
    }

    #[test]
    fn frozen_chain_keeps_its_prior() {
        let mut hmm = chain(0.0, 0.0, [0.0, 1.0]);
        hmm.prior = DVector::from_vec(vec![0.3, 0.7]);
        let grid = TimeGrid::<f64>::new(0.0, 1.0, 10).unwrap();
        assert!(forward_kolmogorov(&hmm, &grid).unwrap().iter().all(|mu| *mu == hmm.prior));
    }

    #[test]
    fn blind_filter_is_kolmogorov() {
        let hmm = chain(1.0, 2.0, [0.0, 0.0]);
        let grid = TimeGrid::<f64>::new(0.0, 2.0, 400).unwrap();
        let path = sample_ctmc(&hmm, 2.0, &SeededRng::new(5));
        let z = simulate_observations(&hmm, &path, &grid, &SeededRng::new(6)).unwrap();
        let belief = zakai_filter(&hmm, &z).unwrap();
        let mu = forward_kolmogorov(&hmm, &grid).unwrap();
        for (p, m) in belief.normalized.iter().zip(&mu) {
            assert!((p - m).amax() < 1e-8);
        }
    }

    #[test]
    fn whitening_matches_scaled_problem() {
        // R = 4 with data Z equals R = 1 with data Z/2 and h/2.
        let mut a = chain(1.0, 1.0, [0.0, 1.0]);
        a.r_cov = DMatrix::from_element(1, 1, 4.0);
        let mut b = chain(1.0, 1.0, [0.0, 0.5]);
        b.r_cov = DMatrix::identity(1, 1);
        let grid = TimeGrid::<f64>::new(0.0, 1.0, 100).unwrap();
        let path = sample_ctmc(&a, 1.0, &SeededRng::new(1));
        let z = simulate_observations(&a, &path, &grid, &SeededRng::new(2)).unwrap();
        let half = ObservationPath::new(grid, z.increments.iter().map(|dz| dz / 2.0).collect()).unwrap();
        let pa = zakai_filter(&a, &z).unwrap();
        let pb = zakai_filter(&b, &half).unwrap();
        for (x, y) in pa.unnormalized.iter().zip(&pb.unnormalized) {
            assert!((x - y).amax() < 1e-14);
        }
    }

    #[test]
    fn empty_measure_is_degenerate() {
        let hmm = chain(1.0, 1.0, [0.0, 1.0]);
        let grid = TimeGrid::<f64>::new(0.0, 1.0, 4).unwrap();
        let z = ObservationPath::zeros(grid, 1);
        assert!(matches!(
            zakai_filter_from(&hmm, &DVector::zeros(2), &z),
            Err(Error::FilterDegenerate { step: 0, .. })
        ));
    }

    #[test]
    fn static_variance_without_information() {
        let hmm = chain(0.0, 0.0, [0.0, 0.0]);
        let grid = TimeGrid::<f64>::new(0.0, 1.0, 20).unwrap();
        let est = conditional_mse_mc(&hmm, &DVector::from_vec(vec![0.0, 1.0]), &grid, 4000, &SeededRng::new(4)).unwrap();
        assert!((est.mean - 0.25).abs() <= 3.0 * est.se, "{est:?}");
    }
}
