use nalgebra::{DMatrix, DVector};

use super::LinearGaussianModel;
use crate::error::{Error, Result};
use crate::numkit::{rk4_linear_propagator, symmetrize, GaussianSampler, ObservationPath, SeededRng, TimeGrid};
use crate::scalar::Scalar;

/// One simulated realisation: states at every node and the observation increments.
#[derive(Debug, Clone, PartialEq)]
pub struct LgSample<T: Scalar = f64> {
    pub states: Vec<DVector<T>>,
    pub observations: ObservationPath<T>,
}

/// Euler–Maruyama simulator for the model on a fixed grid.
///
/// State noise (including the draw of `X_0`) comes from substream 0 of the
/// path's generator and observation noise from substream 1, so changing one
/// noise source never shifts the other's draws.
pub(crate) struct LgSimulator<'a, T: Scalar> {
    model: &'a LinearGaussianModel<T>,
    drift: DMatrix<T>,
    obs_map: DMatrix<T>,
    prior: GaussianSampler<T>,
    state_noise: GaussianSampler<T>,
    obs_noise: GaussianSampler<T>,
    grid: TimeGrid<T>,
}

impl<'a, T: Scalar> LgSimulator<'a, T> {
    pub(crate) fn new(model: &'a LinearGaussianModel<T>, grid: &TimeGrid<T>) -> Result<Self> {
        let dt = grid.dt();
        Ok(Self {
            model,
            drift: model.a_mat.transpose(),
            obs_map: model.h_mat.transpose(),
            prior: GaussianSampler::psd(&model.sigma0)?,
            state_noise: GaussianSampler::psd(&model.q_cov())?.scaled(dt),
            obs_noise: GaussianSampler::new(&model.r_cov)?.scaled(dt),
            grid: *grid,
        })
    }

    /// Runs one path, calling `visit(k, X_{t_k}, ΔZ_k)` for every step, and
    /// returns `X_T`.
    pub(crate) fn run(
        &self,
        rng: &SeededRng,
        mut visit: impl FnMut(usize, &DVector<T>, &DVector<T>),
    ) -> DVector<T> {
        let mut state_rng = rng.substream(0).stream();
        let mut obs_rng = rng.substream(1).stream();
        let dt = self.grid.dt();
        let mut x = &self.model.m0 + self.prior.sample(&mut state_rng);
        for k in 0..self.grid.n_steps() {
            let dz = &self.obs_map * &x * dt + self.obs_noise.sample(&mut obs_rng);
            visit(k, &x, &dz);
            let dx = &self.drift * &x * dt + self.state_noise.sample(&mut state_rng);
            x += dx;
        }
        x
    }
}

/// Simulates `(X, Z)` with `X_0 ~ N(m₀, Σ₀)` and `ΔZ_k = HᵀX_{t_k} dt + ΔW_k`.
pub fn simulate_lg<T: Scalar>(
    model: &LinearGaussianModel<T>,
    grid: &TimeGrid<T>,
    rng: &SeededRng,
) -> Result<LgSample<T>> {
    let sim = LgSimulator::new(model, grid)?;
    let mut states = Vec::with_capacity(grid.len());
    let mut increments = Vec::with_capacity(grid.n_steps());
    let last = sim.run(rng, |_, x, dz| {
        states.push(x.clone());
        increments.push(dz.clone());
    });
    states.push(last);
    Ok(LgSample { states, observations: ObservationPath::new(*grid, increments)? })
}

/// Integrates `dΣ/dt = AᵀΣ + ΣA + Q − ΣHR⁻¹HᵀΣ` forward from `Σ₀` with RK4,
/// symmetrising after every step.
pub fn solve_dre<T: Scalar>(model: &LinearGaussianModel<T>, grid: &TimeGrid<T>) -> Result<Vec<DMatrix<T>>> {
    let q = model.q_cov();
    let g = &model.h_mat * model.r_inv()? * model.h_mat.transpose();
    let field = |s: &DMatrix<T>| -> DMatrix<T> {
        model.a_mat.transpose() * s + s * &model.a_mat + &q - s * &g * s
    };
    let dt = grid.dt();
    let half = T::lit(0.5);
    let mut path = Vec::with_capacity(grid.len());
    path.push(symmetrize(&model.sigma0));
    for k in 0..grid.n_steps() {
        let s = &path[k];
        let k1 = field(s);
        let k2 = field(&(s + &k1 * (half * dt)));
        let k3 = field(&(s + &k2 * (half * dt)));
        let k4 = field(&(s + &k3 * dt));
        let next = symmetrize(&(s + (k1 + (k2 + k3) * T::lit(2.0) + k4) * (dt / T::lit(6.0))));
        if next.iter().any(|v| !v.is_finite_value()) {
            return Err(Error::IntegrationDiverged { step: k });
        }
        path.push(next);
    }
    Ok(path)
}

/// Conditional means `m_t` and covariances `Σ_t` on the observation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput<T: Scalar = f64> {
    pub grid: TimeGrid<T>,
    pub means: Vec<DVector<T>>,
    pub covs: Vec<DMatrix<T>>,
}

impl<T: Scalar> FilterOutput<T> {
    pub fn terminal_mean(&self) -> &DVector<T> {
        self.means.last().expect("filter output has at least two nodes")
    }

    pub fn terminal_cov(&self) -> &DMatrix<T> {
        self.covs.last().expect("filter output has at least two nodes")
    }
}

/// Kalman–Bucy filter driven by the increments of `zpath`.
///
/// The innovation term `Σ_t H R⁻¹ (ΔZ − Hᵀm dt)` is taken at the left
/// endpoint (Itô); the drift `Aᵀm` is propagated with the RK4 step matrix so
/// that without observations the mean follows the deterministic ODE to RK4
/// accuracy.
pub fn kalman_bucy<T: Scalar>(model: &LinearGaussianModel<T>, zpath: &ObservationPath<T>) -> Result<FilterOutput<T>> {
    let covs = solve_dre(model, &zpath.grid)?;
    let means = kalman_means(model, zpath, &covs)?;
    Ok(FilterOutput { grid: zpath.grid, means, covs })
}

pub(crate) fn kalman_means<T: Scalar>(
    model: &LinearGaussianModel<T>,
    zpath: &ObservationPath<T>,
    covs: &[DMatrix<T>],
) -> Result<Vec<DVector<T>>> {
    if zpath.dim() != model.obs_dim() {
        return Err(Error::GridMismatch(format!(
            "observations have dimension {}, model expects {}",
            zpath.dim(),
            model.obs_dim()
        )));
    }
    if covs.len() != zpath.grid.len() {
        return Err(Error::GridMismatch("covariance path does not match observation grid".into()));
    }
    let dt = zpath.grid.dt();
    let phi = rk4_linear_propagator(&model.a_mat.transpose(), dt);
    let gain_core = &model.h_mat * model.r_inv()?;
    let ht = model.h_mat.transpose();
    let mut means = Vec::with_capacity(zpath.grid.len());
    means.push(model.m0.clone());
    for (k, dz) in zpath.increments.iter().enumerate() {
        let m = &means[k];
        let innovation = dz - &ht * m * dt;
        means.push(&phi * m + &covs[k] * (&gain_core * innovation));
    }
    Ok(means)
}
