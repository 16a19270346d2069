use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{psd_sqrt, spd_factor, TimeGrid};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Seed plus stream selector for a ChaCha8 counter-based generator.
///
/// Identical `(seed, stream_id)` pairs give bit-identical draws; each path of a
/// Monte-Carlo run gets its own [`substream`](Self::substream) so results do
/// not depend on how paths are scheduled across threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededRng {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream_id: 0 }
    }

    pub fn with_stream(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Child generator `k`. The parent's `(seed, stream_id)` is folded into the
    /// child's key so sibling families do not overlap.
    pub fn substream(&self, k: u64) -> Self {
        Self {
            seed: splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(0x5851_f42d_4c95_7f2d))),
            stream_id: k,
        }
    }

    pub fn stream(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn standard_normal<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    let z: f64 = rng.sample(StandardNormal);
    T::lit(z)
}

/// Draws `N(0, cov)` vectors through a fixed square-root factor.
#[derive(Debug, Clone)]
pub struct GaussianSampler<T: Scalar = f64> {
    factor: Option<DMatrix<T>>,
    dim: usize,
}

impl<T: Scalar> GaussianSampler<T> {
    /// `cov` must be SPD or identically zero.
    pub fn new(cov: &DMatrix<T>) -> Result<Self> {
        check_square(cov)?;
        if cov.iter().all(|v| *v == T::zero()) {
            return Ok(Self { factor: None, dim: cov.nrows() });
        }
        Ok(Self { factor: Some(spd_factor(cov)?), dim: cov.nrows() })
    }

    /// Accepts any symmetric PSD `cov`, singular ones included.
    pub fn psd(cov: &DMatrix<T>) -> Result<Self> {
        check_square(cov)?;
        if cov.iter().all(|v| *v == T::zero()) {
            return Ok(Self { factor: None, dim: cov.nrows() });
        }
        Ok(Self { factor: Some(psd_sqrt(cov)?), dim: cov.nrows() })
    }

    /// Scales the covariance by `c ≥ 0`.
    pub fn scaled(mut self, c: T) -> Self {
        if let Some(f) = self.factor.as_mut() {
            *f *= c.sqrt();
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_degenerate(&self) -> bool {
        self.factor.is_none()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<T> {
        match &self.factor {
            None => DVector::zeros(self.dim),
            Some(f) => {
                let z = DVector::from_fn(self.dim, |_, _| standard_normal::<T, _>(rng));
                f * z
            }
        }
    }
}

fn check_square<T: Scalar>(cov: &DMatrix<T>) -> Result<()> {
    if cov.is_square() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context: "gaussian covariance",
            expected: "square matrix".into(),
            got: format!("{}x{}", cov.nrows(), cov.ncols()),
        })
    }
}

/// Brownian increments on `grid` with covariance `cov·dt`, one per step.
pub fn sample_gaussian_increments<T: Scalar>(
    rng: &SeededRng,
    grid: &TimeGrid<T>,
    cov: &DMatrix<T>,
) -> Result<Vec<DVector<T>>> {
    let sampler = GaussianSampler::new(cov)?.scaled(grid.dt());
    let mut stream = rng.stream();
    Ok((0..grid.n_steps()).map(|_| sampler.sample(&mut stream)).collect())
}
