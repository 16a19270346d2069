//! Seeded random corpora.

use duality_core::numkit::{standard_normal, SeededRng};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub(crate) struct Corpus {
    rng: ChaCha8Rng,
}

impl Corpus {
    /// Generator for corpus `tag` under `seed`; distinct tags give
    /// independent streams.
    pub(crate) fn new(seed: u64, tag: u64) -> Self {
        Self { rng: SeededRng::with_stream(seed, tag).stream() }
    }

    pub(crate) fn dim(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.random_range(lo..=hi)
    }

    pub(crate) fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub(crate) fn uniform_matrix(&mut self, r: usize, c: usize, lo: f64, hi: f64) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| self.uniform(lo, hi))
    }

    pub(crate) fn normal_vector(&mut self, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| standard_normal::<f64, _>(&mut self.rng))
    }

    pub(crate) fn normal_matrix(&mut self, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| standard_normal::<f64, _>(&mut self.rng))
    }

    /// `BBᵀ + floor·I` with Gaussian `B`.
    pub(crate) fn spd(&mut self, d: usize, floor: f64) -> DMatrix<f64> {
        let b = self.normal_matrix(d, d);
        &b * b.transpose() + DMatrix::identity(d, d) * floor
    }

    /// Rate matrix with off-diagonal rates uniform on `[0, max_rate)`.
    pub(crate) fn rate_matrix(&mut self, d: usize, max_rate: f64) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(d, d);
        for x in 0..d {
            let mut exit = 0.0;
            for y in 0..d {
                if x != y {
                    let r = self.uniform(0.0, max_rate);
                    a[(x, y)] = r;
                    exit += r;
                }
            }
            a[(x, x)] = -exit;
        }
        a
    }
}
