use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform grid `t0 + k·dt`, `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T: Scalar = f64> {
    t0: T,
    t1: T,
    n_steps: usize,
}

impl<T: Scalar> TimeGrid<T> {
    pub fn new(t0: T, t1: T, n_steps: usize) -> Result<Self> {
        if !(t0.is_finite_value() && t1.is_finite_value()) {
            return Err(Error::InvalidGrid("endpoints must be finite".into()));
        }
        if t1 <= t0 {
            return Err(Error::InvalidGrid(format!("t1 = {t1} must exceed t0 = {t0}")));
        }
        if n_steps == 0 {
            return Err(Error::InvalidGrid("n_steps must be at least 1".into()));
        }
        Ok(Self { t0, t1, n_steps })
    }

    /// Grid on `[0, horizon]`.
    pub fn horizon(horizon: T, n_steps: usize) -> Result<Self> {
        Self::new(T::zero(), horizon, n_steps)
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn t1(&self) -> T {
        self.t1
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn span(&self) -> T {
        self.t1 - self.t0
    }

    pub fn dt(&self) -> T {
        (self.t1 - self.t0) / T::lit(self.n_steps as f64)
    }

    /// Time of node `k`. The last node is `t1` exactly.
    pub fn time(&self, k: usize) -> T {
        assert!(k <= self.n_steps, "node {k} outside grid of {} steps", self.n_steps);
        if k == self.n_steps {
            self.t1
        } else {
            self.t0 + T::lit(k as f64) * self.dt()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..=self.n_steps).map(move |k| self.time(k))
    }

    /// The same interval with every step split into `factor` pieces.
    pub fn refined(&self, factor: usize) -> Self {
        assert!(factor >= 1);
        Self {
            n_steps: self.n_steps * factor,
            ..*self
        }
    }

    /// Interval index `k` and fraction `θ ∈ [0, 1]` with `t = t_k + θ·dt`.
    ///
    /// Fractions within `1e-9` of a node snap onto it, so stage times of a
    /// coarser grid land exactly on the nodes of a refinement.
    pub fn locate(&self, t: T) -> (usize, T) {
        let pos = ((t - self.t0) / self.dt()).to_f64_lossy();
        let n = self.n_steps as f64;
        let pos = pos.clamp(0.0, n);
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-9 {
            let k = nearest as usize;
            return if k == self.n_steps {
                (k - 1, T::one())
            } else {
                (k, T::zero())
            };
        }
        let k = (pos.floor() as usize).min(self.n_steps - 1);
        (k, T::lit(pos - k as f64))
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.n_steps == other.n_steps && self.t0 == other.t0 && self.t1 == other.t1
    }
}

/// Composite trapezoid rule over node values spaced `dt` apart.
pub fn trapezoid<T: Scalar>(values: &[T], dt: T) -> T {
    match values.len() {
        0 | 1 => T::zero(),
        n => {
            let half = T::lit(0.5);
            let inner = values[1..n - 1].iter().fold(T::zero(), |acc, &v| acc + v);
            dt * (half * (values[0] + values[n - 1]) + inner)
        }
    }
}

/// Composite Simpson rule; `values` must have odd length (an even number of panels).
/// Composite Simpson when the node count is odd (even number of steps),
/// trapezoid otherwise.
pub fn node_quadrature<T: Scalar>(values: &[T], dt: T) -> T {
    if values.len() >= 3 && values.len() % 2 == 1 {
        simpson(values, dt)
    } else {
        trapezoid(values, dt)
    }
}

pub fn simpson<T: Scalar>(values: &[T], dt: T) -> T {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "simpson needs an odd number of nodes, got {n}");
    let mut acc = values[0] + values[n - 1];
    for (i, &v) in values.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { T::lit(4.0) * v } else { T::lit(2.0) * v };
    }
    acc * dt / T::lit(3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::<f64>::new(1.0, 1.0, 10).is_err());
        assert!(TimeGrid::<f64>::new(0.0, 1.0, 0).is_err());
        assert!(TimeGrid::<f64>::new(0.0, f64::NAN, 3).is_err());
    }

    #[test]
    fn nodes_are_reproducible() {
        let g = TimeGrid::<f64>::new(0.5, 2.0, 3).unwrap();
        let t: Vec<f64> = g.times().collect();
        assert_eq!(t, vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(g.len(), 4);
        let again: Vec<f64> = g.times().collect();
        assert_eq!(t, again);
    }

    #[test]
    fn locate_snaps_onto_refined_nodes() {
        let g = TimeGrid::<f64>::new(0.0, 1.0, 10).unwrap();
        let fine = g.refined(2);
        for k in 0..10 {
            let mid = g.time(k) + 0.5 * g.dt();
            assert_eq!(fine.locate(mid), (2 * k + 1, 0.0));
        }
        assert_eq!(fine.locate(1.0), (19, 1.0));
        let (k, th): (usize, f64) = g.locate(0.25);
        assert_eq!(k, 2);
        assert!((th - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quadrature_rules() {
        let g = TimeGrid::<f64>::new(0.0, 1.0, 100).unwrap();
        let lin: Vec<f64> = g.times().map(|t| 3.0 * t + 1.0).collect();
        assert!((trapezoid(&lin, g.dt()) - 2.5).abs() < 1e-14);
        let cubic: Vec<f64> = g.times().map(|t| t * t * t).collect();
        assert!((simpson(&cubic, g.dt()) - 0.25).abs() < 1e-14);
    }
}
