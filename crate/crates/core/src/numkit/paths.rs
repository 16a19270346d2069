use nalgebra::{DMatrix, DVector};

use super::TimeGrid;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Time grid plus the observation increments `ΔZ_k = Z_{t_{k+1}} − Z_{t_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationPath<T: Scalar = f64> {
    pub grid: TimeGrid<T>,
    pub increments: Vec<DVector<T>>,
}

impl<T: Scalar> ObservationPath<T> {
    pub fn new(grid: TimeGrid<T>, increments: Vec<DVector<T>>) -> Result<Self> {
        if increments.len() != grid.n_steps() {
            return Err(Error::GridMismatch(format!(
                "{} increments for a grid of {} steps",
                increments.len(),
                grid.n_steps()
            )));
        }
        if let Some(first) = increments.first() {
            let m = first.len();
            if increments.iter().any(|v| v.len() != m) {
                return Err(Error::InvalidArgument("observation increments have mixed dimensions".into()));
            }
        }
        Ok(Self { grid, increments })
    }

    pub fn zeros(grid: TimeGrid<T>, m: usize) -> Self {
        Self { grid, increments: vec![DVector::zeros(m); grid.n_steps()] }
    }

    pub fn dim(&self) -> usize {
        self.increments.first().map_or(0, |v| v.len())
    }

    /// `ΔZ_k / dt`, the piecewise-constant stand-in for `ż`.
    pub fn rates(&self) -> Vec<DVector<T>> {
        let dt = self.grid.dt();
        self.increments.iter().map(|dz| dz / dt).collect()
    }
}

/// A deterministic control signal sampled at every grid node, linearly
/// interpolated in between.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPath<T: Scalar = f64> {
    pub grid: TimeGrid<T>,
    pub values: Vec<DVector<T>>,
}

impl<T: Scalar> ControlPath<T> {
    pub fn new(grid: TimeGrid<T>, values: Vec<DVector<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} control values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zero(grid: TimeGrid<T>, m: usize) -> Self {
        Self { grid, values: vec![DVector::zeros(m); grid.len()] }
    }

    pub fn constant(grid: TimeGrid<T>, value: DVector<T>) -> Self {
        Self { grid, values: vec![value; grid.len()] }
    }

    /// Piecewise-constant table: node `t_k` takes the value of the last row
    /// whose start time is `≤ t_k`. Rows must be sorted by start time and the
    /// first must start at or before `t0`.
    pub fn piecewise(grid: TimeGrid<T>, table: &[(T, DVector<T>)]) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::InvalidArgument("piecewise control table is empty".into()));
        }
        if table.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidArgument("piecewise table start times must increase".into()));
        }
        if table[0].0 > grid.t0() {
            return Err(Error::InvalidArgument("piecewise table must cover the grid start".into()));
        }
        let m = table[0].1.len();
        if table.iter().any(|(_, v)| v.len() != m) {
            return Err(Error::InvalidArgument("piecewise table rows have mixed dimensions".into()));
        }
        let values = grid
            .times()
            .map(|t| {
                let idx = table.iter().rposition(|(s, _)| *s <= t).unwrap_or(0);
                table[idx].1.clone()
            })
            .collect();
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: TimeGrid<T>, f: impl Fn(T) -> DVector<T>) -> Self {
        let values = grid.times().map(f).collect();
        Self { grid, values }
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, |v| v.len())
    }

    pub fn at(&self, t: T) -> DVector<T> {
        lerp_vector(&self.grid, &self.values, t)
    }

    /// `self + eps·other`, nodewise.
    pub fn perturbed(&self, other: &Self, eps: T) -> Result<Self> {
        if !self.grid.same_as(&other.grid) || self.dim() != other.dim() {
            return Err(Error::GridMismatch("perturbation lives on a different grid".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b * eps).collect();
        Ok(Self { grid: self.grid, values })
    }
}

/// Linear interpolation of a node-indexed vector path.
pub fn lerp_vector<T: Scalar>(grid: &TimeGrid<T>, path: &[DVector<T>], t: T) -> DVector<T> {
    let (k, th) = grid.locate(t);
    if th == T::zero() {
        path[k].clone()
    } else if th == T::one() {
        path[k + 1].clone()
    } else {
        &path[k] * (T::one() - th) + &path[k + 1] * th
    }
}

/// Linear interpolation of a node-indexed matrix path.
pub fn lerp_matrix<T: Scalar>(grid: &TimeGrid<T>, path: &[DMatrix<T>], t: T) -> DMatrix<T> {
    let (k, th) = grid.locate(t);
    if th == T::zero() {
        path[k].clone()
    } else if th == T::one() {
        path[k + 1].clone()
    } else {
        &path[k] * (T::one() - th) + &path[k + 1] * th
    }
}
