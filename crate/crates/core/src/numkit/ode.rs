use nalgebra::{DMatrix, DVector};

use super::TimeGrid;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `dy/dt = rhs(t, y)` from `y(t0) = y_init`.
    Forward,
    /// `-dy/dt = rhs(t, y)` from `y(t1) = y_init`, i.e. the field in reversed
    /// time `τ = t1 - t` integrated forward in `τ`.
    Backward,
}

/// Classical RK4 on a fixed grid.
///
/// The result is indexed by grid node (`path[k]` is the value at `t_k`) in
/// both directions, endpoints included.
pub fn integrate_ode<T, F>(
    rhs: F,
    grid: &TimeGrid<T>,
    y_init: &DVector<T>,
    direction: Direction,
) -> Result<Vec<DVector<T>>>
where
    T: Scalar,
    F: Fn(T, &DVector<T>) -> DVector<T>,
{
    let n = grid.n_steps();
    let dt = grid.dt();

    let mut path = vec![DVector::zeros(y_init.len()); n + 1];
    match direction {
        Direction::Forward => {
            path[0] = y_init.clone();
            for k in 0..n {
                let next = rk4_step(&rhs, grid.time(k), dt, &path[k]);
                if !all_finite(&next) {
                    return Err(Error::IntegrationDiverged { step: k });
                }
                path[k + 1] = next;
            }
        }
        Direction::Backward => {
            path[n] = y_init.clone();
            for k in (0..n).rev() {
                let next = rk4_step(&rhs, grid.time(k + 1), -dt, &path[k + 1]);
                if !all_finite(&next) {
                    return Err(Error::IntegrationDiverged { step: n - k - 1 });
                }
                path[k] = next;
            }
        }
    }
    Ok(path)
}

/// One classical RK4 step from time `t` to `t + h`.
///
/// `h` may be negative: the stage times then run backwards while the field is
/// scaled by `|h|`, which is exactly a forward step of the reflected field
/// (the [`Direction::Backward`] convention).
pub fn rk4_step<T, F>(rhs: &F, t: T, h: T, y: &DVector<T>) -> DVector<T>
where
    T: Scalar,
    F: Fn(T, &DVector<T>) -> DVector<T>,
{
    let half = T::lit(0.5);
    let dt = h.abs();
    let k1 = rhs(t, y);
    let k2 = rhs(t + half * h, &(y + &k1 * (half * dt)));
    let k3 = rhs(t + half * h, &(y + &k2 * (half * dt)));
    let k4 = rhs(t + h, &(y + &k3 * dt));
    y + (k1 + (k2 + k3) * T::lit(2.0) + k4) * (dt / T::lit(6.0))
}

/// One RK4 step of the constant linear field `dy/dt = M y` as a matrix:
/// `I + hM + (hM)²/2 + (hM)³/6 + (hM)⁴/24`.
pub fn rk4_linear_propagator<T: Scalar>(m: &DMatrix<T>, h: T) -> DMatrix<T> {
    let d = m.nrows();
    let hm = m * h;
    let mut term = DMatrix::<T>::identity(d, d);
    let mut acc = term.clone();
    for j in 1..=4 {
        term = &term * &hm / T::lit(j as f64);
        acc += &term;
    }
    acc
}

pub(crate) fn all_finite<T: Scalar>(v: &DVector<T>) -> bool {
    v.iter().all(|x| x.is_finite_value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(n: usize) -> TimeGrid<f64> {
        TimeGrid::<f64>::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn zero_field_is_constant() {
        let c = DVector::from_vec(vec![1.5, -2.0]);
        let path = integrate_ode(|_, y| y * 0.0, &unit_grid(7), &c, Direction::Forward).unwrap();
        assert!(path.iter().all(|y| y == &c));
    }

    #[test]
    fn exponential_growth() {
        let one = DVector::from_element(1, 1.0);
        let path = integrate_ode(|_, y| y.clone(), &unit_grid(1000), &one, Direction::Forward).unwrap();
        assert!((path[1000][0] - std::f64::consts::E).abs() < 1e-8);
    }

    #[test]
    fn backward_reflected_decay() {
        let e = DVector::from_element(1, std::f64::consts::E);
        let path = integrate_ode(|_, y| -y, &unit_grid(1000), &e, Direction::Backward).unwrap();
        assert!((path[0][0] - 1.0).abs() < 1e-8);
        assert_eq!(path[1000], e);
    }

    #[test]
    fn time_dependent_field_sees_stage_times() {
        // dy/dt = 3t², y(0) = 0 ⇒ y(1) = 1; RK4 integrates cubics exactly.
        let zero = DVector::zeros(1);
        let path = integrate_ode(
            |t: f64, _| DVector::from_element(1, 3.0 * t * t),
            &unit_grid(4),
            &zero,
            Direction::Forward,
        )
        .unwrap();
        assert!((path[4][0] - 1.0).abs() < 1e-14);
        // -dy/dt = 3t², y(1) = 1 ⇒ y(t) = 2 - t³.
        let one = DVector::from_element(1, 1.0);
        let back = integrate_ode(
            |t: f64, _| DVector::from_element(1, 3.0 * t * t),
            &unit_grid(4),
            &one,
            Direction::Backward,
        )
        .unwrap();
        assert!((back[0][0] - 2.0).abs() < 1e-14);
        assert!((back[2][0] - (2.0 - 0.125)).abs() < 1e-14);
    }

    #[test]
    fn divergence_names_the_step() {
        let one = DVector::from_element(1, 1.0);
        let err = integrate_ode(|_, y| y.map(|v: f64| v * v * 1e200), &unit_grid(10), &one, Direction::Forward)
            .unwrap_err();
        assert!(matches!(err, Error::IntegrationDiverged { .. }));
    }

    #[test]
    fn propagator_matches_rk4_step() {
        let m = DMatrix::from_row_slice(2, 2, &[0.1, -0.7, 0.4, -0.3]);
        let y0 = DVector::from_vec(vec![0.3, -1.1]);
        let g = TimeGrid::<f64>::new(0.0, 0.05, 1).unwrap();
        let path = integrate_ode(|_, y| &m * y, &g, &y0, Direction::Forward).unwrap();
        let p = rk4_linear_propagator(&m, 0.05);
        assert!((&p * &y0 - &path[1]).norm() < 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let one = DVector::from_element(1, 1.0f32);
        let g = TimeGrid::<f32>::new(0.0f32, 1.0, 100).unwrap();
        let path = integrate_ode(|_, y| y.clone(), &g, &one, Direction::Forward).unwrap();
        assert!((path[100][0] - std::f32::consts::E).abs() < 1e-5);
    }
}
