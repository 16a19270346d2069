use duality_core::numkit::{ControlPath, TimeGrid};
use nalgebra::DVector;

use crate::config::ControlSpec;
use crate::error::{invalid, CliResult};

/// Checks the control list against the observation dimension `m`.
pub(crate) fn check_controls(specs: &[ControlSpec], m: usize, allow_optimal: bool) -> CliResult<()> {
    if specs.is_empty() {
        return Err(invalid("at least one control is required"));
    }
    if specs.iter().any(|s| s.name().trim().is_empty()) {
        return Err(invalid("control names must be non-empty"));
    }
    let mut names: Vec<&str> = specs.iter().map(ControlSpec::name).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(invalid(format!("duplicate control name {}", w[0])));
    }
    for spec in specs {
        let name = spec.name();
        match spec {
            ControlSpec::Constant { value, .. } if value.len() != m => {
                return Err(invalid(format!("control {name}: value has length {}, expected {m}", value.len())));
            }
            ControlSpec::Piecewise { table, .. } => {
                if table.is_empty() {
                    return Err(invalid(format!("control {name}: empty table")));
                }
                if let Some(row) = table.iter().find(|r| r.len() != m + 1) {
                    return Err(invalid(format!("control {name}: row {row:?} needs 1 + {m} entries")));
                }
                if table[0][0] != 0.0 {
                    return Err(invalid(format!("control {name}: first row must start at t = 0")));
                }
                if table.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(invalid(format!("control {name}: start times must increase")));
                }
            }
            ControlSpec::Optimal { .. } | ControlSpec::OptimalPerturbed { .. } if !allow_optimal => {
                return Err(invalid(format!("control {name}: optimal controls exist only for linear-Gaussian scenarios")));
            }
            ControlSpec::OptimalPerturbed { amplitude, frequency, .. } if !(amplitude.is_finite() && frequency.is_finite()) => {
                return Err(invalid(format!("control {name}: perturbation must be finite")));
            }
            _ => {}
        }
    }
    Ok(())
}

/// Materializes the controls on `grid`; `optimal` supplies the optimal
/// control for the `optimal` kinds.
pub fn build_controls(
    specs: &[ControlSpec],
    grid: &TimeGrid,
    m: usize,
    optimal: Option<&ControlPath>,
) -> CliResult<Vec<(String, ControlPath)>> {
    specs
        .iter()
        .map(|spec| {
            let path = match spec {
                ControlSpec::Zero { .. } => ControlPath::zero(*grid, m),
                ControlSpec::Constant { value, .. } => ControlPath::constant(*grid, DVector::from_column_slice(value)),
                ControlSpec::Piecewise { table, .. } => {
                    let rows: Vec<(f64, DVector<f64>)> =
                        table.iter().map(|r| (r[0], DVector::from_column_slice(&r[1..]))).collect();
                    ControlPath::piecewise(*grid, &rows)?
                }
                ControlSpec::Optimal { .. } => optimal.ok_or_else(|| invalid("optimal control unavailable"))?.clone(),
                ControlSpec::OptimalPerturbed { amplitude, frequency, .. } => {
                    let base = optimal.ok_or_else(|| invalid("optimal control unavailable"))?;
                    let bump = ControlPath::from_fn(*grid, |t| DVector::from_element(m, (frequency * t).sin()));
                    base.perturbed(&bump, *amplitude)?
                }
            };
            Ok((spec.name().to_string(), path))
        })
        .collect()
}
