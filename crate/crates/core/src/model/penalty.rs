use super::grid::SpaceGrid;
use super::param::{norm, ParamPoint};
use super::ModelError;

/// Running cost `g(t, x, θ)` subtracted inside the sup.
#[derive(Debug, Clone, PartialEq)]
pub enum Penalty {
    Zero,
    Constant { c: f64 },
    /// `eta · ‖b‖² / 2`
    QuadraticDrift { eta: f64 },
    /// `coef · ‖x‖²`
    QuadraticState { coef: f64 },
    /// Per-cell values; each row has one entry (shared by all candidates) or
    /// one entry per candidate. Off-grid states use the nearest cell.
    Table { grid: SpaceGrid, values: Vec<Vec<f64>> },
}

impl Penalty {
    pub fn eval(&self, _t: f64, x: &[f64], candidate: usize, theta: &ParamPoint) -> f64 {
        match self {
            Penalty::Zero => 0.0,
            Penalty::Constant { c } => *c,
            Penalty::QuadraticDrift { eta } => 0.5 * eta * norm(&theta.b).powi(2),
            Penalty::QuadraticState { coef } => coef * x.iter().map(|v| v * v).sum::<f64>(),
            Penalty::Table { grid, values } => {
                let row = &values[grid.nearest_cell(x)];
                if row.len() == 1 {
                    row[0]
                } else {
                    row[candidate]
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Penalty::Zero)
    }

    pub(crate) fn check_table(&self, cells: usize, max_candidates: usize) -> Result<(), ModelError> {
        if let Penalty::Table { values, .. } = self {
            if values.len() != cells {
                return Err(ModelError::invalid(
                    "penalty.values",
                    format!("expected {cells} rows (one per cell), got {}", values.len()),
                ));
            }
            for (i, row) in values.iter().enumerate() {
                if row.len() != 1 && row.len() < max_candidates {
                    return Err(ModelError::invalid(
                        "penalty.values",
                        format!("row {i}: need 1 or ≥ {max_candidates} entries"),
                    ));
                }
            }
        }
        Ok(())
    }
}
