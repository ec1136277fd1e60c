//! Model description: grids, candidate generator sets, running cost, terminal
//! payoff, feedback controls, and the TOML model-file format.

mod control;
mod file;
mod gamma;
mod grid;
mod param;
mod payoff;
mod penalty;

use thiserror::Error;

pub use control::{Control, ControlError};
pub use file::load_model;
pub use gamma::{GammaMap, GammaMode};
pub use grid::{Axis, SpaceGrid, TimeGrid};
pub use param::{levy_moment, validate_param, Bounds, JumpAtom, ParamPoint, Violation};
pub use payoff::{Curvature, Payoff};
pub use penalty::Penalty;

pub(crate) use param::norm;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid {field}: {message}")]
    Invalid { field: String, message: String },
    #[error("{context} is not admissible: {}", format_report(.report))]
    Param {
        context: String,
        report: Vec<Violation>,
    },
}

impl ModelError {
    pub(crate) fn invalid(field: &str, message: impl Into<String>) -> Self {
        ModelError::Invalid {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

fn format_report(report: &[Violation]) -> String {
    report
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// A validated model. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub time: TimeGrid,
    pub space: SpaceGrid,
    pub gamma: GammaMap,
    pub penalty: Penalty,
    pub payoff: Payoff,
    pub bounds: Bounds,
}

impl Model {
    pub fn new(
        time: TimeGrid,
        space: SpaceGrid,
        gamma: GammaMap,
        penalty: Penalty,
        payoff: Payoff,
        bounds: Bounds,
    ) -> Result<Self, ModelError> {
        let model = Self {
            time,
            space,
            gamma,
            penalty,
            payoff,
            bounds,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let cells = self.space.num_cells();
        let n = self.space.dim();
        self.gamma
            .validate(n, self.time.steps(), cells, &self.bounds)?;
        self.penalty.check_table(cells, self.gamma.max_candidates())?;
        if let Payoff::Table { values, .. } = &self.payoff {
            if values.len() != cells {
                return Err(ModelError::invalid(
                    "payoff.values",
                    format!("expected {cells} samples, got {}", values.len()),
                ));
            }
        }
        if let Payoff::Linear { slope, .. } = &self.payoff {
            if slope.len() != n {
                return Err(ModelError::invalid("payoff.slope", "length must equal n"));
            }
        }
        // g finite (hence bounded above) on every (step, cell, candidate).
        let t = self.time.start();
        for step in self.step_representatives() {
            for cell in 0..cells {
                let x = self.space.coords(cell);
                for (k, theta) in self.gamma.candidates(step, cell).iter().enumerate() {
                    let g = self.penalty.eval(t, &x, k, theta);
                    if !g.is_finite() {
                        return Err(ModelError::invalid(
                            "penalty",
                            format!("non-finite value at cell {cell}, candidate {k}"),
                        ));
                    }
                }
            }
        }
        for cell in 0..cells {
            if !self.payoff.eval(&self.space.coords(cell)).is_finite() {
                return Err(ModelError::invalid(
                    "payoff",
                    format!("non-finite value at cell {cell}"),
                ));
            }
        }
        Ok(())
    }

    fn step_representatives(&self) -> Vec<usize> {
        match self.gamma.mode() {
            GammaMode::TimeDependent => {
                let mut first = vec![None; self.gamma.sets().len()];
                for (step, &s) in self.gamma.index().iter().enumerate() {
                    first[s].get_or_insert(step);
                }
                first.into_iter().flatten().collect()
            }
            _ => vec![0],
        }
    }

    pub fn candidates(&self, step: usize, cell: usize) -> &[ParamPoint] {
        self.gamma.candidates(step, cell)
    }

    /// Human-readable warnings that do not prevent use (e.g. long jumps).
    pub fn warnings(&self) -> Vec<String> {
        let min_width = self
            .space
            .axes()
            .iter()
            .map(Axis::width)
            .fold(f64::INFINITY, f64::min);
        let mut out = Vec::new();
        let longest = self
            .gamma
            .all_candidates()
            .flat_map(|t| t.jumps.iter().map(JumpAtom::norm))
            .fold(0.0, f64::max);
        if longest > 0.1 * min_width {
            out.push(format!(
                "jump size {longest} exceeds 10% of the box width {min_width}; shifts rely on the boundary extension"
            ));
        }
        out
    }

    /// Same problem with `2^level` times finer space and `4^level` times more
    /// time steps. Cell-tabulated data cannot be refined.
    pub fn refined(&self, level: u32) -> Result<Self, ModelError> {
        let fs = 1usize << level;
        let ft = fs * fs;
        if self.gamma.mode() == GammaMode::StateDependent
            || matches!(self.penalty, Penalty::Table { .. })
            || matches!(self.payoff, Payoff::Table { .. })
        {
            return Err(ModelError::invalid(
                "model",
                "cell-tabulated data cannot be refined",
            ));
        }
        let gamma = match self.gamma.mode() {
            GammaMode::TimeDependent => GammaMap::new(
                GammaMode::TimeDependent,
                self.gamma.sets().to_vec(),
                self.gamma
                    .index()
                    .iter()
                    .flat_map(|&i| std::iter::repeat_n(i, ft))
                    .collect(),
            ),
            _ => self.gamma.clone(),
        };
        Model::new(
            self.time.with_steps(self.time.steps() * ft)?,
            self.space.refined(fs),
            gamma,
            self.penalty.clone(),
            self.payoff.clone(),
            self.bounds,
        )
    }

    /// Same model with a different number of time steps (constant and
    /// state-dependent Γ only).
    pub fn with_steps(&self, steps: usize) -> Result<Self, ModelError> {
        if self.gamma.mode() == GammaMode::TimeDependent {
            return Err(ModelError::invalid(
                "time.N",
                "cannot re-step a time-dependent Γ",
            ));
        }
        Model::new(
            self.time.with_steps(steps)?,
            self.space.clone(),
            self.gamma.clone(),
            self.penalty.clone(),
            self.payoff.clone(),
            self.bounds,
        )
    }

    pub fn with_payoff(&self, payoff: Payoff) -> Result<Self, ModelError> {
        Model::new(
            self.time.clone(),
            self.space.clone(),
            self.gamma.clone(),
            self.penalty.clone(),
            payoff,
            self.bounds,
        )
    }

    pub fn with_penalty(&self, penalty: Penalty) -> Result<Self, ModelError> {
        Model::new(
            self.time.clone(),
            self.space.clone(),
            self.gamma.clone(),
            penalty,
            self.payoff.clone(),
            self.bounds,
        )
    }
}
