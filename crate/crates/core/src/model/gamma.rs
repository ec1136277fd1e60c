use serde::{Deserialize, Serialize};

use super::param::{validate_param, Bounds, ParamPoint};
use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaMode {
    Constant,
    TimeDependent,
    StateDependent,
}

impl GammaMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            GammaMode::Constant => "constant",
            GammaMode::TimeDependent => "time-dependent",
            GammaMode::StateDependent => "state-dependent",
        }
    }
}

/// Finite candidate sets of generator triples, one set per time step or per
/// state cell depending on the mode. `index` maps a step (or a cell) to the set
/// it uses; it is empty in constant mode.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaMap {
    mode: GammaMode,
    sets: Vec<Vec<ParamPoint>>,
    index: Vec<usize>,
}

impl GammaMap {
    pub fn constant(candidates: Vec<ParamPoint>) -> Self {
        Self {
            mode: GammaMode::Constant,
            sets: vec![candidates],
            index: Vec::new(),
        }
    }

    pub fn new(mode: GammaMode, sets: Vec<Vec<ParamPoint>>, index: Vec<usize>) -> Self {
        Self { mode, sets, index }
    }

    /// Checks shape against the grids and every candidate against `bounds`.
    pub fn validate(
        &self,
        dim: usize,
        steps: usize,
        cells: usize,
        bounds: &Bounds,
    ) -> Result<(), ModelError> {
        if self.sets.is_empty() {
            return Err(ModelError::invalid("gamma", "no candidate sets"));
        }
        let expected = match self.mode {
            GammaMode::Constant => {
                if self.sets.len() != 1 || !self.index.is_empty() {
                    return Err(ModelError::invalid(
                        "gamma",
                        "constant mode takes exactly one candidate list and no index",
                    ));
                }
                None
            }
            GammaMode::TimeDependent => Some(("step", steps)),
            GammaMode::StateDependent => Some(("cell", cells)),
        };
        if let Some((what, len)) = expected {
            if self.index.len() != len {
                return Err(ModelError::invalid(
                    "gamma.index",
                    format!("expected one set index per {what} ({len}), got {}", self.index.len()),
                ));
            }
            if let Some(bad) = self.index.iter().find(|&&i| i >= self.sets.len()) {
                return Err(ModelError::invalid(
                    "gamma.index",
                    format!("set index {bad} out of range ({} sets)", self.sets.len()),
                ));
            }
        }
        for (s, set) in self.sets.iter().enumerate() {
            if set.is_empty() {
                return Err(ModelError::invalid(
                    "gamma",
                    format!("candidate set {s} is empty"),
                ));
            }
            for (c, theta) in set.iter().enumerate() {
                if theta.dim() != dim {
                    return Err(ModelError::invalid(
                        "gamma",
                        format!("set {s} candidate {c}: dimension {} != n = {dim}", theta.dim()),
                    ));
                }
                let report = validate_param(theta, bounds);
                if !report.is_empty() {
                    return Err(ModelError::Param {
                        context: format!("gamma set {s} candidate {c}"),
                        report,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn mode(&self) -> GammaMode {
        self.mode
    }

    pub fn sets(&self) -> &[Vec<ParamPoint>] {
        &self.sets
    }

    pub fn index(&self) -> &[usize] {
        &self.index
    }

    /// Candidate set Γ(t_step, x_cell).
    pub fn candidates(&self, step: usize, cell: usize) -> &[ParamPoint] {
        match self.mode {
            GammaMode::Constant => &self.sets[0],
            GammaMode::TimeDependent => &self.sets[self.index[step]],
            GammaMode::StateDependent => &self.sets[self.index[cell]],
        }
    }

    /// Which candidate set Γ(t_step, x_cell) is.
    pub fn set_index(&self, step: usize, cell: usize) -> usize {
        match self.mode {
            GammaMode::Constant => 0,
            GammaMode::TimeDependent => self.index[step],
            GammaMode::StateDependent => self.index[cell],
        }
    }

    pub fn all_candidates(&self) -> impl Iterator<Item = &ParamPoint> {
        self.sets.iter().flatten()
    }

    pub fn max_candidates(&self) -> usize {
        self.sets.iter().map(Vec::len).max().unwrap_or(0)
    }
}
