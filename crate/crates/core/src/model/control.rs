use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Model;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("subdivision must start at level 0, end at level {steps} and be strictly increasing")]
    BadSubdivision { steps: usize },
    #[error("expected {expected} selector slices, got {got}")]
    IntervalCount { expected: usize, got: usize },
    #[error("interval {interval}: selector has {got} cells, grid has {expected}")]
    CellCount {
        interval: usize,
        expected: usize,
        got: usize,
    },
    #[error("step {step}, cell {cell}: candidate index {index} out of range ({available} candidates)")]
    SelectorOutOfRange {
        step: usize,
        cell: usize,
        index: usize,
        available: usize,
    },
    #[error("{0} is not a time-grid node")]
    NotANode(f64),
}

/// Piecewise-constant feedback policy. On the time interval
/// `[t_{breaks[i]}, t_{breaks[i+1]})` the candidate used in cell `c` is
/// `selectors[i][c]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Control {
    breaks: Vec<usize>,
    selectors: Vec<Vec<usize>>,
}

impl Control {
    pub fn new(
        breaks: Vec<usize>,
        selectors: Vec<Vec<usize>>,
        model: &Model,
    ) -> Result<Self, ControlError> {
        let c = Self { breaks, selectors };
        c.validate(model)?;
        Ok(c)
    }

    pub(crate) fn from_parts(breaks: Vec<usize>, selectors: Vec<Vec<usize>>) -> Self {
        Self { breaks, selectors }
    }

    /// The same candidate index in every cell at every time.
    pub fn uniform(model: &Model, index: usize) -> Result<Self, ControlError> {
        let steps = model.time.steps();
        Self::new(
            vec![0, steps],
            vec![vec![index; model.space.num_cells()]],
            model,
        )
    }

    /// A random subdivision (on grid nodes) with random valid selectors.
    pub fn random<R: Rng + ?Sized>(model: &Model, rng: &mut R) -> Self {
        let steps = model.time.steps();
        let cells = model.space.num_cells();
        let mut breaks: Vec<usize> = (1..steps).filter(|_| rng.random_bool(0.3)).collect();
        breaks.insert(0, 0);
        breaks.push(steps);
        let selectors = breaks
            .windows(2)
            .map(|w| {
                (0..cells)
                    .map(|cell| {
                        // Valid for every step of the interval.
                        let avail = (w[0]..w[1])
                            .map(|s| model.gamma.candidates(s, cell).len())
                            .min()
                            .unwrap_or(1);
                        rng.random_range(0..avail)
                    })
                    .collect()
            })
            .collect();
        Self { breaks, selectors }
    }

    pub fn validate(&self, model: &Model) -> Result<(), ControlError> {
        let steps = model.time.steps();
        let cells = model.space.num_cells();
        let b = &self.breaks;
        if b.len() < 2
            || b[0] != 0
            || *b.last().unwrap() != steps
            || b.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(ControlError::BadSubdivision { steps });
        }
        if self.selectors.len() != b.len() - 1 {
            return Err(ControlError::IntervalCount {
                expected: b.len() - 1,
                got: self.selectors.len(),
            });
        }
        for (i, sel) in self.selectors.iter().enumerate() {
            if sel.len() != cells {
                return Err(ControlError::CellCount {
                    interval: i,
                    expected: cells,
                    got: sel.len(),
                });
            }
            for step in b[i]..b[i + 1] {
                for (cell, &index) in sel.iter().enumerate() {
                    let available = model.gamma.candidates(step, cell).len();
                    if index >= available {
                        return Err(ControlError::SelectorOutOfRange {
                            step,
                            cell,
                            index,
                            available,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn breaks(&self) -> &[usize] {
        &self.breaks
    }

    pub fn selectors(&self) -> &[Vec<usize>] {
        &self.selectors
    }

    pub fn interval_of(&self, step: usize) -> usize {
        self.breaks.partition_point(|&b| b <= step).saturating_sub(1)
    }

    /// Selector slice in force on step `step` (from node `step` to `step+1`).
    pub fn slice_at(&self, step: usize) -> &[usize] {
        &self.selectors[self.interval_of(step).min(self.selectors.len() - 1)]
    }

    pub fn select(&self, step: usize, cell: usize) -> usize {
        self.slice_at(step)[cell]
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("control serializes")
    }

    pub fn from_toml(text: &str, model: &Model) -> Result<Self, String> {
        let c: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        c.validate(model).map_err(|e| e.to_string())?;
        Ok(c)
    }
}
