use serde::{Deserialize, Serialize};

use super::ModelError;

/// Uniform time grid `r = t_0 < t_1 < ... < t_N = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    r: f64,
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(r: f64, horizon: f64, steps: usize) -> Result<Self, ModelError> {
        if !(r.is_finite() && horizon.is_finite()) {
            return Err(ModelError::invalid("time", "r and T must be finite"));
        }
        if r < 0.0 {
            return Err(ModelError::invalid("time.r", "r must be ≥ 0"));
        }
        if r >= horizon {
            return Err(ModelError::invalid("time", "r must be < T"));
        }
        if steps == 0 {
            return Err(ModelError::invalid("time.N", "N must be ≥ 1"));
        }
        Ok(Self { r, horizon, steps })
    }

    pub fn start(&self) -> f64 {
        self.r
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        (self.horizon - self.r) / self.steps as f64
    }

    /// Time of node `k`. Every module goes through this so that node times are
    /// bit-identical wherever they are recomputed.
    pub fn node(&self, k: usize) -> f64 {
        if k >= self.steps {
            self.horizon
        } else {
            self.r + k as f64 * self.dt()
        }
    }

    /// Index of the node closest to `t`, if `t` lies on the grid (relative
    /// tolerance `1e-9` of a step).
    pub fn level_of(&self, t: f64) -> Option<usize> {
        let dt = self.dt();
        let k = ((t - self.r) / dt).round();
        if k < 0.0 || k > self.steps as f64 {
            return None;
        }
        let k = k as usize;
        ((self.node(k) - t).abs() <= 1e-9 * dt).then_some(k)
    }

    pub fn with_steps(&self, steps: usize) -> Result<Self, ModelError> {
        Self::new(self.r, self.horizon, steps)
    }
}

/// One axis of a box-shaped state grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl Axis {
    pub fn dx(&self) -> f64 {
        (self.upper - self.lower) / (self.points - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.dx()
    }

    /// Physical coordinate of a possibly out-of-range lattice index.
    pub fn coord_ext(&self, i: i64) -> f64 {
        self.lower + i as f64 * self.dx()
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Tensor grid over a box in ℝⁿ. Cells are stored row-major with the last axis
/// varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    axes: Vec<Axis>,
}

impl SpaceGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self, ModelError> {
        if axes.is_empty() {
            return Err(ModelError::invalid("space.n", "n must be ≥ 1"));
        }
        for (i, ax) in axes.iter().enumerate() {
            if !(ax.lower.is_finite() && ax.upper.is_finite()) {
                return Err(ModelError::invalid(
                    "space",
                    format!("axis {i}: bounds must be finite"),
                ));
            }
            if ax.lower >= ax.upper {
                return Err(ModelError::invalid(
                    "space",
                    format!("axis {i}: lower must be < upper"),
                ));
            }
            if ax.points < 3 {
                return Err(ModelError::invalid(
                    "space.M",
                    format!("axis {i}: M must be ≥ 3"),
                ));
            }
        }
        Ok(Self { axes })
    }

    pub fn uniform_1d(lower: f64, upper: f64, points: usize) -> Result<Self, ModelError> {
        Self::new(vec![Axis {
            lower,
            upper,
            points,
        }])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn num_cells(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn multi_index(&self, cell: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        let mut rest = cell;
        for (d, ax) in self.axes.iter().enumerate().rev() {
            idx[d] = rest % ax.points;
            rest /= ax.points;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.axes)
            .fold(0, |acc, (&i, ax)| acc * ax.points + i)
    }

    pub fn coords(&self, cell: usize) -> Vec<f64> {
        self.multi_index(cell)
            .iter()
            .zip(&self.axes)
            .map(|(&i, ax)| ax.coord(i))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.axes)
            .all(|(&xi, ax)| xi >= ax.lower && xi <= ax.upper)
    }

    /// Nearest cell to `x`, clamped into the box.
    pub fn nearest_cell(&self, x: &[f64]) -> usize {
        let idx: Vec<usize> = x
            .iter()
            .zip(&self.axes)
            .map(|(&xi, ax)| {
                let k = ((xi - ax.lower) / ax.dx()).round();
                k.clamp(0.0, (ax.points - 1) as f64) as usize
            })
            .collect();
        self.flat_index(&idx)
    }

    /// Same box with `factor` times as many intervals per axis.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            axes: self
                .axes
                .iter()
                .map(|ax| Axis {
                    lower: ax.lower,
                    upper: ax.upper,
                    points: (ax.points - 1) * factor + 1,
                })
                .collect(),
        }
    }

    /// Multilinear interpolation of a tabulated field, clamped to the box.
    pub fn interpolate_clamped(&self, values: &[f64], x: &[f64]) -> f64 {
        let n = self.dim();
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for d in 0..n {
            let ax = &self.axes[d];
            let s = ((x[d] - ax.lower) / ax.dx()).clamp(0.0, (ax.points - 1) as f64);
            let i = (s.floor() as usize).min(ax.points - 2);
            base[d] = i;
            frac[d] = s - i as f64;
        }
        let mut acc = 0.0;
        let mut idx = vec![0usize; n];
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            for d in 0..n {
                let up = (corner >> d) & 1 == 1;
                idx[d] = base[d] + up as usize;
                w *= if up { frac[d] } else { 1.0 - frac[d] };
            }
            if w != 0.0 {
                acc += w * values[self.flat_index(&idx)];
            }
        }
        acc
    }
}
