use super::grid::SpaceGrid;
use super::param::norm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curvature {
    Convex,
    Concave,
    Affine,
    Unknown,
}

/// Terminal payoff `h(X_T)`. One-dimensional families read the first
/// coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum Payoff {
    /// `scale · ‖x‖²`
    Quadratic { scale: f64 },
    /// `scale · ‖x‖`
    Absolute { scale: f64 },
    /// `slope · x + offset`
    Linear { slope: Vec<f64>, offset: f64 },
    /// `max(x₁ − strike, 0)`, or its softplus smoothing
    /// `ε·ln(1 + exp((x₁ − strike)/ε))` when `smoothing = ε > 0`.
    Call { strike: f64, smoothing: f64 },
    /// Logistic step `1 / (1 + exp(−(x₁ − threshold)/width))`.
    Indicator { threshold: f64, width: f64 },
    /// Samples on the model grid, multilinear in between, constant outside.
    Table { grid: SpaceGrid, values: Vec<f64> },
}

impl Payoff {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Payoff::Quadratic { scale } => scale * x.iter().map(|v| v * v).sum::<f64>(),
            Payoff::Absolute { scale } => scale * norm(x),
            Payoff::Linear { slope, offset } => {
                offset + slope.iter().zip(x).map(|(s, v)| s * v).sum::<f64>()
            }
            Payoff::Call { strike, smoothing } => {
                let m = x[0] - strike;
                if *smoothing > 0.0 {
                    let z = m / smoothing;
                    smoothing * (z.max(0.0) + (-z.abs()).exp().ln_1p())
                } else {
                    m.max(0.0)
                }
            }
            Payoff::Indicator { threshold, width } => {
                1.0 / (1.0 + (-(x[0] - threshold) / width).exp())
            }
            Payoff::Table { grid, values } => grid.interpolate_clamped(values, x),
        }
    }

    pub fn curvature(&self) -> Curvature {
        match self {
            Payoff::Quadratic { scale } | Payoff::Absolute { scale } => {
                if *scale > 0.0 {
                    Curvature::Convex
                } else if *scale < 0.0 {
                    Curvature::Concave
                } else {
                    Curvature::Affine
                }
            }
            Payoff::Linear { .. } => Curvature::Affine,
            Payoff::Call { .. } => Curvature::Convex,
            Payoff::Indicator { .. } | Payoff::Table { .. } => Curvature::Unknown,
        }
    }

    /// Lower bound of the payoff over the grid samples.
    pub fn grid_min(&self, grid: &SpaceGrid) -> f64 {
        (0..grid.num_cells())
            .map(|c| self.eval(&grid.coords(c)))
            .fold(f64::INFINITY, f64::min)
    }
}
