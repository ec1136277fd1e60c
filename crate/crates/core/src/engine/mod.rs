//! Backward dynamic programming on the model grid.
//!
//! Each step computes, cell by cell,
//! `v(t_k, x) = max_{θ ∈ Γ(t_k, x)} [ v(t_{k+1}, ·) + dt·(L_h + K_h)v(t_{k+1}, ·) − dt·g ](x)`
//! with central second differences, upwind first differences on the
//! compensated drift `b − Σ λ y/(1+‖y‖²)`, and linear interpolation for jump
//! shifts. Under the CFL bound every weight is non-negative, so the step is
//! monotone, translation invariant and convex in the data.

mod convergence;
mod stencil;

use rayon::prelude::*;
use thiserror::Error;

pub use convergence::{convergence_study, ConvergenceRow, Reference};

use crate::model::{Control, ControlError, Model, ModelError};
use stencil::{candidate_value, cross_terms_monotone, worst_rate, Extended};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Values outside the box continue the line through the two outermost
    /// nodes of each axis.
    LinearExtrapolation,
    /// Values outside the box are the terminal payoff at that point.
    ClampToPayoff,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub boundary: Boundary,
    /// Admissible fraction of the stability limit, in `(0, 1]`.
    pub cfl_factor: f64,
    /// Width, in diffusion standard deviations, of the boundary-influence
    /// band reported with each level.
    pub band_sigmas: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            boundary: Boundary::LinearExtrapolation,
            cfl_factor: 1.0,
            band_sigmas: 5.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("CFL condition violated: dt = {dt} exceeds the maximal admissible dt = {max_dt}")]
    Cfl { dt: f64, max_dt: f64 },
    #[error("cross-derivative stencil not monotone for a candidate (a not diagonally dominant on this grid)")]
    CrossStencil,
    #[error("invalid scheme: {0}")]
    Scheme(String),
    #[error("grid solves support n ≤ 2, got n = {0}")]
    Dimension(usize),
    #[error("non-finite value at level {level}, cell {cell}")]
    NonFinite { level: usize, cell: usize },
    #[error("{0} is not a time-grid node")]
    NotANode(f64),
    #[error("field has {got} values, grid has {expected} cells")]
    FieldSize { expected: usize, got: usize },
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Reference(String),
}

/// Value function on the grid at one time level, with the maximizing
/// candidate index per cell (all zeros at the terminal level).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    pub t: f64,
    pub values: Vec<f64>,
    pub policy: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelDiagnostics {
    pub max_abs: f64,
    /// Distance from the box boundary within which boundary treatment may
    /// have influenced the values.
    pub band: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// `levels[k]` is the field at node `t_k`; `levels[N]` is the payoff.
    pub levels: Vec<ValueField>,
    /// Feedback control stitched from the per-level maximizers.
    pub control: Control,
    pub diagnostics: Vec<LevelDiagnostics>,
}

impl SolveResult {
    pub fn level0(&self) -> &ValueField {
        &self.levels[0]
    }

    /// Cells at level `k` outside the boundary-influence band.
    pub fn interior(&self, model: &Model, k: usize) -> Vec<usize> {
        interior_cells(model, self.diagnostics[k].band)
    }
}

/// Cells farther than `band` from every face of the box.
pub fn interior_cells(model: &Model, band: f64) -> Vec<usize> {
    (0..model.space.num_cells())
        .filter(|&c| {
            model
                .space
                .coords(c)
                .iter()
                .zip(model.space.axes())
                .all(|(&x, ax)| x - ax.lower > band && ax.upper - x > band)
        })
        .collect()
}

/// Boundary-influence band after `elapsed` time: drift and jump transport,
/// the longest single jump, `band_sigmas` diffusion standard deviations and
/// one stencil width.
pub fn boundary_band(model: &Model, scheme: &SchemeConfig, elapsed: f64) -> f64 {
    let mut transport = 0.0f64;
    let mut longest = 0.0f64;
    let mut spread = 0.0f64;
    for theta in model.gamma.all_candidates() {
        let drift = crate::model::norm(&theta.effective_drift());
        let jump_speed: f64 = theta.jumps.iter().map(|j| j.lambda * j.norm()).sum();
        transport = transport.max(drift + jump_speed);
        longest = theta.jumps.iter().map(|j| j.norm()).fold(longest, f64::max);
        let n = theta.dim();
        let trace: f64 = (0..n).map(|d| theta.a_entry(d, d)).sum();
        spread = spread.max(trace);
    }
    let dx = model
        .space
        .axes()
        .iter()
        .map(|a| a.dx())
        .fold(0.0, f64::max);
    if elapsed <= 0.0 {
        return 0.0;
    }
    transport * elapsed + longest + scheme.band_sigmas * (spread * elapsed).sqrt() + dx
}

/// Checks the explicit-step stability and monotonicity conditions against
/// every candidate of the model.
pub fn check_cfl(model: &Model, scheme: &SchemeConfig) -> Result<(), EngineError> {
    if !(scheme.cfl_factor > 0.0 && scheme.cfl_factor <= 1.0) {
        return Err(EngineError::Scheme(format!(
            "CFL factor {} not in (0, 1]",
            scheme.cfl_factor
        )));
    }
    if model.space.dim() > 2 {
        return Err(EngineError::Dimension(model.space.dim()));
    }
    let rate = worst_rate(&model.space, model.gamma.all_candidates());
    let dt = model.time.dt();
    if dt * rate > scheme.cfl_factor {
        return Err(EngineError::Cfl {
            dt,
            max_dt: scheme.cfl_factor / rate,
        });
    }
    if !model
        .gamma
        .all_candidates()
        .all(|t| cross_terms_monotone(&model.space, t))
    {
        return Err(EngineError::CrossStencil);
    }
    Ok(())
}

/// Largest admissible time step for `model` under `scheme`.
pub fn max_stable_dt(model: &Model, scheme: &SchemeConfig) -> f64 {
    scheme.cfl_factor / worst_rate(&model.space, model.gamma.all_candidates())
}

/// Terminal payoff sampled on the grid.
pub fn terminal_field(model: &Model) -> ValueField {
    let cells = model.space.num_cells();
    ValueField {
        t: model.time.horizon(),
        values: (0..cells)
            .map(|c| model.payoff.eval(&model.space.coords(c)))
            .collect(),
        policy: vec![0; cells],
    }
}

/// Which candidate each cell uses during a step.
#[derive(Clone, Copy)]
enum Choice<'a> {
    Max,
    Follow(&'a [usize]),
}

fn step(
    v_next: &[f64],
    level: usize,
    model: &Model,
    scheme: &SchemeConfig,
    choice: Choice<'_>,
) -> Result<ValueField, EngineError> {
    let t = model.time.node(level);
    let dt = model.time.dt();
    let ext = Extended::new(model, v_next, scheme.boundary);
    let out: Vec<(f64, usize)> = (0..model.space.num_cells())
        .into_par_iter()
        .map(|cell| {
            let x = model.space.coords(cell);
            let cands = model.gamma.candidates(level, cell);
            match choice {
                Choice::Follow(sel) => {
                    let k = sel[cell];
                    (candidate_value(&ext, model, cell, &x, t, dt, k, &cands[k]), k)
                }
                Choice::Max => {
                    let mut best = (f64::NEG_INFINITY, 0);
                    for (k, theta) in cands.iter().enumerate() {
                        let v = candidate_value(&ext, model, cell, &x, t, dt, k, theta);
                        if v > best.0 {
                            best = (v, k);
                        }
                    }
                    best
                }
            }
        })
        .collect();
    if let Some(cell) = out.iter().position(|(v, _)| !v.is_finite()) {
        return Err(EngineError::NonFinite { level, cell });
    }
    let (values, policy) = out.into_iter().unzip();
    Ok(ValueField { t, values, policy })
}

/// One backward step producing the field at node `level` from `v_next` at
/// node `level + 1`.
pub fn dp_step(
    v_next: &ValueField,
    level: usize,
    model: &Model,
    scheme: &SchemeConfig,
) -> Result<ValueField, EngineError> {
    check_cfl(model, scheme)?;
    check_field(model, &v_next.values)?;
    step(&v_next.values, level, model, scheme, Choice::Max)
}

fn check_field(model: &Model, values: &[f64]) -> Result<(), EngineError> {
    let expected = model.space.num_cells();
    if values.len() != expected {
        return Err(EngineError::FieldSize {
            expected,
            got: values.len(),
        });
    }
    Ok(())
}

/// Backward sweep from `terminal` at node `top` down to node `bottom`.
/// Returns the fields for nodes `bottom..=top`.
fn sweep(
    model: &Model,
    scheme: &SchemeConfig,
    terminal: ValueField,
    top: usize,
    bottom: usize,
    control: Option<&Control>,
) -> Result<Vec<ValueField>, EngineError> {
    let mut out = vec![terminal];
    for level in (bottom..top).rev() {
        let choice = match control {
            Some(c) => Choice::Follow(c.slice_at(level)),
            None => Choice::Max,
        };
        let next = step(&out.last().unwrap().values, level, model, scheme, choice)?;
        out.push(next);
    }
    out.reverse();
    Ok(out)
}

fn assemble(
    model: &Model,
    scheme: &SchemeConfig,
    levels: Vec<ValueField>,
    control: Option<Control>,
) -> SolveResult {
    let horizon = model.time.horizon();
    let diagnostics = levels
        .iter()
        .map(|f| LevelDiagnostics {
            max_abs: f.values.iter().map(|v| v.abs()).fold(0.0, f64::max),
            band: boundary_band(model, scheme, horizon - f.t),
        })
        .collect();
    let control = control.unwrap_or_else(|| {
        let steps = model.time.steps();
        Control::from_parts(
            (0..=steps).collect(),
            levels[..steps].iter().map(|f| f.policy.clone()).collect(),
        )
    });
    SolveResult {
        levels,
        control,
        diagnostics,
    }
}

/// Full backward sweep from the terminal payoff.
pub fn solve(model: &Model, scheme: &SchemeConfig) -> Result<SolveResult, EngineError> {
    check_cfl(model, scheme)?;
    let levels = sweep(
        model,
        scheme,
        terminal_field(model),
        model.time.steps(),
        0,
        None,
    )?;
    Ok(assemble(model, scheme, levels, None))
}

/// Backward sweep following `gamma` instead of maximizing.
pub fn evaluate_control_dp(
    gamma: &Control,
    model: &Model,
    scheme: &SchemeConfig,
) -> Result<SolveResult, EngineError> {
    check_cfl(model, scheme)?;
    gamma.validate(model)?;
    let levels = sweep(
        model,
        scheme,
        terminal_field(model),
        model.time.steps(),
        0,
        Some(gamma),
    )?;
    let mut levels = levels;
    // Policy slices report what the control used.
    let steps = model.time.steps();
    for (k, f) in levels.iter_mut().enumerate().take(steps) {
        f.policy = gamma.slice_at(k).to_vec();
    }
    Ok(assemble(model, scheme, levels, Some(gamma.clone())))
}

/// Solves `[t_mid, T]` first, then `[r, t_mid]` from the intermediate field
/// (with `scheme_lower`), and returns the largest absolute difference to the
/// single sweep with `scheme_upper` over all levels and cells.
pub fn check_time_consistency_with(
    model: &Model,
    scheme_upper: &SchemeConfig,
    scheme_lower: &SchemeConfig,
    t_mid: f64,
) -> Result<f64, EngineError> {
    let mid = model
        .time
        .level_of(t_mid)
        .ok_or(EngineError::NotANode(t_mid))?;
    check_cfl(model, scheme_upper)?;
    check_cfl(model, scheme_lower)?;
    let single = solve(model, scheme_upper)?;
    let steps = model.time.steps();
    let upper = sweep(model, scheme_upper, terminal_field(model), steps, mid, None)?;
    let joint = upper[0].clone();
    let lower = sweep(model, scheme_lower, joint, mid, 0, None)?;
    let composed = lower.iter().chain(upper.iter().skip(1));
    let mut worst = 0.0f64;
    for (a, b) in composed.zip(&single.levels) {
        for (x, y) in a.values.iter().zip(&b.values) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}

/// Time-consistency discrepancy with the same scheme on both pieces.
pub fn check_time_consistency(
    model: &Model,
    scheme: &SchemeConfig,
    t_mid: f64,
) -> Result<f64, EngineError> {
    check_time_consistency_with(model, scheme, scheme, t_mid)
}

#[cfg(test)]
mod tests;
