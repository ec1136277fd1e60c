//! Monte Carlo side: simulation of the controlled jump diffusion, estimators
//! of expectations and penalties, martingale statistics, control pasting and
//! the cocycle identity of the integrated running cost.
//!
//! Each path owns a ChaCha stream seeded from `seed ^ splitmix64(index)`, and
//! per-path results are combined by a fixed pairwise tree over path indices,
//! so estimates do not depend on the number of worker threads.

mod estimate;
mod pasting;
mod test_function;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

pub use estimate::McEstimate;
pub use pasting::{paste_bifurcation, paste_composition};
pub use test_function::{TestFunction, TestShape};

use crate::generators::full_generator;
use crate::model::{Control, ControlError, Model, ParamPoint, Payoff};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("{0} is not a time-grid node")]
    NotANode(f64),
    #[error("times must satisfy {0}")]
    Order(&'static str),
    #[error("state has dimension {got}, model has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("candidate diffusion matrix has no Cholesky factor")]
    Cholesky,
    #[error("exponential martingale check requires a candidate without jumps")]
    JumpsPresent,
    #[error("invalid Monte Carlo configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Control(#[from] ControlError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// Euler substeps per time-grid step.
    pub substeps: usize,
    /// Multiplier of the standard error in statistical checks.
    pub confidence: f64,
}

impl McConfig {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        Self {
            n_paths,
            seed,
            substeps: 1,
            confidence: 3.0,
        }
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps;
        self
    }

    fn validate(&self) -> Result<(), LabError> {
        if self.n_paths == 0 {
            return Err(LabError::Config("n_paths must be ≥ 1"));
        }
        if self.substeps == 0 {
            return Err(LabError::Config("substeps must be ≥ 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    pub step: usize,
    pub substep: usize,
    pub atom: usize,
    pub count: u64,
}

/// One simulated trajectory, recorded at time-grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Candidate index applied on each grid step.
    pub applied: Vec<usize>,
    pub jumps: Vec<JumpEvent>,
    /// `∫ g du` over each grid step (left-endpoint rule on substeps).
    pub step_penalty: Vec<f64>,
    pub accumulated_penalty: f64,
    pub seed: u64,
    pub left_box: bool,
}

impl PathSample {
    pub fn terminal(&self) -> &[f64] {
        self.states.last().unwrap()
    }

    /// Penalty accumulated between the `from`-th and `to`-th recorded nodes.
    pub fn penalty_between(&self, from: usize, to: usize) -> f64 {
        self.step_penalty[from..to].iter().sum()
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the stream of path `index`.
pub fn path_seed(base: u64, index: u64) -> u64 {
    base ^ splitmix64(index)
}

/// Precomputed per-candidate simulation data.
struct Prepared {
    chol: Vec<f64>,
    drift: Vec<f64>,
    poisson: Vec<Option<Poisson<f64>>>,
}

impl Prepared {
    fn new(theta: &ParamPoint, delta: f64) -> Result<Self, LabError> {
        Ok(Self {
            chol: theta.cholesky().ok_or(LabError::Cholesky)?,
            drift: theta.effective_drift(),
            poisson: theta
                .jumps
                .iter()
                .map(|j| {
                    let mean = j.lambda * delta;
                    (mean > 0.0).then(|| Poisson::new(mean).expect("positive finite mean"))
                })
                .collect(),
        })
    }
}

enum Driver<'a> {
    Control(&'a Control),
    Fixed(&'a ParamPoint),
}

struct Simulator<'a> {
    model: &'a Model,
    driver: Driver<'a>,
    /// `prepared[set][candidate]`, or a single entry for a fixed θ.
    prepared: Vec<Vec<Prepared>>,
    start: usize,
    end: usize,
    delta: f64,
    substeps: usize,
}

impl<'a> Simulator<'a> {
    fn new(
        model: &'a Model,
        driver: Driver<'a>,
        start: usize,
        end: usize,
        mc: &McConfig,
    ) -> Result<Self, LabError> {
        mc.validate()?;
        if start >= end || end > model.time.steps() {
            return Err(LabError::Order("start < end ≤ T"));
        }
        let delta = model.time.dt() / mc.substeps as f64;
        let prepared = match &driver {
            Driver::Control(c) => {
                c.validate(model)?;
                model
                    .gamma
                    .sets()
                    .iter()
                    .map(|set| set.iter().map(|t| Prepared::new(t, delta)).collect())
                    .collect::<Result<_, _>>()?
            }
            Driver::Fixed(theta) => vec![vec![Prepared::new(theta, delta)?]],
        };
        Ok(Self {
            model,
            driver,
            prepared,
            start,
            end,
            delta,
            substeps: mc.substeps,
        })
    }

    fn choose(&self, step: usize, x: &[f64]) -> (usize, &ParamPoint, &Prepared) {
        match self.driver {
            Driver::Fixed(theta) => (0, theta, &self.prepared[0][0]),
            Driver::Control(c) => {
                let cell = self.model.space.nearest_cell(x);
                let k = c.select(step, cell);
                let set = self.model.gamma.set_index(step, cell);
                (k, &self.model.gamma.candidates(step, cell)[k], &self.prepared[set][k])
            }
        }
    }

    /// Runs one path. `on_substep(t, x, θ)` sees the state at the start of
    /// every substep.
    fn run(
        &self,
        y: &[f64],
        seed: u64,
        mut on_substep: impl FnMut(f64, &[f64], &ParamPoint),
    ) -> PathSample {
        let model = self.model;
        let n = y.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let steps = self.end - self.start;
        let mut x = y.to_vec();
        let mut z = vec![0.0; n];
        let sqrt_delta = self.delta.sqrt();
        let mut sample = PathSample {
            times: Vec::with_capacity(steps + 1),
            states: Vec::with_capacity(steps + 1),
            applied: Vec::with_capacity(steps),
            jumps: Vec::new(),
            step_penalty: Vec::with_capacity(steps),
            accumulated_penalty: 0.0,
            seed,
            left_box: !model.space.contains(y),
        };
        sample.times.push(model.time.node(self.start));
        sample.states.push(x.clone());
        for step in self.start..self.end {
            let t0 = model.time.node(step);
            let (k, theta, prep) = self.choose(step, &x);
            let mut inc = 0.0;
            for sub in 0..self.substeps {
                let t = t0 + sub as f64 * self.delta;
                on_substep(t, &x, theta);
                inc += model.penalty.eval(t, &x, k, theta) * self.delta;
                for zi in z.iter_mut() {
                    *zi = StandardNormal.sample(&mut rng);
                }
                for i in 0..n {
                    let noise: f64 = (0..=i).map(|j| prep.chol[i * n + j] * z[j]).sum();
                    x[i] += prep.drift[i] * self.delta + sqrt_delta * noise;
                }
                for (a, dist) in prep.poisson.iter().enumerate() {
                    if let Some(dist) = dist {
                        let count = dist.sample(&mut rng) as u64;
                        if count > 0 {
                            for (xi, yi) in x.iter_mut().zip(&theta.jumps[a].y) {
                                *xi += count as f64 * yi;
                            }
                            sample.jumps.push(JumpEvent {
                                step,
                                substep: sub,
                                atom: a,
                                count,
                            });
                        }
                    }
                }
                if !sample.left_box && !model.space.contains(&x) {
                    sample.left_box = true;
                }
            }
            sample.accumulated_penalty += inc;
            sample.step_penalty.push(inc);
            sample.applied.push(k);
            sample.times.push(model.time.node(step + 1));
            sample.states.push(x.clone());
        }
        sample
    }
}

fn level(model: &Model, t: f64) -> Result<usize, LabError> {
    model.time.level_of(t).ok_or(LabError::NotANode(t))
}

fn check_state(model: &Model, y: &[f64]) -> Result<(), LabError> {
    if y.len() != model.space.dim() {
        return Err(LabError::Dimension {
            expected: model.space.dim(),
            got: y.len(),
        });
    }
    Ok(())
}

/// Runs `n_paths` paths in parallel and reduces `per_path` deterministically.
fn estimate<F>(sim: &Simulator<'_>, y: &[f64], mc: &McConfig, per_path: F) -> McEstimate
where
    F: Fn(&PathSample) -> f64 + Sync,
{
    let results: Vec<(f64, bool)> = (0..mc.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let p = sim.run(y, path_seed(mc.seed, i), |_, _, _| {});
            (per_path(&p), p.left_box)
        })
        .collect();
    McEstimate::from_samples(&results)
}

/// Simulates path `index` under `gamma` from `(r, y)` to `T`.
pub fn sample_path(
    gamma: &Control,
    r: f64,
    y: &[f64],
    model: &Model,
    mc: &McConfig,
    index: u64,
) -> Result<PathSample, LabError> {
    check_state(model, y)?;
    let sim = Simulator::new(model, Driver::Control(gamma), level(model, r)?, model.time.steps(), mc)?;
    Ok(sim.run(y, path_seed(mc.seed, index), |_, _, _| {}))
}

/// Estimate of `E[h(X_T)]` under `gamma` from `(r, y)`.
pub fn mc_expectation(
    gamma: &Control,
    h: &Payoff,
    r: f64,
    y: &[f64],
    model: &Model,
    mc: &McConfig,
) -> Result<McEstimate, LabError> {
    check_state(model, y)?;
    let sim = Simulator::new(model, Driver::Control(gamma), level(model, r)?, model.time.steps(), mc)?;
    Ok(estimate(&sim, y, mc, |p| h.eval(p.terminal())))
}

/// Estimate of the penalty `E[∫_r^T g du]` under `gamma` from `(r, y)`.
pub fn mc_penalty(
    gamma: &Control,
    r: f64,
    y: &[f64],
    model: &Model,
    mc: &McConfig,
) -> Result<McEstimate, LabError> {
    check_state(model, y)?;
    let sim = Simulator::new(model, Driver::Control(gamma), level(model, r)?, model.time.steps(), mc)?;
    Ok(estimate(&sim, y, mc, |p| p.accumulated_penalty))
}

/// Estimate of `E[h(X_T) − ∫_r^T g du]` on common paths.
pub fn mc_lower_bound(
    gamma: &Control,
    h: &Payoff,
    r: f64,
    y: &[f64],
    model: &Model,
    mc: &McConfig,
) -> Result<McEstimate, LabError> {
    check_state(model, y)?;
    let sim = Simulator::new(model, Driver::Control(gamma), level(model, r)?, model.time.steps(), mc)?;
    Ok(estimate(&sim, y, mc, |p| h.eval(p.terminal()) - p.accumulated_penalty))
}

/// Expectation, penalty and lower bound from one set of paths.
pub fn mc_all(
    gamma: &Control,
    h: &Payoff,
    r: f64,
    y: &[f64],
    model: &Model,
    mc: &McConfig,
) -> Result<[McEstimate; 3], LabError> {
    check_state(model, y)?;
    let sim = Simulator::new(model, Driver::Control(gamma), level(model, r)?, model.time.steps(), mc)?;
    let rows: Vec<([f64; 3], bool)> = (0..mc.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let p = sim.run(y, path_seed(mc.seed, i), |_, _, _| {});
            let v = h.eval(p.terminal());
            ([v, p.accumulated_penalty, v - p.accumulated_penalty], p.left_box)
        })
        .collect();
    Ok(std::array::from_fn(|q| {
        let col: Vec<(f64, bool)> = rows.iter().map(|(v, l)| (v[q], *l)).collect();
        McEstimate::from_samples(&col)
    }))
}

/// Mean of `exp{θᵀ(X_t − X_r) − (t−r)(θᵀb + ½θᵀaθ)}` for paths simulated
/// under the jump-free candidate `theta`; 1 in expectation.
pub fn exp_martingale_stat(
    theta: &ParamPoint,
    theta_vec: &[f64],
    r: f64,
    t: f64,
    y: &[f64],
    model: &Model,
    mc: &McConfig,
) -> Result<McEstimate, LabError> {
    if !theta.jumps.is_empty() {
        return Err(LabError::JumpsPresent);
    }
    check_state(model, y)?;
    if theta_vec.len() != y.len() {
        return Err(LabError::Dimension {
            expected: y.len(),
            got: theta_vec.len(),
        });
    }
    let sim = Simulator::new(model, Driver::Fixed(theta), level(model, r)?, level(model, t)?, mc)?;
    let n = y.len();
    let tb: f64 = theta_vec.iter().zip(&theta.b).map(|(a, b)| a * b).sum();
    let mut tat = 0.0;
    for i in 0..n {
        for j in 0..n {
            tat += theta_vec[i] * theta.a_entry(i, j) * theta_vec[j];
        }
    }
    let elapsed = model.time.node(sim.end) - model.time.node(sim.start);
    let compensator = elapsed * (tb + 0.5 * tat);
    Ok(estimate(&sim, y, mc, |p| {
        let dx: f64 = theta_vec
            .iter()
            .zip(p.terminal().iter().zip(&p.states[0]))
            .map(|(th, (xt, xr))| th * (xt - xr))
            .sum();
        (dx - compensator).exp()
    }))
}

/// Mean of `f(X_t) − f(X_r) − ∫_r^t (L + K) f(X_u) du` under the fixed
/// candidate `theta`, with the integral by the left-endpoint rule on
/// substeps; 0 in expectation up to an `O(δ)` bias.
pub fn generator_martingale_stat(
    theta: &ParamPoint,
    f: &TestFunction,
    r: f64,
    t: f64,
    y: &[f64],
    model: &Model,
    mc: &McConfig,
) -> Result<McEstimate, LabError> {
    check_state(model, y)?;
    let sim = Simulator::new(model, Driver::Fixed(theta), level(model, r)?, level(model, t)?, mc)?;
    let delta = sim.delta;
    let results: Vec<(f64, bool)> = (0..mc.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut integral = 0.0;
            let p = sim.run(y, path_seed(mc.seed, i), |_, x, th| {
                let (_, grad, hess) = f.derivatives(x);
                integral += full_generator(th, x, |q| f.value(q), &grad, &hess) * delta;
            });
            let z = f.value(p.terminal()) - f.value(&p.states[0]) - integral;
            (z, p.left_box)
        })
        .collect();
    Ok(McEstimate::from_samples(&results))
}

/// Generator-martingale statistic with its Euler-bias allowance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorCheck {
    pub estimate: McEstimate,
    /// `(mean_δ − mean_{δ/2}) / (δ/2)`, the measured first-order bias slope.
    pub bias_slope: f64,
    pub delta: f64,
    /// `confidence·SE + 2·|bias_slope|·δ`
    pub tolerance: f64,
    pub passed: bool,
}

/// Runs [`generator_martingale_stat`] at `mc.substeps` and at twice as many
/// and accepts `|mean| ≤ confidence·SE + 2·|slope|·δ`.
pub fn generator_check(
    theta: &ParamPoint,
    f: &TestFunction,
    r: f64,
    t: f64,
    y: &[f64],
    model: &Model,
    mc: &McConfig,
) -> Result<GeneratorCheck, LabError> {
    let coarse = generator_martingale_stat(theta, f, r, t, y, model, mc)?;
    let fine_mc = mc.with_substeps(2 * mc.substeps);
    let fine = generator_martingale_stat(theta, f, r, t, y, model, &fine_mc)?;
    let delta = model.time.dt() / mc.substeps as f64;
    let bias_slope = (coarse.mean - fine.mean) / (0.5 * delta);
    let tolerance = mc.confidence * coarse.se + 2.0 * bias_slope.abs() * delta;
    Ok(GeneratorCheck {
        estimate: coarse,
        bias_slope,
        delta,
        tolerance,
        passed: coarse.mean.abs() <= tolerance,
    })
}

/// Result of a cocycle check: the residual estimate and the largest
/// per-path residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CocycleReport {
    pub residual: McEstimate,
    pub max_abs_residual: f64,
}

/// Per path, `∫_s^u g − ∫_s^t g − ∫_t^u g` with each integral accumulated
/// independently over its own range.
pub fn cocycle_check(
    gamma: &Control,
    s: f64,
    t_mid: f64,
    u: f64,
    y: &[f64],
    model: &Model,
    mc: &McConfig,
) -> Result<CocycleReport, LabError> {
    check_state(model, y)?;
    let (ks, kt, ku) = (level(model, s)?, level(model, t_mid)?, level(model, u)?);
    if !(ks < kt && kt < ku) {
        return Err(LabError::Order("s < t < u"));
    }
    let sim = Simulator::new(model, Driver::Control(gamma), ks, ku, mc)?;
    let (a, b) = (kt - ks, ku - ks);
    let results: Vec<(f64, bool)> = (0..mc.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let p = sim.run(y, path_seed(mc.seed, i), |_, _, _| {});
            let whole = p.penalty_between(0, b);
            let first = p.penalty_between(0, a);
            let second = p.penalty_between(a, b);
            (whole - first - second, p.left_box)
        })
        .collect();
    let max_abs_residual = results.iter().map(|(v, _)| v.abs()).fold(0.0, f64::max);
    Ok(CocycleReport {
        residual: McEstimate::from_samples(&results),
        max_abs_residual,
    })
}
