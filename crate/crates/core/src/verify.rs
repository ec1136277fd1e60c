//! Property suites shared by the `verify` command and the tests: martingale
//! statistics, cocycle additivity, control pasting, time consistency and
//! dominance of the maximized value over arbitrary controls.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{
    check_time_consistency, evaluate_control_dp, solve, Boundary, EngineError,
    SchemeConfig,
};
use crate::lab::{
    cocycle_check, exp_martingale_stat, generator_check, paste_bifurcation, paste_composition,
    sample_path, LabError, McConfig, TestFunction, TestShape,
};
use crate::model::{Control, Model, ModelError, ParamPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Martingale,
    Cocycle,
    Pasting,
    Consistency,
    Dominance,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [
        Suite::Martingale,
        Suite::Cocycle,
        Suite::Pasting,
        Suite::Consistency,
        Suite::Dominance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Martingale => "martingale",
            Suite::Cocycle => "cocycle",
            Suite::Pasting => "pasting",
            Suite::Consistency => "consistency",
            Suite::Dominance => "dominance",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite '{s}'"))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One verified property: pass iff `value ≤ tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(suite: Suite, name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            suite,
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub scheme: SchemeConfig,
    /// Paths for the martingale statistics.
    pub martingale_paths: usize,
    pub substeps: usize,
    /// Time steps of the simulation grid used by the martingale suite.
    pub martingale_steps: usize,
    pub cocycle_paths: usize,
    pub splits: usize,
    pub controls: usize,
}

impl VerifyConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            scheme: SchemeConfig::default(),
            martingale_paths: 100_000,
            substeps: 8,
            martingale_steps: 10,
            cocycle_paths: 1_000,
            splits: 10,
            controls: 20,
        }
    }
}

fn center(model: &Model) -> Vec<f64> {
    model
        .space
        .axes()
        .iter()
        .map(|a| 0.5 * (a.lower + a.upper))
        .collect()
}

fn distinct_candidates(model: &Model) -> Vec<&ParamPoint> {
    let mut out: Vec<&ParamPoint> = Vec::new();
    for theta in model.gamma.all_candidates() {
        if !out.contains(&theta) {
            out.push(theta);
        }
    }
    out
}

/// Runs one suite (or all of them, in order).
pub fn run_suite(model: &Model, suite: Suite, cfg: &VerifyConfig) -> Result<Vec<Check>, VerifyError> {
    match suite {
        Suite::All => {
            let mut checks = Vec::new();
            for s in Suite::EACH {
                checks.extend(run_suite(model, s, cfg)?);
            }
            Ok(checks)
        }
        Suite::Martingale => martingale(model, cfg),
        Suite::Cocycle => cocycle(model, cfg),
        Suite::Pasting => pasting(model, cfg),
        Suite::Consistency => consistency(model, cfg),
        Suite::Dominance => dominance(model, cfg),
    }
}

fn martingale(model: &Model, cfg: &VerifyConfig) -> Result<Vec<Check>, VerifyError> {
    let sim = model.with_steps(cfg.martingale_steps)?;
    let (r, t) = (sim.time.start(), sim.time.horizon());
    let y = center(model);
    let n = y.len();
    let mc = McConfig::new(cfg.martingale_paths, cfg.seed).with_substeps(cfg.substeps);
    let half = 0.5 * model.space.axes().iter().map(|a| a.width()).fold(f64::INFINITY, f64::min);
    let f = TestFunction::new(TestShape::Quadratic, 0.5 * half, 0.5 * half);
    let mut checks = Vec::new();
    for (i, theta) in distinct_candidates(model).into_iter().enumerate() {
        if theta.jumps.is_empty() {
            let v = vec![0.5 / (n as f64).sqrt(); n];
            let e = exp_martingale_stat(theta, &v, r, t, &y, &sim, &mc)?;
            checks.push(Check::new(
                Suite::Martingale,
                format!("exponential[{i}]"),
                (e.mean - 1.0).abs(),
                mc.confidence * e.se,
            ));
        }
        let g = generator_check(theta, &f, r, t, &y, &sim, &mc)?;
        checks.push(Check::new(
            Suite::Martingale,
            format!("generator[{i}]"),
            g.estimate.mean.abs(),
            g.tolerance,
        ));
    }
    Ok(checks)
}

fn random_split(steps: usize, rng: &mut ChaCha8Rng) -> (usize, usize, usize) {
    let mut k = [0usize; 3];
    loop {
        for v in k.iter_mut() {
            *v = rng.random_range(0..=steps);
        }
        k.sort_unstable();
        if k[0] < k[1] && k[1] < k[2] {
            return (k[0], k[1], k[2]);
        }
    }
}

fn cocycle(model: &Model, cfg: &VerifyConfig) -> Result<Vec<Check>, VerifyError> {
    let steps = model.time.steps();
    if steps < 2 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let y = center(model);
    let mc = McConfig::new(cfg.cocycle_paths, cfg.seed);
    let mut worst = 0.0f64;
    for _ in 0..cfg.splits {
        let gamma = Control::random(model, &mut rng);
        let (s, t, u) = random_split(steps, &mut rng);
        let node = |k| model.time.node(k);
        let rep = cocycle_check(&gamma, node(s), node(t), node(u), &y, model, &mc)?;
        worst = worst.max(rep.max_abs_residual);
    }
    Ok(vec![Check::new(Suite::Cocycle, "max_path_residual", worst, 1e-12)])
}

/// Stencil reach along the first axis, in cells per time step.
fn reach_per_step(model: &Model) -> usize {
    let dx = model.space.axis(0).dx();
    let jump = model
        .gamma
        .all_candidates()
        .flat_map(|t| t.jumps.iter().map(|j| j.y[0].abs()))
        .fold(0.0, f64::max);
    1.max((jump / dx).ceil() as usize + 1)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn pasting(model: &Model, cfg: &VerifyConfig) -> Result<Vec<Check>, VerifyError> {
    let steps = model.time.steps();
    let scheme = &cfg.scheme;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let gamma = Control::random(model, &mut rng);
    let delta = Control::random(model, &mut rng);
    let split = rng.random_range(1..steps.max(2)).min(steps - 1);
    let s = model.time.node(split);

    let lambda = paste_composition(&gamma, &delta, s, model).map_err(LabError::from)?;
    let vl = evaluate_control_dp(&lambda, model, scheme)?;
    let vd = evaluate_control_dp(&delta, model, scheme)?;
    let replay = (split..=steps)
        .map(|k| max_diff(&vl.levels[k].values, &vd.levels[k].values))
        .fold(0.0, f64::max);

    let y = center(model);
    let mc = McConfig::new(1, cfg.seed).with_substeps(2);
    let mut path_mismatch = 0.0;
    for i in 0..32 {
        let a = sample_path(&lambda, s, &y, model, &mc, i)?;
        let b = sample_path(&delta, s, &y, model, &mc, i)?;
        if a != b {
            path_mismatch += 1.0;
        }
    }

    // Bifurcation on the lower half of the first axis, checked where the
    // explicit stencil cannot see across the edge before T.
    let m0 = model.space.axis(0).points;
    let edge = m0 / 2;
    let per = reach_per_step(model);
    let late = (steps - 1).min((edge / 2 / per).max(1));
    let bsplit = steps - late;
    let region = |c: usize| model.space.multi_index(c)[0] < edge;
    let eta = paste_bifurcation(&gamma, &delta, model.time.node(bsplit), region, model)
        .map_err(LabError::from)?;
    let ve = evaluate_control_dp(&eta, model, scheme)?;
    let vg = evaluate_control_dp(&gamma, model, scheme)?;
    let vdb = &vd.levels[bsplit].values;
    let reach = per * late;
    let mut bif = 0.0f64;
    for c in 0..model.space.num_cells() {
        let i = model.space.multi_index(c)[0];
        let v = ve.levels[bsplit].values[c];
        if i + reach < edge {
            bif = bif.max((v - vg.levels[bsplit].values[c]).abs());
        } else if i >= edge + reach {
            bif = bif.max((v - vdb[c]).abs());
        }
    }
    Ok(vec![
        Check::new(Suite::Pasting, "composition_replay", replay, 0.0),
        Check::new(Suite::Pasting, "composition_path_locality", path_mismatch, 0.0),
        Check::new(Suite::Pasting, "bifurcation_replay", bif, 0.0),
    ])
}

fn consistency(model: &Model, cfg: &VerifyConfig) -> Result<Vec<Check>, VerifyError> {
    let steps = model.time.steps();
    let mut mids: Vec<usize> = [steps / 4, steps / 2, 3 * steps / 4]
        .into_iter()
        .filter(|&k| k > 0 && k < steps)
        .collect();
    mids.dedup();
    mids.into_iter()
        .map(|k| {
            let d = check_time_consistency(model, &cfg.scheme, model.time.node(k))?;
            Ok(Check::new(Suite::Consistency, format!("split_level_{k}"), d, 0.0))
        })
        .collect()
}

/// Dominance runs with payoff-clamped boundaries, where every weight of the
/// scheme is non-negative and the comparison holds on the whole grid; with
/// the extrapolating boundary it is asserted outside the boundary band.
fn dominance(model: &Model, cfg: &VerifyConfig) -> Result<Vec<Check>, VerifyError> {
    let mut checks = Vec::new();
    for boundary in [Boundary::ClampToPayoff, Boundary::LinearExtrapolation] {
        let scheme = SchemeConfig { boundary, ..cfg.scheme };
        let tag = match boundary {
            Boundary::ClampToPayoff => "clamp",
            Boundary::LinearExtrapolation => "extrapolate_interior",
        };
        let best = solve(model, &scheme)?;
        let cells: Vec<Vec<usize>> = (0..best.levels.len())
            .map(|k| match boundary {
                Boundary::ClampToPayoff => (0..model.space.num_cells()).collect(),
                Boundary::LinearExtrapolation => best.interior(model, k),
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut excess = f64::NEG_INFINITY;
        for _ in 0..cfg.controls {
            let gamma = Control::random(model, &mut rng);
            let v = evaluate_control_dp(&gamma, model, &scheme)?;
            for (k, cs) in cells.iter().enumerate() {
                for &c in cs {
                    excess = excess.max(v.levels[k].values[c] - best.levels[k].values[c]);
                }
            }
        }
        let star = evaluate_control_dp(&best.control, model, &scheme)?;
        let gap = star
            .levels
            .iter()
            .zip(&best.levels)
            .map(|(a, b)| max_diff(&a.values, &b.values))
            .fold(0.0, f64::max);
        checks.push(Check::new(Suite::Dominance, format!("{tag}_random_excess"), excess.max(0.0), 1e-12));
        checks.push(Check::new(Suite::Dominance, format!("{tag}_optimal_gap"), gap, 1e-12));
    }
    Ok(checks)
}
