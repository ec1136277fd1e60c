use crate::model::{GammaMode, Model, Penalty};
use crate::oracles::{g_heat_reference, gaussian_semigroup};

use super::{boundary_band, interior_cells, solve, EngineError, SchemeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// Gaussian semigroup (one candidate) or G-heat closed form.
    ClosedForm,
    /// The finest refinement level.
    Finest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub dx: f64,
    pub dt: f64,
    pub sup_error: f64,
    /// `log₂(e_{k−1} / e_k)`; absent on the first row or when an error is 0.
    pub observed_order: Option<f64>,
}

type Oracle<'a> = Box<dyn Fn(&[f64]) -> Result<f64, EngineError> + 'a>;

fn closed_form(model: &Model) -> Result<Oracle<'_>, EngineError> {
    let unsupported = |why: &str| EngineError::Reference(format!("no closed-form reference: {why}"));
    if model.gamma.mode() != GammaMode::Constant {
        return Err(unsupported("Γ is not constant"));
    }
    if !matches!(model.penalty, Penalty::Zero) {
        return Err(unsupported("penalty is not zero"));
    }
    let cands = &model.gamma.sets()[0];
    if cands.iter().any(|t| !t.jumps.is_empty()) {
        return Err(unsupported("jumps present"));
    }
    let tau = model.time.horizon() - model.time.start();
    if cands.len() == 1 {
        let theta = cands[0].clone();
        return Ok(Box::new(move |x| {
            gaussian_semigroup(|p| model.payoff.eval(p), &theta.a, &theta.b, tau, x)
                .map_err(|e| EngineError::Reference(e.to_string()))
        }));
    }
    // G-heat: driftless, scalar multiples of the identity.
    let n = model.space.dim();
    let mut scalars = Vec::new();
    for theta in cands {
        let s = theta.a[0];
        let iso = (0..n).all(|i| (0..n).all(|j| theta.a_entry(i, j) == if i == j { s } else { 0.0 }));
        if !iso || theta.b.iter().any(|&b| b != 0.0) {
            return Err(unsupported("candidates are not driftless scalar diffusions"));
        }
        scalars.push(s);
    }
    let a_min = scalars.iter().copied().fold(f64::INFINITY, f64::min);
    let a_max = scalars.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Box::new(move |x| {
        g_heat_reference(&model.payoff, a_min, a_max, tau, x)
            .map_err(|e| EngineError::Reference(e.to_string()))
    }))
}

/// Solves `model` refined `0..levels` times (space halved, time quartered per
/// level) and measures the sup-norm error at level 0 on the interior of the
/// coarsest grid.
pub fn convergence_study(
    model: &Model,
    scheme: &SchemeConfig,
    levels: usize,
    reference: Reference,
) -> Result<Vec<ConvergenceRow>, EngineError> {
    if levels < 3 {
        return Err(EngineError::Reference("at least 3 refinement levels required".into()));
    }
    let coarse = &model.space;
    let tau = model.time.horizon() - model.time.start();
    let interior = interior_cells(model, boundary_band(model, scheme, tau));
    let mut fields = Vec::with_capacity(levels);
    let mut grids = Vec::with_capacity(levels);
    for level in 0..levels {
        let refined = model.refined(level as u32)?;
        let result = solve(&refined, scheme)?;
        // Values at the coarse nodes.
        let factor = 1usize << level;
        let sampled: Vec<f64> = (0..coarse.num_cells())
            .map(|c| {
                let idx: Vec<usize> = coarse.multi_index(c).iter().map(|i| i * factor).collect();
                result.levels[0].values[refined.space.flat_index(&idx)]
            })
            .collect();
        grids.push((refined.space.axis(0).dx(), refined.time.dt()));
        fields.push(sampled);
    }
    let (compared, exact): (usize, Vec<f64>) = match reference {
        Reference::ClosedForm => {
            let oracle = closed_form(model)?;
            let exact = interior
                .iter()
                .map(|&c| oracle(&coarse.coords(c)))
                .collect::<Result<Vec<_>, _>>()?;
            (levels, exact)
        }
        Reference::Finest => {
            let finest = &fields[levels - 1];
            (levels - 1, interior.iter().map(|&c| finest[c]).collect())
        }
    };
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(compared);
    for level in 0..compared {
        let sup_error = interior
            .iter()
            .zip(&exact)
            .map(|(&c, e)| (fields[level][c] - e).abs())
            .fold(0.0, f64::max);
        let observed_order = rows.last().and_then(|prev| {
            (prev.sup_error > 0.0 && sup_error > 0.0).then(|| (prev.sup_error / sup_error).log2())
        });
        rows.push(ConvergenceRow {
            level,
            dx: grids[level].0,
            dt: grids[level].1,
            sup_error,
            observed_order,
        });
    }
    Ok(rows)
}
