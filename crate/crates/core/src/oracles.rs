//! Independent references for the engine: Gaussian expectations by
//! Gauss–Hermite quadrature, the G-heat closed form for convex/concave
//! payoffs, and an enumeration-based dynamic program for tiny 1-d models.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::engine::{Boundary, SchemeConfig};
use crate::model::{Curvature, Model, ParamPoint, Payoff};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("quadrature produced a non-finite value")]
    NonFinite,
    #[error("payoff is neither convex nor concave")]
    UnflaggedPayoff,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("instance exceeds brute-force caps: {0}")]
    CapsExceeded(String),
}

const ORDERS: [usize; 4] = [64, 128, 256, 512];

/// Standard-normal Gauss–Hermite rule by Golub–Welsch: nodes are the
/// eigenvalues of the Jacobi matrix of the probabilists' Hermite
/// polynomials, weights the squared first eigenvector components.
fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let off = (k as f64).sqrt();
        jacobi[(k - 1, k)] = off;
        jacobi[(k, k - 1)] = off;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

fn rule(order_slot: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static RULES: [OnceLock<(Vec<f64>, Vec<f64>)>; 4] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    RULES[order_slot].get_or_init(|| gauss_hermite(ORDERS[order_slot]))
}

fn quadrature<F: Fn(&[f64]) -> f64>(h: &F, mean: &[f64], chol: &[f64], slot: usize) -> f64 {
    let (z, w) = rule(slot);
    match mean.len() {
        1 => z
            .iter()
            .zip(w)
            .map(|(zi, wi)| wi * h(&[mean[0] + chol[0] * zi]))
            .sum(),
        _ => {
            let mut acc = 0.0;
            let mut p = [0.0; 2];
            for (z1, w1) in z.iter().zip(w) {
                let mut inner = 0.0;
                for (z2, w2) in z.iter().zip(w) {
                    p[0] = mean[0] + chol[0] * z1;
                    p[1] = mean[1] + chol[2] * z1 + chol[3] * z2;
                    inner += w2 * h(&p);
                }
                acc += w1 * inner;
            }
            acc
        }
    }
}

/// `E[h(x + b·τ + √τ·chol(a)·Z)]`, `Z` standard normal in ℝⁿ (n ≤ 2).
///
/// Starts at order 64 and doubles until two successive orders agree to
/// `1e-10` (relative for large values), capped at 512.
pub fn gaussian_semigroup<F>(h: F, a: &[f64], b: &[f64], tau: f64, x: &[f64]) -> Result<f64, OracleError>
where
    F: Fn(&[f64]) -> f64,
{
    let n = x.len();
    if n == 0 || n > 2 || b.len() != n || a.len() != n * n {
        return Err(OracleError::Unsupported(format!("dimension {n}")));
    }
    if tau < 0.0 {
        return Err(OracleError::Unsupported("negative elapsed time".into()));
    }
    if tau == 0.0 {
        let v = h(x);
        return if v.is_finite() { Ok(v) } else { Err(OracleError::NonFinite) };
    }
    let theta = ParamPoint::new(a.iter().map(|v| v * tau).collect(), b.to_vec(), vec![]);
    let chol = theta
        .cholesky()
        .ok_or_else(|| OracleError::Unsupported("a not positive definite".into()))?;
    let mean: Vec<f64> = x.iter().zip(b).map(|(xi, bi)| xi + bi * tau).collect();
    let mut prev = quadrature(&h, &mean, &chol, 0);
    for slot in 1..ORDERS.len() {
        let next = quadrature(&h, &mean, &chol, slot);
        if !next.is_finite() {
            return Err(OracleError::NonFinite);
        }
        let done = (next - prev).abs() <= 1e-10 * next.abs().max(1.0);
        prev = next;
        if done {
            break;
        }
    }
    if prev.is_finite() {
        Ok(prev)
    } else {
        Err(OracleError::NonFinite)
    }
}

/// Value of the driftless G-heat problem with scalar variance in
/// `[a_min, a_max]` (times the identity): the maximal variance for convex
/// payoffs, the minimal one for concave payoffs.
pub fn g_heat_reference(h: &Payoff, a_min: f64, a_max: f64, tau: f64, x: &[f64]) -> Result<f64, OracleError> {
    let a = match h.curvature() {
        Curvature::Convex | Curvature::Affine => a_max,
        Curvature::Concave => a_min,
        Curvature::Unknown => return Err(OracleError::UnflaggedPayoff),
    };
    let n = x.len();
    let mut mat = vec![0.0; n * n];
    for d in 0..n {
        mat[d * n + d] = a;
    }
    gaussian_semigroup(|p| h.eval(p), &mat, &vec![0.0; n], tau, x)
}

/// Caps for [`brute_force_dp`].
pub const BRUTE_MAX_STEPS: usize = 4;
pub const BRUTE_MAX_CELLS: usize = 7;
pub const BRUTE_MAX_CANDIDATES: usize = 3;

/// Affine map `w ↦ weights·w + constant` giving one cell's update under one
/// candidate.
struct Row {
    weights: Vec<f64>,
    constant: f64,
}

impl Row {
    fn apply(&self, w: &[f64]) -> f64 {
        self.weights.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + self.constant
    }
}

/// Adds `scale · w(j)` for a possibly out-of-range lattice index `j`.
fn add_read(row: &mut Row, model: &Model, boundary: Boundary, j: i64, scale: f64) {
    let m = row.weights.len() as i64;
    if (0..m).contains(&j) {
        row.weights[j as usize] += scale;
        return;
    }
    match boundary {
        Boundary::ClampToPayoff => {
            row.constant += scale * model.payoff.eval(&[model.space.axis(0).coord_ext(j)]);
        }
        Boundary::LinearExtrapolation => {
            if j < 0 {
                row.weights[0] += scale * (1.0 - j as f64);
                row.weights[1] += scale * j as f64;
            } else {
                let d = (j - (m - 1)) as f64;
                row.weights[(m - 1) as usize] += scale * (1.0 + d);
                row.weights[(m - 2) as usize] -= scale * d;
            }
        }
    }
}

fn transition_row(model: &Model, boundary: Boundary, cell: usize, theta: &ParamPoint, dt: f64) -> Row {
    let m = model.space.num_cells();
    let ax = model.space.axis(0);
    let h = ax.dx();
    let i = cell as i64;
    let mut row = Row {
        weights: vec![0.0; m],
        constant: 0.0,
    };
    row.weights[cell] += 1.0;
    let diff = 0.5 * theta.a[0] / (h * h);
    add_read(&mut row, model, boundary, i + 1, dt * diff);
    add_read(&mut row, model, boundary, i - 1, dt * diff);
    row.weights[cell] -= 2.0 * dt * diff;
    let comp: f64 = theta
        .jumps
        .iter()
        .map(|j| j.lambda * j.y[0] / (1.0 + j.y[0] * j.y[0]))
        .sum();
    let drift = theta.b[0] - comp;
    if drift > 0.0 {
        add_read(&mut row, model, boundary, i + 1, dt * drift / h);
        row.weights[cell] -= dt * drift / h;
    } else if drift < 0.0 {
        add_read(&mut row, model, boundary, i - 1, -dt * drift / h);
        row.weights[cell] += dt * drift / h;
    }
    let x = ax.coord(cell);
    for jump in &theta.jumps {
        let s = (x + jump.y[0] - ax.lower) / h;
        let base = s.floor();
        let f = s - base;
        add_read(&mut row, model, boundary, base as i64, dt * jump.lambda * (1.0 - f));
        if f != 0.0 {
            add_read(&mut row, model, boundary, base as i64 + 1, dt * jump.lambda * f);
        }
        row.weights[cell] -= dt * jump.lambda;
    }
    row
}

/// Exhaustive dynamic program for tiny 1-d models. At every step all
/// cell-wise candidate assignments are enumerated and each cell keeps the
/// best value any assignment gives it. Returns `table[k][cell]` for
/// `k = 0..=N`.
pub fn brute_force_dp(model: &Model, scheme: &SchemeConfig) -> Result<Vec<Vec<f64>>, OracleError> {
    let steps = model.time.steps();
    let cells = model.space.num_cells();
    if model.space.dim() != 1 {
        return Err(OracleError::CapsExceeded("only 1-d grids".into()));
    }
    if steps > BRUTE_MAX_STEPS || cells > BRUTE_MAX_CELLS || model.gamma.max_candidates() > BRUTE_MAX_CANDIDATES {
        return Err(OracleError::CapsExceeded(format!(
            "{steps} steps, {cells} cells, {} candidates",
            model.gamma.max_candidates()
        )));
    }
    let dt = model.time.dt();
    let mut table = vec![Vec::new(); steps + 1];
    table[steps] = (0..cells)
        .map(|c| model.payoff.eval(&model.space.coords(c)))
        .collect();
    for k in (0..steps).rev() {
        let t = model.time.node(k);
        let rows: Vec<Vec<(Row, f64)>> = (0..cells)
            .map(|c| {
                let x = model.space.coords(c);
                model
                    .gamma
                    .candidates(k, c)
                    .iter()
                    .enumerate()
                    .map(|(idx, theta)| {
                        let g = model.penalty.eval(t, &x, idx, theta);
                        (transition_row(model, scheme.boundary, c, theta, dt), g)
                    })
                    .collect()
            })
            .collect();
        let counts: Vec<usize> = rows.iter().map(Vec::len).collect();
        let next = &table[k + 1];
        let mut best = vec![f64::NEG_INFINITY; cells];
        let mut assignment = vec![0usize; cells];
        loop {
            for c in 0..cells {
                let (row, g) = &rows[c][assignment[c]];
                let v = row.apply(next) - dt * g;
                if v > best[c] {
                    best[c] = v;
                }
            }
            // Odometer increment over all assignments.
            let mut d = 0;
            while d < cells {
                assignment[d] += 1;
                if assignment[d] < counts[d] {
                    break;
                }
                assignment[d] = 0;
                d += 1;
            }
            if d == cells {
                break;
            }
        }
        table[k] = best;
    }
    Ok(table)
}
