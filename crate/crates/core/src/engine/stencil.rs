//! Discrete operator `(w, θ) ↦ w(x) + dt·(L^{a,b_eff} w + Σ λ (w(x+y) − w(x)))(x) − dt·g`
//! on a tensor grid, with the boundary extension used for off-grid reads.

use crate::model::{Model, ParamPoint, Payoff, SpaceGrid};

use super::Boundary;

/// Read access to a level's values, extended beyond the box.
pub(crate) struct Extended<'a> {
    grid: &'a SpaceGrid,
    values: &'a [f64],
    boundary: Boundary,
    payoff: &'a Payoff,
}

impl<'a> Extended<'a> {
    pub(crate) fn new(model: &'a Model, values: &'a [f64], boundary: Boundary) -> Self {
        Self {
            grid: &model.space,
            values,
            boundary,
            payoff: &model.payoff,
        }
    }

    fn in_range(&self, idx: &[i64]) -> bool {
        idx.iter()
            .zip(self.grid.axes())
            .all(|(&i, ax)| i >= 0 && (i as usize) < ax.points)
    }

    fn flat(&self, idx: &[i64]) -> usize {
        idx.iter()
            .zip(self.grid.axes())
            .fold(0, |acc, (&i, ax)| acc * ax.points + i as usize)
    }

    /// Value at lattice index `idx`, which may lie outside the box.
    pub(crate) fn at(&self, idx: &mut [i64]) -> f64 {
        if self.in_range(idx) {
            return self.values[self.flat(idx)];
        }
        match self.boundary {
            Boundary::ClampToPayoff => {
                let x: Vec<f64> = idx
                    .iter()
                    .zip(self.grid.axes())
                    .map(|(&i, ax)| ax.coord_ext(i))
                    .collect();
                self.payoff.eval(&x)
            }
            Boundary::LinearExtrapolation => self.extrapolate(idx),
        }
    }

    /// Linear extrapolation from the two outermost nodes, one axis at a time.
    fn extrapolate(&self, idx: &mut [i64]) -> f64 {
        let Some(d) = idx
            .iter()
            .zip(self.grid.axes())
            .position(|(&i, ax)| i < 0 || i as usize >= ax.points)
        else {
            return self.values[self.flat(idx)];
        };
        let m = self.grid.axis(d).points as i64;
        let orig = idx[d];
        let (edge, inner, dist) = if orig < 0 {
            (0, 1, -orig)
        } else {
            (m - 1, m - 2, orig - (m - 1))
        };
        idx[d] = edge;
        let ve = self.extrapolate(idx);
        idx[d] = inner;
        let vi = self.extrapolate(idx);
        idx[d] = orig;
        ve + dist as f64 * (ve - vi)
    }

    /// Multilinear interpolation at lattice coordinates `pos` (fractional
    /// indices), using the extension outside the box.
    pub(crate) fn interpolate(&self, pos: &[f64]) -> f64 {
        let n = pos.len();
        let base: Vec<i64> = pos.iter().map(|p| p.floor() as i64).collect();
        let frac: Vec<f64> = pos.iter().zip(&base).map(|(p, &b)| p - b as f64).collect();
        let mut idx = base.clone();
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            for d in 0..n {
                let up = (corner >> d) & 1 == 1;
                idx[d] = base[d] + up as i64;
                w *= if up { frac[d] } else { 1.0 - frac[d] };
            }
            if w != 0.0 {
                acc += w * self.at(&mut idx);
            }
        }
        acc
    }
}

/// Rate bounding the explicit step, `Σ a_dd/dx_d² + Σ |b_eff,d|/dx_d + Σ λ`,
/// with each maximum taken separately over `candidates`.
pub(crate) fn worst_rate<'a>(
    grid: &SpaceGrid,
    candidates: impl Iterator<Item = &'a ParamPoint>,
) -> f64 {
    let n = grid.dim();
    let mut max_a = vec![0.0f64; n];
    let mut max_b = vec![0.0f64; n];
    let mut max_lambda = 0.0f64;
    for theta in candidates {
        let beff = theta.effective_drift();
        for d in 0..n {
            max_a[d] = max_a[d].max(theta.a_entry(d, d));
            max_b[d] = max_b[d].max(beff[d].abs());
        }
        max_lambda = max_lambda.max(theta.jump_rate());
    }
    (0..n)
        .map(|d| {
            let dx = grid.axis(d).dx();
            max_a[d] / (dx * dx) + max_b[d] / dx
        })
        .sum::<f64>()
        + max_lambda
}

/// Whether the cross-derivative stencil keeps all off-centre weights
/// non-negative for this candidate.
pub(crate) fn cross_terms_monotone(grid: &SpaceGrid, theta: &ParamPoint) -> bool {
    let n = grid.dim();
    (0..n).all(|d| {
        let dxd = grid.axis(d).dx();
        let off: f64 = (0..n)
            .filter(|&e| e != d)
            .map(|e| theta.a_entry(d, e).abs() / (dxd * grid.axis(e).dx()))
            .sum();
        theta.a_entry(d, d) / (dxd * dxd) >= off
    })
}

/// Applies the discrete generator of `theta` to `w` at `cell`:
/// `(L_h w + K_h w)(x)`.
pub(crate) fn discrete_generator(
    ext: &Extended<'_>,
    grid: &SpaceGrid,
    cell: usize,
    theta: &ParamPoint,
) -> f64 {
    let n = grid.dim();
    let center: Vec<i64> = grid.multi_index(cell).iter().map(|&i| i as i64).collect();
    let w0 = ext.values[cell];
    let mut idx = center.clone();
    let mut shifted = |delta: &[(usize, i64)]| {
        idx.copy_from_slice(&center);
        for &(d, s) in delta {
            idx[d] += s;
        }
        ext.at(&mut idx)
    };

    let mut op = 0.0;
    let beff = theta.effective_drift();
    for d in 0..n {
        let dx = grid.axis(d).dx();
        let up = shifted(&[(d, 1)]);
        let down = shifted(&[(d, -1)]);
        op += 0.5 * theta.a_entry(d, d) * (up - 2.0 * w0 + down) / (dx * dx);
        let b = beff[d];
        if b > 0.0 {
            op += b * (up - w0) / dx;
        } else if b < 0.0 {
            op += b * (w0 - down) / dx;
        }
    }
    for d in 0..n {
        for e in (d + 1)..n {
            let a = theta.a_entry(d, e);
            if a == 0.0 {
                continue;
            }
            let h = grid.axis(d).dx() * grid.axis(e).dx();
            let axis_sum = shifted(&[(d, 1)]) + shifted(&[(d, -1)]) + shifted(&[(e, 1)])
                + shifted(&[(e, -1)]);
            // a·∂_de with the diagonal pair aligned to sign(a).
            let diag = if a > 0.0 {
                shifted(&[(d, 1), (e, 1)]) + shifted(&[(d, -1), (e, -1)])
            } else {
                shifted(&[(d, 1), (e, -1)]) + shifted(&[(d, -1), (e, 1)])
            };
            op += a.abs() * (diag + 2.0 * w0 - axis_sum) / (2.0 * h);
        }
    }
    if !theta.jumps.is_empty() {
        let x = grid.coords(cell);
        for atom in &theta.jumps {
            let pos: Vec<f64> = (0..n)
                .map(|d| {
                    let ax = grid.axis(d);
                    (x[d] + atom.y[d] - ax.lower) / ax.dx()
                })
                .collect();
            op += atom.lambda * (ext.interpolate(&pos) - w0);
        }
    }
    op
}

/// One explicit update for candidate `theta` at `cell`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn candidate_value(
    ext: &Extended<'_>,
    model: &Model,
    cell: usize,
    x: &[f64],
    t: f64,
    dt: f64,
    index: usize,
    theta: &ParamPoint,
) -> f64 {
    let op = discrete_generator(ext, &model.space, cell, theta);
    let g = model.penalty.eval(t, x, index, theta);
    ext.values[cell] + dt * op - dt * g
}
