use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// One atom `λ·δ_y` of a finite Lévy measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpAtom {
    pub y: Vec<f64>,
    pub lambda: f64,
}

impl JumpAtom {
    pub fn new(y: Vec<f64>, lambda: f64) -> Self {
        Self { y, lambda }
    }

    pub fn norm(&self) -> f64 {
        norm(&self.y)
    }

    /// `y / (1 + ‖y‖²)`, the compensator direction of this atom.
    pub fn compensator(&self) -> Vec<f64> {
        let s = 1.0 / (1.0 + self.norm().powi(2));
        self.y.iter().map(|v| v * s).collect()
    }
}

/// An admissible generator triple: diffusion matrix, drift and a finite list
/// of jump atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    /// Row-major `n×n` diffusion matrix.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub jumps: Vec<JumpAtom>,
}

impl ParamPoint {
    pub fn new(a: Vec<f64>, b: Vec<f64>, jumps: Vec<JumpAtom>) -> Self {
        Self { a, b, jumps }
    }

    /// Scalar 1-d diffusion with drift and no jumps.
    pub fn diffusion_1d(a: f64, b: f64) -> Self {
        Self::new(vec![a], vec![b], Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn a_entry(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.dim() + j]
    }

    pub fn jump_rate(&self) -> f64 {
        self.jumps.iter().map(|j| j.lambda).sum()
    }

    /// Drift after absorbing the compensator of the jump part:
    /// `b − Σ λ_k y_k / (1 + ‖y_k‖²)`.
    pub fn effective_drift(&self) -> Vec<f64> {
        let mut out = self.b.clone();
        for atom in &self.jumps {
            for (o, c) in out.iter_mut().zip(atom.compensator()) {
                *o -= atom.lambda * c;
            }
        }
        out
    }

    /// Lower Cholesky factor of `a`, row-major. `None` if `a` is not SPD.
    pub fn cholesky(&self) -> Option<Vec<f64>> {
        let n = self.dim();
        if self.a.len() != n * n {
            return None;
        }
        let m = DMatrix::from_row_slice(n, n, &self.a);
        let l = m.cholesky()?.l();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = l[(i, j)];
            }
        }
        Some(out)
    }

    fn eigenvalues(&self) -> Vec<f64> {
        let n = self.dim();
        let m = DMatrix::from_row_slice(n, n, &self.a);
        SymmetricEigen::new(m).eigenvalues.iter().copied().collect()
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Admissibility bounds shared by every candidate of a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub eps_spd: f64,
    pub a_bound: f64,
    pub b_bound: f64,
    pub c_bound: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            eps_spd: 1e-10,
            a_bound: 10.0,
            b_bound: 10.0,
            c_bound: 10.0,
        }
    }
}

/// A single failed admissibility condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Shape(String),
    NonFinite(&'static str),
    NotSymmetric,
    NotPositiveDefinite { min_eigenvalue: f64 },
    DiffusionTooLarge { norm: f64, bound: f64 },
    DriftTooLarge { norm: f64, bound: f64 },
    ZeroJump { atom: usize },
    NegativeIntensity { atom: usize, lambda: f64 },
    LevyMoment { moment: f64, bound: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape(msg) => write!(f, "shape: {msg}"),
            Violation::NonFinite(what) => write!(f, "{what} has non-finite entries"),
            Violation::NotSymmetric => write!(f, "a not symmetric"),
            Violation::NotPositiveDefinite { min_eigenvalue } => write!(
                f,
                "a not strictly positive definite (smallest eigenvalue {min_eigenvalue})"
            ),
            Violation::DiffusionTooLarge { norm, bound } => write!(f, "‖a‖ = {norm} > {bound}"),
            Violation::DriftTooLarge { norm, bound } => write!(f, "‖b‖ = {norm} > {bound}"),
            Violation::ZeroJump { atom } => write!(f, "jump atom {atom} has y = 0"),
            Violation::NegativeIntensity { atom, lambda } => {
                write!(f, "jump atom {atom} has negative intensity {lambda}")
            }
            Violation::LevyMoment { moment, bound } => write!(f, "levy moment {moment} > {bound}"),
        }
    }
}

/// Lists every admissibility condition `theta` violates; empty iff admissible.
pub fn validate_param(theta: &ParamPoint, bounds: &Bounds) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = theta.dim();
    if n == 0 {
        out.push(Violation::Shape("empty drift vector".into()));
        return out;
    }
    if theta.a.len() != n * n {
        out.push(Violation::Shape(format!(
            "a has {} entries, expected {}",
            theta.a.len(),
            n * n
        )));
        return out;
    }
    for (k, atom) in theta.jumps.iter().enumerate() {
        if atom.y.len() != n {
            out.push(Violation::Shape(format!(
                "jump atom {k} has dimension {}, expected {n}",
                atom.y.len()
            )));
        }
    }
    if !out.is_empty() {
        return out;
    }
    if theta.a.iter().any(|v| !v.is_finite()) {
        out.push(Violation::NonFinite("a"));
    }
    if theta.b.iter().any(|v| !v.is_finite()) {
        out.push(Violation::NonFinite("b"));
    }
    if theta
        .jumps
        .iter()
        .any(|j| !j.lambda.is_finite() || j.y.iter().any(|v| !v.is_finite()))
    {
        out.push(Violation::NonFinite("jumps"));
    }
    if !out.is_empty() {
        return out;
    }

    let symmetric = (0..n).all(|i| {
        (0..i).all(|j| {
            let (x, y) = (theta.a_entry(i, j), theta.a_entry(j, i));
            (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs()))
        })
    });
    if !symmetric {
        out.push(Violation::NotSymmetric);
    } else {
        let eig = theta.eigenvalues();
        let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let max = eig.iter().map(|e| e.abs()).fold(0.0, f64::max);
        if min < bounds.eps_spd {
            out.push(Violation::NotPositiveDefinite { min_eigenvalue: min });
        }
        if max > bounds.a_bound {
            out.push(Violation::DiffusionTooLarge {
                norm: max,
                bound: bounds.a_bound,
            });
        }
    }
    let bn = norm(&theta.b);
    if bn > bounds.b_bound {
        out.push(Violation::DriftTooLarge {
            norm: bn,
            bound: bounds.b_bound,
        });
    }
    for (k, atom) in theta.jumps.iter().enumerate() {
        if atom.norm() == 0.0 {
            out.push(Violation::ZeroJump { atom: k });
        }
        if atom.lambda < 0.0 {
            out.push(Violation::NegativeIntensity {
                atom: k,
                lambda: atom.lambda,
            });
        }
    }
    let moment = levy_moment(&theta.jumps);
    if moment > bounds.c_bound {
        out.push(Violation::LevyMoment {
            moment,
            bound: bounds.c_bound,
        });
    }
    out
}

/// `Σ λ_k (‖y_k‖² 1{‖y_k‖≤1} + ‖y_k‖ 1{‖y_k‖>1})`.
pub fn levy_moment(jumps: &[JumpAtom]) -> f64 {
    jumps
        .iter()
        .map(|j| {
            let r = j.norm();
            let w = if r <= 1.0 { r * r } else { r };
            j.lambda * w
        })
        .sum()
}
