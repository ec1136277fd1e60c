//! Pointwise generator evaluation: the local operator `L^{a,b}`, the
//! compensated jump difference `K̃`, its atomized integral `K^M`, and the
//! Hamiltonian `sup_θ [Lφ + Kφ − g]`.

use std::sync::Arc;

use thiserror::Error;

use crate::model::{JumpAtom, ParamPoint, Penalty};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("probe failed at shift {shift:?}: {message}")]
    Probe { shift: Vec<f64>, message: String },
    #[error("empty candidate set")]
    EmptyCandidates,
}

pub type Probe = Arc<dyn Fn(&[f64]) -> Result<f64, String> + Send + Sync>;

/// Value, first and second derivatives of a test function at one point, and
/// a handle evaluating the function at shifted points.
#[derive(Clone)]
pub struct DerivativeBundle {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Row-major `n×n`, symmetric.
    pub hessian: Vec<f64>,
    probe: Probe,
}

impl std::fmt::Debug for DerivativeBundle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DerivativeBundle")
            .field("value", &self.value)
            .field("gradient", &self.gradient)
            .field("hessian", &self.hessian)
            .finish_non_exhaustive()
    }
}

impl DerivativeBundle {
    /// The hessian is symmetrized on construction.
    pub fn new(value: f64, gradient: Vec<f64>, hessian: Vec<f64>, probe: Probe) -> Self {
        let n = gradient.len();
        let mut h = hessian;
        if h.len() == n * n {
            for i in 0..n {
                for j in 0..i {
                    let m = 0.5 * (h[i * n + j] + h[j * n + i]);
                    h[i * n + j] = m;
                    h[j * n + i] = m;
                }
            }
        }
        Self {
            value,
            gradient,
            hessian: h,
            probe,
        }
    }

    /// Bundle of a function known in closed form at `x`.
    pub fn from_fn<F>(x: &[f64], f: F, gradient: Vec<f64>, hessian: Vec<f64>) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let value = f(x);
        Self::new(value, gradient, hessian, Arc::new(move |p| Ok(f(p))))
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn probe(&self, point: &[f64]) -> Result<f64, String> {
        (self.probe)(point)
    }

    /// `weight·self + (1 − weight)·other`, including the probe.
    pub fn mix(&self, other: &Self, weight: f64) -> Self {
        let lin = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter()
                .zip(b)
                .map(|(x, y)| weight * x + (1.0 - weight) * y)
                .collect()
        };
        let (p, q) = (self.probe.clone(), other.probe.clone());
        Self::new(
            weight * self.value + (1.0 - weight) * other.value,
            lin(&self.gradient, &other.gradient),
            lin(&self.hessian, &other.hessian),
            Arc::new(move |pt| Ok(weight * p(pt)? + (1.0 - weight) * q(pt)?)),
        )
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let p = self.probe.clone();
        Self::new(
            factor * self.value,
            self.gradient.iter().map(|v| factor * v).collect(),
            self.hessian.iter().map(|v| factor * v).collect(),
            Arc::new(move |pt| Ok(factor * p(pt)?)),
        )
    }
}

/// `½ Tr(a D²v) + bᵀ Dv`; jump atoms of `theta` are ignored.
pub fn generator_apply(theta: &ParamPoint, bundle: &DerivativeBundle) -> Result<f64, GeneratorError> {
    let n = theta.dim();
    if bundle.dim() != n || bundle.hessian.len() != n * n {
        return Err(GeneratorError::DimensionMismatch {
            expected: n,
            got: bundle.dim(),
        });
    }
    let trace: f64 = theta
        .a
        .iter()
        .zip(&bundle.hessian)
        .map(|(a, h)| a * h)
        .sum();
    let drift: f64 = theta.b.iter().zip(&bundle.gradient).map(|(b, g)| b * g).sum();
    Ok(0.5 * trace + drift)
}

/// `φ(x+y) − φ(x) − yᵀ∇φ(x) / (1 + ‖y‖²)`.
pub fn tilde_k(bundle: &DerivativeBundle, x: &[f64], y: &[f64]) -> Result<f64, GeneratorError> {
    if x.len() != bundle.dim() || y.len() != bundle.dim() {
        return Err(GeneratorError::DimensionMismatch {
            expected: bundle.dim(),
            got: y.len(),
        });
    }
    let shifted: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    let far = bundle.probe(&shifted).map_err(|message| GeneratorError::Probe {
        shift: y.to_vec(),
        message,
    })?;
    let ny2: f64 = y.iter().map(|v| v * v).sum();
    let dot: f64 = y.iter().zip(&bundle.gradient).map(|(a, b)| a * b).sum();
    Ok(far - bundle.value - dot / (1.0 + ny2))
}

/// `Σ_k λ_k K̃φ(x)(y_k)`.
pub fn nonlocal_apply(
    jumps: &[JumpAtom],
    bundle: &DerivativeBundle,
    x: &[f64],
) -> Result<f64, GeneratorError> {
    jumps
        .iter()
        .map(|atom| Ok(atom.lambda * tilde_k(bundle, x, &atom.y)?))
        .sum()
}

/// `(L + K) f (x)` for a function given in closed form, with its gradient and
/// hessian at `x`. Same formula as [`generator_apply`] plus
/// [`nonlocal_apply`], without building a bundle.
pub fn full_generator<F: Fn(&[f64]) -> f64>(
    theta: &ParamPoint,
    x: &[f64],
    f: F,
    gradient: &[f64],
    hessian: &[f64],
) -> f64 {
    let trace: f64 = theta.a.iter().zip(hessian).map(|(a, h)| a * h).sum();
    let drift: f64 = theta.b.iter().zip(gradient).map(|(b, g)| b * g).sum();
    let mut out = 0.5 * trace + drift;
    if !theta.jumps.is_empty() {
        let fx = f(x);
        let mut shifted = x.to_vec();
        for atom in &theta.jumps {
            for ((s, xi), yi) in shifted.iter_mut().zip(x).zip(&atom.y) {
                *s = xi + yi;
            }
            let ny2: f64 = atom.y.iter().map(|v| v * v).sum();
            let dot: f64 = atom.y.iter().zip(gradient).map(|(a, b)| a * b).sum();
            out += atom.lambda * (f(&shifted) - fx - dot / (1.0 + ny2));
        }
    }
    out
}

/// Maximum over the candidates of `Lφ + Kφ − g`, with the lowest maximizing
/// index.
pub fn hamiltonian(
    t: f64,
    x: &[f64],
    bundle: &DerivativeBundle,
    gamma_set: &[ParamPoint],
    g: &Penalty,
) -> Result<(f64, usize), GeneratorError> {
    if gamma_set.is_empty() {
        return Err(GeneratorError::EmptyCandidates);
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for (k, theta) in gamma_set.iter().enumerate() {
        let v = generator_apply(theta, bundle)? + nonlocal_apply(&theta.jumps, bundle, x)?
            - g.eval(t, x, k, theta);
        if v > best.0 {
            best = (v, k);
        }
    }
    Ok(best)
}
