//! Smooth compactly supported test functions with closed-form derivatives.

/// Polynomial factor of a windowed test function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestShape {
    Constant(f64),
    /// `x_axis`
    Linear { axis: usize },
    /// `‖x‖²`
    Quadratic,
}

/// `P(x) · Π_i ψ(x_i)` where `ψ = 1` on `[−radius, radius]`, `ψ = 0` beyond
/// `radius + ramp`, joined by a quintic smoothstep (C²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub shape: TestShape,
    pub radius: f64,
    pub ramp: f64,
}

struct Window {
    psi: f64,
    d1: f64,
    d2: f64,
}

impl TestFunction {
    pub fn new(shape: TestShape, radius: f64, ramp: f64) -> Self {
        Self { shape, radius, ramp }
    }

    fn window(&self, u: f64) -> Window {
        let z = (u.abs() - self.radius) / self.ramp;
        if z <= 0.0 {
            return Window { psi: 1.0, d1: 0.0, d2: 0.0 };
        }
        if z >= 1.0 {
            return Window { psi: 0.0, d1: 0.0, d2: 0.0 };
        }
        let s = z * z * z * (10.0 - 15.0 * z + 6.0 * z * z);
        let s1 = 30.0 * z * z * (z - 1.0) * (z - 1.0);
        let s2 = 60.0 * z * (1.0 - 3.0 * z + 2.0 * z * z);
        Window {
            psi: 1.0 - s,
            d1: -s1 * u.signum() / self.ramp,
            d2: -s2 / (self.ramp * self.ramp),
        }
    }

    fn poly(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let n = x.len();
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n * n];
        let value = match self.shape {
            TestShape::Constant(c) => c,
            TestShape::Linear { axis } => {
                grad[axis] = 1.0;
                x[axis]
            }
            TestShape::Quadratic => {
                for d in 0..n {
                    grad[d] = 2.0 * x[d];
                    hess[d * n + d] = 2.0;
                }
                x.iter().map(|v| v * v).sum()
            }
        };
        (value, grad, hess)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let psi: f64 = x.iter().map(|&u| self.window(u).psi).product();
        if psi == 0.0 {
            return 0.0;
        }
        self.poly(x).0 * psi
    }

    /// Value, gradient and row-major hessian at `x`.
    pub fn derivatives(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let n = x.len();
        let w: Vec<Window> = x.iter().map(|&u| self.window(u)).collect();
        let prod_except = |skip: &[usize]| -> f64 {
            (0..n)
                .filter(|i| !skip.contains(i))
                .map(|i| w[i].psi)
                .product()
        };
        let psi = prod_except(&[]);
        let mut gpsi = vec![0.0; n];
        let mut hpsi = vec![0.0; n * n];
        for i in 0..n {
            gpsi[i] = w[i].d1 * prod_except(&[i]);
            for j in 0..n {
                hpsi[i * n + j] = if i == j {
                    w[i].d2 * prod_except(&[i])
                } else {
                    w[i].d1 * w[j].d1 * prod_except(&[i, j])
                };
            }
        }
        let (p, gp, hp) = self.poly(x);
        let grad: Vec<f64> = (0..n).map(|i| gp[i] * psi + p * gpsi[i]).collect();
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hess[i * n + j] = hp[i * n + j] * psi
                    + gp[i] * gpsi[j]
                    + gpsi[i] * gp[j]
                    + p * hpsi[i * n + j];
            }
        }
        (p * psi, grad, hess)
    }
}
