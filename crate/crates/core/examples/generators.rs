// Usage: cargo run --release --example generators
//
// Pointwise generators and the Hamiltonian of a candidate set applied to a
// smooth function given with its derivatives.

use nonlocal_dp::generators::{generator_apply, hamiltonian, nonlocal_apply, DerivativeBundle};
use nonlocal_dp::model::{JumpAtom, ParamPoint, Penalty};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // φ(x) = sin x at x = 0.3.
    let x = [0.3];
    let phi = DerivativeBundle::from_fn(&x, |z: &[f64]| z[0].sin(), vec![x[0].cos()], vec![-x[0].sin()]);

    let quiet = ParamPoint::diffusion_1d(0.5, 0.0);
    let jumpy = ParamPoint::new(vec![0.1], vec![0.15], vec![JumpAtom::new(vec![0.7], 3.0)]);
    println!("L φ (a = 0.5, b = 0)     = {:+.6}", generator_apply(&quiet, &phi)?);
    println!("K φ (atom 0.7 at rate 3) = {:+.6}", nonlocal_apply(&jumpy.jumps, &phi, &x)?);

    let set = [quiet, jumpy];
    for penalty in [Penalty::Zero, Penalty::QuadraticDrift { eta: 80.0 }] {
        let (h, k) = hamiltonian(0.0, &x, &phi, &set, &penalty)?;
        println!("H φ with {penalty:?}: {h:+.6} (candidate {k})");
    }
    Ok(())
}
