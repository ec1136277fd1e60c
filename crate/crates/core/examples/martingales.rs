// Usage: cargo run --release --example martingales
//
// Martingale-problem checks by simulation: the exponential martingale of a
// diffusion and f(X_t) − f(X_r) − ∫(L + K)f(X_u)du for a jump diffusion.

use nonlocal_dp::lab::{exp_martingale_stat, generator_check, McConfig, TestFunction, TestShape};
use nonlocal_dp::model::{
    Bounds, GammaMap, JumpAtom, Model, ParamPoint, Payoff, Penalty, SpaceGrid, TimeGrid,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let theta = ParamPoint::diffusion_1d(0.8, -0.3);
    let model = Model::new(
        TimeGrid::new(0.0, 1.0, 10)?,
        SpaceGrid::uniform_1d(-8.0, 8.0, 33)?,
        GammaMap::constant(vec![theta.clone()]),
        Penalty::Zero,
        Payoff::Quadratic { scale: 1.0 },
        Bounds::default(),
    )?;
    let mc = McConfig::new(100_000, 11).with_substeps(8);
    for v in [0.0, 1.0, -1.5] {
        let y = exp_martingale_stat(&theta, &[v], 0.0, 1.0, &[0.0], &model, &mc)?;
        println!("exp martingale, θ = {v:>4}: mean {:.5} ± {:.5}", y.mean, y.se);
    }

    let jumpy = ParamPoint::new(vec![0.5], vec![0.1], vec![JumpAtom::new(vec![0.8], 1.5)]);
    for (name, f) in [
        ("windowed x ", TestFunction::new(TestShape::Linear { axis: 0 }, 4.0, 2.0)),
        ("windowed x²", TestFunction::new(TestShape::Quadratic, 4.0, 2.0)),
    ] {
        let g = generator_check(&jumpy, &f, 0.0, 1.0, &[0.0], &model, &mc)?;
        println!(
            "generator, {name}: mean {:+.5} ± {:.5}, bias slope {:+.4}, tolerance {:.5}, {}",
            g.estimate.mean,
            g.estimate.se,
            g.bias_slope,
            g.tolerance,
            if g.passed { "pass" } else { "FAIL" }
        );
    }
    Ok(())
}
