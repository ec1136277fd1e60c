// Usage: cargo run --release --example heat_oracle
//
// Solves the linear heat equation v_t + ½v_xx = 0 with a smoothed call
// payoff on [−6, 6] and compares the grid solution with Gauss–Hermite
// quadrature of the Gaussian semigroup away from the boundary band. The
// quadratic payoff is reproduced exactly by the scheme.

use nonlocal_dp::engine::{solve, SchemeConfig};
use nonlocal_dp::model::{load_model, Payoff};
use nonlocal_dp::oracles::gaussian_semigroup;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = load_model(include_str!("../models/heat.toml"))?;
    let scheme = SchemeConfig::default();
    let tau = model.time.horizon() - model.time.start();

    for model in [model.clone(), model.with_payoff(Payoff::Quadratic { scale: 1.0 })?] {
        let result = solve(&model, &scheme)?;
        let h = |z: &[f64]| model.payoff.eval(z);
        let interior = result.interior(&model, 0);
        let mut worst = 0.0f64;
        for &c in &interior {
            let exact = gaussian_semigroup(h, &[1.0], &[0.0], tau, &model.space.coords(c))?;
            worst = worst.max((result.level0().values[c] - exact).abs());
        }
        println!("{:?}", model.payoff);
        println!("  interior cells {} of {}, band {:.3}", interior.len(), model.space.num_cells(), result.diagnostics[0].band);
        println!("  max interior error vs oracle: {worst:.3e}");
        for x in [-1.0, 0.0, 0.5] {
            let c = model.space.nearest_cell(&[x]);
            let exact = gaussian_semigroup(h, &[1.0], &[0.0], tau, &[x])?;
            println!("  v(0, {x:>4}) = {:.6}   oracle {exact:.6}", result.level0().values[c]);
        }
    }
    Ok(())
}
