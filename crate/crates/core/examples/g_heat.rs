// Usage: cargo run --release --example g_heat
//
// G-heat equation: the volatility ranges over {0.25, 1}. For a convex payoff
// the maximizing law always picks the largest variance, for a concave payoff
// the smallest, so the value equals a Gaussian expectation.

use nonlocal_dp::engine::{solve, SchemeConfig};
use nonlocal_dp::model::{load_model, Payoff};
use nonlocal_dp::oracles::g_heat_reference;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = load_model(include_str!("../models/gheat.toml"))?;
    let tau = base.time.horizon() - base.time.start();
    let scheme = SchemeConfig::default();
    let candidates = base.gamma.sets()[0].clone();

    for (name, payoff) in [
        ("convex  x²", Payoff::Quadratic { scale: 1.0 }),
        ("concave −x²", Payoff::Quadratic { scale: -1.0 }),
    ] {
        let model = base.with_payoff(payoff.clone())?;
        let result = solve(&model, &scheme)?;
        let c0 = model.space.nearest_cell(&[0.0]);
        let reference = g_heat_reference(&payoff, 0.25, 1.0, tau, &[0.0])?;

        // Policy on the interior of the first step.
        let mut picks = [0usize; 2];
        for c in result.interior(&model, 0) {
            picks[result.levels[0].policy[c]] += 1;
        }
        println!("{name}: v(0,0) = {:.6}, reference {:.6}", result.level0().values[c0], reference);
        println!(
            "  interior cells choosing a = {}: {}, a = {}: {}",
            candidates[0].a[0], picks[0], candidates[1].a[0], picks[1]
        );
    }
    Ok(())
}
