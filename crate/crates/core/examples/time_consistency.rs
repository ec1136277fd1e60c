// Usage: cargo run --release --example time_consistency
//
// Solving [t, T] and then [r, t] from the intermediate field reproduces the
// single sweep bit for bit, and no feedback control beats the maximized
// value.

use nonlocal_dp::engine::{
    check_time_consistency, check_time_consistency_with, evaluate_control_dp, solve, Boundary,
    SchemeConfig,
};
use nonlocal_dp::model::{load_model, Control};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = load_model(include_str!("../models/levy.toml"))?;
    let scheme = SchemeConfig::default();
    for k in [50, 100, 150] {
        let t = model.time.node(k);
        println!("split at t = {t:.4}: discrepancy {:e}", check_time_consistency(&model, &scheme, t)?);
    }
    // Changing the boundary treatment on one piece breaks the identity.
    let clamp = SchemeConfig { boundary: Boundary::ClampToPayoff, ..scheme };
    let mixed = check_time_consistency_with(&model, &scheme, &clamp, model.time.node(100))?;
    println!("mixed boundary treatments: discrepancy {mixed:.3e}");

    let best = solve(&model, &clamp)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut excess = f64::NEG_INFINITY;
    for _ in 0..25 {
        let v = evaluate_control_dp(&Control::random(&model, &mut rng), &model, &clamp)?;
        for (a, b) in v.levels.iter().zip(&best.levels) {
            for (x, y) in a.values.iter().zip(&b.values) {
                excess = excess.max(x - y);
            }
        }
    }
    println!("largest excess of 25 random controls over the maximum: {excess:.3e}");
    Ok(())
}
