// Usage: cargo run --release --example brute_force
//
// On tiny models the cellwise maximum of the scheme agrees with exhaustive
// enumeration of every per-step, per-cell choice of candidate.

use nonlocal_dp::engine::{solve, SchemeConfig};
use nonlocal_dp::model::{
    Bounds, GammaMap, JumpAtom, Model, ParamPoint, Payoff, Penalty, SpaceGrid, TimeGrid,
};
use nonlocal_dp::oracles::brute_force_dp;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = Model::new(
        TimeGrid::new(0.0, 0.02, 3)?,
        SpaceGrid::uniform_1d(-1.0, 1.0, 7)?,
        GammaMap::constant(vec![
            ParamPoint::diffusion_1d(0.2, 0.5),
            ParamPoint::new(vec![0.1], vec![-0.4], vec![JumpAtom::new(vec![0.3], 1.0)]),
            ParamPoint::diffusion_1d(0.05, 0.0),
        ]),
        Penalty::QuadraticDrift { eta: 2.0 },
        Payoff::Absolute { scale: 1.0 },
        Bounds::default(),
    )?;
    let scheme = SchemeConfig::default();
    let fast = solve(&model, &scheme)?;
    let brute = brute_force_dp(&model, &scheme)?;
    let gap = fast
        .levels
        .iter()
        .zip(&brute)
        .flat_map(|(a, b)| a.values.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    println!("level 0: {:?}", fast.level0().values);
    println!("max |solve − brute force| = {gap:e}");
    Ok(())
}
