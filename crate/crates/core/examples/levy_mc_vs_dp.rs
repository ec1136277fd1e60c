// Usage: cargo run --release --example levy_mc_vs_dp
//
// Jump diffusion with a compensated atom: the grid solution of the
// integro-differential equation against a Monte Carlo estimate of the same
// expectation, and Monte Carlo lower bounds of random controls against the
// maximized value.

use nonlocal_dp::engine::{solve, SchemeConfig};
use nonlocal_dp::lab::{mc_expectation, mc_lower_bound, McConfig};
use nonlocal_dp::model::{
    load_model, Bounds, Control, GammaMap, JumpAtom, Model, ParamPoint, Payoff, Penalty,
    SpaceGrid, TimeGrid,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scheme = SchemeConfig::default();

    // Singleton: a = 0.25, one atom of size 1 at rate 2, smoothed call.
    let theta = ParamPoint::new(vec![0.25], vec![0.0], vec![JumpAtom::new(vec![1.0], 2.0)]);
    let model = Model::new(
        TimeGrid::new(0.0, 0.5, 400)?,
        SpaceGrid::uniform_1d(-6.0, 6.0, 301)?,
        GammaMap::constant(vec![theta]),
        Penalty::Zero,
        Payoff::Call { strike: 0.0, smoothing: 0.1 },
        Bounds::default(),
    )?;
    let grid = solve(&model, &scheme)?;
    let gamma = Control::uniform(&model, 0)?;
    let mc = McConfig::new(200_000, 2024);
    let est = mc_expectation(&gamma, &model.payoff, 0.0, &[0.0], &model, &mc)?;
    let c0 = model.space.nearest_cell(&[0.0]);
    println!("singleton: grid {:.5}  MC {:.5} ± {:.5}", grid.level0().values[c0], est.mean, est.se);

    // Two candidates with a drift cost: every control is a lower bound.
    let model = load_model(include_str!("../models/levy.toml"))?;
    let best = solve(&model, &scheme)?;
    let c0 = model.space.nearest_cell(&[0.0]);
    let v = best.level0().values[c0];
    let mc = McConfig::new(20_000, 7);
    let opt = mc_lower_bound(&best.control, &model.payoff, 0.0, &[0.0], &model, &mc)?;
    println!("levy.toml: solve {v:.5}, optimal control MC {:.5} ± {:.5}", opt.mean, opt.se);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for i in 0..5 {
        let gamma = Control::random(&model, &mut rng);
        let lb = mc_lower_bound(&gamma, &model.payoff, 0.0, &[0.0], &model, &mc)?;
        println!("  random control {i}: {:.5} ± {:.5}", lb.mean, lb.se);
    }
    Ok(())
}
