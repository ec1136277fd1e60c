// Usage: cargo run --release --example pasting_and_cocycle
//
// Control pasting (switch at s; or branch on the cell at s) and the
// additivity of the integrated running cost over a split of [s, u].

use nonlocal_dp::engine::{evaluate_control_dp, SchemeConfig};
use nonlocal_dp::lab::{cocycle_check, paste_bifurcation, paste_composition, McConfig};
use nonlocal_dp::model::{load_model, Control};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = load_model(include_str!("../models/levy.toml"))?;
    let scheme = SchemeConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gamma = Control::random(&model, &mut rng);
    let delta = Control::random(&model, &mut rng);
    let s = model.time.node(120);

    let lambda = paste_composition(&gamma, &delta, s, &model)?;
    let (vl, vd) = (
        evaluate_control_dp(&lambda, &model, &scheme)?,
        evaluate_control_dp(&delta, &model, &scheme)?,
    );
    let same = (120..=model.time.steps()).all(|k| vl.levels[k].values == vd.levels[k].values);
    println!("composition: {} intervals; equals δ on [s, T]: {same}", lambda.breaks().len() - 1);

    let eta = paste_bifurcation(&gamma, &delta, s, |c| model.space.coords(c)[0] < 0.0, &model)?;
    let left = model.space.nearest_cell(&[-2.0]);
    println!("bifurcation: cell at x = −2 uses γ after s: {}", eta.select(150, left) == gamma.select(150, left));

    let mc = McConfig::new(1_000, 3).with_substeps(2);
    let rep = cocycle_check(&gamma, model.time.node(10), s, model.time.node(190), &[0.0], &model, &mc)?;
    println!(
        "cocycle: mean residual {:e}, max per-path residual {:e}",
        rep.residual.mean, rep.max_abs_residual
    );
    Ok(())
}
