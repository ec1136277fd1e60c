//! Every feedback control's Monte Carlo value is a lower bound of the
//! maximized grid value, and the maximizing control attains it.

use nonlocal_dp::engine::{solve, SchemeConfig};
use nonlocal_dp::lab::{mc_lower_bound, McConfig};
use nonlocal_dp::model::{load_model, Control, Model};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn levy() -> Model {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/models/levy.toml")).unwrap();
    load_model(&text).unwrap()
}

#[test]
fn random_controls_stay_below_the_solve() {
    let model = levy();
    let scheme = SchemeConfig::default();
    let y = [0.0];
    let c0 = model.space.nearest_cell(&y);
    let coarse = solve(&model, &scheme).unwrap().level0().values[c0];
    // Scheme band: twice the change under one refinement, plus a floor.
    let fine_model = model.refined(1).unwrap();
    let fine = solve(&fine_model, &scheme).unwrap().level0().values[fine_model.space.nearest_cell(&y)];
    let band = 2.0 * (coarse - fine).abs() + 5e-3;

    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mc = McConfig::new(2_000, 31);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let gamma = Control::random(&model, &mut rng);
        let lb = mc_lower_bound(&gamma, &model.payoff, 0.0, &y, &model, &mc).unwrap();
        assert!(lb.excursion_fraction < 0.01);
        worst = worst.max(lb.mean - 3.0 * lb.se - coarse);
    }
    assert!(worst <= band, "excess {worst} over band {band}");
}

#[test]
fn optimal_control_attains_the_solve() {
    let model = levy();
    let best = solve(&model, &SchemeConfig::default()).unwrap();
    let y = [0.5];
    let v = best.level0().values[model.space.nearest_cell(&y)];
    let lb = mc_lower_bound(&best.control, &model.payoff, 0.0, &y, &model, &McConfig::new(40_000, 2)).unwrap();
    assert!((lb.mean - v).abs() <= 3.0 * lb.se + 0.03, "MC {lb:?} vs grid {v}");
}
