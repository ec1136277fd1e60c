use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::model::{
    Axis, Bounds, GammaMap, JumpAtom, ParamPoint, Payoff, Penalty, SpaceGrid, TimeGrid,
};
use crate::oracles::gaussian_semigroup;

fn model_1d(cands: Vec<ParamPoint>, lower: f64, upper: f64, m: usize, tau: f64, n: usize) -> Model {
    Model::new(
        TimeGrid::new(0.0, tau, n).unwrap(),
        SpaceGrid::uniform_1d(lower, upper, m).unwrap(),
        GammaMap::constant(cands),
        Penalty::Zero,
        Payoff::Quadratic { scale: 1.0 },
        Bounds::default(),
    )
    .unwrap()
}

fn field(t: f64, values: Vec<f64>) -> ValueField {
    let n = values.len();
    ValueField { t, values, policy: vec![0; n] }
}

#[test]
fn constants_are_preserved() {
    let m = model_1d(
        vec![ParamPoint::new(vec![0.5], vec![0.3], vec![JumpAtom::new(vec![0.7], 1.0)])],
        -2.0,
        2.0,
        41,
        0.1,
        100,
    );
    let s = SchemeConfig::default();
    let out = dp_step(&field(0.1, vec![2.5; 41]), 99, &m, &s).unwrap();
    assert!(out.values.iter().all(|&v| v == 2.5));
    let g = m.with_penalty(Penalty::Constant { c: 5.0 }).unwrap();
    let out = dp_step(&field(0.1, vec![0.0; 41]), 99, &g, &s).unwrap();
    let dt = g.time.dt();
    assert!(out.values.iter().all(|&v| v == -5.0 * dt));
}

#[test]
fn quadratic_is_exact_in_the_interior() {
    let m = model_1d(vec![ParamPoint::diffusion_1d(1.0, 0.0)], -5.0, 5.0, 101, 0.5, 500);
    let s = SchemeConfig::default();
    let next = terminal_field(&m);
    let out = dp_step(&next, 499, &m, &s).unwrap();
    let dt = m.time.dt();
    for c in 1..100 {
        let x = m.space.coords(c)[0];
        assert!((out.values[c] - (x * x + dt)).abs() < 1e-12);
    }
}

#[test]
fn cfl_refusal_reports_admissible_dt() {
    let m = model_1d(vec![ParamPoint::diffusion_1d(1.0, 0.0)], -1.0, 1.0, 21, 1.0, 10);
    match solve(&m, &SchemeConfig::default()) {
        Err(EngineError::Cfl { max_dt, .. }) => assert!((max_dt - 0.01).abs() < 1e-15),
        other => panic!("expected CFL error, got {other:?}"),
    }
}

#[test]
fn heat_solve_matches_gaussian_oracle() {
    let m = model_1d(vec![ParamPoint::diffusion_1d(0.5, 0.0)], -6.0, 6.0, 121, 0.5, 100);
    let res = solve(&m, &SchemeConfig::default()).unwrap();
    for c in res.interior(&m, 0) {
        let x = m.space.coords(c)[0];
        let exact = x * x + 0.5 * 0.5;
        assert!((res.levels[0].values[c] - exact).abs() < 1e-6, "{x}: {}", res.levels[0].values[c] - exact);
        let gh = gaussian_semigroup(|p| p[0] * p[0], &[0.5], &[0.0], 0.5, &[x]).unwrap();
        assert!((gh - exact).abs() < 1e-10);
    }
    assert_eq!(res.levels.len(), 101);
    assert_eq!(res.levels[100], terminal_field(&m));
}

#[test]
fn gheat_picks_max_variance_for_convex_payoff() {
    let m = model_1d(
        vec![ParamPoint::diffusion_1d(0.25, 0.0), ParamPoint::diffusion_1d(1.0, 0.0)],
        -6.0,
        6.0,
        121,
        1.0,
        100,
    );
    let res = solve(&m, &SchemeConfig::default()).unwrap();
    let zero = m.space.nearest_cell(&[0.0]);
    assert!((res.levels[0].values[zero] - 1.0).abs() < 1e-9);
    for c in res.interior(&m, 0) {
        assert_eq!(res.levels[0].policy[c], 1);
    }
    let with_cost = solve(&m.with_penalty(Penalty::Constant { c: 0.7 }).unwrap(), &SchemeConfig::default()).unwrap();
    for (a, b) in with_cost.levels[0].values.iter().zip(&res.levels[0].values) {
        assert!((a - (b - 0.7)).abs() < 1e-12);
    }
}

#[test]
fn replaying_the_optimal_control_reproduces_the_solve() {
    let m = model_1d(
        vec![
            ParamPoint::new(vec![0.3], vec![0.5], vec![]),
            ParamPoint::new(vec![0.6], vec![-0.2], vec![JumpAtom::new(vec![0.4], 1.0)]),
        ],
        -3.0,
        3.0,
        31,
        0.2,
        20,
    )
    .with_payoff(Payoff::Call { strike: 0.0, smoothing: 0.1 })
    .unwrap();
    let s = SchemeConfig::default();
    let best = solve(&m, &s).unwrap();
    let replay = evaluate_control_dp(&best.control, &m, &s).unwrap();
    for (a, b) in best.levels.iter().zip(&replay.levels) {
        assert_eq!(a.values, b.values);
    }
    let single = model_1d(vec![ParamPoint::diffusion_1d(0.4, 0.1)], -3.0, 3.0, 31, 0.2, 20);
    let a = solve(&single, &s).unwrap();
    let b = evaluate_control_dp(&Control::uniform(&single, 0).unwrap(), &single, &s).unwrap();
    assert_eq!(a.levels[0].values, b.levels[0].values);
    let bad = Control::uniform(&single, 3);
    assert!(bad.is_err());
}

#[test]
fn time_consistency_is_exact() {
    let m = model_1d(
        vec![ParamPoint::diffusion_1d(0.25, 0.0), ParamPoint::diffusion_1d(1.0, 0.3)],
        -4.0,
        4.0,
        41,
        0.5,
        60,
    );
    let s = SchemeConfig::default();
    assert_eq!(check_time_consistency(&m, &s, 0.25).unwrap(), 0.0);
    assert!(matches!(check_time_consistency(&m, &s, 0.2501), Err(EngineError::NotANode(_))));
    let clamp = SchemeConfig { boundary: Boundary::ClampToPayoff, ..s };
    let mixed = check_time_consistency_with(&m, &s, &clamp, 0.25).unwrap();
    assert!(mixed > 0.0);
}

#[test]
fn two_dimensional_correlated_heat() {
    let a = vec![1.0, 0.4, 0.4, 0.8];
    let m = Model::new(
        TimeGrid::new(0.0, 0.2, 40).unwrap(),
        SpaceGrid::new(vec![
            Axis { lower: -3.0, upper: 3.0, points: 31 },
            Axis { lower: -3.0, upper: 3.0, points: 31 },
        ])
        .unwrap(),
        GammaMap::constant(vec![ParamPoint::new(a.clone(), vec![0.0, 0.0], vec![])]),
        Penalty::Zero,
        Payoff::Linear { slope: vec![1.0, 0.0], offset: 0.0 },
        Bounds::default(),
    )
    .unwrap();
    let m = m.with_payoff(Payoff::Quadratic { scale: 1.0 }).unwrap();
    let res = solve(&m, &SchemeConfig::default()).unwrap();
    let c = m.space.nearest_cell(&[0.0, 0.0]);
    // E‖X_τ‖² = τ·tr(a)
    assert!((res.levels[0].values[c] - 0.2 * 1.8).abs() < 1e-10);
}

#[test]
fn cross_stencil_must_be_monotone() {
    let m = Model::new(
        TimeGrid::new(0.0, 0.01, 10).unwrap(),
        SpaceGrid::new(vec![
            Axis { lower: -1.0, upper: 1.0, points: 11 },
            Axis { lower: -1.0, upper: 1.0, points: 11 },
        ])
        .unwrap(),
        GammaMap::constant(vec![ParamPoint::new(vec![1.0, 0.9, 0.9, 1.0], vec![0.0, 0.0], vec![])]),
        Penalty::Zero,
        Payoff::Quadratic { scale: 1.0 },
        Bounds::default(),
    )
    .unwrap();
    // 0.9 ≤ 1 on a square grid: fine.
    assert!(check_cfl(&m, &SchemeConfig::default()).is_ok());
    let skewed = Model::new(
        m.time.clone(),
        SpaceGrid::new(vec![
            Axis { lower: -1.0, upper: 1.0, points: 11 },
            Axis { lower: -4.0, upper: 4.0, points: 11 },
        ])
        .unwrap(),
        m.gamma.clone(),
        Penalty::Zero,
        Payoff::Quadratic { scale: 1.0 },
        Bounds::default(),
    )
    .unwrap();
    assert!(matches!(check_cfl(&skewed, &SchemeConfig::default()), Err(EngineError::CrossStencil)));
}

#[test]
fn generator_consistency_on_smooth_functions() {
    // (step(f) − f)/dt → (L + K) f at interior points, error O(dx).
    let theta = ParamPoint::new(vec![0.4], vec![0.3], vec![JumpAtom::new(vec![0.37], 1.5)]);
    let f = |x: f64| (0.8 * x).sin() + 0.1 * x * x;
    let df = |x: f64| 0.8 * (0.8 * x).cos() + 0.2 * x;
    let d2f = |x: f64| -0.64 * (0.8 * x).sin() + 0.2;
    for m in [81usize, 161, 321] {
        let model = model_1d(vec![theta.clone()], -4.0, 4.0, m, 1e-6, 1);
        let next: Vec<f64> = (0..m).map(|c| f(model.space.coords(c)[0])).collect();
        let out = dp_step(&field(1e-6, next.clone()), 0, &model, &SchemeConfig::default()).unwrap();
        let dx = model.space.axis(0).dx();
        for c in m / 4..3 * m / 4 {
            let x = model.space.coords(c)[0];
            let bundle = crate::generators::DerivativeBundle::from_fn(&[x], move |p| f(p[0]), vec![df(x)], vec![d2f(x)]);
            let exact = crate::generators::generator_apply(&theta, &bundle).unwrap()
                + crate::generators::nonlocal_apply(&theta.jumps, &bundle, &[x]).unwrap();
            let disc = (out.values[c] - next[c]) / model.time.dt();
            // upwind O(dx) + interpolation O(dx²)
            assert!((disc - exact).abs() < 0.5 * dx + 1e-4, "m={m} x={x}: {disc} vs {exact}");
        }
    }
}

fn random_model(rng: &mut ChaCha8Rng) -> Model {
    let k = rng.random_range(1..=3);
    let cands: Vec<ParamPoint> = (0..k)
        .map(|_| {
            let jumps = if rng.random_bool(0.5) {
                vec![JumpAtom::new(vec![rng.random_range(-0.8..0.8f64) + 0.01], rng.random_range(0.0..2.0))]
            } else {
                vec![]
            };
            ParamPoint::new(vec![rng.random_range(0.1..1.0)], vec![rng.random_range(-1.0..1.0)], jumps)
        })
        .collect();
    let base = model_1d(cands, -3.0, 3.0, 25, 1.0, 1);
    let dt = 0.9 * max_stable_dt(&base, &SchemeConfig::default());
    let pen = Penalty::QuadraticDrift { eta: rng.random_range(0.0..1.0) };
    Model::new(
        TimeGrid::new(0.0, 4.0 * dt, 4).unwrap(),
        base.space.clone(),
        base.gamma.clone(),
        pen,
        Payoff::Quadratic { scale: 1.0 },
        Bounds::default(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dp_step_shape_properties(seed in any::<u64>(), c in -5.0..5.0f64, lam in 0.0..1.0f64, s in 0.0..3.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng);
        let scheme = SchemeConfig::default();
        let cells = model.space.num_cells();
        let v: Vec<f64> = (0..cells).map(|_| rng.random_range(-2.0..2.0)).collect();
        let w: Vec<f64> = v.iter().map(|x| x + rng.random_range(0.0..1.0)).collect();
        let run = |vals: Vec<f64>, m: &Model| dp_step(&field(0.0, vals), 3, m, &scheme).unwrap().values;
        let interior = interior_cells(&model, boundary_band(&model, &scheme, model.time.dt()));

        let (sv, sw) = (run(v.clone(), &model), run(w.clone(), &model));
        for &i in &interior {
            prop_assert!(sv[i] <= sw[i] + 1e-12);
        }
        let shifted = run(v.iter().map(|x| x + c).collect(), &model);
        for i in 0..cells {
            prop_assert!((shifted[i] - (sv[i] + c)).abs() <= 1e-12);
        }
        let mix = run(v.iter().zip(&w).map(|(a, b)| lam * a + (1.0 - lam) * b).collect(), &model);
        for i in 0..cells {
            prop_assert!(mix[i] <= lam * sv[i] + (1.0 - lam) * sw[i] + 1e-12);
        }
        let free = model.with_penalty(Penalty::Zero).unwrap();
        let base = run(v.clone(), &free);
        let scaled = run(v.iter().map(|x| s * x).collect(), &free);
        for i in 0..cells {
            prop_assert!((scaled[i] - s * base[i]).abs() <= 1e-12 * (1.0 + base[i].abs()));
        }
    }
}
