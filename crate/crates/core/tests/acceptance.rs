//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so the lines are always
//! printed.

use std::time::Instant;

use nonlocal_dp::cli;
use nonlocal_dp::engine::{
    check_time_consistency, convergence_study, dp_step, evaluate_control_dp, max_stable_dt, solve,
    Boundary, Reference, SchemeConfig, ValueField,
};
use nonlocal_dp::lab::{
    cocycle_check, exp_martingale_stat, generator_check, mc_expectation, McConfig, TestFunction,
    TestShape,
};
use nonlocal_dp::model::{
    load_model, Axis, Bounds, Control, GammaMap, GammaMode, JumpAtom, Model, ParamPoint, Payoff,
    Penalty, SpaceGrid, TimeGrid,
};
use nonlocal_dp::oracles::{brute_force_dp, g_heat_reference, gaussian_semigroup};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn models_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("models")
}

fn load(name: &str) -> Model {
    load_model(&std::fs::read_to_string(models_dir().join(name)).unwrap()).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_candidate(rng: &mut ChaCha8Rng, n: usize, jumps: bool) -> ParamPoint {
    let mut a = vec![0.0f64; n * n];
    for d in 0..n {
        a[d * n + d] = rng.random_range(0.05..1.0);
    }
    if n == 2 {
        let bound = 0.5 * a[0].min(a[3]);
        let off = rng.random_range(-bound..bound);
        a[1] = off;
        a[2] = off;
    }
    let b = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let atoms = if jumps && rng.random_bool(0.5) {
        vec![JumpAtom::new(
            (0..n).map(|_| rng.random_range(-0.6..0.6)).collect(),
            rng.random_range(0.1..2.0),
        )]
    } else {
        Vec::new()
    };
    ParamPoint::new(a, b, atoms)
}

/// Random model with dt a random fraction of the stability limit.
fn random_model(rng: &mut ChaCha8Rng, n: usize, cells: usize, steps: usize, cands: usize) -> Model {
    let axes: Vec<Axis> = (0..n)
        .map(|_| Axis { lower: -1.0, upper: 1.0, points: cells })
        .collect();
    let space = SpaceGrid::new(axes).unwrap();
    let set: Vec<ParamPoint> = (0..cands).map(|_| random_candidate(rng, n, true)).collect();
    let total = space.num_cells();
    let values: Vec<Vec<f64>> = (0..total)
        .map(|_| (0..cands).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let penalty = match rng.random_range(0..3) {
        0 => Penalty::Table { grid: space.clone(), values },
        1 => Penalty::QuadraticDrift { eta: rng.random_range(0.0..2.0) },
        _ => Penalty::QuadraticState { coef: rng.random_range(0.0..1.0) },
    };
    let payoff = match rng.random_range(0..3) {
        0 => Payoff::Absolute { scale: 1.0 },
        1 => Payoff::Call { strike: 0.1, smoothing: 0.0 },
        _ => Payoff::Indicator { threshold: 0.0, width: 0.2 },
    };
    let probe = Model::new(
        TimeGrid::new(0.0, 1.0, 1).unwrap(),
        space.clone(),
        GammaMap::constant(set.clone()),
        penalty.clone(),
        payoff.clone(),
        Bounds::default(),
    )
    .unwrap();
    let dt = max_stable_dt(&probe, &SchemeConfig::default()) * rng.random_range(0.5..1.0);
    Model::new(
        TimeGrid::new(0.0, dt * steps as f64, steps).unwrap(),
        space,
        GammaMap::constant(set),
        penalty,
        payoff,
        Bounds::default(),
    )
    .unwrap()
}

fn random_scheme(rng: &mut ChaCha8Rng) -> SchemeConfig {
    let boundary = if rng.random_bool(0.5) {
        Boundary::LinearExtrapolation
    } else {
        Boundary::ClampToPayoff
    };
    SchemeConfig { boundary, ..SchemeConfig::default() }
}

fn c1_linear_heat() -> Outcome {
    let heat = load("heat.toml");
    let model = Model {
        space: SpaceGrid::uniform_1d(-6.0, 6.0, 241).unwrap(),
        time: TimeGrid::new(0.0, 0.5, 200).unwrap(),
        ..heat.with_payoff(Payoff::Quadratic { scale: 1.0 }).unwrap()
    };
    let tau = model.time.horizon() - model.time.start();
    let scheme = SchemeConfig::default();
    let started = Instant::now();
    let result = solve(&model, &scheme).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed().as_secs_f64();
    let mut worst = 0.0f64;
    for c in result.interior(&model, 0) {
        let x = model.space.coords(c);
        let exact = gaussian_semigroup(|z: &[f64]| z[0] * z[0], &[1.0], &[0.0], tau, &x).unwrap();
        worst = worst.max((result.level0().values[c] - exact).abs());
    }
    verdict(
        worst <= 5e-3 && elapsed < 5.0,
        format!("M=241, dt={} (CFL max), max interior error {worst:.3e} ≤ 5e-3, runtime {elapsed:.3} s < 5 s", model.time.dt()),
    )
}

fn c2_g_heat() -> Outcome {
    let base = load("gheat.toml");
    let tau = base.time.horizon() - base.time.start();
    let scheme = SchemeConfig::default();
    let mut lines = Vec::new();
    let mut ok = true;
    for (payoff, want, sign) in [
        (Payoff::Quadratic { scale: 1.0 }, 1usize, 1.0),
        (Payoff::Quadratic { scale: -1.0 }, 0usize, -1.0),
    ] {
        let model = base.with_payoff(payoff.clone()).unwrap();
        let res = solve(&model, &scheme).map_err(|e| e.to_string())?;
        let c0 = model.space.nearest_cell(&[0.0]);
        let reference = g_heat_reference(&payoff, 0.25, 1.0, tau, &[0.0]).unwrap();
        let err = (res.level0().values[c0] - reference).abs();
        let mut checked = 0usize;
        let mut wrong = 0usize;
        for k in 0..model.time.steps() {
            let next = &res.levels[k + 1].values;
            for c in res.interior(&model, k) {
                let d2 = next[c + 1] - 2.0 * next[c] + next[c - 1];
                if sign * d2 > 0.0 {
                    checked += 1;
                    if res.levels[k].policy[c] != want {
                        wrong += 1;
                    }
                }
            }
        }
        ok &= err <= 5e-3 && wrong == 0 && checked > 0;
        lines.push(format!(
            "{}: |v(r,0) − {reference}| = {err:.2e}, a={} chosen at {checked}/{checked} curved interior cells (wrong {wrong})",
            if sign > 0.0 { "x²" } else { "−x²" },
            [0.25, 1.0][want]
        ));
    }
    verdict(ok, lines.join("; "))
}

fn c3_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let cells = rng.random_range(3..=7);
        let steps = rng.random_range(1..=4);
        let cands = rng.random_range(1..=3);
        let model = random_model(&mut rng, 1, cells, steps, cands);
        let scheme = random_scheme(&mut rng);
        let fast = solve(&model, &scheme).map_err(|e| e.to_string())?;
        let brute = brute_force_dp(&model, &scheme).map_err(|e| e.to_string())?;
        for (a, b) in fast.levels.iter().zip(&brute) {
            worst = worst.max(max_diff(&a.values, b));
        }
    }
    verdict(worst <= 1e-12, format!("1000 random tiny instances, max |brute − solve| = {worst:e} ≤ 1e-12"))
}

fn c4_time_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let n = if i % 4 == 3 { 2 } else { 1 };
        let cells = if n == 2 { 15 } else { 41 };
        let steps = rng.random_range(4..40);
        let cands = rng.random_range(1..=3);
        let model = random_model(&mut rng, n, cells, steps, cands);
        let scheme = random_scheme(&mut rng);
        let k = rng.random_range(1..steps);
        let d = check_time_consistency(&model, &scheme, model.time.node(k)).map_err(|e| e.to_string())?;
        worst = worst.max(d);
    }
    verdict(worst == 0.0, format!("20 random models/splits, max discrepancy {worst:e} (must be exactly 0)"))
}

fn c5_cocycle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = random_model(&mut rng, 1, 41, 60, 3)
        .with_penalty(Penalty::QuadraticState { coef: 0.7 })
        .unwrap();
    let mc = McConfig::new(1000, 55).with_substeps(3);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let gamma = Control::random(&model, &mut rng);
        let mut k = [0usize; 3];
        while !(k[0] < k[1] && k[1] < k[2]) {
            for v in &mut k {
                *v = rng.random_range(0..=60);
            }
            k.sort_unstable();
        }
        let t = |i: usize| model.time.node(i);
        let rep = cocycle_check(&gamma, t(k[0]), t(k[1]), t(k[2]), &[0.1], &model, &mc).map_err(|e| e.to_string())?;
        worst = worst.max(rep.max_abs_residual);
    }
    verdict(worst <= 1e-12, format!("10³ paths × 10 splits, max per-path residual {worst:e} ≤ 1e-12"))
}

fn c6_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut excess = [f64::NEG_INFINITY; 2];
    let mut gap = 0.0f64;
    for i in 0..5 {
        let n = if i == 4 { 2 } else { 1 };
        let model = random_model(&mut rng, n, if n == 2 { 13 } else { 31 }, 30, 3);
        for (slot, boundary) in [Boundary::ClampToPayoff, Boundary::LinearExtrapolation].into_iter().enumerate() {
            let scheme = SchemeConfig { boundary, ..SchemeConfig::default() };
            let best = solve(&model, &scheme).map_err(|e| e.to_string())?;
            for _ in 0..100 {
                let v = evaluate_control_dp(&Control::random(&model, &mut rng), &model, &scheme)
                    .map_err(|e| e.to_string())?;
                for (k, (a, b)) in v.levels.iter().zip(&best.levels).enumerate() {
                    // Clamped boundaries keep every weight non-negative; the
                    // extrapolated scheme is compared off the boundary band.
                    let cells: Vec<usize> = match boundary {
                        Boundary::ClampToPayoff => (0..a.values.len()).collect(),
                        Boundary::LinearExtrapolation => best.interior(&model, k),
                    };
                    for c in cells {
                        excess[slot] = excess[slot].max(a.values[c] - b.values[c]);
                    }
                }
            }
            let star = evaluate_control_dp(&best.control, &model, &scheme).map_err(|e| e.to_string())?;
            for (a, b) in star.levels.iter().zip(&best.levels) {
                gap = gap.max(max_diff(&a.values, &b.values));
            }
        }
    }
    verdict(
        excess[0] <= 1e-12 && excess[1] <= 1e-12 && gap == 0.0,
        format!(
            "5 models × 100 controls: max excess {:.2e} (clamped, all cells), {:.2e} (extrapolated, interior) ≤ 1e-12; |γ* replay − solve| = {gap:e}",
            excess[0].max(0.0),
            excess[1].max(0.0)
        ),
    )
}

fn diffusion_model(theta: &ParamPoint, tau: f64) -> Model {
    let n = theta.dim();
    let axes = (0..n).map(|_| Axis { lower: -8.0, upper: 8.0, points: 33 }).collect();
    Model::new(
        TimeGrid::new(0.0, tau, 10).unwrap(),
        SpaceGrid::new(axes).unwrap(),
        GammaMap::constant(vec![theta.clone()]),
        Penalty::Zero,
        Payoff::Quadratic { scale: 1.0 },
        Bounds::default(),
    )
    .unwrap()
}

fn c7_exp_martingale() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut lines = Vec::new();
    let mut ok = true;
    for i in 0..5 {
        let n = 1 + i % 2;
        let theta = random_candidate(&mut rng, n, false);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.2..1.2)).collect();
        let tau = rng.random_range(0.3..1.0);
        let model = diffusion_model(&theta, tau);
        let mc = McConfig::new(100_000, 700 + i as u64).with_substeps(8);
        let started = Instant::now();
        let y = exp_martingale_stat(&theta, &v, 0.0, tau, &vec![0.0; n], &model, &mc).map_err(|e| e.to_string())?;
        let secs = started.elapsed().as_secs_f64();
        let pass = (y.mean - 1.0).abs() <= 3.0 * y.se && secs < 30.0;
        ok &= pass;
        lines.push(format!("|{:.4}−1|={:.1e}≤{:.1e} ({secs:.1}s)", y.mean, (y.mean - 1.0).abs(), 3.0 * y.se));
    }
    verdict(ok, format!("5 settings, 10⁵ paths, 8 substeps: {}", lines.join(", ")))
}

fn c8_generator_martingale() -> Outcome {
    let theta = ParamPoint::new(vec![0.5], vec![0.2], vec![JumpAtom::new(vec![0.7], 1.5)]);
    let model = diffusion_model(&theta, 1.0);
    let mc = McConfig::new(100_000, 8).with_substeps(4);
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, f) in [
        ("x", TestFunction::new(TestShape::Linear { axis: 0 }, 3.0, 2.0)),
        ("x²", TestFunction::new(TestShape::Quadratic, 3.0, 2.0)),
        ("1", TestFunction::new(TestShape::Constant(1.0), 3.0, 2.0)),
    ] {
        let g = generator_check(&theta, &f, 0.0, 1.0, &[0.0], &model, &mc).map_err(|e| e.to_string())?;
        ok &= g.passed;
        lines.push(format!(
            "{name}: |{:.2e}| ≤ {:.2e} (SE {:.1e}, bias slope {:+.3})",
            g.estimate.mean, g.tolerance, g.estimate.se, g.bias_slope
        ));
    }
    verdict(ok, format!("Brownian + compound Poisson, 10⁵ paths, windowed f: {}", lines.join(", ")))
}

fn c9_mc_vs_dp() -> Outcome {
    let theta = ParamPoint::new(vec![0.25], vec![0.0], vec![JumpAtom::new(vec![1.0], 2.0)]);
    let payoff = Payoff::Call { strike: 0.0, smoothing: 0.1 };
    let tau = 0.5;
    let model = Model::new(
        TimeGrid::new(0.0, tau, 100).unwrap(),
        SpaceGrid::uniform_1d(-6.0, 6.0, 301).unwrap(),
        GammaMap::constant(vec![theta.clone()]),
        Penalty::Zero,
        payoff.clone(),
        Bounds::default(),
    )
    .unwrap();
    let res = solve(&model, &SchemeConfig::default()).map_err(|e| e.to_string())?;
    let c0 = model.space.nearest_cell(&[0.0]);
    let grid = res.level0().values[c0];
    let gamma = Control::uniform(&model, 0).unwrap();
    let est = mc_expectation(&gamma, &payoff, 0.0, &[0.0], &model, &McConfig::new(200_000, 9))
        .map_err(|e| e.to_string())?;
    // Poisson mixture of Gaussian expectations, for the record.
    let drift = theta.effective_drift()[0];
    let mut exact = 0.0;
    let mut weight = (-2.0 * tau).exp();
    for k in 0..40 {
        let h = |z: &[f64]| payoff.eval(z);
        exact += weight * gaussian_semigroup(h, &[0.25], &[drift], tau, &[k as f64]).unwrap();
        weight *= 2.0 * tau / (k + 1) as f64;
    }
    let tol = 3.0 * est.se + 2.0 * 5e-3;
    let diff = (est.mean - grid).abs();
    verdict(
        diff <= tol && est.excursion_fraction < 0.01,
        format!(
            "solve {grid:.5}, MC {:.5} ± {:.5} (2·10⁵ paths), |Δ| {diff:.2e} ≤ {tol:.2e}; Poisson-mixture value {exact:.5}; excursions {:.2}%",
            est.mean,
            est.se,
            100.0 * est.excursion_fraction
        ),
    )
}

fn c10_scheme_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = [0.0f64; 4];
    for trial in 0..100 {
        let n = if trial % 5 == 4 { 2 } else { 1 };
        let mut model = random_model(&mut rng, n, if n == 2 { 9 } else { 21 }, 5, 3);
        if trial % 3 == 0 {
            let sets = vec![
                model.gamma.sets()[0].clone(),
                vec![random_candidate(&mut rng, n, true)],
            ];
            let cells = model.space.num_cells();
            let index = (0..cells).map(|c| c % 2).collect();
            let gamma = GammaMap::new(GammaMode::StateDependent, sets, index);
            let build = |time: TimeGrid| {
                Model::new(
                    time,
                    model.space.clone(),
                    gamma.clone(),
                    Penalty::QuadraticDrift { eta: 0.5 },
                    model.payoff.clone(),
                    Bounds::default(),
                )
                .unwrap()
            };
            let dt = max_stable_dt(&build(model.time.clone()), &SchemeConfig::default());
            model = build(TimeGrid::new(0.0, 0.9 * dt * 5.0, 5).unwrap());
        }
        let cells = model.space.num_cells();
        let level = rng.random_range(0..model.time.steps());
        let t = model.time.node(level + 1);
        let field = |values: Vec<f64>| ValueField { t, values, policy: vec![0; cells] };
        let v: Vec<f64> = (0..cells).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = v.iter().map(|x| x + rng.random_range(0.0..1.0)).collect();
        let ext = SchemeConfig::default();
        let clamp = SchemeConfig { boundary: Boundary::ClampToPayoff, ..ext };
        let step = |vals: &[f64], s: &SchemeConfig, m: &Model| {
            dp_step(&field(vals.to_vec()), level, m, s).unwrap().values
        };

        // Monotonicity: the clamped boundary keeps all weights non-negative.
        let (sv, sw) = (step(&v, &clamp, &model), step(&w, &clamp, &model));
        worst[0] = worst[0].max(sv.iter().zip(&sw).map(|(a, b)| a - b).fold(0.0, f64::max));

        let sv = step(&v, &ext, &model);
        for c in [3.7, -3.7] {
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let s = step(&shifted, &ext, &model);
            let dev = s.iter().zip(&sv).map(|(a, b)| (a - b - c).abs()).fold(0.0, f64::max);
            worst[1] = worst[1].max(dev);
        }
        let sw = step(&w, &ext, &model);
        let mix: Vec<f64> = v.iter().zip(&w).map(|(a, b)| 0.3 * a + 0.7 * b).collect();
        let sm = step(&mix, &ext, &model);
        for ((m, a), b) in sm.iter().zip(&sv).zip(&sw) {
            worst[2] = worst[2].max(m - (0.3 * a + 0.7 * b));
        }
        let free = model.with_penalty(Penalty::Zero).unwrap();
        let base = step(&v, &ext, &free);
        for lambda in [0.0, 0.5, 2.0] {
            let scaled: Vec<f64> = v.iter().map(|x| lambda * x).collect();
            let s = step(&scaled, &ext, &free);
            let dev = s.iter().zip(&base).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max);
            worst[3] = worst[3].max(dev);
        }
    }
    verdict(
        worst.iter().all(|&e| e <= 1e-12),
        format!(
            "100 trials: monotonicity {:.1e}, translation ±3.7 {:.1e}, convexity λ=0.3 {:.1e}, homogeneity {:.1e} (all ≤ 1e-12)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn c11_convergence() -> Outcome {
    let heat = load("heat.toml");
    let model = Model {
        space: SpaceGrid::uniform_1d(-6.0, 6.0, 41).unwrap(),
        time: heat.time.with_steps(6).unwrap(),
        ..heat.with_payoff(Payoff::Call { strike: 0.0, smoothing: 0.05 }).unwrap()
    };
    let rows = convergence_study(&model, &SchemeConfig::default(), 4, Reference::ClosedForm)
        .map_err(|e| e.to_string())?;
    let order = rows.last().and_then(|r| r.observed_order).unwrap_or(f64::NAN);
    let errors: Vec<String> = rows.iter().map(|r| format!("{:.2e}", r.sup_error)).collect();
    verdict(order >= 0.8, format!("4 levels, dt ∝ dx², sup errors [{}], last order {order:.3} ≥ 0.8", errors.join(", ")))
}

fn c12_reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let model = models_dir().join("gheat.toml");
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(format!("verify_{threads}.csv"));
        let args = [
            "nonlocal-dp", "verify", model.to_str().unwrap(), "--suite", "martingale", "--seed", "11",
            "--threads", threads, "-o", out.to_str().unwrap(),
        ];
        let (mut so, mut se) = (Vec::new(), Vec::new());
        let code = cli::run(args, &mut so, &mut se);
        if code != 0 {
            return Err(format!("verify exited {code}: {}", String::from_utf8_lossy(&se)));
        }
        outputs.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    verdict(
        outputs[0] == outputs[1] && !outputs[0].is_empty(),
        format!("verify --suite martingale, --threads 1 vs 8: {} bytes, identical = {}", outputs[0].len(), outputs[0] == outputs[1]),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("linear heat vs Gaussian oracle", c1_linear_heat),
        ("G-heat value and policy", c2_g_heat),
        ("brute-force equivalence", c3_brute_force),
        ("time consistency", c4_time_consistency),
        ("cocycle additivity", c5_cocycle),
        ("dominance over controls", c6_dominance),
        ("exponential martingale", c7_exp_martingale),
        ("generator martingale", c8_generator_martingale),
        ("MC vs DP on a Lévy model", c9_mc_vs_dp),
        ("monotone-scheme properties", c10_scheme_properties),
        ("convergence order", c11_convergence),
        ("reproducibility across threads", c12_reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2} ({name}): {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2} ({name}): {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
