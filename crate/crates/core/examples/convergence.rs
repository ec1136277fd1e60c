// Usage: cargo run --release --example convergence
//
// Refinement study with dt ∝ dx²: sup-norm error on the coarse interior and
// the observed order between successive levels.

use nonlocal_dp::engine::{convergence_study, Reference, SchemeConfig};
use nonlocal_dp::model::{load_model, Payoff};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let coarse = load_model(include_str!("../models/heat.toml"))?
        .with_payoff(Payoff::Call { strike: 0.0, smoothing: 0.05 })?;
    let coarse = nonlocal_dp::model::Model {
        space: nonlocal_dp::model::SpaceGrid::uniform_1d(-6.0, 6.0, 41)?,
        time: coarse.time.with_steps(6)?,
        ..coarse
    };
    for reference in [Reference::ClosedForm, Reference::Finest] {
        println!("{reference:?}");
        for row in convergence_study(&coarse, &SchemeConfig::default(), 4, reference)? {
            let order = row.observed_order.map_or("   -".into(), |o| format!("{o:.2}"));
            println!("  level {}  dx {:.4}  dt {:.2e}  error {:.3e}  order {order}", row.level, row.dx, row.dt, row.sup_error);
        }
    }
    Ok(())
}
