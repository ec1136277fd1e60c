use crate::model::{Control, ControlError, Model};

fn split_level(model: &Model, s: f64) -> Result<usize, ControlError> {
    model.time.level_of(s).ok_or(ControlError::NotANode(s))
}

/// Merged subdivision of two controls plus the split node.
fn merged_breaks(a: &Control, b: &Control, split: usize) -> Vec<usize> {
    let mut breaks: Vec<usize> = a
        .breaks()
        .iter()
        .chain(b.breaks())
        .copied()
        .chain(std::iter::once(split))
        .collect();
    breaks.sort_unstable();
    breaks.dedup();
    breaks
}

/// `λ = γ` before `s` and `δ` from `s` on.
pub fn paste_composition(
    gamma: &Control,
    delta: &Control,
    s: f64,
    model: &Model,
) -> Result<Control, ControlError> {
    paste_bifurcation(gamma, delta, s, |_| false, model)
}

/// `η = γ` before `s`; from `s` on, `γ` for paths whose state at `s` lies in
/// a cell of `region`, `δ` otherwise. Because selectors act on the current
/// cell, the branch is carried as a per-cell choice made at `s`: on every
/// later interval cell `c` uses `γ` iff `region(c)`.
pub fn paste_bifurcation(
    gamma: &Control,
    delta: &Control,
    s: f64,
    region: impl Fn(usize) -> bool,
    model: &Model,
) -> Result<Control, ControlError> {
    gamma.validate(model)?;
    delta.validate(model)?;
    let split = split_level(model, s)?;
    let breaks = merged_breaks(gamma, delta, split);
    let cells = model.space.num_cells();
    let selectors = breaks
        .windows(2)
        .map(|w| {
            let step = w[0];
            if step < split {
                gamma.slice_at(step).to_vec()
            } else {
                (0..cells)
                    .map(|c| {
                        if region(c) {
                            gamma.select(step, c)
                        } else {
                            delta.select(step, c)
                        }
                    })
                    .collect()
            }
        })
        .collect();
    Control::new(breaks, selectors, model)
}
