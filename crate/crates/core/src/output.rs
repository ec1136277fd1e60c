//! CSV writers. Floats use Rust's shortest round-trip formatting, so equal
//! values always produce equal bytes.

use std::io::{self, Write};

use crate::engine::{ConvergenceRow, SolveResult};
use crate::lab::{McEstimate, PathSample};
use crate::model::Model;

/// `t,x1[,x2],value,policy_index`; the terminal level reports policy 0.
pub fn write_solve<W: Write>(
    out: &mut W,
    result: &SolveResult,
    model: &Model,
    level0_only: bool,
) -> io::Result<()> {
    let n = model.space.dim();
    let xs: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    writeln!(out, "t,{},value,policy_index", xs.join(","))?;
    let levels = if level0_only { &result.levels[..1] } else { &result.levels[..] };
    for field in levels {
        for (cell, (v, p)) in field.values.iter().zip(&field.policy).enumerate() {
            write!(out, "{}", field.t)?;
            for x in model.space.coords(cell) {
                write!(out, ",{x}")?;
            }
            writeln!(out, ",{v},{p}")?;
        }
    }
    Ok(())
}

/// `level,dx,dt,sup_error,observed_order` with an empty order on the first row.
pub fn write_convergence<W: Write>(out: &mut W, rows: &[ConvergenceRow]) -> io::Result<()> {
    writeln!(out, "level,dx,dt,sup_error,observed_order")?;
    for r in rows {
        let order = r.observed_order.map(|o| o.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{}", r.level, r.dx, r.dt, r.sup_error, order)?;
    }
    Ok(())
}

pub const ESTIMATE_HEADER: &str = "quantity,r,y,mean,se,n_paths,seed";

/// One `quantity,r,y,mean,se,n_paths,seed` row; multi-dimensional states
/// are joined with `;`.
pub fn write_estimate<W: Write>(
    out: &mut W,
    quantity: &str,
    r: f64,
    y: &[f64],
    est: &McEstimate,
    seed: u64,
) -> io::Result<()> {
    let y: Vec<String> = y.iter().map(f64::to_string).collect();
    writeln!(
        out,
        "{quantity},{r},{},{},{},{},{seed}",
        y.join(";"),
        est.mean,
        est.se,
        est.n_paths
    )
}

/// `path_index,t,x…,penalty_acc`, one row per recorded node.
pub fn write_paths<W: Write>(out: &mut W, dim: usize, paths: &[(u64, PathSample)]) -> io::Result<()> {
    let xs: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    writeln!(out, "path_index,t,{},penalty_acc", xs.join(","))?;
    for (index, p) in paths {
        let mut acc = 0.0;
        for (k, (t, x)) in p.times.iter().zip(&p.states).enumerate() {
            if k > 0 {
                acc += p.step_penalty[k - 1];
            }
            write!(out, "{index},{t}")?;
            for v in x {
                write!(out, ",{v}")?;
            }
            writeln!(out, ",{acc}")?;
        }
    }
    Ok(())
}
