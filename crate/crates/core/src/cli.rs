//! Command-line front end: `solve`, `simulate`, `verify`, `converge`.
//!
//! CSV goes to `-o/--output` when given, otherwise to standard output; the
//! plain-text run report goes to standard output in the first case and to
//! standard error in the second. Exit codes: 0 ok, 1 load/validation/usage,
//! 2 CFL or stencil refusal, 3 state or time outside the model domain,
//! 4 failed verification.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{
    boundary_band, check_cfl, convergence_study, max_stable_dt, solve, Boundary, EngineError,
    Reference, SchemeConfig,
};
use crate::lab::{mc_all, sample_path, LabError, McConfig};
use crate::model::{load_model, Control, Model};
use crate::output;
use crate::verify::{run_suite, Suite, VerifyConfig, VerifyError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CFL: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "nonlocal-dp", version, about = "Penalized sup-over-laws solver and Monte Carlo verifier")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// CSV destination (default: standard output).
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "NONLOCAL_DP_THREADS")]
    pub threads: Option<usize>,
    /// Base seed; required by `simulate` and `verify`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BoundaryArg {
    Extrapolate,
    Clamp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OracleArg {
    ClosedForm,
    Finest,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    Martingale,
    Cocycle,
    Pasting,
    Consistency,
    Dominance,
    All,
}

#[derive(Debug, Args)]
pub struct SchemeArgs {
    #[arg(long, value_enum, default_value = "extrapolate")]
    pub boundary: BoundaryArg,
    /// Fraction of the maximal stable dt the model's dt may use.
    #[arg(long, default_value_t = 1.0)]
    pub cfl_factor: f64,
    #[arg(long, default_value_t = 5.0)]
    pub band_sigmas: f64,
}

impl SchemeArgs {
    fn config(&self) -> SchemeConfig {
        SchemeConfig {
            boundary: match self.boundary {
                BoundaryArg::Extrapolate => Boundary::LinearExtrapolation,
                BoundaryArg::Clamp => Boundary::ClampToPayoff,
            },
            cfl_factor: self.cfl_factor,
            band_sigmas: self.band_sigmas,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Backward DP sweep; writes `t,x…,value,policy_index`.
    Solve {
        model: PathBuf,
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Only write the rows at t = r.
        #[arg(long)]
        level0_only: bool,
        /// Also save the maximizing feedback control as TOML.
        #[arg(long)]
        control_out: Option<PathBuf>,
    },
    /// Monte Carlo estimates of expectation, penalty and lower bound.
    Simulate {
        model: PathBuf,
        /// `optimal`, `file:PATH` or `random:SEED`.
        #[arg(long, default_value = "optimal")]
        control: String,
        /// Start time (default: the model's r).
        #[arg(long)]
        r: Option<f64>,
        /// Start state, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        y: Vec<f64>,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long, default_value_t = 1)]
        substeps: usize,
        /// Write every path as `path_index,t,x…,penalty_acc` (first 1000 paths).
        #[arg(long)]
        dump_paths: Option<PathBuf>,
        #[command(flatten)]
        scheme: SchemeArgs,
    },
    /// Property suites; exits 4 if any check fails.
    Verify {
        model: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        /// Paths per martingale statistic.
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long, default_value_t = 8)]
        substeps: usize,
        /// Random controls in the dominance suite.
        #[arg(long, default_value_t = 20)]
        controls: usize,
        #[command(flatten)]
        scheme: SchemeArgs,
    },
    /// Refinement study; writes `level,dx,dt,sup_error,observed_order`.
    Converge {
        model: PathBuf,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(3..))]
        levels: u32,
        #[arg(long, value_enum, default_value = "finest")]
        oracle: OracleArg,
        #[command(flatten)]
        scheme: SchemeArgs,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::Cfl { .. } | EngineError::CrossStencil => EXIT_CFL,
            EngineError::NotANode(_) => EXIT_DOMAIN,
            _ => EXIT_INPUT,
        };
        fail(code, e.to_string())
    }
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        let code = match e {
            LabError::NotANode(_) | LabError::Dimension { .. } | LabError::Order(_) => EXIT_DOMAIN,
            _ => EXIT_INPUT,
        };
        fail(code, e.to_string())
    }
}

impl From<VerifyError> for Failure {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Engine(e) => e.into(),
            VerifyError::Lab(e) => e.into(),
            VerifyError::Model(e) => fail(EXIT_INPUT, e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        fail(EXIT_INPUT, format!("I/O error: {e}"))
    }
}

fn read_model(path: &Path) -> Result<Model, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_INPUT, format!("cannot read {}: {e}", path.display())))?;
    load_model(&text).map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{text}") } else { write!(stdout, "{text}") };
            return code;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| fail(EXIT_INPUT, format!("thread pool: {e}")))?;
    let mut csv: Vec<u8> = Vec::new();
    let mut report: Vec<u8> = Vec::new();
    let code = pool.install(|| dispatch(cli, &mut csv, &mut report))?;
    match &cli.output {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            f.write_all(&csv)?;
            f.flush()?;
            stdout.write_all(&report)?;
        }
        None => {
            stdout.write_all(&csv)?;
            stderr.write_all(&report)?;
        }
    }
    Ok(code)
}

fn need_seed(cli: &Cli) -> Result<u64, Failure> {
    cli.seed
        .ok_or_else(|| fail(EXIT_INPUT, "this command requires an explicit --seed"))
}

fn dispatch(cli: &Cli, csv: &mut Vec<u8>, report: &mut Vec<u8>) -> Result<i32, Failure> {
    let started = Instant::now();
    match &cli.command {
        Command::Solve { model, scheme, level0_only, control_out } => {
            let m = read_model(model)?;
            let scheme = scheme.config();
            write_header(report, "solve", model, &m, &scheme)?;
            let result = solve(&m, &scheme)?;
            output::write_solve(csv, &result, &m, *level0_only)?;
            if let Some(path) = control_out {
                std::fs::write(path, result.control.to_toml())?;
            }
            writeln!(report, "boundary band at r: {}", result.diagnostics[0].band)?;
            writeln!(report, "levels written: {}", if *level0_only { 1 } else { result.levels.len() })?;
        }
        Command::Simulate { model, control, r, y, paths, substeps, dump_paths, scheme } => {
            let seed = need_seed(cli)?;
            let m = read_model(model)?;
            let scheme = scheme.config();
            let r = r.unwrap_or(m.time.start());
            if m.time.level_of(r).is_none_or(|k| k >= m.time.steps()) {
                return Err(fail(EXIT_DOMAIN, format!("r = {r} is not a grid node before T")));
            }
            if y.len() != m.space.dim() || !m.space.contains(y) {
                return Err(fail(EXIT_DOMAIN, format!("y = {y:?} lies outside the space box")));
            }
            write_header(report, "simulate", model, &m, &scheme)?;
            let gamma = resolve_control(control, &m, &scheme)?;
            let mc = McConfig { substeps: *substeps, ..McConfig::new(*paths, seed) };
            let [e, p, lb] = mc_all(&gamma, &m.payoff, r, y, &m, &mc)?;
            writeln!(csv, "{}", output::ESTIMATE_HEADER)?;
            output::write_estimate(csv, "expectation", r, y, &e, seed)?;
            output::write_estimate(csv, "penalty", r, y, &p, seed)?;
            output::write_estimate(csv, "lower_bound", r, y, &lb, seed)?;
            if let Some(path) = dump_paths {
                let dumped: Vec<_> = (0..(*paths as u64).min(1000))
                    .map(|i| sample_path(&gamma, r, y, &m, &mc, i).map(|s| (i, s)))
                    .collect::<Result<_, _>>()?;
                let mut f = BufWriter::new(File::create(path)?);
                output::write_paths(&mut f, m.space.dim(), &dumped)?;
                f.flush()?;
            }
            writeln!(report, "control: {control}")?;
            writeln!(report, "paths: {paths}, substeps: {substeps}, seed: {seed}")?;
            writeln!(report, "excursion fraction: {}", e.excursion_fraction)?;
        }
        Command::Verify { model, suite, paths, substeps, controls, scheme } => {
            let seed = need_seed(cli)?;
            let m = read_model(model)?;
            let suite = match suite {
                SuiteArg::Martingale => Suite::Martingale,
                SuiteArg::Cocycle => Suite::Cocycle,
                SuiteArg::Pasting => Suite::Pasting,
                SuiteArg::Consistency => Suite::Consistency,
                SuiteArg::Dominance => Suite::Dominance,
                SuiteArg::All => Suite::All,
            };
            let cfg = VerifyConfig {
                scheme: scheme.config(),
                martingale_paths: *paths,
                substeps: *substeps,
                controls: *controls,
                ..VerifyConfig::new(seed)
            };
            write_header(report, "verify", model, &m, &cfg.scheme)?;
            let checks = run_suite(&m, suite, &cfg)?;
            writeln!(csv, "suite,check,value,tolerance,pass")?;
            for c in &checks {
                writeln!(csv, "{},{},{},{},{}", c.suite, c.name, c.value, c.tolerance, c.passed)?;
                writeln!(
                    report,
                    "{:<5} {:<12} {:<40} value {:e}  tolerance {:e}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.suite.name(),
                    c.name,
                    c.value,
                    c.tolerance
                )?;
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            writeln!(report, "checks: {}, failed: {failed}", checks.len())?;
            writeln!(report, "wall time: {:.3} s", started.elapsed().as_secs_f64())?;
            return Ok(if failed == 0 { EXIT_OK } else { EXIT_VERIFY });
        }
        Command::Converge { model, levels, oracle, scheme } => {
            let m = read_model(model)?;
            let scheme = scheme.config();
            write_header(report, "converge", model, &m, &scheme)?;
            let reference = match oracle {
                OracleArg::ClosedForm => Reference::ClosedForm,
                OracleArg::Finest => Reference::Finest,
            };
            let rows = convergence_study(&m, &scheme, *levels as usize, reference)?;
            output::write_convergence(csv, &rows)?;
            for r in &rows {
                let order = r.observed_order.map_or("-".to_string(), |o| format!("{o:.3}"));
                writeln!(report, "level {}: dx {} dt {:e} sup error {:e} order {order}", r.level, r.dx, r.dt, r.sup_error)?;
            }
        }
    }
    writeln!(report, "wall time: {:.3} s", started.elapsed().as_secs_f64())?;
    Ok(EXIT_OK)
}

fn write_header(
    report: &mut Vec<u8>,
    command: &str,
    path: &Path,
    m: &Model,
    scheme: &SchemeConfig,
) -> Result<(), Failure> {
    let sizes: Vec<String> = m.space.axes().iter().map(|a| a.points.to_string()).collect();
    writeln!(report, "command: {command}")?;
    writeln!(report, "model: {}", path.display())?;
    writeln!(report, "space: n = {}, M = {}", m.space.dim(), sizes.join("x"))?;
    writeln!(report, "time: r = {}, T = {}, N = {}", m.time.start(), m.time.horizon(), m.time.steps())?;
    let max_dt = max_stable_dt(m, scheme);
    let cfl = match check_cfl(m, scheme) {
        Ok(()) => "ok".to_string(),
        Err(e) => e.to_string(),
    };
    writeln!(report, "dt = {}, max stable dt = {max_dt}, CFL: {cfl}", m.time.dt())?;
    let tau = m.time.horizon() - m.time.start();
    writeln!(report, "boundary band over [r, T]: {}", boundary_band(m, scheme, tau))?;
    for w in m.warnings() {
        writeln!(report, "warning: {w}")?;
    }
    Ok(())
}

fn resolve_control(source: &str, m: &Model, scheme: &SchemeConfig) -> Result<Control, Failure> {
    if source == "optimal" {
        return Ok(solve(m, scheme)?.control);
    }
    if let Some(path) = source.strip_prefix("file:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| fail(EXIT_INPUT, format!("cannot read control {path}: {e}")))?;
        return Control::from_toml(&text, m).map_err(|e| fail(EXIT_INPUT, format!("{path}: {e}")));
    }
    if let Some(seed) = source.strip_prefix("random:") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| fail(EXIT_INPUT, format!("bad control seed '{seed}'")))?;
        return Ok(Control::random(m, &mut ChaCha8Rng::seed_from_u64(seed)));
    }
    Err(fail(EXIT_INPUT, format!("unknown control source '{source}' (optimal, file:PATH, random:SEED)")))
}
