//! TOML model files.
//!
//! ```toml
//! [time]
//! r = 0.0
//! T = 0.5
//! N = 200
//!
//! [space]
//! n = 1
//! lower = [-6.0]
//! upper = [6.0]
//! M = [241]
//!
//! [gamma]
//! mode = "constant"
//! [[gamma.candidates]]
//! a = [1.0]            # row-major n×n
//! b = [0.0]
//! jumps = [[1.0, 2.0]] # [y_1, ..., y_n, lambda]
//!
//! [penalty]
//! family = "zero"
//!
//! [payoff]
//! family = "quadratic"
//! scale = 1.0
//! ```
//!
//! Time- and state-dependent Γ use `[[gamma.sets]]` (each with its own
//! `candidates`) plus `index`, one set number per time step or per cell.

use serde::{Deserialize, Serialize};

use super::{
    Axis, Bounds, GammaMap, GammaMode, JumpAtom, Model, ModelError, ParamPoint, Payoff, Penalty,
    SpaceGrid, TimeGrid,
};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    time: TimeSection,
    space: SpaceSection,
    #[serde(default)]
    bounds: BoundsSection,
    gamma: GammaSection,
    #[serde(default = "zero_penalty")]
    penalty: PenaltyFile,
    payoff: PayoffFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeSection {
    r: f64,
    #[serde(rename = "T")]
    horizon: f64,
    #[serde(rename = "N")]
    steps: i64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceSection {
    n: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    #[serde(rename = "M")]
    points: Vec<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BoundsSection {
    eps_spd: f64,
    a_bound: f64,
    b_bound: f64,
    c_bound: f64,
}

impl Default for BoundsSection {
    fn default() -> Self {
        let b = Bounds::default();
        Self {
            eps_spd: b.eps_spd,
            a_bound: b.a_bound,
            b_bound: b.b_bound,
            c_bound: b.c_bound,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GammaSection {
    #[serde(default = "constant_mode")]
    mode: GammaMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    candidates: Option<Vec<CandidateFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sets: Option<Vec<SetFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    index: Option<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetFile {
    candidates: Vec<CandidateFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateFile {
    a: Vec<f64>,
    b: Vec<f64>,
    #[serde(default)]
    jumps: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum PenaltyFile {
    Zero,
    Constant { c: f64 },
    QuadraticDrift { eta: f64 },
    QuadraticState { coef: f64 },
    Table { values: Vec<Vec<f64>> },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
enum PayoffFile {
    Quadratic {
        #[serde(default = "one")]
        scale: f64,
    },
    Absolute {
        #[serde(default = "one")]
        scale: f64,
    },
    Linear {
        slope: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    Call {
        strike: f64,
        #[serde(default)]
        smoothing: f64,
    },
    Indicator {
        threshold: f64,
        width: f64,
    },
    Table {
        values: Vec<f64>,
    },
}

fn zero_penalty() -> PenaltyFile {
    PenaltyFile::Zero
}

fn constant_mode() -> GammaMode {
    GammaMode::Constant
}

fn one() -> f64 {
    1.0
}

/// Parses and validates a model file.
pub fn load_model(text: &str) -> Result<Model, ModelError> {
    let file: ModelFile = toml::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
    file.into_model()
}

impl ModelFile {
    fn into_model(self) -> Result<Model, ModelError> {
        if self.time.steps < 1 {
            return Err(ModelError::invalid("time.N", "N must be ≥ 1"));
        }
        let time = TimeGrid::new(self.time.r, self.time.horizon, self.time.steps as usize)?;

        let sp = self.space;
        if sp.n == 0 || sp.lower.len() != sp.n || sp.upper.len() != sp.n || sp.points.len() != sp.n
        {
            return Err(ModelError::invalid(
                "space",
                "lower, upper and M must each have n entries",
            ));
        }
        if let Some(m) = sp.points.iter().find(|&&m| m < 3) {
            return Err(ModelError::invalid(
                "space.M",
                format!("M must be ≥ 3, got {m}"),
            ));
        }
        let space = SpaceGrid::new(
            (0..sp.n)
                .map(|i| Axis {
                    lower: sp.lower[i],
                    upper: sp.upper[i],
                    points: sp.points[i] as usize,
                })
                .collect(),
        )?;
        let n = space.dim();

        let gamma = match self.gamma.mode {
            GammaMode::Constant => {
                let cands = self.gamma.candidates.ok_or_else(|| {
                    ModelError::invalid("gamma.candidates", "required in constant mode")
                })?;
                if self.gamma.sets.is_some() || self.gamma.index.is_some() {
                    return Err(ModelError::invalid(
                        "gamma",
                        "constant mode takes `candidates`, not `sets`/`index`",
                    ));
                }
                GammaMap::constant(convert_candidates(cands, n)?)
            }
            mode => {
                let sets = self.gamma.sets.ok_or_else(|| {
                    ModelError::invalid("gamma.sets", "required for non-constant modes")
                })?;
                let index = self
                    .gamma
                    .index
                    .ok_or_else(|| ModelError::invalid("gamma.index", "required for non-constant modes"))?;
                let sets = sets
                    .into_iter()
                    .map(|s| convert_candidates(s.candidates, n))
                    .collect::<Result<Vec<_>, _>>()?;
                GammaMap::new(mode, sets, index)
            }
        };

        let penalty = match self.penalty {
            PenaltyFile::Zero => Penalty::Zero,
            PenaltyFile::Constant { c } => Penalty::Constant { c },
            PenaltyFile::QuadraticDrift { eta } => Penalty::QuadraticDrift { eta },
            PenaltyFile::QuadraticState { coef } => Penalty::QuadraticState { coef },
            PenaltyFile::Table { values } => Penalty::Table {
                grid: space.clone(),
                values,
            },
        };
        let payoff = match self.payoff {
            PayoffFile::Quadratic { scale } => Payoff::Quadratic { scale },
            PayoffFile::Absolute { scale } => Payoff::Absolute { scale },
            PayoffFile::Linear { slope, offset } => Payoff::Linear { slope, offset },
            PayoffFile::Call { strike, smoothing } => {
                if smoothing < 0.0 {
                    return Err(ModelError::invalid("payoff.smoothing", "must be ≥ 0"));
                }
                Payoff::Call { strike, smoothing }
            }
            PayoffFile::Indicator { threshold, width } => {
                if width <= 0.0 {
                    return Err(ModelError::invalid("payoff.width", "must be > 0"));
                }
                Payoff::Indicator { threshold, width }
            }
            PayoffFile::Table { values } => Payoff::Table {
                grid: space.clone(),
                values,
            },
        };
        let b = self.bounds;
        let bounds = Bounds {
            eps_spd: b.eps_spd,
            a_bound: b.a_bound,
            b_bound: b.b_bound,
            c_bound: b.c_bound,
        };
        Model::new(time, space, gamma, penalty, payoff, bounds)
    }
}

fn convert_candidates(cands: Vec<CandidateFile>, n: usize) -> Result<Vec<ParamPoint>, ModelError> {
    cands
        .into_iter()
        .enumerate()
        .map(|(k, c)| {
            let jumps = c
                .jumps
                .into_iter()
                .map(|row| {
                    if row.len() != n + 1 {
                        return Err(ModelError::invalid(
                            "gamma.candidates.jumps",
                            format!("candidate {k}: each jump is [y_1..y_n, lambda] ({} numbers)", n + 1),
                        ));
                    }
                    Ok(JumpAtom::new(row[..n].to_vec(), row[n]))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ParamPoint::new(c.a, c.b, jumps))
        })
        .collect()
}

fn candidates_to_file(cands: &[ParamPoint]) -> Vec<CandidateFile> {
    cands
        .iter()
        .map(|p| CandidateFile {
            a: p.a.clone(),
            b: p.b.clone(),
            jumps: p
                .jumps
                .iter()
                .map(|j| {
                    let mut row = j.y.clone();
                    row.push(j.lambda);
                    row
                })
                .collect(),
        })
        .collect()
}

impl Model {
    /// Serializes to the model-file format; `load_model` re-parses it to an
    /// equal model.
    pub fn to_toml(&self) -> String {
        let gamma = match self.gamma.mode() {
            GammaMode::Constant => GammaSection {
                mode: GammaMode::Constant,
                candidates: Some(candidates_to_file(&self.gamma.sets()[0])),
                sets: None,
                index: None,
            },
            mode => GammaSection {
                mode,
                candidates: None,
                sets: Some(
                    self.gamma
                        .sets()
                        .iter()
                        .map(|s| SetFile {
                            candidates: candidates_to_file(s),
                        })
                        .collect(),
                ),
                index: Some(self.gamma.index().to_vec()),
            },
        };
        let file = ModelFile {
            time: TimeSection {
                r: self.time.start(),
                horizon: self.time.horizon(),
                steps: self.time.steps() as i64,
            },
            space: SpaceSection {
                n: self.space.dim(),
                lower: self.space.axes().iter().map(|a| a.lower).collect(),
                upper: self.space.axes().iter().map(|a| a.upper).collect(),
                points: self.space.axes().iter().map(|a| a.points as i64).collect(),
            },
            bounds: BoundsSection {
                eps_spd: self.bounds.eps_spd,
                a_bound: self.bounds.a_bound,
                b_bound: self.bounds.b_bound,
                c_bound: self.bounds.c_bound,
            },
            gamma,
            penalty: match &self.penalty {
                Penalty::Zero => PenaltyFile::Zero,
                Penalty::Constant { c } => PenaltyFile::Constant { c: *c },
                Penalty::QuadraticDrift { eta } => PenaltyFile::QuadraticDrift { eta: *eta },
                Penalty::QuadraticState { coef } => PenaltyFile::QuadraticState { coef: *coef },
                Penalty::Table { values, .. } => PenaltyFile::Table {
                    values: values.clone(),
                },
            },
            payoff: match &self.payoff {
                Payoff::Quadratic { scale } => PayoffFile::Quadratic { scale: *scale },
                Payoff::Absolute { scale } => PayoffFile::Absolute { scale: *scale },
                Payoff::Linear { slope, offset } => PayoffFile::Linear {
                    slope: slope.clone(),
                    offset: *offset,
                },
                Payoff::Call { strike, smoothing } => PayoffFile::Call {
                    strike: *strike,
                    smoothing: *smoothing,
                },
                Payoff::Indicator { threshold, width } => PayoffFile::Indicator {
                    threshold: *threshold,
                    width: *width,
                },
                Payoff::Table { values, .. } => PayoffFile::Table {
                    values: values.clone(),
                },
            },
        };
        toml::to_string(&file).expect("model serializes")
    }
}
