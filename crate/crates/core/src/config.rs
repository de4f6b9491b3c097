//! TOML run configurations.
//!
//! ```toml
//! N = 30
//! game = "hawk-dove"          # preset name or a square matrix
//! mu = "1/30"                 # number or "p/q"; or mutation_matrix = [[...]]
//! selection = "fermi"         # or "linear"
//! beta = 1.0                  # required for fermi
//!
//! [solver]                    # optional
//! method = "auto"
//! tol = 1e-13
//!
//! [sweep]                     # optional, used by the sweep command
//! param = "beta"
//! grid = "0:10:50"
//! track = ["center", "15,15"]
//! normalize = true
//! divisor = "stars-bars"
//! ```
//!
//! Every error names the offending field.

use std::path::Path;

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::game::GameMatrix;
use crate::process::{MutationSpec, ProcessSpec, SelectionSpec};
use crate::solver::SolverOptions;
use crate::state::StateCountDivisor;
use crate::sweep::{Grid, SweptParameter, TrackedState};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub param: Option<SweptParameter>,
    pub grid: Option<Grid>,
    pub track: Vec<TrackedState>,
    pub normalize: Option<bool>,
    pub divisor: Option<StateCountDivisor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: ProcessSpec,
    pub solver: SolverOptions,
    pub sweep: Option<SweepConfig>,
}

const TOP_KEYS: &[&str] = &["N", "game", "mu", "mutation_matrix", "selection", "beta", "solver", "sweep"];
const SOLVER_KEYS: &[&str] = &["method", "tol", "max_iters", "dense_cap", "residual_tol"];
const SWEEP_KEYS: &[&str] = &["param", "grid", "track", "normalize", "divisor"];

fn field(name: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("field `{name}`: {msg}"))
}

fn check_keys(table: &Table, allowed: &[&str], prefix: &str) -> Result<()> {
    for k in table.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(field(&format!("{prefix}{k}"), "unknown field"));
        }
    }
    Ok(())
}

fn number(name: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        Value::String(s) => parse_fraction(s).ok_or_else(|| field(name, format!("'{s}' is not a number or p/q fraction"))),
        other => Err(field(name, format!("expected a number, found {}", other.type_str()))),
    }
}

fn parse_fraction(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().ok()?;
            let q: f64 = q.trim().parse().ok()?;
            (q != 0.0).then_some(p / q)
        }
        None => s.trim().parse().ok(),
    }
}

fn string<'a>(name: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| field(name, format!("expected a string, found {}", v.type_str())))
}

fn matrix(name: &str, v: &Value) -> Result<Vec<Vec<f64>>> {
    let rows = v.as_array().ok_or_else(|| field(name, "expected an array of rows"))?;
    rows.iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| field(name, "expected an array of rows"))?
                .iter()
                .map(|x| number(name, x))
                .collect()
        })
        .collect()
}

fn parse_solver(t: &Table) -> Result<SolverOptions> {
    check_keys(t, SOLVER_KEYS, "solver.")?;
    let mut o = SolverOptions::default();
    if let Some(v) = t.get("method") {
        o.method = string("solver.method", v)?.parse().map_err(|e| field("solver.method", e))?;
    }
    if let Some(v) = t.get("tol") {
        o.tol = positive("solver.tol", number("solver.tol", v)?)?;
    }
    if let Some(v) = t.get("residual_tol") {
        o.residual_tol = positive("solver.residual_tol", number("solver.residual_tol", v)?)?;
    }
    if let Some(v) = t.get("max_iters") {
        o.max_iters = count("solver.max_iters", v)?;
    }
    if let Some(v) = t.get("dense_cap") {
        o.dense_cap = count("solver.dense_cap", v)?;
    }
    Ok(o)
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(field(name, format!("must be positive, got {x}")))
    }
}

fn count(name: &str, v: &Value) -> Result<usize> {
    match v.as_integer() {
        Some(i) if i > 0 => Ok(i as usize),
        _ => Err(field(name, "expected a positive integer")),
    }
}

fn parse_sweep(t: &Table) -> Result<SweepConfig> {
    check_keys(t, SWEEP_KEYS, "sweep.")?;
    let param = t
        .get("param")
        .map(|v| string("sweep.param", v)?.parse().map_err(|e| field("sweep.param", e)))
        .transpose()?;
    let grid = t
        .get("grid")
        .map(|v| match v {
            Value::String(s) => s.parse::<Grid>().map_err(|e| field("sweep.grid", e)),
            Value::Array(a) => {
                let xs = a.iter().map(|x| number("sweep.grid", x)).collect::<Result<Vec<_>>>()?;
                Grid::from_values(xs).map_err(|e| field("sweep.grid", e))
            }
            other => Err(field("sweep.grid", format!("expected a string or array, found {}", other.type_str()))),
        })
        .transpose()?;
    let track = match t.get("track") {
        None => Vec::new(),
        Some(Value::Array(a)) => a
            .iter()
            .map(|x| match x {
                Value::String(s) => s.parse().map_err(|e| field("sweep.track", e)),
                Value::Array(c) => c
                    .iter()
                    .map(|k| match k.as_integer() {
                        Some(i) if i >= 0 => Ok(i as u32),
                        _ => Err(field("sweep.track", "state counts must be non-negative integers")),
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(TrackedState::Explicit),
                other => Err(field("sweep.track", format!("unexpected {}", other.type_str()))),
            })
            .collect::<Result<Vec<_>>>()?,
        Some(other) => return Err(field("sweep.track", format!("expected an array, found {}", other.type_str()))),
    };
    let normalize = t
        .get("normalize")
        .map(|v| v.as_bool().ok_or_else(|| field("sweep.normalize", "expected true or false")))
        .transpose()?;
    let divisor = t
        .get("divisor")
        .map(|v| string("sweep.divisor", v)?.parse().map_err(|e| field("sweep.divisor", e)))
        .transpose()?;
    Ok(SweepConfig {
        param,
        grid,
        track,
        normalize,
        divisor,
    })
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        check_keys(&table, TOP_KEYS, "")?;

        let population = match table.get("N") {
            None => return Err(field("N", "missing")),
            Some(v) => match v.as_integer() {
                Some(i) if i >= 1 && i <= u32::MAX as i64 => i as u32,
                _ => return Err(field("N", "expected a positive integer")),
            },
        };

        let game = match table.get("game") {
            None => return Err(field("game", "missing")),
            Some(Value::String(s)) => GameMatrix::preset(s).map_err(|e| field("game", e))?,
            Some(v @ Value::Array(_)) => GameMatrix::new(matrix("game", v)?).map_err(|e| field("game", e))?,
            Some(other) => return Err(field("game", format!("expected a preset name or matrix, found {}", other.type_str()))),
        };

        let mutation = match (table.get("mu"), table.get("mutation_matrix")) {
            (Some(_), Some(_)) => return Err(field("mu", "give either mu or mutation_matrix, not both")),
            (None, None) => return Err(field("mu", "missing (or give mutation_matrix)")),
            (Some(v), None) => {
                let mu = number("mu", v)?;
                if !(0.0..=1.0).contains(&mu) {
                    return Err(field("mu", format!("must lie in [0, 1], got {mu}")));
                }
                MutationSpec::uniform(mu)
            }
            (None, Some(v)) => {
                let m = MutationSpec::Matrix(matrix("mutation_matrix", v)?);
                m.expand(game.size()).map_err(|e| field("mutation_matrix", e))?;
                m
            }
        };

        let beta = table.get("beta").map(|v| number("beta", v)).transpose()?;
        let selection = match table.get("selection").map(|v| string("selection", v)).transpose()? {
            None | Some("linear") => {
                if beta.is_some() {
                    return Err(field("beta", "only meaningful with selection = \"fermi\""));
                }
                SelectionSpec::linear()
            }
            Some("fermi") => {
                let b = beta.ok_or_else(|| field("beta", "required for fermi selection"))?;
                if !(b >= 0.0 && b.is_finite()) {
                    return Err(field("beta", format!("must be finite and non-negative, got {b}")));
                }
                SelectionSpec::fermi(b)
            }
            Some(other) => return Err(field("selection", format!("expected \"linear\" or \"fermi\", got '{other}'"))),
        };

        let spec = ProcessSpec::new(population, game, mutation, selection).map_err(|e| Error::Config(e.to_string()))?;

        let solver = match table.get("solver") {
            None => SolverOptions::default(),
            Some(Value::Table(t)) => parse_solver(t)?,
            Some(_) => return Err(field("solver", "expected a table")),
        };
        let sweep = match table.get("sweep") {
            None => None,
            Some(Value::Table(t)) => Some(parse_sweep(t)?),
            Some(_) => return Err(field("sweep", "expected a table")),
        };
        Ok(RunConfig { spec, solver, sweep })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

impl std::str::FromStr for RunConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_toml_str(s)
    }
}
