//! Parameter sweeps over selection strength, mutation rate and population size.
//!
//! Each grid point is an independent build-solve-analyze run. Points are
//! evaluated in parallel and collected in grid order; a failing point is
//! recorded with its error and does not abort the sweep.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::entropy::{classify_extrema, entropy_rate, rte, Classification, LogBase, DEFAULT_TIE_TOL};
use crate::error::{Error, Result};
use crate::export::{fmt12, round12, SCHEMA_VERSION};
use crate::kernel::build_kernel;
use crate::process::{MutationSpec, ProcessSpec, SelectionKind};
use crate::solver::{solve, Method, SolverOptions};
use crate::state::StateCountDivisor;

pub const DEFAULT_GRID_POINTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// Strictly monotone sequence of parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    values: Vec<f64>,
}

impl Grid {
    pub fn range(start: f64, stop: f64, count: usize, spacing: Spacing) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidArgument("grid needs at least one point".into()));
        }
        if !(start.is_finite() && stop.is_finite()) {
            return Err(Error::InvalidArgument("grid bounds must be finite".into()));
        }
        if count == 1 {
            return Self::from_values(vec![start]);
        }
        let step = |k: usize| k as f64 / (count - 1) as f64;
        let values = match spacing {
            Spacing::Linear => (0..count).map(|k| start + (stop - start) * step(k)).collect(),
            Spacing::Log => {
                if !(start > 0.0 && stop > 0.0) {
                    return Err(Error::InvalidArgument("log grid bounds must be positive".into()));
                }
                let (a, b) = (start.ln(), stop.ln());
                (0..count).map(|k| (a + (b - a) * step(k)).exp()).collect()
            }
        };
        Self::from_values(values)
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("grid needs at least one point".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("grid values must be finite".into()));
        }
        let increasing = values.windows(2).all(|w| w[0] < w[1]);
        let decreasing = values.windows(2).all(|w| w[0] > w[1]);
        if !(increasing || decreasing) {
            return Err(Error::InvalidArgument("grid must be strictly monotone".into()));
        }
        Ok(Grid { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// `start:stop[:count[:linear|log]]` or a comma-separated list.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::InvalidArgument(format!("bad grid '{s}': {what}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(&format!("'{t}' is not a number")));
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if !(2..=4).contains(&parts.len()) {
                return Err(bad("expected start:stop[:count[:spacing]]"));
            }
            let start = num(parts[0])?;
            let stop = num(parts[1])?;
            let count = match parts.get(2) {
                Some(c) => c.trim().parse::<usize>().map_err(|_| bad("count must be a positive integer"))?,
                None => DEFAULT_GRID_POINTS,
            };
            let spacing = match parts.get(3).map(|t| t.trim()) {
                None | Some("linear") => Spacing::Linear,
                Some("log") => Spacing::Log,
                Some(other) => return Err(bad(&format!("unknown spacing '{other}'"))),
            };
            Grid::range(start, stop, count, spacing)
        } else {
            let values = s.split(',').map(num).collect::<Result<Vec<_>>>()?;
            Grid::from_values(values)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweptParameter {
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "mu")]
    Mu,
    #[serde(rename = "N")]
    PopulationSize,
}

impl fmt::Display for SweptParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweptParameter::Beta => "beta",
            SweptParameter::Mu => "mu",
            SweptParameter::PopulationSize => "N",
        })
    }
}

impl FromStr for SweptParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta" => Ok(SweptParameter::Beta),
            "mu" => Ok(SweptParameter::Mu),
            "N" | "n" => Ok(SweptParameter::PopulationSize),
            other => Err(Error::InvalidArgument(format!("unknown sweep parameter '{other}' (expected beta, mu or N)"))),
        }
    }
}

/// A state to follow across a sweep. Symbolic states expand to their whole
/// permutation orbit and are re-resolved for every population size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackedState {
    /// `(N, 0, ..., 0)` and permutations.
    Corner,
    /// `(N/2, N/2, 0, ..., 0)` and permutations.
    BoundaryMidpoint,
    /// `(N/n, ..., N/n)`.
    Center,
    Explicit(Vec<u32>),
}

impl TrackedState {
    /// Labels of the concrete states this expands to, independent of `N`.
    pub fn labels(&self, types: usize) -> Vec<String> {
        match self {
            TrackedState::Corner => (1..=types).map(|i| format!("corner{i}")).collect(),
            TrackedState::BoundaryMidpoint => pairs(types).map(|(i, j)| format!("midpoint{}{}", i + 1, j + 1)).collect(),
            TrackedState::Center => vec!["center".into()],
            TrackedState::Explicit(c) => vec![c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("_")],
        }
    }

    /// Concrete states at population size `population`.
    pub fn resolve(&self, population: u32, types: usize) -> Result<Vec<Vec<u32>>> {
        let missing = |why: String| Error::InvalidArgument(format!("N={population}: {why}"));
        match self {
            TrackedState::Corner => Ok((0..types)
                .map(|i| {
                    let mut c = vec![0; types];
                    c[i] = population;
                    c
                })
                .collect()),
            TrackedState::BoundaryMidpoint => {
                if !population.is_multiple_of(2) {
                    return Err(missing("boundary midpoints need N divisible by 2".into()));
                }
                Ok(pairs(types)
                    .map(|(i, j)| {
                        let mut c = vec![0; types];
                        c[i] = population / 2;
                        c[j] = population / 2;
                        c
                    })
                    .collect())
            }
            TrackedState::Center => {
                if !(population as usize).is_multiple_of(types) {
                    return Err(missing(format!("the center needs N divisible by {types}")));
                }
                Ok(vec![vec![population / types as u32; types]])
            }
            TrackedState::Explicit(c) => {
                if c.len() != types || c.iter().sum::<u32>() != population {
                    return Err(missing(format!("state {c:?} is not a composition of N into {types} parts")));
                }
                Ok(vec![c.clone()])
            }
        }
    }

    /// Tracked states that are images of each other under type permutations,
    /// grouped by label index.
    pub fn class_name(&self) -> String {
        match self {
            TrackedState::Corner => "corner".into(),
            TrackedState::BoundaryMidpoint => "boundary-midpoint".into(),
            TrackedState::Center => "center".into(),
            TrackedState::Explicit(_) => self.labels(0).remove(0),
        }
    }
}

fn pairs(types: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..types).flat_map(move |i| (i + 1..types).map(move |j| (i, j)))
}

impl FromStr for TrackedState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "corner" | "corners" => Ok(TrackedState::Corner),
            "boundary-midpoint" | "boundary-midpoints" | "midpoint" => Ok(TrackedState::BoundaryMidpoint),
            "center" => Ok(TrackedState::Center),
            other => {
                let inner = other.trim_start_matches('(').trim_end_matches(')');
                let counts = inner
                    .split(|c: char| c == ',' || c == ';' || c == '_' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<u32>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::InvalidArgument(format!("unknown tracked state '{other}'")))?;
                if counts.len() < 2 {
                    return Err(Error::InvalidArgument(format!("unknown tracked state '{other}'")));
                }
                Ok(TrackedState::Explicit(counts))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub solver: SolverOptions,
    pub divisor: StateCountDivisor,
    /// Divide RTEs by the state-count divisor; when off the divisor is 1.
    pub normalize: bool,
    pub tie_tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            solver: SolverOptions::default(),
            divisor: StateCountDivisor::StarsBars,
            normalize: true,
            tie_tol: DEFAULT_TIE_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedValue {
    pub label: String,
    pub state: Vec<u32>,
    pub probability: f64,
    pub rte: f64,
    pub rte_normalized: f64,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointData {
    pub entropy_rate: f64,
    pub residual: f64,
    pub method: Method,
    pub iterations: usize,
    pub state_count: usize,
    pub divisor: f64,
    pub tracked: Vec<TrackedValue>,
}

impl PointData {
    pub fn get(&self, label: &str) -> Option<&TrackedValue> {
        self.tracked.iter().find(|t| t.label == label)
    }

    /// Label of the tracked state with the smallest RTE.
    pub fn argmin_rte(&self) -> Option<&TrackedValue> {
        self.tracked.iter().min_by(|a, b| a.rte.total_cmp(&b.rte))
    }
}

/// Why a grid point produced no data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub message: String,
    /// The solver ran out of iterations or missed its residual bound.
    pub convergence: bool,
}

impl fmt::Display for PointFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for PointFailure {
    fn from(e: Error) -> Self {
        PointFailure {
            convergence: e.is_convergence_failure(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub param_value: f64,
    pub result: std::result::Result<PointData, PointFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: SweptParameter,
    pub template: ProcessSpec,
    pub tracked: Vec<TrackedState>,
    pub labels: Vec<String>,
    pub divisor: StateCountDivisor,
    pub normalized: bool,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.param_value).collect()
    }

    /// Successful points only, in grid order.
    pub fn data(&self) -> Vec<(f64, &PointData)> {
        self.points
            .iter()
            .filter_map(|p| p.result.as_ref().ok().map(|d| (p.param_value, d)))
            .collect()
    }

    pub fn failures(&self) -> Vec<(f64, &str)> {
        self.points
            .iter()
            .filter_map(|p| p.result.as_ref().err().map(|e| (p.param_value, e.message.as_str())))
            .collect()
    }

    /// Series of one tracked quantity across the grid (NaN at failed points).
    pub fn series(&self, label: &str, pick: impl Fn(&TrackedValue) -> f64) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| match &p.result {
                Ok(d) => d.get(label).map_or(f64::NAN, &pick),
                Err(_) => f64::NAN,
            })
            .collect()
    }

    pub fn entropy_rates(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| p.result.as_ref().map_or(f64::NAN, |d| d.entropy_rate))
            .collect()
    }

    /// Columns: `param_value, entropy_rate`, then for every tracked label
    /// `s_<label>, rte_<label>, rte_normalized_<label>, class_<label>`.
    pub fn write_csv<W: Write>(&self, base: LogBase, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["param_value".to_string(), "entropy_rate".to_string()];
        for l in &self.labels {
            header.push(format!("s_{l}"));
            header.push(format!("rte_{l}"));
            header.push(format!("rte_normalized_{l}"));
            header.push(format!("class_{l}"));
        }
        w.write_record(&header)?;
        for p in &self.points {
            let mut row = vec![fmt12(p.param_value)];
            match &p.result {
                Ok(d) => {
                    row.push(fmt12(base.convert(d.entropy_rate)));
                    for t in &d.tracked {
                        row.push(fmt12(t.probability));
                        row.push(fmt12(base.convert(t.rte)));
                        row.push(fmt12(base.convert(t.rte_normalized)));
                        row.push(t.classification.as_str().into());
                    }
                }
                Err(_) => {
                    row.push("NaN".into());
                    for _ in &self.labels {
                        row.extend(["NaN", "NaN", "NaN", "error"].map(String::from));
                    }
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Sidecar metadata: spec template, residuals, divisor and versions.
    pub fn sidecar_json(&self, base: LogBase, solver: &SolverOptions) -> Value {
        let points: Vec<Value> = self
            .points
            .iter()
            .map(|p| match &p.result {
                Ok(d) => json!({
                    "param_value": round12(p.param_value),
                    "residual": round12(d.residual),
                    "method": d.method.to_string(),
                    "iterations": d.iterations,
                    "state_count": d.state_count,
                    "divisor": d.divisor,
                    "states": d.tracked.iter().map(|t| json!({"label": t.label, "state": t.state})).collect::<Vec<_>>(),
                }),
                Err(e) => json!({
                    "param_value": round12(p.param_value),
                    "error": e.message,
                    "convergence_failure": e.convergence,
                }),
            })
            .collect();
        json!({
            "schema_version": SCHEMA_VERSION,
            "software_version": env!("CARGO_PKG_VERSION"),
            "parameter": self.parameter.to_string(),
            "grid": self.grid().iter().map(|v| round12(*v)).collect::<Vec<_>>(),
            "spec": self.template,
            "tracked": self.tracked.iter().map(|t| t.class_name()).collect::<Vec<_>>(),
            "labels": self.labels,
            "divisor": if self.normalized { self.divisor.name() } else { "none" },
            "log_base": base.name(),
            "solver": {
                "method": format!("{:?}", solver.method).to_lowercase(),
                "tol": solver.tol,
                "max_iters": solver.max_iters,
                "dense_cap": solver.dense_cap,
                "residual_tol": solver.residual_tol,
            },
            "points": points,
        })
    }
}

fn labels_for(tracked: &[TrackedState], types: usize) -> Vec<String> {
    tracked.iter().flat_map(|t| t.labels(types)).collect()
}

fn resolve_all(tracked: &[TrackedState], population: u32, types: usize) -> Result<Vec<Vec<u32>>> {
    let mut out = Vec::new();
    for t in tracked {
        out.extend(t.resolve(population, types)?);
    }
    Ok(out)
}

/// Build, solve and analyze one grid point.
pub fn evaluate_point(spec: &ProcessSpec, tracked: &[TrackedState], opts: &SweepOptions) -> Result<PointData> {
    let types = spec.num_types();
    let labels = labels_for(tracked, types);
    let states = resolve_all(tracked, spec.population, types)?;
    let kernel = build_kernel(spec)?;
    let dist = solve(&kernel, &opts.solver)?;
    let h = entropy_rate(&kernel, &dist)?;
    let extrema = classify_extrema(&kernel.adjacency(), &dist.probabilities, opts.tie_tol);
    let space = kernel.space().expect("Moran kernels carry their state space");
    let divisor = if opts.normalize {
        opts.divisor.value(spec.population, types)
    } else {
        1.0
    };
    let tracked = labels
        .into_iter()
        .zip(states)
        .map(|(label, counts)| {
            let i = space.rank(&counts).expect("resolved states belong to the space");
            let p = dist.probabilities[i];
            let r = rte(h, p)?;
            Ok(TrackedValue {
                label,
                state: counts,
                probability: p,
                rte: r,
                rte_normalized: r / divisor,
                classification: extrema.classes[i],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PointData {
        entropy_rate: h,
        residual: dist.residual,
        method: dist.method,
        iterations: dist.iterations,
        state_count: kernel.len(),
        divisor,
        tracked,
    })
}

fn run(
    parameter: SweptParameter,
    template: &ProcessSpec,
    grid: &Grid,
    tracked: &[TrackedState],
    opts: &SweepOptions,
    make: impl Fn(f64) -> ProcessSpec + Sync,
) -> SweepResult {
    let points = grid
        .values()
        .par_iter()
        .map(|&v| SweepPoint {
            param_value: v,
            result: evaluate_point(&make(v), tracked, opts).map_err(PointFailure::from),
        })
        .collect();
    SweepResult {
        parameter,
        template: template.clone(),
        tracked: tracked.to_vec(),
        labels: labels_for(tracked, template.num_types()),
        divisor: opts.divisor,
        normalized: opts.normalize,
        points,
    }
}

/// Sweep the Fermi selection strength.
pub fn sweep_beta(template: &ProcessSpec, grid: &Grid, tracked: &[TrackedState], opts: &SweepOptions) -> Result<SweepResult> {
    template.validate()?;
    if template.selection.kind != SelectionKind::Fermi {
        return Err(Error::InvalidSpec("a beta sweep needs fermi selection".into()));
    }
    if let Some(b) = grid.values().iter().find(|b| **b < 0.0) {
        return Err(Error::InvalidArgument(format!("beta grid value {b} is negative")));
    }
    resolve_all(tracked, template.population, template.num_types())?;
    Ok(run(SweptParameter::Beta, template, grid, tracked, opts, |b| template.with_beta(b)))
}

/// Sweep a uniform mutation rate.
pub fn sweep_mu(template: &ProcessSpec, grid: &Grid, tracked: &[TrackedState], opts: &SweepOptions) -> Result<SweepResult> {
    template.validate()?;
    if let Some(m) = grid.values().iter().find(|m| !(**m > 0.0 && **m <= 1.0)) {
        return Err(Error::InvalidArgument(format!("mu grid value {m} is outside (0, 1]")));
    }
    resolve_all(tracked, template.population, template.num_types())?;
    Ok(run(SweptParameter::Mu, template, grid, tracked, opts, |m| {
        template.with_mutation(MutationSpec::uniform(m))
    }))
}

/// Sweep the population size with `mu = 1/N` at every point.
pub fn sweep_population(
    template: &ProcessSpec,
    grid: &Grid,
    tracked: &[TrackedState],
    opts: &SweepOptions,
) -> Result<SweepResult> {
    template.validate()?;
    for &v in grid.values() {
        if !(v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64) {
            return Err(Error::InvalidArgument(format!("N={v} is not a positive integer")));
        }
        resolve_all(tracked, v as u32, template.num_types())?;
    }
    Ok(run(SweptParameter::PopulationSize, template, grid, tracked, opts, |v| {
        let n = v as u32;
        template
            .with_population(n)
            .with_mutation(MutationSpec::uniform(1.0 / n as f64))
    }))
}

/// Dispatches on the swept parameter.
pub fn sweep(
    parameter: SweptParameter,
    template: &ProcessSpec,
    grid: &Grid,
    tracked: &[TrackedState],
    opts: &SweepOptions,
) -> Result<SweepResult> {
    match parameter {
        SweptParameter::Beta => sweep_beta(template, grid, tracked, opts),
        SweptParameter::Mu => sweep_mu(template, grid, tracked, opts),
        SweptParameter::PopulationSize => sweep_population(template, grid, tracked, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameMatrix;
    use crate::process::SelectionSpec;

    fn three_type(pop: u32) -> ProcessSpec {
        ProcessSpec::new(pop, GameMatrix::three_type(), MutationSpec::uniform(1.0 / pop as f64), SelectionSpec::fermi(1.0)).unwrap()
    }

    #[test]
    fn grid_parsing() {
        let g: Grid = "0:10:6".parse().unwrap();
        assert_eq!(g.values(), &[0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let g: Grid = "1e-4:1e-1:4:log".parse().unwrap();
        assert!((g.values()[1] - 1e-3).abs() < 1e-15);
        assert_eq!("0:1".parse::<Grid>().unwrap().len(), DEFAULT_GRID_POINTS);
        assert_eq!("12,24,36".parse::<Grid>().unwrap().values(), &[12.0, 24.0, 36.0]);
        assert!("1,1,2".parse::<Grid>().is_err());
        assert!("0:1:5:cubic".parse::<Grid>().is_err());
        assert!("0:1:4:log".parse::<Grid>().is_err());
        assert!("1e-2,1e-3,1e-4".parse::<Grid>().is_ok());
    }

    #[test]
    fn tracked_state_parsing_and_resolution() {
        assert_eq!("corner".parse::<TrackedState>().unwrap(), TrackedState::Corner);
        assert_eq!("(15,15)".parse::<TrackedState>().unwrap(), TrackedState::Explicit(vec![15, 15]));
        assert_eq!("30 30 0".parse::<TrackedState>().unwrap(), TrackedState::Explicit(vec![30, 30, 0]));
        assert!("saddle".parse::<TrackedState>().is_err());
        assert_eq!(
            TrackedState::BoundaryMidpoint.resolve(6, 3).unwrap(),
            vec![vec![3, 3, 0], vec![3, 0, 3], vec![0, 3, 3]]
        );
        assert_eq!(TrackedState::BoundaryMidpoint.labels(3), vec!["midpoint12", "midpoint13", "midpoint23"]);
        assert!(TrackedState::Center.resolve(10, 3).is_err());
        assert!(TrackedState::BoundaryMidpoint.resolve(9, 3).is_err());
        assert!(TrackedState::Explicit(vec![1, 2]).resolve(4, 2).is_err());
    }

    #[test]
    fn population_sweep_rejects_indivisible_sizes() {
        let grid = Grid::from_values(vec![12.0, 20.0, 24.0]).unwrap();
        let err = sweep_population(&three_type(12), &grid, &[TrackedState::Center], &SweepOptions::default()).unwrap_err();
        assert!(err.to_string().contains("N=20"), "{err}");
    }

    #[test]
    fn beta_sweep_needs_fermi() {
        let spec = ProcessSpec::new(6, GameMatrix::hawk_dove(), MutationSpec::uniform(0.1), SelectionSpec::linear()).unwrap();
        let grid = Grid::from_values(vec![0.5, 1.0]).unwrap();
        assert!(sweep_beta(&spec, &grid, &[TrackedState::Center], &SweepOptions::default()).is_err());
    }

    #[test]
    fn failing_points_are_recorded() {
        // Linear selection on rps has negative payoffs everywhere but the
        // corners, so every point fails; the sweep itself still succeeds.
        let spec = ProcessSpec::new(6, GameMatrix::rock_paper_scissors(), MutationSpec::uniform(0.1), SelectionSpec::linear()).unwrap();
        let grid = Grid::from_values(vec![0.1, 0.2]).unwrap();
        let res = sweep_mu(&spec, &grid, &[TrackedState::Center], &SweepOptions::default()).unwrap();
        assert_eq!(res.failures().len(), 2);
        let mut buf = Vec::new();
        res.write_csv(LogBase::E, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("error"));
    }

    #[test]
    fn neutral_corners_are_symmetric() {
        let spec = ProcessSpec::new(9, GameMatrix::neutral(3), MutationSpec::uniform(0.1), SelectionSpec::fermi(1.0)).unwrap();
        let grid: Grid = "0.01:0.5:5:log".parse().unwrap();
        let res = sweep_mu(&spec, &grid, &[TrackedState::Corner], &SweepOptions::default()).unwrap();
        for (_, d) in res.data() {
            let r0 = d.tracked[0].rte;
            for t in &d.tracked {
                assert!((t.rte - r0).abs() <= 1e-8 * r0);
            }
        }
    }

    #[test]
    fn csv_columns() {
        let spec = three_type(6);
        let grid = Grid::from_values(vec![0.5, 1.0]).unwrap();
        let res = sweep_beta(&spec, &grid, &[TrackedState::Center, TrackedState::Corner], &SweepOptions::default()).unwrap();
        let mut buf = Vec::new();
        res.write_csv(LogBase::E, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("param_value,entropy_rate,s_center,rte_center,rte_normalized_center,class_center,s_corner1"));
        assert_eq!(text.lines().count(), 3);
        let side = res.sidecar_json(LogBase::E, &SweepOptions::default().solver);
        assert_eq!(side["parameter"], "beta");
        assert_eq!(side["divisor"], "stars-bars");
        assert_eq!(side["points"][0]["state_count"], 28);
    }

    #[test]
    fn normalization_divides_by_state_count() {
        let spec = three_type(6);
        let grid = Grid::from_values(vec![6.0, 12.0]).unwrap();
        let res = sweep_population(&spec, &grid, &[TrackedState::Center], &SweepOptions::default()).unwrap();
        for (n, d) in res.data() {
            let t = &d.tracked[0];
            assert_eq!(t.rte_normalized, t.rte / crate::state::state_count(n as u32, 3) as f64);
        }
        let raw = SweepOptions {
            normalize: false,
            ..SweepOptions::default()
        };
        let res = sweep_population(&spec, &grid, &[TrackedState::Center], &raw).unwrap();
        assert!(res.data().iter().all(|(_, d)| d.tracked[0].rte_normalized == d.tracked[0].rte));
    }
}
