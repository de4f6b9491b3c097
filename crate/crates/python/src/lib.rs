//! Python bindings. Build with `maturin develop` from this directory; the
//! module imports as `moran_rte`.

use moran_rte::export::{report_json, write_report_csv, SCHEMA_VERSION};
use moran_rte::*;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyTuple};

pyo3::create_exception!(moran_rte, ConvergenceError, PyRuntimeError);

fn err(e: Error) -> PyErr {
    if e.is_convergence_failure() {
        return ConvergenceError::new_err(e.to_string());
    }
    match e {
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

fn tuple<'py>(py: Python<'py>, counts: &[u32]) -> PyResult<Bound<'py, PyTuple>> {
    PyTuple::new(py, counts)
}

fn game_from(obj: &Bound<'_, PyAny>) -> PyResult<GameMatrix> {
    if let Ok(name) = obj.extract::<String>() {
        return GameMatrix::preset(&name).map_err(err);
    }
    let rows: Vec<Vec<f64>> = obj
        .extract()
        .map_err(|_| PyValueError::new_err("game must be a preset name or a square list of lists"))?;
    GameMatrix::new(rows).map_err(err)
}

fn solver_options(method: &str, tol: f64, max_iters: usize) -> PyResult<SolverOptions> {
    Ok(SolverOptions {
        method: parse(method)?,
        tol,
        max_iters,
        ..SolverOptions::default()
    })
}

/// A Moran process with mutation.
#[pyclass(name = "Process", module = "moran_rte", frozen)]
struct PyProcess {
    spec: ProcessSpec,
}

#[pymethods]
impl PyProcess {
    #[new]
    #[pyo3(signature = (population, game, mu=None, selection="linear", beta=None, mutation_matrix=None))]
    fn new(
        population: u32,
        game: &Bound<'_, PyAny>,
        mu: Option<f64>,
        selection: &str,
        beta: Option<f64>,
        mutation_matrix: Option<Vec<Vec<f64>>>,
    ) -> PyResult<Self> {
        let mutation = match (mu, mutation_matrix) {
            (Some(mu), None) => MutationSpec::uniform(mu),
            (None, Some(m)) => MutationSpec::Matrix(m),
            _ => return Err(PyValueError::new_err("give exactly one of mu and mutation_matrix")),
        };
        let selection = match (selection, beta) {
            ("linear", None) => SelectionSpec::linear(),
            ("linear", Some(_)) => return Err(PyValueError::new_err("beta only applies to fermi selection")),
            ("fermi", Some(b)) => SelectionSpec::fermi(b),
            ("fermi", None) => return Err(PyValueError::new_err("fermi selection needs beta")),
            (other, _) => return Err(PyValueError::new_err(format!("unknown selection '{other}' (linear or fermi)"))),
        };
        let spec = ProcessSpec::new(population, game_from(game)?, mutation, selection).map_err(err)?;
        Ok(PyProcess { spec })
    }

    /// Process described by a TOML config file.
    #[staticmethod]
    fn from_config(path: &str) -> PyResult<Self> {
        Ok(PyProcess {
            spec: RunConfig::load(path).map_err(err)?.spec,
        })
    }

    #[getter]
    fn population(&self) -> u32 {
        self.spec.population
    }

    #[getter]
    fn num_types(&self) -> usize {
        self.spec.num_types()
    }

    #[getter]
    fn state_count(&self) -> u64 {
        state_count(self.spec.population, self.spec.num_types())
    }

    #[getter]
    fn game(&self) -> Vec<Vec<f64>> {
        self.spec.game.rows()
    }

    #[getter]
    fn beta(&self) -> Option<f64> {
        match self.spec.selection.kind {
            SelectionKind::Fermi => Some(self.spec.selection.beta),
            SelectionKind::Linear => None,
        }
    }

    #[getter]
    fn mu(&self) -> Option<f64> {
        self.spec.mutation.rate()
    }

    fn with_beta(&self, beta: f64) -> PyResult<Self> {
        let spec = self.spec.with_beta(beta);
        spec.validate().map_err(err)?;
        Ok(PyProcess { spec })
    }

    fn with_mu(&self, mu: f64) -> PyResult<Self> {
        let spec = self.spec.with_mutation(MutationSpec::uniform(mu));
        spec.validate().map_err(err)?;
        Ok(PyProcess { spec })
    }

    fn with_population(&self, population: u32) -> PyResult<Self> {
        let spec = self.spec.with_population(population);
        spec.validate().map_err(err)?;
        Ok(PyProcess { spec })
    }

    /// States in solver order, as tuples of counts.
    fn states<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyTuple>>> {
        let space = StateSpace::new(self.spec.population, self.spec.num_types()).map_err(err)?;
        space.states().iter().map(|s| tuple(py, s.counts())).collect()
    }

    /// Dense transition matrix as a list of rows.
    fn transition_matrix(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(build_kernel(&self.spec).map_err(err)?.to_dense())
    }

    /// Reproduction probabilities at a state.
    fn reproduction_probabilities(&self, state: Vec<u32>) -> PyResult<Vec<f64>> {
        let s = PopulationState::new(state).map_err(err)?;
        reproduction_probabilities(&s, &self.spec).map_err(err)
    }

    fn __repr__(&self) -> String {
        let sel = match self.beta() {
            Some(b) => format!("fermi, beta={b}"),
            None => "linear".into(),
        };
        let mu = self.mu().map_or("matrix".to_string(), |m| m.to_string());
        format!("Process(N={}, types={}, mu={mu}, {sel})", self.spec.population, self.num_types())
    }
}

/// Stationary probabilities, RTEs and classifications for every state.
#[pyclass(name = "Report", module = "moran_rte", frozen)]
struct PyReport {
    report: AnalysisReport,
    base: LogBase,
}

#[pymethods]
impl PyReport {
    /// Entropy rate in the report's log base.
    #[getter]
    fn entropy_rate(&self) -> f64 {
        self.base.convert(self.report.entropy_rate)
    }

    #[getter]
    fn entropy_rate_bound(&self) -> Option<f64> {
        self.report.entropy_rate_bound.map(|b| self.base.convert(b))
    }

    #[getter]
    fn method(&self) -> String {
        self.report.solver.method.to_string()
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.report.solver.residual
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.report.solver.iterations
    }

    #[getter]
    fn states<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyTuple>>> {
        self.report.records.iter().map(|r| tuple(py, &r.state)).collect()
    }

    #[getter]
    fn probabilities(&self) -> Vec<f64> {
        self.report.probabilities()
    }

    #[getter]
    fn rtes(&self) -> Vec<f64> {
        self.report.records.iter().map(|r| self.base.convert(r.rte)).collect()
    }

    #[getter]
    fn classifications(&self) -> Vec<&'static str> {
        self.report.records.iter().map(|r| r.classification.as_str()).collect()
    }

    #[getter]
    fn global_max<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyTuple>>> {
        self.report.global_max.iter().map(|&i| tuple(py, &self.report.records[i].state)).collect()
    }

    #[getter]
    fn global_max_unique(&self) -> bool {
        self.report.global_max_unique
    }

    /// `{state: classification}` for every local maximum and minimum.
    fn local_extrema<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for r in self.report.local_extrema() {
            d.set_item(tuple(py, &r.state)?, r.classification.as_str())?;
        }
        Ok(d)
    }

    /// Probability, RTE and classification of one state.
    fn record<'py>(&self, py: Python<'py>, state: Vec<u32>) -> PyResult<Bound<'py, PyDict>> {
        let r = self
            .report
            .record_for(&state)
            .ok_or_else(|| PyValueError::new_err(format!("state {state:?} is not in the state space")))?;
        let d = PyDict::new(py);
        d.set_item("probability", r.probability)?;
        d.set_item("rte", self.base.convert(r.rte))?;
        d.set_item("classification", r.classification.as_str())?;
        Ok(d)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&report_json(&self.report, self.base)).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        write_report_csv(&self.report, self.base, &mut buf).map_err(err)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }

    fn __len__(&self) -> usize {
        self.report.records.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Report(states={}, entropy_rate={:.6}, method={})",
            self.report.records.len(),
            self.entropy_rate(),
            self.method()
        )
    }
}

/// Tracked-state series over a parameter grid.
#[pyclass(name = "SweepResult", module = "moran_rte", frozen)]
struct PySweepResult {
    result: SweepResult,
    base: LogBase,
    solver: SolverOptions,
}

#[pymethods]
impl PySweepResult {
    #[getter]
    fn parameter(&self) -> String {
        self.result.parameter.to_string()
    }

    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.result.grid()
    }

    /// Labels of the tracked states, e.g. `corner1`, `midpoint12`, `center`.
    #[getter]
    fn labels(&self) -> Vec<String> {
        let n = self.result.template.num_types();
        self.result.tracked.iter().flat_map(|t| t.labels(n)).collect()
    }

    /// Entropy rate per grid point; NaN where the point failed.
    #[getter]
    fn entropy_rates(&self) -> Vec<f64> {
        self.result.entropy_rates().into_iter().map(|h| self.base.convert(h)).collect()
    }

    /// `(value, message)` for every failed grid point.
    #[getter]
    fn failures(&self) -> Vec<(f64, String)> {
        self.result.failures().into_iter().map(|(v, m)| (v, m.to_string())).collect()
    }

    /// One column of the sweep: `probability`, `rte` or `rte_normalized`.
    #[pyo3(signature = (label, field="rte"))]
    fn series(&self, label: &str, field: &str) -> PyResult<Vec<f64>> {
        if !self.labels().iter().any(|l| l == label) {
            return Err(PyValueError::new_err(format!("no tracked state labelled '{label}'")));
        }
        let base = self.base;
        Ok(match field {
            "probability" => self.result.series(label, |v| v.probability),
            "rte" => self.result.series(label, |v| base.convert(v.rte)),
            "rte_normalized" => self.result.series(label, |v| base.convert(v.rte_normalized)),
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown field '{other}' (probability, rte or rte_normalized)"
                )))
            }
        })
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.result.write_csv(self.base, &mut buf).map_err(err)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.result.sidecar_json(self.base, &self.solver))
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("SweepResult({}, {} points)", self.parameter(), self.result.points.len())
    }
}

/// Solve and classify every state of a process.
#[pyfunction(name = "analyze")]
#[pyo3(signature = (process, method="auto", tol=1e-13, max_iters=1_000_000, log_base="e"))]
fn analyze_py(py: Python<'_>, process: &PyProcess, method: &str, tol: f64, max_iters: usize, log_base: &str) -> PyResult<PyReport> {
    let opts = solver_options(method, tol, max_iters)?;
    let base: LogBase = parse(log_base)?;
    let spec = process.spec.clone();
    let report = py.detach(move || moran_rte::analyze(&spec, &opts)).map_err(err)?;
    Ok(PyReport { report, base })
}

/// Stationary distribution only: `(probabilities, method, residual, iterations)`.
#[pyfunction(name = "stationary")]
#[pyo3(signature = (process, method="auto", tol=1e-13, max_iters=1_000_000))]
fn stationary_py(py: Python<'_>, process: &PyProcess, method: &str, tol: f64, max_iters: usize) -> PyResult<(Vec<f64>, String, f64, usize)> {
    let opts = solver_options(method, tol, max_iters)?;
    let spec = process.spec.clone();
    let d = py
        .detach(move || build_kernel(&spec).and_then(|k| solve(&k, &opts)))
        .map_err(err)?;
    Ok((d.probabilities, d.method.to_string(), d.residual, d.iterations))
}

/// Sweep `beta`, `mu` or `N` over a grid given as a list or a `start:stop[:count[:log]]` string.
#[pyfunction(name = "sweep")]
#[pyo3(signature = (process, param, grid, track=vec!["corner".to_string()], normalize=true, divisor="stars-bars", method="auto", log_base="e"))]
#[allow(clippy::too_many_arguments)]
fn sweep_py(
    py: Python<'_>,
    process: &PyProcess,
    param: &str,
    grid: &Bound<'_, PyAny>,
    track: Vec<String>,
    normalize: bool,
    divisor: &str,
    method: &str,
    log_base: &str,
) -> PyResult<PySweepResult> {
    let param: SweptParameter = parse(param)?;
    let grid = match grid.extract::<String>() {
        Ok(s) => parse::<Grid>(&s)?,
        Err(_) => Grid::from_values(grid.extract()?).map_err(err)?,
    };
    let tracked = track.iter().map(|t| parse::<TrackedState>(t)).collect::<PyResult<Vec<_>>>()?;
    let opts = SweepOptions {
        solver: solver_options(method, 1e-13, 1_000_000)?,
        divisor: parse(divisor)?,
        normalize,
        ..SweepOptions::default()
    };
    let base: LogBase = parse(log_base)?;
    let spec = process.spec.clone();
    let result = py
        .detach(move || moran_rte::sweep(param, &spec, &grid, &tracked, &opts))
        .map_err(err)?;
    Ok(PySweepResult {
        result,
        base,
        solver: opts.solver,
    })
}

/// Monte Carlo estimate of the return-trajectory entropy at `state`, next to the exact value.
#[pyfunction(name = "simulate")]
#[pyo3(signature = (process, state, samples=100_000, seed=0, max_steps=10_000_000))]
fn simulate_py<'py>(
    py: Python<'py>,
    process: &PyProcess,
    state: Vec<u32>,
    samples: usize,
    seed: u64,
    max_steps: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = process.spec.clone();
    let opts = SampleOptions { samples, seed, max_steps };
    let (st, h, sv) = py
        .detach(move || -> Result<_> {
            let kernel = build_kernel(&spec)?;
            let v = kernel
                .space()
                .and_then(|s| s.rank(&state))
                .ok_or_else(|| Error::InvalidArgument(format!("state {state:?} is not in the state space")))?;
            let dist = solve(&kernel, &SolverOptions::default())?;
            let h = entropy_rate(&kernel, &dist)?;
            Ok((sample_return_trajectories(&kernel, v, &opts)?, h, dist.probabilities[v]))
        })
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("samples", st.samples)?;
    d.set_item("completed", st.completed)?;
    d.set_item("mean_surprisal", st.mean_surprisal)?;
    d.set_item("se_surprisal", st.se_surprisal)?;
    d.set_item("mean_length", st.mean_length)?;
    d.set_item("se_length", st.se_length)?;
    d.set_item("truncated", st.truncated)?;
    d.set_item("unreliable", st.unreliable)?;
    d.set_item("seed", st.seed)?;
    d.set_item("exact_rte", h / sv)?;
    d.set_item("exact_return_time", 1.0 / sv)?;
    Ok(d)
}

/// Closed-form fixation probabilities `(rho_a, rho_b)` for relative fitness `r`.
#[pyfunction(name = "fixation")]
fn fixation_py(r: f64, population: u32) -> PyResult<(f64, f64)> {
    let f = fixation_r_game(r, population).map_err(err)?;
    Ok((f.rho_a, f.rho_b))
}

/// Fixation probabilities `(rho_a, rho_b)` of a mutation-free two-type process.
#[pyfunction(name = "fixation_absorbing")]
fn fixation_absorbing_py(process: &PyProcess) -> PyResult<(f64, f64)> {
    let f = fixation_absorbing(&process.spec).map_err(err)?;
    Ok((f.rho_a, f.rho_b))
}

#[pyfunction(name = "entropy_rate_bound")]
fn entropy_rate_bound_py(types: usize) -> f64 {
    entropy_rate_bound(types)
}

#[pyfunction(name = "state_count")]
fn state_count_py(population: u32, types: usize) -> u64 {
    state_count(population, types)
}

#[pymodule]
#[pyo3(name = "moran_rte")]
fn moran_rte_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("SCHEMA_VERSION", SCHEMA_VERSION)?;
    m.add("ConvergenceError", m.py().get_type::<ConvergenceError>())?;
    m.add_class::<PyProcess>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PySweepResult>()?;
    m.add_function(wrap_pyfunction!(analyze_py, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_py, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_py, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_py, m)?)?;
    m.add_function(wrap_pyfunction!(fixation_py, m)?)?;
    m.add_function(wrap_pyfunction!(fixation_absorbing_py, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_rate_bound_py, m)?)?;
    m.add_function(wrap_pyfunction!(state_count_py, m)?)?;
    Ok(())
}
