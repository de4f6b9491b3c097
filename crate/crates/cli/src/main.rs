//! `moran-rte` command-line tool.
//!
//! Exit codes: 0 on success, 1 for bad input or solver failure, 2 when an
//! iterative solver does not converge.

mod plot;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use moran_rte::export::{fmt12, report_json, round12, write_report_csv, write_stationary_csv, SCHEMA_VERSION};
use moran_rte::montecarlo::{sample_return_trajectories, SampleOptions, DEFAULT_MAX_STEPS};
use moran_rte::{
    analyze_kernel, build_kernel, entropy_rate, solve, sweep, Grid, LogBase, MethodChoice, RunConfig, SolverOptions,
    StateCountDivisor, SweepOptions, SweptParameter, TrackedState,
};

use plot::{PlotDocument, PlotKind, PlotOptions};

const THREADS_ENV: &str = "MORAN_RTE_THREADS";

#[derive(Parser)]
#[command(name = "moran-rte", version, about = "Stationary distributions and trajectory entropies of Moran processes")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// Power-iteration L1 convergence tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[arg(long, global = true)]
    max_iters: Option<usize>,

    /// auto, birth-death, dense or power.
    #[arg(long, global = true)]
    method: Option<MethodChoice>,

    /// Logarithm base for entropies: e or 2.
    #[arg(long, global = true, default_value = "e")]
    log_base: LogBase,

    /// RTE normalization divisor: stars-bars or paper.
    #[arg(long, global = true)]
    divisor: Option<StateCountDivisor>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one process and write per-state CSV and JSON reports.
    Analyze {
        config: PathBuf,
        #[arg(short, long, default_value = ".")]
        out_dir: PathBuf,
        /// File name stem (default: config file stem).
        #[arg(long)]
        prefix: Option<String>,
    },
    /// Sweep beta, mu or N and track selected states.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: Option<SweptParameter>,
        /// start:stop[:count[:linear|log]] or a comma list.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<Grid>,
        /// corner, boundary-midpoint, center or an explicit state like 15_15. Repeatable.
        #[arg(long)]
        track: Vec<TrackedState>,
        /// Divide RTEs by the state count.
        #[arg(long, overrides_with = "no_normalize")]
        normalize: bool,
        #[arg(long, overrides_with = "normalize")]
        no_normalize: bool,
        #[arg(short, long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        prefix: Option<String>,
    },
    /// Render a sweep CSV or a three-type state CSV as SVG.
    Plot {
        data: PathBuf,
        #[arg(long)]
        kind: Option<PlotKind>,
        /// Output file (default: data path with .svg extension).
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Heatmap quantity: s or rte.
        #[arg(long)]
        value: Option<String>,
        /// Line charts: plot normalized RTEs.
        #[arg(long)]
        normalized: bool,
        /// Never use logarithmic axes or color scales.
        #[arg(long)]
        linear: bool,
    },
    /// Sample first-return paths and compare with the exact trajectory entropy.
    Simulate {
        config: PathBuf,
        /// Start state, e.g. 2,2 or 10_10_10.
        #[arg(long)]
        state: String,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: u64,
        /// Also write the JSON here.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Print version information.
    Version,
}

fn solver_options(base: SolverOptions, g: &GlobalArgs) -> SolverOptions {
    SolverOptions {
        method: g.method.unwrap_or(base.method),
        tol: g.tol.unwrap_or(base.tol),
        max_iters: g.max_iters.unwrap_or(base.max_iters),
        ..base
    }
}

fn stem(config: &Path, prefix: &Option<String>) -> String {
    prefix
        .clone()
        .unwrap_or_else(|| config.file_stem().map_or("moran-rte".into(), |s| s.to_string_lossy().into_owned()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn parse_state(s: &str) -> Result<Vec<u32>> {
    s.trim_matches(|c| c == '(' || c == ')')
        .split(|c: char| c == ',' || c == '_' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u32>().map_err(|_| anyhow!("bad state '{s}'")))
        .collect()
}

fn analyze(g: &GlobalArgs, config: &Path, out_dir: &Path, prefix: &Option<String>) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let opts = solver_options(cfg.solver, g);
    let kernel = build_kernel(&cfg.spec)?;
    let dist = solve(&kernel, &opts)?;
    let mut report = analyze_kernel(&kernel, &dist, moran_rte::entropy::DEFAULT_TIE_TOL)?;
    report.spec = Some(cfg.spec.clone());
    report.entropy_rate_bound = Some(moran_rte::entropy_rate_bound(cfg.spec.num_types()));

    let base = g.log_base;
    let name = stem(config, prefix);
    let csv_path = out_dir.join(format!("{name}.report.csv"));
    let json_path = out_dir.join(format!("{name}.report.json"));
    let stat_path = out_dir.join(format!("{name}.stationary.csv"));
    let mut w = create(&csv_path)?;
    write_report_csv(&report, base, &mut w)?;
    w.flush()?;
    let mut w = create(&stat_path)?;
    write_stationary_csv(kernel.space().expect("state space"), &dist, &mut w)?;
    w.flush()?;
    write_json(&json_path, &report_json(&report, base))?;

    let show = |idx: &[usize]| {
        idx.iter()
            .map(|i| format!("{:?}", report.records[*i].state))
            .collect::<Vec<_>>()
            .join(" ")
    };
    println!("states          {}", report.records.len());
    println!("solver          {} (residual {}, {} iterations)", dist.method, fmt12(dist.residual), dist.iterations);
    println!("entropy rate    {} ({})", fmt12(base.convert(report.entropy_rate)), base.name());
    println!(
        "global max      {}{}",
        show(&report.global_max),
        if report.global_max_unique { " (unique)" } else { "" }
    );
    println!(
        "global min      {}{}",
        show(&report.global_min),
        if report.global_min_unique { " (unique)" } else { "" }
    );
    for rec in report.local_extrema() {
        println!(
            "  {:<12} {:?}  s={}  rte={}",
            rec.classification.as_str(),
            rec.state,
            fmt12(rec.probability),
            fmt12(base.convert(rec.rte))
        );
    }
    println!("wrote {}, {}, {}", csv_path.display(), stat_path.display(), json_path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_sweep(
    g: &GlobalArgs,
    config: &Path,
    param: Option<SweptParameter>,
    grid: Option<Grid>,
    track: Vec<TrackedState>,
    normalize: Option<bool>,
    out_dir: &Path,
    prefix: &Option<String>,
) -> Result<Option<ExitCode>> {
    let cfg = RunConfig::load(config)?;
    let sc = cfg.sweep.clone();
    let param = param
        .or_else(|| sc.as_ref().and_then(|s| s.param))
        .context("no sweep parameter: pass --param or set sweep.param")?;
    let grid = grid
        .or_else(|| sc.as_ref().and_then(|s| s.grid.clone()))
        .context("no grid: pass --grid or set sweep.grid")?;
    let track = if track.is_empty() {
        sc.as_ref().map(|s| s.track.clone()).unwrap_or_default()
    } else {
        track
    };
    if track.is_empty() {
        bail!("no tracked states: pass --track or set sweep.track");
    }
    let opts = SweepOptions {
        solver: solver_options(cfg.solver, g),
        divisor: g.divisor.or(sc.as_ref().and_then(|s| s.divisor)).unwrap_or_default(),
        normalize: normalize.or(sc.as_ref().and_then(|s| s.normalize)).unwrap_or(true),
        ..SweepOptions::default()
    };
    let res = sweep(param, &cfg.spec, &grid, &track, &opts)?;

    let name = stem(config, prefix);
    let csv_path = out_dir.join(format!("{name}.sweep.csv"));
    let json_path = out_dir.join(format!("{name}.sweep.json"));
    let mut w = create(&csv_path)?;
    res.write_csv(g.log_base, &mut w)?;
    w.flush()?;
    write_json(&json_path, &res.sidecar_json(g.log_base, &opts.solver))?;

    let failures: Vec<_> = res.points.iter().filter_map(|p| p.result.as_ref().err().map(|e| (p.param_value, e))).collect();
    for (v, e) in &failures {
        eprintln!("warning: {param}={}: {e}", fmt12(*v));
    }
    println!(
        "{} points ({} failed) over {param}; wrote {}, {}",
        res.points.len(),
        failures.len(),
        csv_path.display(),
        json_path.display()
    );
    if failures.len() == res.points.len() {
        eprintln!("error: every grid point failed");
        let code = if failures.iter().all(|(_, e)| e.convergence) { 2 } else { 1 };
        return Ok(Some(ExitCode::from(code)));
    }
    Ok(None)
}

fn run_plot(data: &Path, out: Option<PathBuf>, opts: PlotOptions) -> Result<()> {
    let mut opts = opts;
    if opts.x_label.is_none() {
        let sidecar = data.with_extension("json");
        if let Ok(text) = std::fs::read_to_string(&sidecar) {
            if let Ok(v) = serde_json::from_str::<serde_json::Value>(&text) {
                opts.x_label = v.get("parameter").and_then(|p| p.as_str()).map(String::from);
            }
        }
    }
    let file = File::open(data).with_context(|| format!("opening {}", data.display()))?;
    let doc = PlotDocument::from_csv(file, &opts)?;
    let out = out.unwrap_or_else(|| data.with_extension("svg"));
    let mut w = create(&out)?;
    w.write_all(doc.to_svg().as_bytes())?;
    w.flush()?;
    println!("wrote {}", out.display());
    Ok(())
}

fn simulate(g: &GlobalArgs, config: &Path, state: &str, samples: SampleOptions, out: Option<PathBuf>) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let counts = parse_state(state)?;
    let kernel = build_kernel(&cfg.spec)?;
    let space = kernel.space().expect("state space");
    let v = space.rank(&counts).ok_or_else(|| {
        anyhow!(
            "state {state} is not in the state space (N={}, {} types)",
            cfg.spec.population,
            cfg.spec.num_types()
        )
    })?;
    let dist = solve(&kernel, &solver_options(cfg.solver, g))?;
    let h = entropy_rate(&kernel, &dist)?;
    let sv = dist.probabilities[v];
    let st = sample_return_trajectories(&kernel, v, &samples)?;

    let base = g.log_base;
    let exact_rte = h / sv;
    let exact_return = 1.0 / sv;
    let z = |est: f64, exact: f64, se: f64| {
        if se > 0.0 {
            (est - exact) / se
        } else if est == exact || (est - exact).abs() <= 1e-12 * exact.abs() {
            0.0
        } else {
            f64::INFINITY
        }
    };
    let z_surprisal = z(st.mean_surprisal, exact_rte, st.se_surprisal);
    let z_length = z(st.mean_length, exact_return, st.se_length);
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "software_version": env!("CARGO_PKG_VERSION"),
        "state": counts,
        "samples": st.samples,
        "completed": st.completed,
        "mean_surprisal": round12(base.convert(st.mean_surprisal)),
        "se_surprisal": round12(base.convert(st.se_surprisal)),
        "mean_length": round12(st.mean_length),
        "se_length": round12(st.se_length),
        "truncated": st.truncated,
        "unreliable": st.unreliable,
        "seed": st.seed,
        "log_base": base.name(),
        "exact_rte": round12(base.convert(exact_rte)),
        "exact_return_time": round12(exact_return),
        "z_surprisal": round12(z_surprisal),
        "z_length": round12(z_length),
    });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    if st.unreliable {
        eprintln!("warning: {} of {} paths hit the step cap", st.truncated, st.samples);
    }
    if let Some(path) = out {
        write_json(&path, &doc)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Option<ExitCode>> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Analyze {
            config,
            out_dir,
            prefix,
        } => analyze(g, &config, &out_dir, &prefix)?,
        Command::Sweep {
            config,
            param,
            grid,
            track,
            normalize,
            no_normalize,
            out_dir,
            prefix,
        } => {
            let normalize = match (normalize, no_normalize) {
                (true, _) => Some(true),
                (_, true) => Some(false),
                _ => None,
            };
            return run_sweep(g, &config, param, grid, track, normalize, &out_dir, &prefix);
        }
        Command::Plot {
            data,
            kind,
            out,
            value,
            normalized,
            linear,
        } => run_plot(
            &data,
            out,
            PlotOptions {
                kind,
                value,
                normalized,
                linear,
                x_label: None,
            },
        )?,
        Command::Simulate {
            config,
            state,
            samples,
            seed,
            max_steps,
            out,
        } => simulate(g, &config, &state, SampleOptions { samples, seed, max_steps }, out)?,
        Command::Version => {
            println!("moran-rte {}", env!("CARGO_PKG_VERSION"));
            println!("output schema {SCHEMA_VERSION}");
        }
    }
    Ok(None)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(code)) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let convergence = e
                .chain()
                .filter_map(|c| c.downcast_ref::<moran_rte::Error>())
                .any(|m| m.is_convergence_failure());
            ExitCode::from(if convergence { 2 } else { 1 })
        }
    }
}
