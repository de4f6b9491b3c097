use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_moran-rte"));
    c.env_remove("MORAN_RTE_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn recipe(name: &str) -> String {
    format!("{}/../../recipes/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const HAWK_DOVE: &str = "N = 30\ngame = \"hawk-dove\"\nmu = \"1/30\"\nselection = \"fermi\"\nbeta = 1.0\n";

#[test]
fn analyze_hawk_dove() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "hd.toml", HAWK_DOVE);
    let o = run(&["analyze", s(&cfg), "-o", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("hd.report.json")).unwrap()).unwrap();
    assert_eq!(j["global_max"], serde_json::json!([[15, 15]]));
    assert_eq!(j["global_max_unique"], true);
    assert_eq!(j["solver"]["method"], "detailed-balance");
    assert_eq!(j["state_count"], 31);
    let csv = fs::read_to_string(dir.path().join("hd.report.csv")).unwrap();
    assert!(csv.starts_with("a1,a2,s,rte,classification\n30,0,"));
    let stat = fs::read_to_string(dir.path().join("hd.stationary.csv")).unwrap();
    assert_eq!(stat.lines().count(), 32);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "rps.toml", "N = 12\ngame = \"rps\"\nmu = 0.05\nselection = \"fermi\"\nbeta = 1\n");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&run(&["analyze", s(&cfg), "-o", s(&a)])), 0);
    assert_eq!(code(&run(&["--threads", "1", "analyze", s(&cfg), "-o", s(&b)])), 0);
    for f in ["rps.report.csv", "rps.report.json", "rps.stationary.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn malformed_config_exits_one_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("N = 30\ngame = \"hawk-dove\"\nmu = 2\n", "`mu`"),
        ("game = \"hawk-dove\"\nmu = 0.1\n", "`N`"),
        ("N = 30\ngame = \"hawk-dove\"\nmu = 0.1\nselection = \"fermi\"\n", "`beta`"),
        ("N = 30\ngame = \"chess\"\nmu = 0.1\n", "`game`"),
    ];
    for (text, field) in cases {
        let cfg = write(dir.path(), "bad.toml", text);
        let o = run(&["analyze", s(&cfg), "-o", s(dir.path())]);
        assert_eq!(code(&o), 1);
        assert!(stderr(&o).contains(field), "{field}: {}", stderr(&o));
    }
    let o = run(&["analyze", "/nonexistent/config.toml"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn non_convergence_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "hd.toml", HAWK_DOVE);
    let o = run(&["--method", "power", "--max-iters", "3", "analyze", s(&cfg), "-o", s(dir.path())]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("did not converge"));
}

#[test]
fn linear_selection_with_zero_weight_corner_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "rps.toml", "N = 6\ngame = \"rps\"\nmu = 0.1\n");
    let o = run(&["analyze", s(&cfg), "-o", s(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("degenerate state [6, 0, 0]"), "{}", stderr(&o));
}

#[test]
fn bad_flags_exit_one() {
    assert_eq!(code(&run(&["--method", "magic", "version"])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn sweep_beta_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "hd.toml", HAWK_DOVE);
    let o = run(&[
        "sweep", s(&cfg), "--param", "beta", "--grid", "0:10:6", "--track", "center", "--track", "30_0", "-o", s(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("hd.sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "param_value,entropy_rate,s_center,rte_center,rte_normalized_center,class_center,s_30_0,rte_30_0,rte_normalized_30_0,class_30_0"
    );
    assert_eq!(lines.count(), 6);
    let j: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("hd.sweep.json")).unwrap()).unwrap();
    assert_eq!(j["parameter"], "beta");
    assert_eq!(j["grid"].as_array().unwrap().len(), 6);
    assert_eq!(j["divisor"], "stars-bars");
    assert!(j["points"][0]["residual"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn sweep_uses_recipe_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["sweep", &recipe("threetype-population.toml"), "--grid", "12,24", "-o", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("threetype-population.sweep.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("rte_normalized_midpoint23"));
}

#[test]
fn sweep_over_indivisible_population_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["sweep", &recipe("threetype-population.toml"), "--grid", "12,24,30,40,44", "-o", s(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("N=40"), "{}", stderr(&o));
}

#[test]
fn sweep_where_every_point_fails_to_converge_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "hd.toml", HAWK_DOVE);
    let o = run(&[
        "--method", "power", "--max-iters", "2", "sweep", s(&cfg), "--param", "beta", "--grid", "1,2", "--track", "center", "-o",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn plot_sweep_and_heatmap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "hd.toml", HAWK_DOVE);
    run(&["sweep", s(&cfg), "--param", "beta", "--grid", "0:10:11", "--track", "center", "-o", s(dir.path())]);
    let o = run(&["plot", s(&dir.path().join("hd.sweep.csv"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let svg = fs::read_to_string(dir.path().join("hd.sweep.svg")).unwrap();
    assert_eq!(svg.matches("class=\"panel\"").count(), 3);
    assert!(svg.contains(">beta<"));

    run(&["analyze", s(&cfg), "-o", s(dir.path())]);
    let o = run(&["plot", s(&dir.path().join("hd.stationary.csv")), "--kind", "simplex-heatmap"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("three-type"));
}

#[test]
fn heatmap_round_trips_report_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "t.toml", "N = 9\ngame = \"threetype\"\nmu = \"1/9\"\nselection = \"fermi\"\nbeta = 0.5\n");
    assert_eq!(code(&run(&["analyze", s(&cfg), "-o", s(dir.path())])), 0);
    let report = dir.path().join("t.report.csv");
    let out = dir.path().join("t.svg");
    assert_eq!(code(&run(&["plot", s(&report), "-o", s(&out)])), 0);
    let svg = fs::read_to_string(&out).unwrap();
    let mut rdr = csv::Reader::from_path(&report).unwrap();
    let mut n = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let needle = format!("data-a=\"{} {} {}\" data-v=\"{}\"", &rec[0], &rec[1], &rec[2], &rec[3]);
        assert!(svg.contains(&needle), "{needle}");
        n += 1;
    }
    assert_eq!(n, 55);
    let again = dir.path().join("t2.svg");
    run(&["plot", s(&report), "-o", s(&again)]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn simulate_neutral_chain() {
    let o = run(&["simulate", &recipe("neutral-simulate.toml"), "--state", "2,2", "--samples", "100000", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(j["z_surprisal"].as_f64().unwrap().abs() <= 3.0, "{j}");
    assert!(j["z_length"].as_f64().unwrap().abs() <= 3.0, "{j}");
    assert_eq!(j["truncated"], 0);
    assert_eq!(j["seed"], 7);
}

#[test]
fn simulate_deterministic_cycle() {
    // One individual and certain mutation: the chain alternates between its two states.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cycle.toml", "N = 1\ngame = \"neutral:2\"\nmu = 1\n");
    let o = run(&["simulate", s(&cfg), "--state", "1,0", "--samples", "1000"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(j["mean_surprisal"], 0.0);
    assert_eq!(j["mean_length"], 2.0);
}

#[test]
fn simulate_rejects_bad_requests() {
    let cfg = recipe("neutral-simulate.toml");
    assert_eq!(code(&run(&["simulate", &cfg, "--state", "2,2", "--samples", "0"])), 1);
    let o = run(&["simulate", &cfg, "--state", "3,3"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("not in the state space"));
}

#[test]
fn version_and_thread_env() {
    let o = run(&["version"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("moran-rte "));
    let o = bin().env("MORAN_RTE_THREADS", "1").arg("version").output().unwrap();
    assert_eq!(code(&o), 0);
    let o = bin().env("MORAN_RTE_THREADS", "many").arg("version").output().unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn log_base_two_halves_the_scale() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "hd.toml", HAWK_DOVE);
    run(&["analyze", s(&cfg), "-o", s(&dir.path().join("e"))]);
    run(&["--log-base", "2", "analyze", s(&cfg), "-o", s(&dir.path().join("two"))]);
    let read = |d: &str| -> Value { serde_json::from_str(&fs::read_to_string(dir.path().join(d).join("hd.report.json")).unwrap()).unwrap() };
    let (e, two) = (read("e"), read("two"));
    let he = e["entropy_rate"].as_f64().unwrap();
    let h2 = two["entropy_rate"].as_f64().unwrap();
    assert!((h2 - he / std::f64::consts::LN_2).abs() < 1e-9);
    assert_eq!(two["log_base"], "2");
}
