//! CSV and JSON output.
//!
//! Numbers are written with 12 significant digits. Stationary CSVs have one
//! row per state in canonical order: `a1,...,an,probability`. Report CSVs add
//! the RTE and the extremum classification: `a1,...,an,s,rte,classification`.

use std::io::Write;

use serde_json::{json, Value};

use crate::entropy::{AnalysisReport, LogBase};
use crate::error::Result;
use crate::solver::StationaryDistribution;
use crate::state::StateSpace;

/// Schema version stamped into every JSON document.
pub const SCHEMA_VERSION: u32 = 1;

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Formats with 12 significant digits, switching to exponent notation
/// outside `[1e-4, 1e15)`.
pub fn fmt12(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round12(x);
    let a = r.abs();
    if r == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn count_headers(types: usize) -> Vec<String> {
    (1..=types).map(|i| format!("a{i}")).collect()
}

pub fn write_stationary_csv<W: Write>(space: &StateSpace, dist: &StationaryDistribution, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = count_headers(space.num_types());
    header.push("probability".into());
    w.write_record(&header)?;
    for (state, p) in space.states().iter().zip(&dist.probabilities) {
        let mut row: Vec<String> = state.counts().iter().map(|c| c.to_string()).collect();
        row.push(fmt12(*p));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report_csv<W: Write>(report: &AnalysisReport, base: LogBase, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let types = report.records.first().map_or(0, |r| r.state.len());
    let mut header = count_headers(types);
    header.extend(["s", "rte", "classification"].map(String::from));
    w.write_record(&header)?;
    for rec in &report.records {
        let mut row: Vec<String> = rec.state.iter().map(|c| c.to_string()).collect();
        row.push(fmt12(rec.probability));
        row.push(fmt12(base.convert(rec.rte)));
        row.push(rec.classification.as_str().into());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Structured report: process metadata, solver diagnostics, extrema and
/// per-state values.
pub fn report_json(report: &AnalysisReport, base: LogBase) -> Value {
    let state_of = |i: &usize| Value::from(report.records[*i].state.clone());
    let extrema: Vec<Value> = report
        .records
        .iter()
        .filter(|r| r.classification.is_extremum())
        .map(|r| {
            json!({
                "state": r.state,
                "classification": r.classification.as_str(),
                "s": round12(r.probability),
                "rte": round12(base.convert(r.rte)),
            })
        })
        .collect();
    let states: Vec<Value> = report
        .records
        .iter()
        .map(|r| {
            json!({
                "state": r.state,
                "s": round12(r.probability),
                "rte": round12(base.convert(r.rte)),
                "classification": r.classification.as_str(),
            })
        })
        .collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "software_version": env!("CARGO_PKG_VERSION"),
        "spec": report.spec,
        "log_base": base.name(),
        "entropy_rate": round12(base.convert(report.entropy_rate)),
        "entropy_rate_bound": report.entropy_rate_bound.map(|b| round12(base.convert(b))),
        "solver": {
            "method": report.solver.method.to_string(),
            "residual": round12(report.solver.residual),
            "iterations": report.solver.iterations,
        },
        "state_count": report.records.len(),
        "global_max": report.global_max.iter().map(state_of).collect::<Vec<_>>(),
        "global_max_unique": report.global_max_unique,
        "global_min": report.global_min.iter().map(state_of).collect::<Vec<_>>(),
        "global_min_unique": report.global_min_unique,
        "local_extrema": extrema,
        "states": states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::analyze;
    use crate::game::GameMatrix;
    use crate::kernel::build_kernel;
    use crate::process::{MutationSpec, ProcessSpec, SelectionSpec};
    use crate::solver::{solve, SolverOptions};

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(2.0 / 3.0 * 1e-7), "6.66666666667e-8");
        assert_eq!(fmt12(0.0), "0");
        assert_eq!(fmt12(123_456_789.123_457), "123456789.123");
        assert_eq!(fmt12(f64::NAN), "NaN");
    }

    #[test]
    fn stationary_csv_layout() {
        let spec = ProcessSpec::new(2, GameMatrix::neutral(2), MutationSpec::uniform(0.5), SelectionSpec::linear()).unwrap();
        let k = build_kernel(&spec).unwrap();
        let s = solve(&k, &SolverOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_stationary_csv(k.space().unwrap(), &s, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a1,a2,probability\n2,0,0.25\n1,1,0.5\n0,2,0.25\n");
    }

    #[test]
    fn report_outputs() {
        let spec = ProcessSpec::new(4, GameMatrix::hawk_dove(), MutationSpec::uniform(0.25), SelectionSpec::fermi(1.0)).unwrap();
        let r = analyze(&spec, &SolverOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_report_csv(&r, LogBase::E, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("a1,a2,s,rte,classification\n"));
        assert!(text.contains("2,2,"));
        assert_eq!(text.lines().count(), 6);
        let j = report_json(&r, LogBase::Two);
        assert_eq!(j["log_base"], "2");
        assert_eq!(j["global_max"][0], json!([2, 2]));
        assert_eq!(j["solver"]["method"], "detailed-balance");
        assert_eq!(j["spec"]["N"], 4);
    }
}
