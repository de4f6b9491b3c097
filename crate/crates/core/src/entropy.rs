//! Entropy rate, random trajectory entropies and stationary extrema.
//!
//! The random trajectory entropy of a state `v` is the entropy of the
//! distribution over first-return paths `v -> ... -> v`. It equals
//! `H(X) / s(v)`, so within one process the ordering of RTEs is the reverse
//! of the ordering of stationary probabilities: stationary maxima are RTE
//! minima and vice versa.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{build_kernel, TransitionKernel};
use crate::process::ProcessSpec;
use crate::solver::{solve, Method, SolverOptions, StationaryDistribution};

/// Relative tolerance under which two stationary probabilities count as tied.
pub const DEFAULT_TIE_TOL: f64 = 1e-9;

/// Unit for reported entropies. All computation happens in nats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogBase {
    #[default]
    E,
    Two,
}

impl LogBase {
    /// Converts a value in nats to this base.
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            LogBase::E => nats,
            LogBase::Two => nats / std::f64::consts::LN_2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LogBase::E => "e",
            LogBase::Two => "2",
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e" => Ok(LogBase::E),
            "2" => Ok(LogBase::Two),
            other => Err(Error::InvalidArgument(format!("unknown log base '{other}' (expected e or 2)"))),
        }
    }
}

/// Entropy rate `-sum_ij s_i T_ij ln T_ij` in nats, with `0 ln 0 = 0`.
pub fn entropy_rate(kernel: &TransitionKernel, s: &StationaryDistribution) -> Result<f64> {
    entropy_rate_of(kernel, &s.probabilities)
}

pub fn entropy_rate_of(kernel: &TransitionKernel, s: &[f64]) -> Result<f64> {
    if s.len() != kernel.len() {
        return Err(Error::DimensionMismatch {
            expected: kernel.len(),
            found: s.len(),
        });
    }
    let mut total = 0.0;
    for (i, &si) in s.iter().enumerate() {
        let (_, vals) = kernel.row(i);
        let row: f64 = vals.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum();
        total += si * row;
    }
    Ok(total)
}

/// Upper bound `((2n - 1) / n) ln n` on the entropy rate of an `n`-type Moran
/// process with mutation.
pub fn entropy_rate_bound(types: usize) -> f64 {
    let n = types as f64;
    (2.0 * n - 1.0) / n * n.ln()
}

/// Random trajectory entropy of a state with stationary probability `s_v`.
pub fn rte(entropy_rate: f64, s_v: f64) -> Result<f64> {
    if !(s_v > 0.0) {
        return Err(Error::InvalidProbability(s_v));
    }
    Ok(entropy_rate / s_v)
}

/// `H_j / H_i = s_i / s_j`, independent of the entropy rate.
pub fn rte_ratio(s_i: f64, s_j: f64) -> Result<f64> {
    if !(s_i > 0.0) {
        return Err(Error::InvalidProbability(s_i));
    }
    if !(s_j > 0.0) {
        return Err(Error::InvalidProbability(s_j));
    }
    Ok(s_i / s_j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    LocalMax,
    LocalMin,
    /// Unique strict maximum over every state (also a local maximum).
    GlobalMax,
    GlobalMin,
    /// Tied with at least one neighbor.
    PlateauTie,
    None,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::LocalMax => "local-max",
            Classification::LocalMin => "local-min",
            Classification::GlobalMax => "global-max",
            Classification::GlobalMin => "global-min",
            Classification::PlateauTie => "plateau-tie",
            Classification::None => "none",
        }
    }

    pub fn is_local_max(self) -> bool {
        matches!(self, Classification::LocalMax | Classification::GlobalMax)
    }

    pub fn is_local_min(self) -> bool {
        matches!(self, Classification::LocalMin | Classification::GlobalMin)
    }

    pub fn is_extremum(self) -> bool {
        self.is_local_max() || self.is_local_min()
    }
}

impl std::str::FromStr for Classification {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "local-max" => Classification::LocalMax,
            "local-min" => Classification::LocalMin,
            "global-max" => Classification::GlobalMax,
            "global-min" => Classification::GlobalMin,
            "plateau-tie" => Classification::PlateauTie,
            "none" => Classification::None,
            other => return Err(Error::InvalidArgument(format!("unknown classification '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extrema {
    pub classes: Vec<Classification>,
    /// Every state attaining the largest probability (within the tie tolerance).
    pub global_max: Vec<usize>,
    pub global_max_unique: bool,
    pub global_min: Vec<usize>,
    pub global_min_unique: bool,
}

impl Extrema {
    pub fn local_maxima(&self) -> Vec<usize> {
        self.filter(Classification::is_local_max)
    }

    pub fn local_minima(&self) -> Vec<usize> {
        self.filter(Classification::is_local_min)
    }

    /// Local maxima and minima together, ascending.
    pub fn local_extrema(&self) -> Vec<usize> {
        self.filter(Classification::is_extremum)
    }

    fn filter(&self, pred: impl Fn(Classification) -> bool) -> Vec<usize> {
        self.classes
            .iter()
            .enumerate()
            .filter(|(_, c)| pred(**c))
            .map(|(i, _)| i)
            .collect()
    }
}

fn tied(a: f64, b: f64, tie_tol: f64) -> bool {
    (a - b).abs() <= tie_tol * a.abs().max(b.abs())
}

/// Classifies stationary maxima and minima.
///
/// `v` is a local maximum when `s(v') < s(v)` for every neighbor `v'`, and a
/// global maximum when that holds over all states; minima are symmetric. A
/// state tied with any neighbor is reported as a plateau tie and is never an
/// extremum.
pub fn classify_extrema(neighbors: &[Vec<usize>], s: &[f64], tie_tol: f64) -> Extrema {
    let n = s.len();
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    let global_max: Vec<usize> = (0..n).filter(|&i| tied(s[i], max, tie_tol)).collect();
    let global_min: Vec<usize> = (0..n).filter(|&i| tied(s[i], min, tie_tol)).collect();
    let global_max_unique = global_max.len() == 1;
    let global_min_unique = global_min.len() == 1;

    let classes = (0..n)
        .map(|v| {
            let adj = &neighbors[v];
            if adj.is_empty() {
                return Classification::None;
            }
            if adj.iter().any(|&u| tied(s[v], s[u], tie_tol)) {
                return Classification::PlateauTie;
            }
            if adj.iter().all(|&u| s[u] < s[v]) {
                if global_max_unique && global_max[0] == v {
                    Classification::GlobalMax
                } else {
                    Classification::LocalMax
                }
            } else if adj.iter().all(|&u| s[u] > s[v]) {
                if global_min_unique && global_min[0] == v {
                    Classification::GlobalMin
                } else {
                    Classification::LocalMin
                }
            } else {
                Classification::None
            }
        })
        .collect();

    Extrema {
        classes,
        global_max,
        global_max_unique,
        global_min,
        global_min_unique,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    /// Population counts for Moran kernels; the single state index otherwise.
    pub state: Vec<u32>,
    pub probability: f64,
    pub rte: f64,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub method: Method,
    pub residual: f64,
    pub iterations: usize,
}

/// Per-state stationary probability, RTE and classification, plus the
/// process-level entropy rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub spec: Option<ProcessSpec>,
    /// Entropy rate in nats.
    pub entropy_rate: f64,
    /// Upper bound on the entropy rate, when the kernel is a Moran process.
    pub entropy_rate_bound: Option<f64>,
    pub solver: SolverSummary,
    pub records: Vec<StateRecord>,
    pub global_max: Vec<usize>,
    pub global_max_unique: bool,
    pub global_min: Vec<usize>,
    pub global_min_unique: bool,
}

impl AnalysisReport {
    pub fn probabilities(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.probability).collect()
    }

    pub fn rtes(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.rte).collect()
    }

    pub fn record_for(&self, counts: &[u32]) -> Option<&StateRecord> {
        self.records.iter().find(|r| r.state == counts)
    }

    pub fn local_extrema(&self) -> Vec<&StateRecord> {
        self.records.iter().filter(|r| r.classification.is_extremum()).collect()
    }
}

/// Builds the report from a solved kernel.
pub fn analyze_kernel(kernel: &TransitionKernel, dist: &StationaryDistribution, tie_tol: f64) -> Result<AnalysisReport> {
    let h = entropy_rate(kernel, dist)?;
    let extrema = classify_extrema(&kernel.adjacency(), &dist.probabilities, tie_tol);
    let records = dist
        .probabilities
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let state = match kernel.space() {
                Some(space) => space.state(i).counts().to_vec(),
                None => vec![i as u32],
            };
            Ok(StateRecord {
                state,
                probability: p,
                rte: rte(h, p)?,
                classification: extrema.classes[i],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalysisReport {
        spec: None,
        entropy_rate: h,
        entropy_rate_bound: kernel.space().map(|s| entropy_rate_bound(s.num_types())),
        solver: SolverSummary {
            method: dist.method,
            residual: dist.residual,
            iterations: dist.iterations,
        },
        records,
        global_max: extrema.global_max,
        global_max_unique: extrema.global_max_unique,
        global_min: extrema.global_min,
        global_min_unique: extrema.global_min_unique,
    })
}

/// Build, solve and analyze a process in one step.
pub fn analyze(spec: &ProcessSpec, opts: &SolverOptions) -> Result<AnalysisReport> {
    let kernel = build_kernel(spec)?;
    let dist = solve(&kernel, opts)?;
    let mut report = analyze_kernel(&kernel, &dist, DEFAULT_TIE_TOL)?;
    report.spec = Some(spec.clone());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameMatrix;
    use crate::process::{MutationSpec, SelectionSpec};
    use crate::solver::solve_dense;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::LN_2;

    #[test]
    fn coin_flip_chain() {
        let k = TransitionKernel::from_dense(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let s = solve_dense(&k).unwrap();
        assert_abs_diff_eq!(entropy_rate(&k, &s).unwrap(), LN_2, epsilon = 1e-15);
    }

    #[test]
    fn deterministic_cycle_has_zero_rate() {
        let k = TransitionKernel::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let s = solve_dense(&k).unwrap();
        assert_eq!(entropy_rate(&k, &s).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_dimensions() {
        let k = TransitionKernel::from_dense(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(entropy_rate_of(&k, &[1.0]).is_err());
    }

    #[test]
    fn three_type_bound() {
        assert_abs_diff_eq!(entropy_rate_bound(3), 5.0 / 3.0 * 3f64.ln(), epsilon = 1e-15);
        assert!((entropy_rate_bound(3) - 1.831020481).abs() < 1e-9);
        let spec = ProcessSpec::new(15, GameMatrix::three_type(), MutationSpec::uniform(0.2), SelectionSpec::fermi(0.3)).unwrap();
        let r = analyze(&spec, &SolverOptions::default()).unwrap();
        assert!(r.entropy_rate > 0.0 && r.entropy_rate <= entropy_rate_bound(3));
    }

    #[test]
    fn rte_values() {
        assert_abs_diff_eq!(rte(LN_2, 0.5).unwrap(), 2.0 * LN_2, epsilon = 1e-15);
        assert_eq!(rte(0.0, 0.3).unwrap(), 0.0);
        assert!(rte(1.0, 0.0).is_err());
        assert!(rte(1.0, -0.1).is_err());
    }

    #[test]
    fn rte_ratio_values() {
        assert_eq!(rte_ratio(0.2, 0.2).unwrap(), 1.0);
        assert_abs_diff_eq!(rte_ratio(0.4, 0.1).unwrap(), 4.0, epsilon = 1e-15);
        assert!(rte_ratio(0.0, 0.1).is_err());
        assert!(rte_ratio(0.1, -1.0).is_err());
    }

    #[test]
    fn uniform_distribution_is_all_plateau() {
        let path: Vec<Vec<usize>> = (0..5)
            .map(|i| {
                let mut v = Vec::new();
                if i > 0 {
                    v.push(i - 1);
                }
                if i < 4 {
                    v.push(i + 1);
                }
                v
            })
            .collect();
        let e = classify_extrema(&path, &[0.2; 5], DEFAULT_TIE_TOL);
        assert!(e.classes.iter().all(|c| *c == Classification::PlateauTie));
        assert!(e.local_extrema().is_empty());
        assert_eq!(e.global_max.len(), 5);
        assert!(!e.global_max_unique);
    }

    #[test]
    fn path_graph_extrema() {
        let path: Vec<Vec<usize>> = vec![vec![1], vec![0, 2], vec![1, 3], vec![2, 4], vec![3]];
        let s = [0.1, 0.3, 0.2, 0.15, 0.25];
        let e = classify_extrema(&path, &s, DEFAULT_TIE_TOL);
        assert_eq!(
            e.classes,
            vec![
                Classification::GlobalMin,
                Classification::GlobalMax,
                Classification::None,
                Classification::LocalMin,
                Classification::LocalMax
            ]
        );
    }

    #[test]
    fn tie_with_neighbor_blocks_extremum() {
        let path: Vec<Vec<usize>> = vec![vec![1], vec![0, 2], vec![1]];
        let e = classify_extrema(&path, &[0.4, 0.4, 0.2], DEFAULT_TIE_TOL);
        assert_eq!(e.classes[0], Classification::PlateauTie);
        assert_eq!(e.classes[1], Classification::PlateauTie);
        assert_eq!(e.classes[2], Classification::GlobalMin);
    }

    #[test]
    fn report_identities() {
        let spec = ProcessSpec::new(20, GameMatrix::hawk_dove(), MutationSpec::uniform(0.05), SelectionSpec::fermi(1.0)).unwrap();
        let r = analyze(&spec, &SolverOptions::default()).unwrap();
        for rec in &r.records {
            assert_eq!(rec.rte, r.entropy_rate / rec.probability);
            assert!(rec.rte >= r.entropy_rate);
        }
        assert_eq!(r.record_for(&[10, 10]).unwrap().classification, Classification::GlobalMax);
    }
}
