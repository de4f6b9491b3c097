//! Fixation probabilities for two-type processes.
//!
//! `rho_a` is the probability that a single type-1 mutant in a population of
//! type 2 takes over; `rho_b` the reverse. For the constant-fitness game
//! `[[r, r], [1, 1]]` under linear selection these have closed forms, and an
//! absorbing-chain solve gives the same quantities for any two-type spec
//! without mutation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::build_kernel;
use crate::process::{MutationSpec, ProcessSpec};
use crate::solver::SolverOptions;
use crate::sweep::{sweep_mu, Grid, SweepOptions, TrackedState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixationMethod {
    ClosedFormR,
    AbsorbingChain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixationResult {
    pub rho_a: f64,
    pub rho_b: f64,
    pub method: FixationMethod,
}

impl FixationResult {
    /// `rho_a / rho_b`, the small-mutation limit of `s(N,0) / s(0,N)`.
    pub fn ratio(&self) -> f64 {
        self.rho_a / self.rho_b
    }
}

const NEUTRAL_BAND: f64 = 1e-9;

/// Neutral drift: both fixation probabilities are `1/N`.
pub fn fixation_neutral(population: u32) -> Result<FixationResult> {
    if population < 2 {
        return Err(Error::InvalidArgument("fixation needs N >= 2".into()));
    }
    let p = 1.0 / population as f64;
    Ok(FixationResult {
        rho_a: p,
        rho_b: p,
        method: FixationMethod::ClosedFormR,
    })
}

/// Closed forms for relative fitness `r` of type 1:
/// `rho_a = (1 - 1/r) / (1 - r^-N)` and `rho_b = (1 - r) / (1 - r^N)`.
///
/// `r = 1` is rejected; values within 1e-9 of it are treated as neutral.
pub fn fixation_r_game(r: f64, population: u32) -> Result<FixationResult> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidArgument(format!("r must be positive and finite, got {r}")));
    }
    if r == 1.0 {
        return Err(Error::InvalidArgument("r = 1 is neutral drift; use fixation_neutral".into()));
    }
    if population < 2 {
        return Err(Error::InvalidArgument("fixation needs N >= 2".into()));
    }
    if (r - 1.0).abs() < NEUTRAL_BAND {
        return fixation_neutral(population);
    }
    let ln_r = r.ln();
    let n = population as f64;
    // (1 - x^-1)/(1 - x^-N) = expm1(-ln x)/expm1(-N ln x); stays accurate near x = 1.
    let rho = |l: f64| {
        let num = (-l).exp_m1();
        let den = (-n * l).exp_m1();
        if den.is_infinite() {
            0.0
        } else {
            num / den
        }
    };
    Ok(FixationResult {
        rho_a: rho(ln_r),
        rho_b: rho(-ln_r),
        method: FixationMethod::ClosedFormR,
    })
}

/// Fixation probabilities from the first-step recurrence of the mutation-free
/// chain. `x_i`, the probability of reaching `(N,0)` from `(i, N-i)`, solves
/// `(u_i + d_i) x_i = u_i x_{i+1} + d_i x_{i-1}` with `x_0 = 0`, `x_N = 1`.
pub fn fixation_absorbing(spec: &ProcessSpec) -> Result<FixationResult> {
    spec.validate()?;
    if spec.num_types() != 2 {
        return Err(Error::NotApplicable("fixation needs exactly two types".into()));
    }
    if !spec.mutation.is_zero(2) {
        return Err(Error::NotApplicable("fixation needs a mutation-free process (mu = 0)".into()));
    }
    let pop = spec.population;
    if pop < 2 {
        return Err(Error::InvalidArgument("fixation needs N >= 2".into()));
    }
    let kernel = build_kernel(spec)?;
    let space = kernel.space().expect("Moran kernels carry their state space");
    let idx = |a: u32| space.rank(&[a, pop - a]).expect("two-type state");
    let m = (pop - 1) as usize;
    let mut up = vec![0.0; m];
    let mut down = vec![0.0; m];
    for (k, a) in (1..pop).enumerate() {
        let here = idx(a);
        up[k] = kernel.get(here, idx(a + 1));
        down[k] = kernel.get(here, idx(a - 1));
        if !(up[k] > 0.0 && down[k] > 0.0) {
            return Err(Error::NotApplicable(format!("state ({a},{}) has a zero up or down probability", pop - a)));
        }
    }
    let x = solve_first_step(&up, &down)?;
    Ok(FixationResult {
        rho_a: x[0],
        rho_b: 1.0 - x[m - 1],
        method: FixationMethod::AbsorbingChain,
    })
}

/// Thomas algorithm on the tridiagonal system for interior states 1..N-1.
fn solve_first_step(up: &[f64], down: &[f64]) -> Result<Vec<f64>> {
    let m = up.len();
    // row k: -d_k x_{k-1} + (u_k + d_k) x_k - u_k x_{k+1} = 0, boundary x_N = 1 on the right.
    let mut c = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    let mut prev_c = 0.0;
    let mut prev_r = 0.0;
    for k in 0..m {
        let diag = up[k] + down[k];
        let lower = if k > 0 { -down[k] } else { 0.0 };
        let upper = -up[k];
        let b = if k + 1 == m { up[k] } else { 0.0 };
        let denom = diag - lower * prev_c;
        if denom.abs() < f64::MIN_POSITIVE {
            return Err(Error::Singular("first-step recurrence".into()));
        }
        c[k] = if k + 1 < m { upper / denom } else { 0.0 };
        rhs[k] = (b - lower * prev_r) / denom;
        prev_c = c[k];
        prev_r = rhs[k];
    }
    let mut x = vec![0.0; m];
    for k in (0..m).rev() {
        x[k] = rhs[k] - if k + 1 < m { c[k] * x[k + 1] } else { 0.0 };
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRatio {
    /// `(mu, s(N,0) / s(0,N))` in grid order.
    pub sequence: Vec<(f64, f64)>,
    /// Ratio at the smallest grid `mu`.
    pub at_smallest_mu: f64,
    /// `rho_a / rho_b` of the mutation-free process, when it is defined.
    pub fixation_ratio: Option<f64>,
}

/// Corner-probability ratio `s(N,0) / s(0,N)` along a decreasing `mu` grid,
/// compared with the fixation ratio it approaches as `mu -> 0`.
pub fn small_mutation_limit_ratio(spec: &ProcessSpec, mus: &[f64], solver: &SolverOptions) -> Result<LimitRatio> {
    if spec.num_types() != 2 {
        return Err(Error::NotApplicable("the corner ratio is defined for two types".into()));
    }
    let grid = Grid::from_values(mus.to_vec())?;
    let opts = SweepOptions {
        solver: *solver,
        ..SweepOptions::default()
    };
    let res = sweep_mu(spec, &grid, &[TrackedState::Corner], &opts)?;
    let mut sequence = Vec::with_capacity(mus.len());
    for p in &res.points {
        let d = p.result.as_ref().map_err(|e| Error::InvalidArgument(format!("mu={}: {e}", p.param_value)))?;
        sequence.push((p.param_value, d.tracked[0].probability / d.tracked[1].probability));
    }
    let at_smallest_mu = sequence
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|p| p.1)
        .expect("grid is non-empty");
    let fixation_ratio = fixation_absorbing(&spec.with_mutation(MutationSpec::uniform(0.0)))
        .ok()
        .map(|f| f.ratio());
    Ok(LimitRatio {
        sequence,
        at_smallest_mu,
        fixation_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameMatrix;
    use crate::process::SelectionSpec;
    use approx::assert_relative_eq;

    fn r_spec(r: f64, n: u32, mu: f64) -> ProcessSpec {
        ProcessSpec::new(n, GameMatrix::r_game(r).unwrap(), MutationSpec::uniform(mu), SelectionSpec::linear()).unwrap()
    }

    #[test]
    fn r_two_population_three() {
        let f = fixation_r_game(2.0, 3).unwrap();
        assert_relative_eq!(f.rho_a, 4.0 / 7.0, max_relative = 1e-14);
        assert_relative_eq!(f.rho_b, 1.0 / 7.0, max_relative = 1e-14);
        assert_relative_eq!(f.ratio(), 4.0, max_relative = 1e-14);
    }

    #[test]
    fn neutral_branch() {
        assert!(fixation_r_game(1.0, 5).is_err());
        assert!(fixation_r_game(0.0, 5).is_err());
        assert!(fixation_r_game(-2.0, 5).is_err());
        let f = fixation_r_game(1.0 + 1e-12, 5).unwrap();
        assert_eq!(f.rho_a, 0.2);
        assert_eq!(fixation_neutral(8).unwrap().rho_b, 0.125);
        let near = fixation_r_game(1.0 + 1e-7, 10).unwrap();
        assert_relative_eq!(near.rho_a, 0.1, max_relative = 1e-6);
    }

    #[test]
    fn closed_form_matches_absorbing_chain() {
        for r in [0.5, 0.9, 1.1, 2.0, 5.0] {
            for n in 2..=12 {
                let c = fixation_r_game(r, n).unwrap();
                let a = fixation_absorbing(&r_spec(r, n, 0.0)).unwrap();
                assert!((c.rho_a - a.rho_a).abs() < 1e-10, "r={r} N={n}");
                assert!((c.rho_b - a.rho_b).abs() < 1e-10, "r={r} N={n}");
            }
        }
    }

    #[test]
    fn absorbing_chain_cases() {
        let neutral = ProcessSpec::new(7, GameMatrix::neutral(2), MutationSpec::uniform(0.0), SelectionSpec::linear()).unwrap();
        let f = fixation_absorbing(&neutral).unwrap();
        assert_relative_eq!(f.rho_a, 1.0 / 7.0, max_relative = 1e-12);
        assert_relative_eq!(f.rho_b, 1.0 / 7.0, max_relative = 1e-12);

        let hd = ProcessSpec::new(4, GameMatrix::hawk_dove(), MutationSpec::uniform(0.0), SelectionSpec::linear()).unwrap();
        let f = fixation_absorbing(&hd).unwrap();
        assert_relative_eq!(f.rho_a, f.rho_b, max_relative = 1e-12);

        assert!(fixation_absorbing(&r_spec(2.0, 3, 0.1)).is_err());
    }

    #[test]
    fn rho_a_increases_with_r() {
        let rs: Vec<f64> = (1..40).map(|k| 0.1 * k as f64).filter(|r| (r - 1.0).abs() > 1e-6).collect();
        let rho: Vec<f64> = rs.iter().map(|&r| fixation_r_game(r, 9).unwrap().rho_a).collect();
        assert!(rho.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn limit_ratio_approaches_fixation_ratio() {
        let lim = small_mutation_limit_ratio(&r_spec(2.0, 3, 0.1), &[1e-2, 1e-3, 1e-4], &SolverOptions::default()).unwrap();
        let target = lim.fixation_ratio.unwrap();
        assert_relative_eq!(target, 4.0, max_relative = 1e-10);
        let gaps: Vec<f64> = lim.sequence.iter().map(|(_, v)| (v - target).abs()).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{:?}", lim.sequence);
        assert!(gaps[2] / target < 1e-3);

        let half = small_mutation_limit_ratio(&r_spec(0.5, 3, 0.1), &[1e-2, 1e-3, 1e-4], &SolverOptions::default()).unwrap();
        assert_relative_eq!(half.at_smallest_mu, 1.0 / lim.at_smallest_mu, max_relative = 1e-9);
    }

    #[test]
    fn neutral_ratio_is_one() {
        let spec = ProcessSpec::new(6, GameMatrix::neutral(2), MutationSpec::uniform(0.1), SelectionSpec::linear()).unwrap();
        let lim = small_mutation_limit_ratio(&spec, &[0.3, 0.01], &SolverOptions::default()).unwrap();
        for (_, v) in lim.sequence {
            assert_relative_eq!(v, 1.0, max_relative = 1e-12);
        }
    }
}
