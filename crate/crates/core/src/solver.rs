//! Stationary distributions of transition kernels.
//!
//! Three routes are available: the product formula for two-type birth-death
//! chains, a direct elimination solve, and power iteration. Every returned
//! distribution carries the residual `max_a |(sT)(a) - s(a)|`, computed
//! independently of the route that produced it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::TransitionKernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DetailedBalance,
    DenseSolve,
    PowerIteration,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::DetailedBalance => "detailed-balance",
            Method::DenseSolve => "dense-solve",
            Method::PowerIteration => "power-iteration",
        })
    }
}

/// Which solver [`solve`] should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodChoice {
    /// Birth-death formula for two types, dense solve up to the cap, power
    /// iteration beyond it.
    #[default]
    Auto,
    BirthDeath,
    Dense,
    Power,
}

impl FromStr for MethodChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(MethodChoice::Auto),
            "birth-death" => Ok(MethodChoice::BirthDeath),
            "dense" => Ok(MethodChoice::Dense),
            "power" => Ok(MethodChoice::Power),
            other => Err(Error::InvalidArgument(format!(
                "unknown method '{other}' (expected auto, birth-death, dense or power)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub method: MethodChoice,
    /// L1 change between successive power iterates that declares convergence.
    pub tol: f64,
    pub max_iters: usize,
    /// Largest state count routed to the dense solver by `Auto`.
    pub dense_cap: usize,
    /// Bound every returned distribution's residual must satisfy.
    pub residual_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: MethodChoice::Auto,
            tol: 1e-13,
            max_iters: 1_000_000,
            dense_cap: 4000,
            residual_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub probabilities: Vec<f64>,
    pub method: Method,
    pub residual: f64,
    /// Zero for the exact methods.
    pub iterations: usize,
}

impl StationaryDistribution {
    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probabilities[i]
    }
}

/// `max_a |sum_b s(b) T(b, a) - s(a)|`
pub fn residual(kernel: &TransitionKernel, s: &[f64]) -> f64 {
    let mut next = vec![0.0; s.len()];
    kernel.left_multiply(s, &mut next);
    next.iter().zip(s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn finish(kernel: &TransitionKernel, mut probabilities: Vec<f64>, method: Method, iterations: usize, residual_tol: f64) -> Result<StationaryDistribution> {
    let total: f64 = probabilities.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Singular(format!("{method} produced an unnormalizable vector")));
    }
    probabilities.iter_mut().for_each(|p| *p /= total);
    let r = residual(kernel, &probabilities);
    if !(r <= residual_tol) {
        return Err(Error::ResidualTooLarge {
            residual: r,
            tolerance: residual_tol,
        });
    }
    Ok(StationaryDistribution {
        probabilities,
        method,
        residual: r,
        iterations,
    })
}

fn require_irreducible(kernel: &TransitionKernel) -> Result<()> {
    if kernel.is_irreducible() {
        Ok(())
    } else {
        Err(Error::NotIrreducible(
            "the transition graph is not strongly connected (is the mutation rate zero?)".into(),
        ))
    }
}

/// Exact solution for a two-type birth-death chain:
/// `s(k+1) / s(k) = T(k, k+1) / T(k+1, k)`.
pub fn solve_birth_death(kernel: &TransitionKernel) -> Result<StationaryDistribution> {
    solve_birth_death_with(kernel, SolverOptions::default().residual_tol)
}

fn solve_birth_death_with(kernel: &TransitionKernel, residual_tol: f64) -> Result<StationaryDistribution> {
    if let Some(space) = kernel.space() {
        if space.num_types() != 2 {
            return Err(Error::NotApplicable(format!(
                "birth-death formula needs two types, kernel has {}",
                space.num_types()
            )));
        }
    }
    let (lower, upper) = kernel.bandwidth();
    if lower > 1 || upper > 1 {
        return Err(Error::NotApplicable("kernel is not tridiagonal".into()));
    }
    let n = kernel.len();
    let mut log_s = vec![0.0; n];
    for k in 0..n - 1 {
        let up = kernel.get(k, k + 1);
        let down = kernel.get(k + 1, k);
        if !(up > 0.0 && down > 0.0) {
            return Err(Error::NotApplicable(format!(
                "zero transition between states {k} and {}",
                k + 1
            )));
        }
        log_s[k + 1] = log_s[k] + up.ln() - down.ln();
    }
    let max = log_s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: Vec<f64> = log_s.iter().map(|l| (l - max).exp()).collect();
    let dist = finish(kernel, s, Method::DetailedBalance, 0, residual_tol)?;
    let imbalance = detailed_balance_error(kernel, &dist.probabilities);
    if imbalance > 1e-10 {
        return Err(Error::ResidualTooLarge {
            residual: imbalance,
            tolerance: 1e-10,
        });
    }
    Ok(dist)
}

/// Largest `|s(a) T(a, b) - s(b) T(b, a)|` over stored pairs.
pub fn detailed_balance_error(kernel: &TransitionKernel, s: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..kernel.len() {
        let (cols, vals) = kernel.row(a);
        for (&b, &p) in cols.iter().zip(vals) {
            worst = worst.max((s[a] * p - s[b] * kernel.get(b, a)).abs());
        }
    }
    worst
}

/// Direct solve of `sT = s`, `sum s = 1` by state reduction
/// (Grassmann-Taksar-Heyman elimination), on band storage.
///
/// States are eliminated from the last index down. Every update is a sum of
/// non-negative terms, so no cancellation occurs even when probabilities
/// span many orders of magnitude. Fill-in stays inside the kernel's band.
pub fn solve_dense(kernel: &TransitionKernel) -> Result<StationaryDistribution> {
    let opts = SolverOptions::default();
    solve_dense_with(kernel, opts.dense_cap, opts.residual_tol)
}

fn solve_dense_with(kernel: &TransitionKernel, cap: usize, residual_tol: f64) -> Result<StationaryDistribution> {
    let n = kernel.len();
    if n > cap {
        return Err(Error::NotApplicable(format!(
            "{n} states exceed the dense solver cap of {cap}"
        )));
    }
    require_irreducible(kernel)?;
    let (bl, bu) = kernel.bandwidth();
    let width = bl + bu + 1;
    let mut band = vec![0.0f64; n * width];
    // entry (i, j) lives at i * width + (j + bl - i)
    for i in 0..n {
        let (cols, vals) = kernel.row(i);
        for (&j, &p) in cols.iter().zip(vals) {
            band[i * width + j + bl - i] = p;
        }
    }

    let mut scale = vec![0.0f64; n];
    for k in (1..n).rev() {
        let j_lo = k.saturating_sub(bl);
        let row_k = k * width;
        let outflow: f64 = (j_lo..k).map(|j| band[row_k + j + bl - k]).sum();
        if !(outflow > 0.0) {
            return Err(Error::Singular(format!(
                "state {k} has no transitions to lower-indexed states after reduction"
            )));
        }
        scale[k] = outflow;
        let i_lo = k.saturating_sub(bu);
        for i in i_lo..k {
            let at = i * width + k + bl - i;
            let p_ik = band[at] / outflow;
            band[at] = p_ik;
            if p_ik == 0.0 {
                continue;
            }
            let (head, tail) = band.split_at_mut(row_k);
            let src = &tail[j_lo + bl - k..bl];
            let dst_start = i * width + j_lo + bl - i;
            let dst = &mut head[dst_start..dst_start + (k - j_lo)];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += p_ik * s;
            }
        }
    }

    let mut s = vec![0.0f64; n];
    s[0] = 1.0;
    for j in 1..n {
        let i_lo = j.saturating_sub(bu);
        s[j] = (i_lo..j).map(|i| s[i] * band[i * width + j + bl - i]).sum();
    }
    finish(kernel, s, Method::DenseSolve, 0, residual_tol)
}

/// Power iteration `s <- sT` from the uniform vector, renormalized each step.
pub fn solve_power(kernel: &TransitionKernel, tol: f64, max_iters: usize) -> Result<StationaryDistribution> {
    solve_power_with(kernel, tol, max_iters, SolverOptions::default().residual_tol)
}

/// Column-major copy of a kernel, so `s T` is a gather per output entry.
struct Columns {
    ptr: Vec<usize>,
    rows: Vec<u32>,
    vals: Vec<f64>,
}

impl Columns {
    fn new(kernel: &TransitionKernel) -> Self {
        let n = kernel.len();
        let mut ptr = vec![0usize; n + 1];
        for i in 0..n {
            for &j in kernel.row(i).0 {
                ptr[j + 1] += 1;
            }
        }
        for j in 0..n {
            ptr[j + 1] += ptr[j];
        }
        let mut fill = ptr.clone();
        let mut rows = vec![0u32; kernel.nnz()];
        let mut vals = vec![0.0; kernel.nnz()];
        for i in 0..n {
            let (cols, v) = kernel.row(i);
            for (&j, &p) in cols.iter().zip(v) {
                rows[fill[j]] = i as u32;
                vals[fill[j]] = p;
                fill[j] += 1;
            }
        }
        Columns { ptr, rows, vals }
    }

    /// `out = s T`; returns the sum of `out`.
    fn apply(&self, s: &[f64], out: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for (j, o) in out.iter_mut().enumerate() {
            let (lo, hi) = (self.ptr[j], self.ptr[j + 1]);
            let acc: f64 = self.rows[lo..hi].iter().zip(&self.vals[lo..hi]).map(|(&i, &p)| s[i as usize] * p).sum();
            *o = acc;
            total += acc;
        }
        total
    }
}

fn solve_power_with(kernel: &TransitionKernel, tol: f64, max_iters: usize, residual_tol: f64) -> Result<StationaryDistribution> {
    require_irreducible(kernel)?;
    let n = kernel.len();
    if n > u32::MAX as usize {
        return Err(Error::InvalidArgument(format!("{n} states is too many for power iteration")));
    }
    let columns = Columns::new(kernel);
    let mut s = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iters {
        let total = columns.apply(&s, &mut next);
        let inv = 1.0 / total;
        change = 0.0;
        for (x, old) in next.iter_mut().zip(&s) {
            *x *= inv;
            change += (*x - old).abs();
        }
        std::mem::swap(&mut s, &mut next);
        iterations += 1;
        if change < tol {
            return finish(kernel, s, Method::PowerIteration, iterations, residual_tol);
        }
    }
    Err(Error::NonConvergence {
        iterations,
        change,
        residual: residual(kernel, &s),
    })
}

/// Solves with the configured method.
pub fn solve(kernel: &TransitionKernel, opts: &SolverOptions) -> Result<StationaryDistribution> {
    require_irreducible(kernel)?;
    match opts.method {
        MethodChoice::BirthDeath => solve_birth_death_with(kernel, opts.residual_tol),
        MethodChoice::Dense => solve_dense_with(kernel, usize::MAX, opts.residual_tol),
        MethodChoice::Power => solve_power_with(kernel, opts.tol, opts.max_iters, opts.residual_tol),
        MethodChoice::Auto => {
            if kernel.space().is_some_and(|s| s.num_types() == 2) {
                solve_birth_death_with(kernel, opts.residual_tol)
            } else if kernel.len() <= opts.dense_cap {
                solve_dense_with(kernel, opts.dense_cap, opts.residual_tol)
            } else {
                solve_power_with(kernel, opts.tol, opts.max_iters, opts.residual_tol)
            }
        }
    }
}
