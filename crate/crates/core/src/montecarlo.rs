//! First-return trajectory sampling.
//!
//! A path from `v` back to `v` has surprisal `-sum log T` along its steps.
//! Sampling paths from the chain itself makes the mean surprisal an unbiased
//! estimate of the trajectory entropy `H(X)/s(v)`, and the mean length an
//! estimate of the expected return time `1/s(v)`.
//!
//! Sample `i` draws from `ChaCha8Rng::seed_from_u64(seed)` switched to stream
//! `i`, so results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::TransitionKernel;

pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;
/// Truncated fraction above which a run is flagged unreliable.
pub const UNRELIABLE_FRACTION: f64 = 1e-3;

/// Walker/Vose alias tables for every kernel row.
#[derive(Debug, Clone)]
pub struct AliasSampler {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    log_probs: Vec<f64>,
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasSampler {
    pub fn new(kernel: &TransitionKernel) -> Self {
        let mut offsets = Vec::with_capacity(kernel.len() + 1);
        let mut targets = Vec::new();
        let mut log_probs = Vec::new();
        let mut prob = Vec::new();
        let mut alias = Vec::new();
        offsets.push(0);
        for i in 0..kernel.len() {
            let (cols, vals) = kernel.row(i);
            let base = targets.len();
            let live: Vec<(usize, f64)> = cols.iter().copied().zip(vals.iter().copied()).filter(|(_, p)| *p > 0.0).collect();
            let total: f64 = live.iter().map(|(_, p)| p).sum();
            let d = live.len();
            let mut scaled: Vec<f64> = live.iter().map(|(_, p)| p / total * d as f64).collect();
            let mut row_alias: Vec<usize> = (0..d).collect();
            let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..d).partition(|&k| scaled[k] < 1.0);
            while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
                row_alias[s] = l;
                scaled[l] -= 1.0 - scaled[s];
                if scaled[l] < 1.0 {
                    large.pop();
                    small.push(l);
                }
            }
            for k in small.into_iter().chain(large) {
                scaled[k] = 1.0;
            }
            for (k, (j, p)) in live.into_iter().enumerate() {
                targets.push(j);
                log_probs.push(p.ln());
                prob.push(scaled[k]);
                alias.push(base + row_alias[k]);
            }
            offsets.push(targets.len());
        }
        AliasSampler {
            offsets,
            targets,
            log_probs,
            prob,
            alias,
        }
    }

    /// Draws a successor of `i`; returns its index and `log T(i, j)`.
    #[inline]
    pub fn step<R: Rng>(&self, i: usize, rng: &mut R) -> (usize, f64) {
        let lo = self.offsets[i];
        let d = self.offsets[i + 1] - lo;
        let k = lo + rng.random_range(0..d);
        let slot = if rng.random::<f64>() < self.prob[k] { k } else { self.alias[k] };
        (self.targets[slot], self.log_probs[slot])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleOptions {
    pub samples: usize,
    pub seed: u64,
    pub max_steps: u64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            samples: 100_000,
            seed: 0,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub state: usize,
    pub samples: usize,
    /// Samples that returned before the step cap.
    pub completed: usize,
    pub mean_surprisal: f64,
    pub se_surprisal: f64,
    pub mean_length: f64,
    pub se_length: f64,
    pub truncated: usize,
    pub seed: u64,
    pub unreliable: bool,
}

enum Path {
    Returned { surprisal: f64, length: u64 },
    Truncated,
}

fn sample_one(sampler: &AliasSampler, v: usize, seed: u64, index: usize, max_steps: u64) -> Path {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut at = v;
    let mut surprisal = 0.0;
    for length in 1..=max_steps {
        let (next, lp) = sampler.step(at, &mut rng);
        surprisal -= lp;
        if next == v {
            return Path::Returned { surprisal, length };
        }
        at = next;
    }
    Path::Truncated
}

/// Neumaier-compensated running sums of x and x².
#[derive(Default)]
struct Moments {
    sum: f64,
    comp: f64,
    sq: f64,
    sq_comp: f64,
}

fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl Moments {
    fn push(&mut self, x: f64) {
        neumaier(&mut self.sum, &mut self.comp, x);
        neumaier(&mut self.sq, &mut self.sq_comp, x * x);
    }

    /// Mean and standard error of the mean.
    fn finish(&self, n: usize) -> (f64, f64) {
        if n == 0 {
            return (f64::NAN, f64::NAN);
        }
        let nf = n as f64;
        let mean = (self.sum + self.comp) / nf;
        if n == 1 {
            return (mean, 0.0);
        }
        let var = ((self.sq + self.sq_comp) - nf * mean * mean).max(0.0) / (nf - 1.0);
        (mean, (var / nf).sqrt())
    }
}

/// Samples first-return paths from state index `v`.
pub fn sample_return_trajectories(kernel: &TransitionKernel, v: usize, opts: &SampleOptions) -> Result<TrajectoryStats> {
    sample_with(&AliasSampler::new(kernel), kernel, v, opts)
}

/// As [`sample_return_trajectories`] with a prebuilt sampler.
pub fn sample_with(sampler: &AliasSampler, kernel: &TransitionKernel, v: usize, opts: &SampleOptions) -> Result<TrajectoryStats> {
    if opts.samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    if v >= kernel.len() {
        return Err(Error::InvalidState(format!("state index {v} out of range for {} states", kernel.len())));
    }
    if !kernel.is_irreducible() {
        return Err(Error::NotIrreducible("return times are not finite on a reducible chain".into()));
    }
    let paths: Vec<Path> = (0..opts.samples)
        .into_par_iter()
        .map(|i| sample_one(sampler, v, opts.seed, i, opts.max_steps))
        .collect();
    let mut surprisal = Moments::default();
    let mut length = Moments::default();
    let mut truncated = 0;
    for p in &paths {
        match p {
            Path::Returned { surprisal: s, length: l } => {
                surprisal.push(*s);
                length.push(*l as f64);
            }
            Path::Truncated => truncated += 1,
        }
    }
    let completed = opts.samples - truncated;
    let (mean_surprisal, se_surprisal) = surprisal.finish(completed);
    let (mean_length, se_length) = length.finish(completed);
    Ok(TrajectoryStats {
        state: v,
        samples: opts.samples,
        completed,
        mean_surprisal,
        se_surprisal,
        mean_length,
        se_length,
        truncated,
        seed: opts.seed,
        unreliable: truncated as f64 > UNRELIABLE_FRACTION * opts.samples as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::entropy_rate;
    use crate::game::GameMatrix;
    use crate::kernel::build_kernel;
    use crate::process::{MutationSpec, ProcessSpec, SelectionSpec};
    use crate::solver::{solve, SolverOptions};

    fn opts(samples: usize, seed: u64) -> SampleOptions {
        SampleOptions {
            samples,
            seed,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    #[test]
    fn alias_table_reproduces_row() {
        let k = TransitionKernel::from_dense(&[vec![0.1, 0.6, 0.3], vec![0.5, 0.0, 0.5], vec![0.2, 0.2, 0.6]]).unwrap();
        let s = AliasSampler::new(&k);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0usize; 3];
        let n = 200_000;
        for _ in 0..n {
            counts[s.step(0, &mut rng).0] += 1;
        }
        for (c, p) in counts.iter().zip([0.1, 0.6, 0.3]) {
            assert!((*c as f64 / n as f64 - p).abs() < 0.005);
        }
        for _ in 0..1000 {
            assert_ne!(s.step(1, &mut rng).0, 1);
        }
    }

    #[test]
    fn uniform_two_state_chain() {
        let k = TransitionKernel::from_dense(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let st = sample_return_trajectories(&k, 0, &opts(50_000, 1)).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((st.mean_surprisal - 2.0 * ln2).abs() < 3.0 * st.se_surprisal);
        assert!((st.mean_length - 2.0).abs() < 3.0 * st.se_length);
    }

    #[test]
    fn deterministic_cycle() {
        let k = TransitionKernel::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let st = sample_return_trajectories(&k, 1, &opts(100, 3)).unwrap();
        assert_eq!(st.mean_surprisal, 0.0);
        assert_eq!(st.mean_length, 2.0);
        assert_eq!(st.se_length, 0.0);
        assert_eq!(st.truncated, 0);
    }

    #[test]
    fn neutral_moran_center() {
        let spec = ProcessSpec::new(4, GameMatrix::neutral(2), MutationSpec::uniform(0.25), SelectionSpec::linear()).unwrap();
        let k = build_kernel(&spec).unwrap();
        let dist = solve(&k, &SolverOptions::default()).unwrap();
        let h = entropy_rate(&k, &dist).unwrap();
        let v = k.space().unwrap().rank(&[2, 2]).unwrap();
        let st = sample_return_trajectories(&k, v, &opts(100_000, 42)).unwrap();
        let sv = dist.probabilities[v];
        assert!((st.mean_surprisal - h / sv).abs() < 3.0 * st.se_surprisal, "{st:?} vs {}", h / sv);
        assert!((st.mean_length - 1.0 / sv).abs() < 3.0 * st.se_length);
    }

    #[test]
    fn deterministic_under_seed() {
        let k = TransitionKernel::from_dense(&[vec![0.2, 0.8, 0.0], vec![0.3, 0.3, 0.4], vec![0.5, 0.0, 0.5]]).unwrap();
        let a = sample_return_trajectories(&k, 2, &opts(5000, 9)).unwrap();
        let b = sample_return_trajectories(&k, 2, &opts(5000, 9)).unwrap();
        assert_eq!(a, b);
        let c = sample_return_trajectories(&k, 2, &opts(5000, 10)).unwrap();
        assert_ne!(a.mean_surprisal, c.mean_surprisal);
    }

    #[test]
    fn truncation_is_reported() {
        let k = TransitionKernel::from_dense(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]).unwrap();
        let st = sample_return_trajectories(
            &k,
            0,
            &SampleOptions {
                samples: 10,
                seed: 0,
                max_steps: 2,
            },
        )
        .unwrap();
        assert_eq!(st.truncated, 10);
        assert!(st.unreliable);
        assert!(st.mean_surprisal.is_nan());
    }

    #[test]
    fn rejects_bad_input() {
        let k = TransitionKernel::from_dense(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!(sample_return_trajectories(&k, 0, &opts(0, 0)).is_err());
        assert!(sample_return_trajectories(&k, 2, &opts(10, 0)).is_err());
    }
}
