//! Population states and the simplex of integer compositions.
//!
//! States are ordered lexicographically descending on their counts, so for
//! `N = 2, n = 2` the order is `(2,0), (1,1), (0,2)`. The position of a state
//! in that order is computed combinatorially by [`StateSpace::rank`] without
//! any lookup table.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A composition `a = (a_1, ..., a_n)` of the population size `N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PopulationState {
    counts: Vec<u32>,
}

impl PopulationState {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidState(format!(
                "need at least two types, got {}",
                counts.len()
            )));
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::InvalidState("population size must be positive".into()));
        }
        Ok(PopulationState { counts })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn num_types(&self) -> usize {
        self.counts.len()
    }

    pub fn population(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// The population distribution `a / N`.
    pub fn frequencies(&self) -> Vec<f64> {
        let total = self.population() as f64;
        self.counts.iter().map(|&c| c as f64 / total).collect()
    }

    /// All distinct states `a + e_alpha - e_beta` with `alpha != beta` and
    /// `a_beta >= 1`, in lexicographically descending order.
    pub fn neighbors(&self) -> Vec<PopulationState> {
        let mut out = Vec::new();
        for (alpha, beta) in moves(&self.counts) {
            let mut counts = self.counts.clone();
            counts[alpha] += 1;
            counts[beta] -= 1;
            out.push(PopulationState { counts });
        }
        out.sort_by(|a, b| b.cmp(a));
        out
    }

    /// Applies a coordinate permutation: the result has `result[perm[i]] = self[i]`.
    pub fn permuted(&self, perm: &[usize]) -> PopulationState {
        let mut counts = vec![0; self.counts.len()];
        for (i, &c) in self.counts.iter().enumerate() {
            counts[perm[i]] = c;
        }
        PopulationState { counts }
    }
}

impl fmt::Display for PopulationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Valid `(alpha, beta)` moves out of `counts`: one individual of type `beta`
/// is replaced by one of type `alpha`.
pub(crate) fn moves(counts: &[u32]) -> impl Iterator<Item = (usize, usize)> + '_ {
    let n = counts.len();
    (0..n).flat_map(move |alpha| {
        (0..n).filter_map(move |beta| (alpha != beta && counts[beta] >= 1).then_some((alpha, beta)))
    })
}

/// Binomial coefficient `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Number of compositions of `population` into `types` non-negative parts,
/// `C(N + n - 1, n - 1)`.
pub fn state_count(population: u32, types: usize) -> u64 {
    binomial(population as u64 + types as u64 - 1, types as u64 - 1)
}

/// Divisor used to normalize trajectory entropies across population sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateCountDivisor {
    /// The actual number of states, `C(N + n - 1, n - 1)`.
    #[default]
    StarsBars,
    /// `C(N + n, n)`, which is `C(N + 3, 3)` for three types.
    Paper,
}

impl StateCountDivisor {
    pub fn value(self, population: u32, types: usize) -> f64 {
        match self {
            StateCountDivisor::StarsBars => state_count(population, types) as f64,
            StateCountDivisor::Paper => binomial(population as u64 + types as u64, types as u64) as f64,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StateCountDivisor::StarsBars => "stars-bars",
            StateCountDivisor::Paper => "paper",
        }
    }
}

impl std::str::FromStr for StateCountDivisor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stars-bars" => Ok(StateCountDivisor::StarsBars),
            "paper" => Ok(StateCountDivisor::Paper),
            other => Err(Error::InvalidArgument(format!(
                "unknown divisor '{other}' (expected stars-bars or paper)"
            ))),
        }
    }
}

/// The ordered set of all population states for fixed `(N, n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    population: u32,
    types: usize,
    states: Vec<PopulationState>,
}

impl StateSpace {
    pub fn new(population: u32, types: usize) -> Result<Self> {
        let states = enumerate_states(population, types)?;
        Ok(StateSpace {
            population,
            types,
            states,
        })
    }

    pub fn population(&self) -> u32 {
        self.population
    }

    pub fn num_types(&self) -> usize {
        self.types
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[PopulationState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &PopulationState {
        &self.states[index]
    }

    /// Canonical index of `counts`, or `None` if it is not a state of this space.
    pub fn rank(&self, counts: &[u32]) -> Option<usize> {
        if counts.len() != self.types || counts.iter().map(|&c| c as u64).sum::<u64>() != self.population as u64 {
            return None;
        }
        Some(rank_counts(counts))
    }

    pub fn index_of(&self, state: &PopulationState) -> Option<usize> {
        self.rank(state.counts())
    }

    /// Neighbor indices of the state at `index`, excluding itself.
    pub fn neighbor_indices(&self, index: usize) -> Vec<usize> {
        let counts = self.states[index].counts();
        let mut buf = counts.to_vec();
        let mut out: Vec<usize> = moves(counts)
            .map(|(alpha, beta)| {
                buf[alpha] += 1;
                buf[beta] -= 1;
                let r = rank_counts(&buf);
                buf[alpha] -= 1;
                buf[beta] += 1;
                r
            })
            .collect();
        out.sort_unstable();
        out
    }
}

/// Rank of a composition in lexicographically descending order.
///
/// Compositions preceding `a` at coordinate `i` are those agreeing on the
/// prefix and having a larger value there; summing over those values with the
/// hockey-stick identity gives `C(rem_i - a_i + m, m + 1)` with
/// `m = n - i - 2` remaining free coordinates after this one.
pub(crate) fn rank_counts(counts: &[u32]) -> usize {
    let n = counts.len();
    let mut remaining: u64 = counts.iter().map(|&c| c as u64).sum();
    let mut index: u64 = 0;
    for (i, &c) in counts.iter().enumerate().take(n - 1) {
        let c = c as u64;
        let m = (n - i - 2) as u64;
        if remaining > c {
            index += binomial(remaining - c + m, m + 1);
        }
        remaining -= c;
    }
    index as usize
}

/// Inverse of [`rank_counts`].
pub fn unrank(index: usize, population: u32, types: usize) -> Result<PopulationState> {
    let total = state_count(population, types);
    if (index as u64) >= total {
        return Err(Error::InvalidArgument(format!(
            "index {index} out of range for {total} states"
        )));
    }
    let mut counts = vec![0u32; types];
    let mut remaining = population as u64;
    let mut left = index as u64;
    for (i, slot) in counts.iter_mut().enumerate().take(types - 1) {
        let m = (types - i - 2) as u64;
        // Number of compositions whose coordinate i is strictly above c is
        // C(remaining - c + m, m + 1); pick the largest c with that <= left.
        let mut c = remaining;
        loop {
            let before = if remaining > c { binomial(remaining - c + m, m + 1) } else { 0 };
            let through = binomial(remaining - c + m + 1, m + 1);
            if before <= left && left < through {
                left -= before;
                break;
            }
            c -= 1;
        }
        *slot = c as u32;
        remaining -= c;
    }
    counts[types - 1] = remaining as u32;
    Ok(PopulationState { counts })
}

/// Every composition of `population` into `types` parts, lexicographically
/// descending.
pub fn enumerate_states(population: u32, types: usize) -> Result<Vec<PopulationState>> {
    if types < 2 {
        return Err(Error::InvalidArgument(format!(
            "number of types must be at least 2, got {types}"
        )));
    }
    if population < 1 {
        return Err(Error::InvalidArgument("population size must be at least 1".into()));
    }
    let total = state_count(population, types);
    let mut out = Vec::with_capacity(total as usize);
    let mut counts = vec![0u32; types];
    fill(&mut counts, 0, population, &mut out);
    debug_assert_eq!(out.len() as u64, total);
    Ok(out)
}

fn fill(counts: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<PopulationState>) {
    if pos == counts.len() - 1 {
        counts[pos] = remaining;
        out.push(PopulationState { counts: counts.to_vec() });
        return;
    }
    for c in (0..=remaining).rev() {
        counts[pos] = c;
        fill(counts, pos + 1, remaining - c, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(c: &[u32]) -> PopulationState {
        PopulationState::new(c.to_vec()).unwrap()
    }

    #[test]
    fn two_types_population_two() {
        let s = enumerate_states(2, 2).unwrap();
        assert_eq!(s, vec![st(&[2, 0]), st(&[1, 1]), st(&[0, 2])]);
    }

    #[test]
    fn population_one_three_types() {
        let s = enumerate_states(1, 3).unwrap();
        assert_eq!(s, vec![st(&[1, 0, 0]), st(&[0, 1, 0]), st(&[0, 0, 1])]);
    }

    #[test]
    fn sixty_three_types_count() {
        assert_eq!(enumerate_states(60, 3).unwrap().len(), 1891);
        assert_eq!(state_count(60, 3), 1891);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(enumerate_states(5, 1).is_err());
        assert!(enumerate_states(0, 3).is_err());
        assert!(PopulationState::new(vec![3]).is_err());
    }

    #[test]
    fn count_matches_brute_force() {
        for n in 2..=4usize {
            for pop in 1..=9u32 {
                let mut brute = 0u64;
                let limit = (pop + 1).pow(n as u32);
                for code in 0..limit {
                    let mut x = code;
                    let mut sum = 0;
                    for _ in 0..n {
                        sum += x % (pop + 1);
                        x /= pop + 1;
                    }
                    if sum == pop {
                        brute += 1;
                    }
                }
                assert_eq!(state_count(pop, n), brute, "N={pop} n={n}");
            }
        }
    }

    #[test]
    fn rank_and_unrank_are_inverse_to_enumeration() {
        for n in 2..=5usize {
            for pop in 1..=8u32 {
                let space = StateSpace::new(pop, n).unwrap();
                for (i, s) in space.states().iter().enumerate() {
                    assert_eq!(space.index_of(s), Some(i));
                    assert_eq!(&unrank(i, pop, n).unwrap(), s);
                }
            }
        }
    }

    #[test]
    fn ordering_is_strictly_descending() {
        let s = enumerate_states(7, 4).unwrap();
        assert!(s.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn neighbors_of_two_type_interior() {
        assert_eq!(st(&[1, 1]).neighbors(), vec![st(&[2, 0]), st(&[0, 2])]);
    }

    #[test]
    fn neighbors_of_three_type_state() {
        let mut got = st(&[2, 0, 1]).neighbors();
        got.sort();
        let mut want = vec![st(&[3, 0, 0]), st(&[1, 1, 1]), st(&[2, 1, 0]), st(&[1, 0, 2])];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn neighbors_of_corner() {
        let got = st(&[5, 0, 0, 0]).neighbors();
        assert_eq!(got.len(), 3);
        assert!(got.iter().all(|s| s.counts()[0] == 4));
    }

    #[test]
    fn neighbor_indices_match_neighbors() {
        let space = StateSpace::new(6, 3).unwrap();
        for i in 0..space.len() {
            let mut by_state: Vec<usize> = space
                .state(i)
                .neighbors()
                .iter()
                .map(|s| space.index_of(s).unwrap())
                .collect();
            by_state.sort_unstable();
            assert_eq!(space.neighbor_indices(i), by_state);
        }
    }

    #[test]
    fn divisors() {
        assert_eq!(StateCountDivisor::StarsBars.value(60, 3), 1891.0);
        assert_eq!(StateCountDivisor::Paper.value(60, 3), binomial(63, 3) as f64);
    }
}
