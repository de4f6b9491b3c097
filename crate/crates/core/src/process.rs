//! Process parameterization and fitness-proportionate reproduction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::GameMatrix;
use crate::state::PopulationState;

const ROW_SUM_TOL: f64 = 1e-12;

/// Mutation probabilities: `M[k][i]` is the chance that an offspring of a
/// type-`k` parent is realized as type `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationSpec {
    /// `M_ii = 1 - mu`, `M_ij = mu / (n - 1)`.
    Uniform(f64),
    Matrix(Vec<Vec<f64>>),
}

impl MutationSpec {
    pub fn uniform(mu: f64) -> Self {
        MutationSpec::Uniform(mu)
    }

    /// Expands to a dense row-major `n x n` matrix and validates it.
    pub fn expand(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            MutationSpec::Uniform(mu) => {
                if !(0.0..=1.0).contains(mu) {
                    return Err(Error::InvalidSpec(format!("mutation rate {mu} is outside [0, 1]")));
                }
                let off = mu / (n as f64 - 1.0);
                let mut m = vec![off; n * n];
                for i in 0..n {
                    m[i * n + i] = 1.0 - mu;
                }
                Ok(m)
            }
            MutationSpec::Matrix(rows) => {
                if rows.len() != n {
                    return Err(Error::InvalidSpec(format!(
                        "mutation matrix has {} rows, game has {n} types",
                        rows.len()
                    )));
                }
                let mut m = Vec::with_capacity(n * n);
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::InvalidSpec(format!(
                            "mutation matrix row {i} has {} entries, expected {n}",
                            row.len()
                        )));
                    }
                    if let Some(x) = row.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                        return Err(Error::InvalidSpec(format!(
                            "mutation matrix row {i} has entry {x} outside [0, 1]"
                        )));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > ROW_SUM_TOL {
                        return Err(Error::InvalidSpec(format!(
                            "mutation matrix row {i} sums to {sum}, not 1"
                        )));
                    }
                    m.extend_from_slice(row);
                }
                Ok(m)
            }
        }
    }

    /// The uniform rate, when this is a uniform specification.
    pub fn rate(&self) -> Option<f64> {
        match self {
            MutationSpec::Uniform(mu) => Some(*mu),
            MutationSpec::Matrix(_) => None,
        }
    }

    pub fn is_zero(&self, n: usize) -> bool {
        match self.expand(n) {
            Ok(m) => (0..n).all(|i| m[i * n + i] == 1.0),
            Err(_) => false,
        }
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        match self {
            MutationSpec::Uniform(mu) => MutationSpec::Uniform(*mu),
            MutationSpec::Matrix(rows) => {
                let n = rows.len();
                let mut out = vec![vec![0.0; n]; n];
                for i in 0..n {
                    for j in 0..n {
                        out[perm[i]][perm[j]] = rows[i][j];
                    }
                }
                MutationSpec::Matrix(out)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionKind {
    /// `phi_i = x_i f_i`
    Linear,
    /// `phi_i = x_i exp(beta f_i)`
    Fermi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionSpec {
    pub kind: SelectionKind,
    /// Strength of selection; ignored by linear selection.
    pub beta: f64,
}

impl SelectionSpec {
    pub fn linear() -> Self {
        SelectionSpec {
            kind: SelectionKind::Linear,
            beta: 0.0,
        }
    }

    pub fn fermi(beta: f64) -> Self {
        SelectionSpec {
            kind: SelectionKind::Fermi,
            beta,
        }
    }
}

/// Full parameterization of a Moran process with mutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    #[serde(rename = "N")]
    pub population: u32,
    pub game: GameMatrix,
    pub mutation: MutationSpec,
    pub selection: SelectionSpec,
}

impl ProcessSpec {
    pub fn new(population: u32, game: GameMatrix, mutation: MutationSpec, selection: SelectionSpec) -> Result<Self> {
        let spec = ProcessSpec {
            population,
            game,
            mutation,
            selection,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn num_types(&self) -> usize {
        self.game.size()
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 1 {
            return Err(Error::InvalidSpec("N must be at least 1".into()));
        }
        self.mutation.expand(self.num_types())?;
        let beta = self.selection.beta;
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidSpec(format!("beta must be a non-negative number, got {beta}")));
        }
        Ok(())
    }

    pub fn with_population(&self, population: u32) -> Self {
        ProcessSpec {
            population,
            ..self.clone()
        }
    }

    pub fn with_mutation(&self, mutation: MutationSpec) -> Self {
        ProcessSpec {
            mutation,
            ..self.clone()
        }
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        ProcessSpec {
            selection: SelectionSpec {
                kind: self.selection.kind,
                beta,
            },
            ..self.clone()
        }
    }

    /// Relabels types: type `i` becomes `perm[i]` in game and mutation matrices.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        ProcessSpec {
            population: self.population,
            game: self.game.permuted(perm),
            mutation: self.mutation.permuted(perm),
            selection: self.selection,
        }
    }
}

/// Reproduction weights `phi(x)` at a state.
pub fn reproduction_weights(state: &PopulationState, spec: &ProcessSpec) -> Result<Vec<f64>> {
    let n = spec.num_types();
    if state.num_types() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: state.num_types(),
        });
    }
    let x = state.frequencies();
    let fitness = spec.game.fitness(&x);
    let weights: Vec<f64> = match spec.selection.kind {
        SelectionKind::Linear => {
            let w: Vec<f64> = x.iter().zip(&fitness).map(|(xi, fi)| xi * fi).collect();
            if let Some((index, &weight)) = w.iter().enumerate().find(|(_, &w)| w < 0.0) {
                return Err(Error::NegativeFitness {
                    state: state.counts().to_vec(),
                    index,
                    weight,
                });
            }
            w
        }
        SelectionKind::Fermi => {
            let beta = spec.selection.beta;
            // Shift by the largest exponent among present types; the common
            // factor cancels in the normalized probabilities.
            let shift = x
                .iter()
                .zip(&fitness)
                .filter(|(xi, _)| **xi > 0.0)
                .map(|(_, fi)| beta * fi)
                .fold(f64::NEG_INFINITY, f64::max);
            x.iter()
                .zip(&fitness)
                .map(|(xi, fi)| if *xi > 0.0 { xi * (beta * fi - shift).exp() } else { 0.0 })
                .collect()
        }
    };
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::DegenerateState {
            state: state.counts().to_vec(),
        });
    }
    Ok(weights)
}

/// Probability `p_i` that the next offspring is of type `i`, accounting for
/// fitness-proportionate parent choice followed by mutation.
pub fn reproduction_probabilities(state: &PopulationState, spec: &ProcessSpec) -> Result<Vec<f64>> {
    let n = spec.num_types();
    let mutation = spec.mutation.expand(n)?;
    reproduction_probabilities_with(state, spec, &mutation)
}

pub(crate) fn reproduction_probabilities_with(
    state: &PopulationState,
    spec: &ProcessSpec,
    mutation: &[f64],
) -> Result<Vec<f64>> {
    let n = spec.num_types();
    let weights = reproduction_weights(state, spec)?;
    let total: f64 = weights.iter().sum();
    let mut p = vec![0.0; n];
    for (k, w) in weights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        for (i, pi) in p.iter_mut().enumerate() {
            *pi += w * mutation[k * n + i];
        }
    }
    for pi in &mut p {
        *pi /= total;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(game: GameMatrix, mu: f64, sel: SelectionSpec, pop: u32) -> ProcessSpec {
        ProcessSpec::new(pop, game, MutationSpec::uniform(mu), sel).unwrap()
    }

    fn st(c: &[u32]) -> PopulationState {
        PopulationState::new(c.to_vec()).unwrap()
    }

    #[test]
    fn neutral_symmetric_state_without_mutation() {
        let s = spec(GameMatrix::neutral(2), 0.0, SelectionSpec::linear(), 2);
        let p = reproduction_probabilities(&st(&[1, 1]), &s).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn neutral_symmetric_state_with_mutation() {
        let s = spec(GameMatrix::neutral(2), 0.5, SelectionSpec::linear(), 2);
        let p = reproduction_probabilities(&st(&[1, 1]), &s).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn monomorphic_state_gives_mutation_row() {
        for game in [GameMatrix::hawk_dove(), GameMatrix::neutral(2), GameMatrix::r_game(3.0).unwrap()] {
            for sel in [SelectionSpec::linear(), SelectionSpec::fermi(2.0)] {
                let s = spec(game.clone(), 0.1, sel, 2);
                let p = reproduction_probabilities(&st(&[2, 0]), &s).unwrap();
                assert_abs_diff_eq!(p[0], 0.9, epsilon = 1e-15);
                assert_abs_diff_eq!(p[1], 0.1, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn uniform_mutation_expansion() {
        let m = MutationSpec::uniform(0.3).expand(3).unwrap();
        assert_eq!(m, vec![0.7, 0.15, 0.15, 0.15, 0.7, 0.15, 0.15, 0.15, 0.7]);
        assert!(MutationSpec::uniform(1.5).expand(3).is_err());
    }

    #[test]
    fn explicit_mutation_matrix_validation() {
        let ok = MutationSpec::Matrix(vec![vec![0.9, 0.1], vec![0.2, 0.8]]);
        assert!(ok.expand(2).is_ok());
        let bad_sum = MutationSpec::Matrix(vec![vec![0.9, 0.2], vec![0.2, 0.8]]);
        assert!(bad_sum.expand(2).is_err());
        let bad_dim = MutationSpec::Matrix(vec![vec![1.0, 0.0]]);
        assert!(bad_dim.expand(2).is_err());
    }

    #[test]
    fn linear_selection_rejects_negative_fitness() {
        let s = spec(GameMatrix::rock_paper_scissors(), 0.1, SelectionSpec::linear(), 3);
        let err = reproduction_probabilities(&st(&[2, 1, 0]), &s).unwrap_err();
        assert!(matches!(err, Error::NegativeFitness { .. }));
    }

    #[test]
    fn linear_selection_zero_weights_is_degenerate() {
        let s = spec(GameMatrix::three_type(), 0.1, SelectionSpec::linear(), 3);
        let err = reproduction_probabilities(&st(&[3, 0, 0]), &s).unwrap_err();
        assert!(matches!(err, Error::DegenerateState { .. }));
    }

    #[test]
    fn fermi_survives_huge_exponents() {
        let s = spec(GameMatrix::hawk_dove(), 0.01, SelectionSpec::fermi(2000.0), 10);
        let p = reproduction_probabilities(&st(&[3, 7]), &s).unwrap();
        assert!(p.iter().all(|x| x.is_finite()));
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fermi_matches_unshifted_formula() {
        let s = spec(GameMatrix::rock_paper_scissors(), 0.2, SelectionSpec::fermi(1.3), 6);
        let a = st(&[1, 2, 3]);
        let x = a.frequencies();
        let f = s.game.fitness(&x);
        let phi: Vec<f64> = x.iter().zip(&f).map(|(xi, fi)| xi * (1.3 * fi).exp()).collect();
        let m = s.mutation.expand(3).unwrap();
        let total: f64 = phi.iter().sum();
        let p = reproduction_probabilities(&a, &s).unwrap();
        for i in 0..3 {
            let want: f64 = (0..3).map(|k| phi[k] * m[k * 3 + i]).sum::<f64>() / total;
            assert_abs_diff_eq!(p[i], want, epsilon = 1e-14);
        }
    }
}
