//! Sparse row-stochastic transition kernels.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::process::{reproduction_probabilities_with, ProcessSpec};
use crate::state::{moves, rank_counts, StateSpace};

/// Tolerance on row sums of a stochastic matrix.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Transition probabilities stored row-wise (CSR), columns sorted ascending.
///
/// Kernels built from a [`ProcessSpec`] carry their [`StateSpace`]; kernels
/// built from raw rows (toy chains) do not.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    space: Option<StateSpace>,
    irreducible: bool,
}

impl TransitionKernel {
    /// Builds a kernel from sparse rows of `(target, probability)`.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        Self::assemble(rows, None)
    }

    pub fn from_dense(matrix: &[Vec<f64>]) -> Result<Self> {
        let n = matrix.len();
        let rows = matrix
            .iter()
            .map(|row| {
                if row.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: row.len(),
                    });
                }
                Ok(row.iter().copied().enumerate().filter(|(_, p)| *p != 0.0).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }

    fn assemble(rows: Vec<Vec<(usize, f64)>>, space: Option<StateSpace>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidArgument("kernel needs at least one state".into()));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            let mut sum = 0.0;
            for (k, &(j, p)) in row.iter().enumerate() {
                if j >= n {
                    return Err(Error::InvalidArgument(format!("row {i} targets state {j} of {n}")));
                }
                if k > 0 && row[k - 1].0 == j {
                    return Err(Error::InvalidArgument(format!("row {i} lists target {j} twice")));
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidArgument(format!(
                        "transition probability {p} in row {i} is outside [0, 1]"
                    )));
                }
                sum += p;
                cols.push(j);
                vals.push(p);
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidArgument(format!("row {i} sums to {sum}, not 1")));
            }
            row_ptr.push(cols.len());
        }
        let mut kernel = TransitionKernel {
            row_ptr,
            cols,
            vals,
            space,
            irreducible: false,
        };
        kernel.irreducible = kernel.strongly_connected();
        Ok(kernel)
    }

    pub fn len(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn space(&self) -> Option<&StateSpace> {
        self.space.as_ref()
    }

    /// Whether the directed graph of positive transitions is strongly connected.
    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    /// Targets and probabilities of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[range.clone()], &self.vals[range])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| {
                let mut row = vec![0.0; self.len()];
                let (cols, vals) = self.row(i);
                for (&j, &p) in cols.iter().zip(vals) {
                    row[j] = p;
                }
                row
            })
            .collect()
    }

    /// `out = s T`, accumulated row by row in index order.
    pub fn left_multiply(&self, s: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (i, &si) in s.iter().enumerate() {
            if si == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&j, &p) in cols.iter().zip(vals) {
                out[j] += si * p;
            }
        }
    }

    /// Largest `i - j` and `j - i` over stored entries `(i, j)`.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut lower = 0;
        let mut upper = 0;
        for i in 0..self.len() {
            let (cols, _) = self.row(i);
            if let (Some(&first), Some(&last)) = (cols.first(), cols.last()) {
                lower = lower.max(i.saturating_sub(first));
                upper = upper.max(last.saturating_sub(i));
            }
        }
        (lower, upper)
    }

    /// Undirected adjacency: `j` is adjacent to `i` when either stores an
    /// entry for the other, excluding self-loops.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        if let Some(space) = &self.space {
            return (0..self.len()).map(|i| space.neighbor_indices(i)).collect();
        }
        let mut adj = vec![Vec::new(); self.len()];
        for i in 0..self.len() {
            let (cols, vals) = self.row(i);
            for (&j, &p) in cols.iter().zip(vals) {
                if j != i && p > 0.0 {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    fn strongly_connected(&self) -> bool {
        let n = self.len();
        let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            let (cols, vals) = self.row(i);
            for (&j, &p) in cols.iter().zip(vals) {
                if p > 0.0 && j != i {
                    reverse[j].push(i);
                }
            }
        }
        let forward = |i: usize| -> Vec<usize> {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).filter(|(_, &p)| p > 0.0).map(|(&j, _)| j).collect()
        };
        reachable_all(n, forward) && reachable_all(n, |i| reverse[i].clone())
    }
}

fn reachable_all(n: usize, next: impl Fn(usize) -> Vec<usize>) -> bool {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for j in next(i) {
            if !seen[j] {
                seen[j] = true;
                count += 1;
                queue.push_back(j);
            }
        }
    }
    count == n
}

/// Builds the Moran-with-mutation kernel: `T(a, a + e_alpha - e_beta) =
/// p_alpha(x) x_beta` for `alpha != beta`, with the remaining mass on the
/// self-loop.
pub fn build_kernel(spec: &ProcessSpec) -> Result<TransitionKernel> {
    spec.validate()?;
    let n = spec.num_types();
    let mutation = spec.mutation.expand(n)?;
    let space = StateSpace::new(spec.population, n)?;
    let pop = spec.population as f64;
    let mut rows = Vec::with_capacity(space.len());
    let mut buf = vec![0u32; n];
    for (i, state) in space.states().iter().enumerate() {
        let p = reproduction_probabilities_with(state, spec, &mutation)?;
        let counts = state.counts();
        let mut row = Vec::with_capacity(n * (n - 1) + 1);
        let mut off_diagonal = 0.0;
        for (alpha, beta) in moves(counts) {
            buf.copy_from_slice(counts);
            buf[alpha] += 1;
            buf[beta] -= 1;
            let prob = p[alpha] * counts[beta] as f64 / pop;
            off_diagonal += prob;
            row.push((rank_counts(&buf), prob));
        }
        row.push((i, (1.0 - off_diagonal).max(0.0)));
        rows.push(row);
    }
    TransitionKernel::assemble(rows, Some(space))
}
