use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square payoff matrix defining the fitness landscape `f(x) = G x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct GameMatrix {
    size: usize,
    entries: Vec<f64>,
}

impl GameMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size < 2 {
            return Err(Error::InvalidSpec(format!(
                "game matrix must be at least 2x2, got {size} rows"
            )));
        }
        let mut entries = Vec::with_capacity(size * size);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != size {
                return Err(Error::InvalidSpec(format!(
                    "game matrix is not square: row {i} has {} entries, expected {size}",
                    row.len()
                )));
            }
            if let Some(x) = row.iter().find(|x| !x.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "game matrix row {i} has non-finite entry {x}"
                )));
            }
            entries.extend(row);
        }
        Ok(GameMatrix { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.size).map(|r| r.to_vec()).collect()
    }

    /// Fitness vector `G x`.
    pub fn fitness(&self, x: &[f64]) -> Vec<f64> {
        self.entries
            .chunks(self.size)
            .map(|row| row.iter().zip(x).map(|(g, xi)| g * xi).sum())
            .collect()
    }

    /// All-ones matrix: every type has the same fitness.
    pub fn neutral(n: usize) -> Self {
        GameMatrix {
            size: n,
            entries: vec![1.0; n * n],
        }
    }

    pub fn hawk_dove() -> Self {
        GameMatrix {
            size: 2,
            entries: vec![1.0, 2.0, 2.0, 1.0],
        }
    }

    /// Three-type landscape with zero diagonal and unit off-diagonal payoffs.
    pub fn three_type() -> Self {
        GameMatrix {
            size: 3,
            entries: vec![0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0],
        }
    }

    pub fn rock_paper_scissors() -> Self {
        GameMatrix {
            size: 3,
            entries: vec![0.0, 1.0, -1.0, -1.0, 0.0, 1.0, 1.0, -1.0, 0.0],
        }
    }

    /// Constant-fitness game `[[r, r], [1, 1]]`: type A has relative fitness `r`.
    pub fn r_game(r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidSpec(format!("r-game needs r > 0, got {r}")));
        }
        Ok(GameMatrix {
            size: 2,
            entries: vec![r, r, 1.0, 1.0],
        })
    }

    /// Parses a preset name: `hawk-dove`, `threetype`, `rps`, `r-game:<r>` or
    /// `neutral:<n>`.
    pub fn preset(name: &str) -> Result<Self> {
        let name = name.trim();
        match name {
            "hawk-dove" => Ok(Self::hawk_dove()),
            "threetype" => Ok(Self::three_type()),
            "rps" => Ok(Self::rock_paper_scissors()),
            _ => {
                if let Some(r) = name.strip_prefix("r-game:") {
                    let r: f64 = r
                        .trim()
                        .parse()
                        .map_err(|_| Error::InvalidSpec(format!("bad r-game parameter '{r}'")))?;
                    Self::r_game(r)
                } else if let Some(n) = name.strip_prefix("neutral:") {
                    let n: usize = n
                        .trim()
                        .parse()
                        .map_err(|_| Error::InvalidSpec(format!("bad neutral size '{n}'")))?;
                    if n < 2 {
                        return Err(Error::InvalidSpec("neutral game needs at least 2 types".into()));
                    }
                    Ok(Self::neutral(n))
                } else {
                    Err(Error::InvalidSpec(format!("unknown game preset '{name}'")))
                }
            }
        }
    }

    /// Simultaneously permutes rows and columns: type `i` becomes type `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.size;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[perm[i] * n + perm[j]] = self.get(i, j);
            }
        }
        GameMatrix { size: n, entries }
    }

    /// Adds `c` to every payoff.
    pub fn shifted(&self, c: f64) -> Self {
        GameMatrix {
            size: self.size,
            entries: self.entries.iter().map(|x| x + c).collect(),
        }
    }
}

impl TryFrom<Vec<Vec<f64>>> for GameMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        GameMatrix::new(rows)
    }
}

impl From<GameMatrix> for Vec<Vec<f64>> {
    fn from(g: GameMatrix) -> Self {
        g.rows()
    }
}

impl fmt::Display for GameMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.entries.chunks(self.size) {
            writeln!(f, "{row:?}")?;
        }
        Ok(())
    }
}
