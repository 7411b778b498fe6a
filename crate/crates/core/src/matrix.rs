//! Pairwise comparison matrices with explicitly missing judgments.
//!
//! A [`PcMatrix`] stores every cell as `Option<f64>`: `Some(v)` is a known
//! comparison, `None` a missing one. Missing entries are never encoded as 0
//! or NaN; derived views such as Harker's auxiliary matrix are built on demand
//! elsewhere.

use std::fmt;

use thiserror::Error;

use crate::graph::ComparisonGraph;

/// Relative tolerance used by [`PcMatrix::from_grid`] when both `c_ij` and
/// `c_ji` are supplied.
pub const RECIPROCITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("row {row} has {len} cells, expected {expected}")]
    NonSquare {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("matrix order {n} is too small, at least 2 alternatives are required")]
    TooSmall { n: usize },
    #[error("diagonal cell ({index},{index}) must be 1, found {found}")]
    DiagonalNotOne { index: usize, found: String },
    #[error("cell ({row},{col}) must be positive and finite, found {value}")]
    NonPositiveEntry { row: usize, col: usize, value: f64 },
    #[error("cells ({row},{col}) = {upper} and ({col},{row}) = {lower} are not reciprocal")]
    ReciprocityViolation {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },
    #[error("alternative index {index} out of range for order {n}")]
    IndexOutOfRange { index: usize, n: usize },
}

/// Square reciprocal matrix of positive judgments, possibly incomplete.
///
/// Indices are zero-based throughout the API.
#[derive(Clone, PartialEq)]
pub struct PcMatrix {
    n: usize,
    cells: Vec<Option<f64>>,
}

impl PcMatrix {
    /// Validates a raw grid using the strict [`RECIPROCITY_TOLERANCE`].
    ///
    /// If only one of `(i,j)` / `(j,i)` is supplied the other is filled with
    /// the reciprocal. If both are supplied they must agree within the
    /// tolerance; the upper-triangle value then wins and the lower one is
    /// recomputed, so the stored matrix is exactly reciprocal.
    pub fn from_grid(grid: &[Vec<Option<f64>>]) -> Result<Self, MatrixError> {
        Self::from_grid_with(grid, |_, _, upper, lower| {
            reciprocal_within(upper, lower, RECIPROCITY_TOLERANCE)
        })
    }

    /// Like [`PcMatrix::from_grid`], with a caller-supplied reciprocity test
    /// `accept(i, j, upper, lower)` for pairs `i < j` where both cells are
    /// given.
    pub fn from_grid_with<F>(grid: &[Vec<Option<f64>>], accept: F) -> Result<Self, MatrixError>
    where
        F: Fn(usize, usize, f64, f64) -> bool,
    {
        let n = grid.len();
        for (row, cells) in grid.iter().enumerate() {
            if cells.len() != n {
                return Err(MatrixError::NonSquare {
                    row,
                    len: cells.len(),
                    expected: n,
                });
            }
        }
        if n < 2 {
            return Err(MatrixError::TooSmall { n });
        }

        for (i, row) in grid.iter().enumerate() {
            match row[i] {
                Some(1.0) => {}
                other => {
                    return Err(MatrixError::DiagonalNotOne {
                        index: i,
                        found: other.map_or_else(|| "?".to_string(), |v| v.to_string()),
                    })
                }
            }
            for (j, cell) in row.iter().enumerate() {
                if let Some(v) = *cell {
                    if !(v.is_finite() && v > 0.0) {
                        return Err(MatrixError::NonPositiveEntry {
                            row: i,
                            col: j,
                            value: v,
                        });
                    }
                }
            }
        }

        let mut cells = vec![None; n * n];
        for i in 0..n {
            cells[i * n + i] = Some(1.0);
            for j in (i + 1)..n {
                let upper = match (grid[i][j], grid[j][i]) {
                    (Some(u), Some(l)) => {
                        if !accept(i, j, u, l) {
                            return Err(MatrixError::ReciprocityViolation {
                                row: i,
                                col: j,
                                upper: u,
                                lower: l,
                            });
                        }
                        Some(u)
                    }
                    (Some(u), None) => Some(u),
                    (None, Some(l)) => Some(1.0 / l),
                    (None, None) => None,
                };
                cells[i * n + j] = upper;
                cells[j * n + i] = upper.map(|u| 1.0 / u);
            }
        }
        Ok(Self { n, cells })
    }

    /// Complete matrix built from the upper triangle `upper(i, j)`, `i < j`.
    pub fn from_upper<F>(n: usize, mut upper: F) -> Self
    where
        F: FnMut(usize, usize) -> f64,
    {
        let mut cells = vec![None; n * n];
        for i in 0..n {
            cells[i * n + i] = Some(1.0);
            for j in (i + 1)..n {
                let v = upper(i, j);
                debug_assert!(v.is_finite() && v > 0.0);
                cells[i * n + j] = Some(v);
                cells[j * n + i] = Some(1.0 / v);
            }
        }
        Self { n, cells }
    }

    /// Matrix of order `n` with every off-diagonal comparison missing.
    pub fn empty(n: usize) -> Self {
        let mut cells = vec![None; n * n];
        for i in 0..n {
            cells[i * n + i] = Some(1.0);
        }
        Self { n, cells }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// The cell `(i, j)`; `None` when the comparison is missing.
    ///
    /// # Panics
    /// If either index is out of range.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        assert!(i < self.n && j < self.n, "cell ({i},{j}) out of range");
        self.cells[i * self.n + j]
    }

    pub fn is_known(&self, i: usize, j: usize) -> bool {
        self.get(i, j).is_some()
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    /// Number of unordered pairs `{i, j}`, `i < j`, whose comparison is missing.
    pub fn missing_count(&self) -> usize {
        self.upper_pairs().filter(|&(i, j)| !self.is_known(i, j)).count()
    }

    /// Number of known off-diagonal comparisons in row `i`.
    pub fn outdeg(&self, i: usize) -> Result<usize, MatrixError> {
        if i >= self.n {
            return Err(MatrixError::IndexOutOfRange { index: i, n: self.n });
        }
        Ok((0..self.n).filter(|&j| j != i && self.is_known(i, j)).count())
    }

    /// Missing comparisons per row, `n - 1 - outdeg(i)`.
    pub fn missing_per_row(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| (0..self.n).filter(|&j| j != i && !self.is_known(i, j)).count())
            .collect()
    }

    pub fn graph(&self) -> ComparisonGraph {
        ComparisonGraph::from_matrix(self)
    }

    /// True iff every two alternatives are comparable at least indirectly.
    pub fn is_irreducible(&self) -> bool {
        self.graph().is_connected()
    }

    /// Copy of the matrix with the comparisons `pairs` (and their reciprocals)
    /// marked missing. Pairs may be given in either orientation; diagonal
    /// pairs are ignored.
    pub fn without<I>(&self, pairs: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut out = self.clone();
        for (i, j) in pairs {
            if i != j {
                out.cells[i * self.n + j] = None;
                out.cells[j * self.n + i] = None;
            }
        }
        out
    }

    /// Simultaneous row/column permutation: alternative `perm[i]` of the
    /// result is alternative `i` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let mut cells = vec![None; self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                cells[perm[i] * self.n + perm[j]] = self.cells[i * self.n + j];
            }
        }
        Self { n: self.n, cells }
    }

    /// Row-major copy of the cells.
    pub fn to_grid(&self) -> Vec<Vec<Option<f64>>> {
        self.cells.chunks(self.n).map(<[_]>::to_vec).collect()
    }

    /// Iterator over the upper-triangle pairs `(i, j)`, `i < j`, row-major.
    pub fn upper_pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n;
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
    }
}

impl fmt::Debug for PcMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "PcMatrix({}x{})", self.n, self.n)?;
        for row in self.cells.chunks(self.n) {
            let cells: Vec<String> = row
                .iter()
                .map(|c| c.map_or_else(|| "?".into(), |v| format!("{v:.4}")))
                .collect();
            writeln!(f, "  [{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// `upper * lower` equals 1 within relative tolerance `tol`.
pub fn reciprocal_within(upper: f64, lower: f64, tol: f64) -> bool {
    (upper * lower - 1.0).abs() <= tol
}

/// Largest number of comparisons that can be removed from a complete matrix of
/// order `n` while keeping it irreducible: `(n^2 - 3n + 2) / 2`.
pub fn max_removable(n: usize) -> usize {
    if n < 2 {
        0
    } else {
        (n - 1) * (n - 2) / 2
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::PcMatrix;

    pub fn example1_grid() -> Vec<Vec<Option<f64>>> {
        [
            [1.0, 1.0, 2.0, 0.5],
            [1.0, 1.0, 0.25, 8.0],
            [0.5, 4.0, 1.0, 1.0],
            [2.0, 0.125, 1.0, 1.0],
        ]
        .iter()
        .map(|r| r.iter().map(|&v| Some(v)).collect())
        .collect()
    }

    pub fn example1() -> PcMatrix {
        PcMatrix::from_grid(&example1_grid()).unwrap()
    }

    pub fn example2() -> PcMatrix {
        PcMatrix::from_grid(&[
            vec![Some(1.0), Some(3.0), None],
            vec![Some(1.0 / 3.0), Some(1.0), Some(3.0)],
            vec![None, Some(1.0 / 3.0), Some(1.0)],
        ])
        .unwrap()
    }

    /// Pattern matrix from 1-based upper-triangle missing pairs, known cells 1.
    pub fn pattern(n: usize, missing: &[(usize, usize)]) -> PcMatrix {
        PcMatrix::from_upper(n, |_, _| 1.0).without(missing.iter().map(|&(i, j)| (i - 1, j - 1)))
    }

    pub fn c1() -> PcMatrix {
        pattern(5, &[(1, 3), (1, 4), (1, 5)])
    }

    pub fn c2() -> PcMatrix {
        pattern(5, &[(1, 3), (1, 4), (2, 4)])
    }
}
