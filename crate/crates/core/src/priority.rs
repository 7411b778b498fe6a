//! Priority vectors from comparison matrices.
//!
//! Complete matrices are ranked with the eigenvalue method ([`evm`]) or the
//! geometric mean method ([`gmm`]); incomplete but irreducible matrices with
//! Harker's auxiliary matrix ([`harker_rank`]).

use thiserror::Error;

use crate::matrix::PcMatrix;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PriorityError {
    #[error("matrix is not irreducible; connected components: {}", format_components(.components))]
    NotIrreducible { components: Vec<Vec<usize>> },
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("method requires a complete matrix, {missing} comparisons are missing")]
    IncompleteMatrix { missing: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

fn format_components(components: &[Vec<usize>]) -> String {
    components
        .iter()
        .map(|c| {
            let names: Vec<String> = c.iter().map(|i| format!("a{}", i + 1)).collect();
            format!("{{{}}}", names.join(", "))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Dense square matrix of reals, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    /// # Panics
    /// If the rows do not form a square matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            assert_eq!(row.len(), n, "matrix must be square");
            data.extend_from_slice(row);
        }
        Self { n, data }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[_]>::to_vec).collect()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }

    /// Strong connectivity of the directed graph with an arc `i -> j`
    /// wherever `a_ij > 0`, `i != j`.
    #[allow(clippy::needless_range_loop)]
    pub fn is_irreducible(&self) -> bool {
        let reaches_all = |transpose: bool| {
            let mut seen = vec![false; self.n];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                for u in 0..self.n {
                    let a = if transpose { self.get(u, v) } else { self.get(v, u) };
                    if u != v && a > 0.0 && !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            seen.iter().all(|&s| s)
        };
        self.n <= 1 || (reaches_all(false) && reaches_all(true))
    }
}

impl PcMatrix {
    /// Dense copy of a complete matrix; `None` if any comparison is missing.
    pub fn to_dense(&self) -> Option<SquareMatrix> {
        let n = self.order();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(self.get(i, j)?);
            }
        }
        Some(SquareMatrix { n, data })
    }
}

/// Positive weights summing to one, indexed by alternative.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityVector(Vec<f64>);

impl PriorityVector {
    /// Normalizes `weights` to sum 1. All weights must be positive and finite.
    pub fn new(weights: Vec<f64>) -> Result<Self, PriorityError> {
        if weights.is_empty() {
            return Err(PriorityError::InvalidInput("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(PriorityError::InvalidInput(format!(
                "weight {w} is not positive and finite"
            )));
        }
        let total: f64 = weights.iter().sum();
        Ok(Self(weights.into_iter().map(|w| w / total).collect()))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }
}

/// Perron eigenpair of a nonnegative irreducible matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub lambda_max: f64,
    pub vector: PriorityVector,
    pub iterations: usize,
    /// `max_i |(A v)_i - lambda v_i|` for the returned (L1-normalized) vector.
    pub residual: f64,
}

/// Principal eigenpair by power iteration on `A + n I`.
///
/// The shift makes the iteration matrix primitive for any irreducible `A`.
/// Starting from the uniform vector, each step computes `y = A v`, the
/// Rayleigh quotient `lambda = v.y / v.v` and the residual
/// `max |y - lambda v|`; it stops once the residual is at most
/// `tol * max |v|`. The vector is normalized to sum 1.
pub fn evm(a: &SquareMatrix, tol: f64, max_iter: usize) -> Result<EigenResult, PriorityError> {
    let n = a.order();
    if n == 0 {
        return Err(PriorityError::InvalidInput("empty matrix".into()));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(PriorityError::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    if a.data.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(PriorityError::InvalidInput(
            "matrix entries must be nonnegative and finite".into(),
        ));
    }
    if !a.is_irreducible() {
        return Err(PriorityError::NotIrreducible {
            components: directed_reach_classes(a),
        });
    }

    let shift = n as f64;
    let mut v = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for iteration in 0..=max_iter {
        let y = a.mul_vec(&v);
        let vy: f64 = v.iter().zip(&y).map(|(p, q)| p * q).sum();
        let vv: f64 = v.iter().map(|p| p * p).sum();
        let lambda = vy / vv;
        residual = y
            .iter()
            .zip(&v)
            .map(|(yi, vi)| (yi - lambda * vi).abs())
            .fold(0.0, f64::max);
        let v_max = v.iter().copied().fold(0.0, f64::max);
        if residual <= tol * v_max {
            return Ok(EigenResult {
                lambda_max: lambda,
                vector: PriorityVector::new(v)?,
                iterations: iteration,
                residual,
            });
        }
        if iteration == max_iter {
            break;
        }
        let mut next: Vec<f64> = y.iter().zip(&v).map(|(yi, vi)| yi + shift * vi).collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        v = next;
    }
    Err(PriorityError::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Groups of vertices for the error report of a reducible matrix: the
/// components of the symmetrized nonzero pattern when that is disconnected,
/// otherwise the set reachable from vertex 0 and the rest.
#[allow(clippy::needless_range_loop)]
fn directed_reach_classes(a: &SquareMatrix) -> Vec<Vec<usize>> {
    let n = a.order();
    let edges = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && (a.get(i, j) > 0.0 || a.get(j, i) > 0.0));
    let g = crate::graph::ComparisonGraph::from_edges(n, edges);
    let comps = g.components();
    if comps.len() > 1 {
        return comps;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for u in 0..n {
            if u != v && a.get(v, u) > 0.0 && !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    let (reach, rest): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| seen[i]);
    vec![reach, rest]
}

/// Row geometric means, normalized. Requires a complete matrix.
pub fn gmm(c: &PcMatrix) -> Result<PriorityVector, PriorityError> {
    if !c.is_complete() {
        return Err(PriorityError::IncompleteMatrix {
            missing: c.missing_count(),
        });
    }
    let n = c.order();
    let exponent = 1.0 / n as f64;
    let means = (0..n)
        .map(|i| {
            let product: f64 = (0..n).filter_map(|j| c.get(i, j)).product();
            product.powf(exponent)
        })
        .collect();
    PriorityVector::new(means)
}

/// Harker's auxiliary matrix `B + I`: missing cells become 0 and each
/// diagonal entry becomes 1 plus the number of missing cells in its row.
pub fn harker_matrix(c: &PcMatrix) -> SquareMatrix {
    let n = c.order();
    let missing = c.missing_per_row();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = if i == j {
                1.0 + missing[i] as f64
            } else {
                c.get(i, j).unwrap_or(0.0)
            };
        }
    }
    SquareMatrix { n, data }
}

/// Eigenvalue method applied to [`harker_matrix`]. For complete matrices this
/// is exactly [`evm`] on `c`.
pub fn harker_rank(c: &PcMatrix, tol: f64, max_iter: usize) -> Result<EigenResult, PriorityError> {
    let g = c.graph();
    if !g.is_connected() {
        return Err(PriorityError::NotIrreducible {
            components: g.components(),
        });
    }
    evm(&harker_matrix(c), tol, max_iter)
}

/// [`evm`] for a complete comparison matrix.
pub fn evm_pc(c: &PcMatrix, tol: f64, max_iter: usize) -> Result<EigenResult, PriorityError> {
    let dense = c.to_dense().ok_or(PriorityError::IncompleteMatrix {
        missing: c.missing_count(),
    })?;
    evm(&dense, tol, max_iter)
}
