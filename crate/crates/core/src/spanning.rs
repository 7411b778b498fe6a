//! Exact spanning-tree counts via the matrix-tree theorem.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::graph::{ComparisonGraph, Laplacian};

/// Determinant of an integer matrix by fraction-free (Bareiss) elimination.
///
/// Every intermediate value is a minor of the input, so all divisions are
/// exact and no rational arithmetic is needed.
pub fn bareiss_determinant(rows: &[Vec<i64>]) -> BigInt {
    let n = rows.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut m: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    if sign < 0 {
        -det
    } else {
        det
    }
}

impl Laplacian {
    /// Cofactor obtained by deleting row and column `skip`.
    pub fn cofactor(&self, skip: usize) -> BigInt {
        bareiss_determinant(&self.minor(skip))
    }
}

/// Number of spanning trees of `g`, the `(1,1)` cofactor of its Laplacian.
pub fn spanning_tree_count(g: &ComparisonGraph) -> BigInt {
    if g.vertex_count() <= 1 {
        return BigInt::one();
    }
    let count = g.laplacian().cofactor(0);
    debug_assert!(!count.is_negative());
    count
}
