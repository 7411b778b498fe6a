//! Inconsistency and incompleteness indices.
//!
//! The four incompleteness indices depend only on which comparisons are
//! missing, never on the values of the known ones. All of them are 0 for a
//! complete matrix and grow as comparisons are removed; the alpha- and
//! beta-index reach 1 for a matrix with no off-diagonal comparisons at all,
//! the tree index reaches 1 as soon as the comparison graph is disconnected.
//!
//! Per-row missing counts are sorted before summation so every index is
//! bit-identical under relabelling of the alternatives.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::matrix::PcMatrix;
use crate::priority::EigenResult;
use crate::spanning::spanning_tree_count;

pub const DEFAULT_ALPHA: f64 = 1.5;
pub const DEFAULT_BETA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndexError {
    #[error("consistency index requires a complete matrix ({missing} comparisons missing)")]
    IncompleteMatrix { missing: usize },
    #[error("tree index is undefined for matrices of order 2")]
    UndefinedForOrderTwo,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Saaty's consistency index `(lambda_max - n) / (n - 1)`.
pub fn consistency_index(c: &PcMatrix, eig: &EigenResult) -> Result<f64, IndexError> {
    if !c.is_complete() {
        return Err(IndexError::IncompleteMatrix {
            missing: c.missing_count(),
        });
    }
    let n = c.order() as f64;
    Ok((eig.lambda_max - n) / (n - 1.0))
}

fn sorted_missing(c: &PcMatrix) -> Vec<usize> {
    let mut m = c.missing_per_row();
    m.sort_unstable();
    m
}

/// Alpha-index: `sum_i m_i^alpha / (n (n-1)^alpha)` where `m_i` is the number
/// of missing comparisons in row `i`.
///
/// Intended for `alpha > 1`; `alpha = 1` reduces it to the plain fraction of
/// missing comparisons.
pub fn alpha_index(c: &PcMatrix, alpha: f64) -> f64 {
    let n = c.order();
    let s_alpha: f64 = sorted_missing(c).iter().map(|&m| (m as f64).powf(alpha)).sum();
    s_alpha / (n as f64 * ((n - 1) as f64).powf(alpha))
}

/// Upper bound on the alpha-index of any rankable matrix of order `n`,
/// attained by the star pattern. Exceeding it rules out a ranking; staying
/// below it does not guarantee one.
pub fn alpha_rankability_bound(n: usize, alpha: f64) -> f64 {
    let n = n as f64;
    (n - 1.0) / n * ((n - 2.0) / (n - 1.0)).powf(alpha)
}

/// Beta-index: `(max_i m_i)^beta * sum_i m_i / (n (n-1)^(1+beta))`.
pub fn beta_index(c: &PcMatrix, beta: f64) -> f64 {
    let n = c.order();
    let missing = sorted_missing(c);
    let worst = missing.last().copied().unwrap_or(0) as f64;
    let total = missing.iter().sum::<usize>() as f64;
    worst.powf(beta) * total / (n as f64 * ((n - 1) as f64).powf(1.0 + beta))
}

/// Number of spanning trees of the comparison graph.
pub fn spanning_trees(c: &PcMatrix) -> BigInt {
    spanning_tree_count(&c.graph())
}

/// Tree index `1 - NT^(1/(n-2)) / n`.
pub fn tree_index(c: &PcMatrix) -> Result<f64, IndexError> {
    tree_index_from_count(c.order(), &spanning_trees(c))
}

/// Tree index for a known spanning-tree count.
pub fn tree_index_from_count(n: usize, trees: &BigInt) -> Result<f64, IndexError> {
    if n == 2 {
        return Err(IndexError::UndefinedForOrderTwo);
    }
    if n < 2 {
        return Err(IndexError::InvalidParameter(format!("order {n} < 2")));
    }
    if trees.is_zero() {
        return Ok(1.0);
    }
    // Cayley: only the complete graph has n^(n-2) trees.
    if *trees == BigInt::from(n).pow(n as u32 - 2) {
        return Ok(0.0);
    }
    let nt = trees.to_f64().unwrap_or(f64::INFINITY);
    let root = nt.ln() / (n - 2) as f64;
    Ok((1.0 - root.exp() / n as f64).clamp(0.0, 1.0))
}

/// Compound alpha,beta-index, the product of the two.
pub fn compound_index(c: &PcMatrix, alpha: f64, beta: f64) -> f64 {
    alpha_index(c, alpha) * beta_index(c, beta)
}

pub fn check_parameters(alpha: f64, beta: f64) -> Result<(), IndexError> {
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(IndexError::InvalidParameter(format!(
            "alpha must be >= 1, got {alpha}"
        )));
    }
    if !(beta.is_finite() && beta >= 1.0) {
        return Err(IndexError::InvalidParameter(format!(
            "beta must be >= 1, got {beta}"
        )));
    }
    Ok(())
}

/// Every index of one matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexReport {
    pub n: usize,
    pub missing: usize,
    /// `None` for incomplete matrices.
    pub ci: Option<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub iid_alpha: f64,
    pub ii_beta: f64,
    /// `None` when `n = 2`.
    pub tree_index: Option<f64>,
    pub compound: f64,
    pub spanning_trees: BigInt,
}

/// Computes all indices. The CI is filled in only when `eig` is given and the
/// matrix is complete.
pub fn report(
    c: &PcMatrix,
    alpha: f64,
    beta: f64,
    eig: Option<&EigenResult>,
) -> Result<IndexReport, IndexError> {
    check_parameters(alpha, beta)?;
    let ci = match eig {
        Some(e) if c.is_complete() => Some(consistency_index(c, e)?),
        _ => None,
    };
    let trees = spanning_trees(c);
    let tree_index = match tree_index_from_count(c.order(), &trees) {
        Ok(t) => Some(t),
        Err(IndexError::UndefinedForOrderTwo) => None,
        Err(e) => return Err(e),
    };
    let iid_alpha = alpha_index(c, alpha);
    let ii_beta = beta_index(c, beta);
    Ok(IndexReport {
        n: c.order(),
        missing: c.missing_count(),
        ci,
        alpha,
        beta,
        iid_alpha,
        ii_beta,
        tree_index,
        compound: iid_alpha * ii_beta,
        spanning_trees: trees,
    })
}
