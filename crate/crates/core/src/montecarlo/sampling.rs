//! Random matrices, controlled disturbance and removal patterns.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::ComparisonGraph;
use crate::indices::consistency_index;
use crate::matrix::{max_removable, PcMatrix};
use crate::priority::{evm_pc, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Hidden weights are log-uniform on `[1, WEIGHT_RANGE]`.
pub const WEIGHT_RANGE: f64 = 9.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("cannot remove {k} comparisons from an order-{n} matrix and stay irreducible (max {max})")]
    KTooLarge { k: usize, n: usize, max: usize },
    #[error("pattern position {x} exceeds the {max} numbered comparisons of order {n}")]
    XTooLarge { x: usize, n: usize, max: usize },
    #[error("matrix must be complete")]
    IncompleteMatrix,
    #[error("calibration failed for CI target {target}: {reason}")]
    CalibrationFailed { target: f64, reason: String },
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with a tuple of coordinates into an independent seed.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` weights drawn log-uniformly from `[1, 9]`.
pub fn random_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let span = WEIGHT_RANGE.ln();
    (0..n).map(|_| (rng.random::<f64>() * span).exp()).collect()
}

/// Complete consistent matrix `c_ij = w_i / w_j` for hidden random weights.
pub fn random_consistent<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PcMatrix {
    let w = random_weights(n, rng);
    PcMatrix::from_upper(n, |i, j| w[i] / w[j])
}

/// One uniform draw in `[-1, 1]` per upper-triangle cell, row-major.
pub fn draw_noise<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n * (n - 1) / 2)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect()
}

/// Multiplies upper-triangle cell number `t` by `(1 + spread)^noise[t]`,
/// i.e. a log-uniform factor in `[1/(1+spread), 1+spread]` when the noise is
/// uniform on `[-1, 1]`. The lower triangle is rebuilt as reciprocals.
pub fn apply_noise(c: &PcMatrix, spread: f64, noise: &[f64]) -> Result<PcMatrix, SamplingError> {
    if !c.is_complete() {
        return Err(SamplingError::IncompleteMatrix);
    }
    if spread == 0.0 {
        return Ok(c.clone());
    }
    let log_span = spread.ln_1p();
    let n = c.order();
    let mut t = 0;
    Ok(PcMatrix::from_upper(n, |i, j| {
        let v = c.get(i, j).unwrap_or(1.0) * (noise[t] * log_span).exp();
        t += 1;
        v
    }))
}

/// Disturbs a complete matrix with independent log-uniform multiplicative
/// noise of the given spread.
pub fn disturb<R: Rng + ?Sized>(c: &PcMatrix, spread: f64, rng: &mut R) -> Result<PcMatrix, SamplingError> {
    if spread == 0.0 {
        return apply_noise(c, 0.0, &[]);
    }
    let noise = draw_noise(c.order(), rng);
    apply_noise(c, spread, &noise)
}

fn ci_of(c: &PcMatrix) -> Result<f64, SamplingError> {
    let fail = |e: String| SamplingError::CalibrationFailed {
        target: f64::NAN,
        reason: e,
    };
    let eig = evm_pc(c, DEFAULT_TOL, DEFAULT_MAX_ITER).map_err(|e| fail(e.to_string()))?;
    consistency_index(c, &eig).map_err(|e| fail(e.to_string()))
}

/// Acceptance window of [`calibrate_spread`] around `target`.
pub fn calibration_tolerance(target: f64) -> f64 {
    (0.05 * target).max(0.002)
}

/// Finds a spread whose mean CI over `samples` freshly drawn matrices is
/// within [`calibration_tolerance`] of `ci_target`.
///
/// The sample (base matrices and noise) is drawn once and reused for every
/// trial spread, so the mean CI is a smooth function of the spread and
/// bisection on `ln(1 + spread)` is well behaved. The search keeps going
/// until it is within 1% of the target or the budget runs out.
pub fn calibrate_spread<R: Rng + ?Sized>(
    n: usize,
    ci_target: f64,
    rng: &mut R,
    samples: usize,
) -> Result<f64, SamplingError> {
    let fail = |reason: &str| SamplingError::CalibrationFailed {
        target: ci_target,
        reason: reason.to_string(),
    };
    if !(ci_target.is_finite() && ci_target >= 0.0) {
        return Err(fail("target must be nonnegative"));
    }
    if samples == 0 || n < 3 {
        return Err(fail("need at least one sample and n >= 3"));
    }
    if ci_target == 0.0 {
        return Ok(0.0);
    }
    let draws: Vec<(PcMatrix, Vec<f64>)> = (0..samples)
        .map(|_| {
            let c = random_consistent(n, rng);
            let noise = draw_noise(n, rng);
            (c, noise)
        })
        .collect();
    let mean_ci = |log_span: f64| -> Result<f64, SamplingError> {
        let spread = log_span.exp_m1();
        let mut total = 0.0;
        for (c, noise) in &draws {
            total += ci_of(&apply_noise(c, spread, noise)?).map_err(|e| match e {
                SamplingError::CalibrationFailed { reason, .. } => SamplingError::CalibrationFailed {
                    target: ci_target,
                    reason,
                },
                other => other,
            })?;
        }
        Ok(total / samples as f64)
    };

    let fine = (0.01 * ci_target).max(1e-6);
    let (mut lo, mut hi) = (0.0, 0.5);
    let mut hi_ci = mean_ci(hi)?;
    while hi_ci < ci_target {
        lo = hi;
        hi *= 2.0;
        if hi > 64.0 {
            return Err(fail("target CI not reached by any spread"));
        }
        hi_ci = mean_ci(hi)?;
    }
    let mut best = (hi, hi_ci);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let ci = mean_ci(mid)?;
        if (ci - ci_target).abs() < (best.1 - ci_target).abs() {
            best = (mid, ci);
        }
        if (ci - ci_target).abs() <= fine {
            break;
        }
        if ci < ci_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (best.1 - ci_target).abs() > calibration_tolerance(ci_target) {
        return Err(fail(&format!("closest mean CI {} outside tolerance", best.1)));
    }
    Ok(best.0.exp_m1())
}

/// Removes `k` comparisons one at a time, each chosen uniformly among the
/// remaining comparisons whose removal keeps the graph connected.
pub fn random_irreducible_incomplete<R: Rng + ?Sized>(
    c: &PcMatrix,
    k: usize,
    rng: &mut R,
) -> Result<PcMatrix, SamplingError> {
    let n = c.order();
    let mut edges: Vec<(usize, usize)> = c.upper_pairs().filter(|&(i, j)| c.is_known(i, j)).collect();
    let available = edges.len().saturating_sub(n - 1);
    if k > available || !c.is_irreducible() {
        return Err(SamplingError::KTooLarge {
            k,
            n,
            max: available.min(max_removable(n)),
        });
    }
    let mut removed = Vec::with_capacity(k);
    for _ in 0..k {
        // Testing candidates in random order and taking the first non-bridge
        // is a uniform choice among the non-bridges.
        let mut untested: Vec<usize> = (0..edges.len()).collect();
        untested.shuffle(rng);
        let pick = untested
            .into_iter()
            .find(|&e| {
                let rest = edges
                    .iter()
                    .enumerate()
                    .filter(|&(f, _)| f != e)
                    .map(|(_, &p)| p);
                ComparisonGraph::from_edges(n, rest).is_connected()
            })
            .expect("a connected graph with a cycle has a non-bridge edge");
        removed.push(edges.swap_remove(pick));
    }
    Ok(c.without(removed))
}

fn check_x(n: usize, x: usize) -> Result<(), SamplingError> {
    let max = max_removable(n);
    if x > max {
        Err(SamplingError::XTooLarge { x, n, max })
    } else {
        Ok(())
    }
}

/// First `x` pairs of the row-major numbering `(0,2), (0,3), .., (0,n-1),
/// (1,3), .., (n-3,n-1)`; superdiagonal pairs `(i,i+1)` are never listed.
/// Removing them concentrates the gaps on the first alternatives.
pub fn removal_pattern_irregular(n: usize, x: usize) -> Result<Vec<(usize, usize)>, SamplingError> {
    check_x(n, x)?;
    Ok((0..n)
        .flat_map(|i| ((i + 2)..n).map(move |j| (i, j)))
        .take(x)
        .collect())
}

/// First `x` pairs of the diagonal-major numbering: the second superdiagonal
/// `(0,2), (1,3), .., (n-3,n-1)`, then the third, and so on up to `(0,n-1)`.
/// Removing them spreads the gaps as evenly as possible.
pub fn removal_pattern_regular(n: usize, x: usize) -> Result<Vec<(usize, usize)>, SamplingError> {
    check_x(n, x)?;
    Ok((2..n)
        .flat_map(|d| (0..n - d).map(move |i| (i, i + d)))
        .take(x)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priority::gmm;

    #[test]
    fn consistent_matrix_has_zero_ci() {
        let mut rng = rng_from_seed(3);
        for n in [3, 5, 9] {
            let c = random_consistent(n, &mut rng);
            let e = evm_pc(&c, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            assert!((e.lambda_max - n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let a = random_consistent(4, &mut rng_from_seed(42));
        let b = random_consistent(4, &mut rng_from_seed(42));
        assert_eq!(a, b);
    }

    #[test]
    fn gmm_recovers_hidden_weights() {
        let c = random_consistent(7, &mut rng_from_seed(11));
        let w = random_weights(7, &mut rng_from_seed(11));
        let total: f64 = w.iter().sum();
        let g = gmm(&c).unwrap();
        for (got, wi) in g.weights().iter().zip(&w) {
            assert!((got - wi / total).abs() < 1e-10);
        }
        assert!(w.iter().all(|&x| (1.0..=9.0).contains(&x)));
    }

    #[test]
    fn zero_spread_is_identity() {
        let mut rng = rng_from_seed(5);
        let c = random_consistent(6, &mut rng);
        assert_eq!(disturb(&c, 0.0, &mut rng).unwrap(), c);
    }

    #[test]
    fn disturbance_keeps_reciprocity_and_bounds() {
        let mut rng = rng_from_seed(8);
        let c = random_consistent(6, &mut rng);
        let d = disturb(&c, 1.0, &mut rng).unwrap();
        for (i, j) in c.upper_pairs() {
            let (u, l) = (d.get(i, j).unwrap(), d.get(j, i).unwrap());
            assert!(u > 0.0 && l > 0.0);
            assert!((u * l - 1.0).abs() < 1e-12);
            let factor = u / c.get(i, j).unwrap();
            assert!((0.5 - 1e-12..=2.0 + 1e-12).contains(&factor));
        }
    }

    #[test]
    fn mean_ci_grows_with_spread() {
        let spreads = [0.0, 0.2, 0.5, 1.0, 2.0];
        let mut means = Vec::new();
        for &s in &spreads {
            let mut rng = rng_from_seed(17);
            let mut total = 0.0;
            for _ in 0..100 {
                let c = random_consistent(6, &mut rng);
                total += ci_of(&disturb(&c, s, &mut rng).unwrap()).unwrap();
            }
            means.push(total / 100.0);
        }
        assert!(means[0].abs() < 1e-10);
        assert!(means.windows(2).all(|w| w[1] >= w[0]), "{means:?}");
    }

    fn fresh_mean_ci(n: usize, spread: f64, seed: u64, samples: usize) -> f64 {
        let mut rng = rng_from_seed(seed);
        let mut total = 0.0;
        for _ in 0..samples {
            let c = random_consistent(n, &mut rng);
            total += ci_of(&disturb(&c, spread, &mut rng).unwrap()).unwrap();
        }
        total / samples as f64
    }

    #[test]
    fn calibration_zero_target() {
        assert_eq!(calibrate_spread(9, 0.0, &mut rng_from_seed(1), 10).unwrap(), 0.0);
    }

    #[test]
    fn calibration_reproduces_target_on_fresh_sample() {
        let s = calibrate_spread(9, 0.1, &mut rng_from_seed(2), 200).unwrap();
        let ci = fresh_mean_ci(9, s, 99, 400);
        assert!((ci - 0.1).abs() <= 0.005, "spread {s} gives {ci}");
        let s = calibrate_spread(9, 0.385, &mut rng_from_seed(3), 200).unwrap();
        let ci = fresh_mean_ci(9, s, 98, 400);
        assert!((ci - 0.385).abs() <= 0.02, "spread {s} gives {ci}");
    }

    #[test]
    fn irreducible_sampling() {
        let mut rng = rng_from_seed(21);
        let c = random_consistent(9, &mut rng);
        assert_eq!(random_irreducible_incomplete(&c, 0, &mut rng).unwrap(), c);
        let tree = random_irreducible_incomplete(&c, 28, &mut rng).unwrap();
        assert!(tree.is_irreducible());
        assert_eq!(tree.graph().edge_count(), 8);
        assert_eq!(crate::indices::spanning_trees(&tree), 1.into());
        assert!(matches!(
            random_irreducible_incomplete(&c, 29, &mut rng),
            Err(SamplingError::KTooLarge { max: 28, .. })
        ));
        for seed in 0..1000 {
            let s = random_irreducible_incomplete(&c, 5, &mut rng_from_seed(seed)).unwrap();
            assert!(s.is_irreducible());
            assert_eq!(s.missing_count(), 5);
        }
    }

    #[test]
    fn irregular_pattern() {
        assert_eq!(removal_pattern_irregular(5, 0).unwrap(), vec![]);
        assert_eq!(
            removal_pattern_irregular(5, 3).unwrap(),
            vec![(0, 2), (0, 3), (0, 4)]
        );
        let all = removal_pattern_irregular(9, 28).unwrap();
        assert_eq!(all.last(), Some(&(6, 8)));
        assert!(removal_pattern_irregular(9, 29).is_err());
        // n = 7, x = 9: rows 1 and 2 keep only their superdiagonal cell
        let c = PcMatrix::from_upper(7, |_, _| 1.0).without(removal_pattern_irregular(7, 9).unwrap());
        let known_row = |i: usize| (0..7).filter(|&j| j != i && c.is_known(i, j)).collect::<Vec<_>>();
        assert_eq!(known_row(0), vec![1]);
        assert_eq!(known_row(1), vec![0, 2]);
        assert_eq!(known_row(2), vec![1, 3, 4, 5, 6]);
    }

    #[test]
    fn regular_pattern() {
        assert_eq!(removal_pattern_regular(5, 0).unwrap(), vec![]);
        assert_eq!(
            removal_pattern_regular(5, 3).unwrap(),
            vec![(0, 2), (1, 3), (2, 4)]
        );
        assert_eq!(removal_pattern_regular(9, 28).unwrap().last(), Some(&(0, 8)));
        let c = PcMatrix::from_upper(7, |_, _| 1.0).without(removal_pattern_regular(7, 9).unwrap());
        // the second and third superdiagonals minus (3,6)
        assert_eq!(c.missing_per_row(), vec![2, 2, 3, 4, 3, 2, 2]);
    }

    #[test]
    fn seeds_differ_by_coordinate() {
        let a = derive_seed(1, &[0, 1]);
        assert_ne!(a, derive_seed(1, &[1, 0]));
        assert_ne!(a, derive_seed(2, &[0, 1]));
        assert_eq!(a, derive_seed(1, &[0, 1]));
    }
}
