//! Distances between rankings.

use std::cmp::Ordering;

use thiserror::Error;

use crate::priority::PriorityVector;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("length mismatch: {left} vs {right}")]
pub struct LengthMismatch {
    pub left: usize,
    pub right: usize,
}

fn same_len(left: usize, right: usize) -> Result<(), LengthMismatch> {
    if left == right {
        Ok(())
    } else {
        Err(LengthMismatch { left, right })
    }
}

/// Position of each alternative in the ranking, 1 = best.
///
/// Ties share the smallest position (competition ranking, "1, 1, 3").
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrdinalVector(Vec<usize>);

impl OrdinalVector {
    /// Wraps explicit positions. Each must lie in `1..=n`.
    pub fn new(positions: Vec<usize>) -> Option<Self> {
        let n = positions.len();
        positions
            .iter()
            .all(|&p| (1..=n).contains(&p))
            .then_some(Self(positions))
    }

    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `sum_i |w_i - u_i|`; at most 2 for normalized vectors.
pub fn manhattan(w: &PriorityVector, u: &PriorityVector) -> Result<f64, LengthMismatch> {
    same_len(w.len(), u.len())?;
    Ok(w.weights()
        .iter()
        .zip(u.weights())
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// Ordinal counterpart of a weight vector. Weights are compared exactly, so
/// nearly equal weights are still ordered.
pub fn ordinal(w: &PriorityVector) -> OrdinalVector {
    let ws = w.weights();
    OrdinalVector(
        ws.iter()
            .map(|wi| 1 + ws.iter().filter(|wj| *wj > wi).count())
            .collect(),
    )
}

/// Number of pairs `i < j` whose relative order differs between `p` and `q`.
/// A tie in one vector against a strict order in the other counts as a
/// disagreement.
pub fn kendall(p: &OrdinalVector, q: &OrdinalVector) -> Result<usize, LengthMismatch> {
    same_len(p.len(), q.len())?;
    let (p, q) = (&p.0, &q.0);
    let mut count = 0;
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            if p[i].cmp(&p[j]) != q[i].cmp(&q[j]) {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Kendall distance divided by its maximum `n (n-1) / 2`.
pub fn kendall_rescaled(p: &OrdinalVector, q: &OrdinalVector) -> Result<f64, LengthMismatch> {
    let k = kendall(p, q)?;
    let n = p.len();
    if n < 2 {
        return Ok(0.0);
    }
    Ok(2.0 * k as f64 / (n * (n - 1)) as f64)
}

/// `(manhattan(w, u), kendall_rescaled(O(w), O(u)))`.
pub fn ranking_distance(w: &PriorityVector, u: &PriorityVector) -> Result<(f64, f64), LengthMismatch> {
    let md = manhattan(w, u)?;
    let krd = kendall_rescaled(&ordinal(w), &ordinal(u))?;
    Ok((md, krd))
}

/// Alternatives ordered best-first; ties keep index order.
pub fn ranking_order(w: &PriorityVector) -> Vec<usize> {
    let ws = w.weights();
    let mut idx: Vec<usize> = (0..ws.len()).collect();
    idx.sort_by(|&a, &b| ws[b].partial_cmp(&ws[a]).unwrap_or(Ordering::Equal));
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(w: &[f64]) -> PriorityVector {
        PriorityVector::new(w.to_vec()).unwrap()
    }

    fn ov(p: &[usize]) -> OrdinalVector {
        OrdinalVector::new(p.to_vec()).unwrap()
    }

    #[test]
    fn manhattan_examples() {
        let w = pv(&[0.3, 0.5, 0.2]);
        assert_eq!(manhattan(&w, &w).unwrap(), 0.0);
        assert!((manhattan(&w, &pv(&[0.2, 0.5, 0.3])).unwrap() - 0.2).abs() < 1e-15);
        let eps = 1e-12;
        let a = pv(&[1.0 - eps, eps / 2.0, eps / 2.0]);
        let b = pv(&[eps / 2.0, eps / 2.0, 1.0 - eps]);
        assert!((manhattan(&a, &b).unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(
            manhattan(&w, &pv(&[0.5, 0.5])),
            Err(LengthMismatch { left: 3, right: 2 })
        );
    }

    #[test]
    fn ordinal_examples() {
        assert_eq!(ordinal(&pv(&[0.3, 0.5, 0.2])), ov(&[2, 1, 3]));
        assert_eq!(ordinal(&pv(&[0.25; 4])), ov(&[1, 1, 1, 1]));
        assert_eq!(
            ordinal(&pv(&[0.20976, 0.31796, 0.31406, 0.15822])),
            ov(&[3, 1, 2, 4])
        );
        assert_eq!(ordinal(&pv(&[0.4, 0.4, 0.2])), ov(&[1, 1, 3]));
    }

    #[test]
    fn kendall_examples() {
        let (p, q) = (ov(&[1, 2, 4, 3]), ov(&[3, 4, 1, 2]));
        assert_eq!(kendall(&p, &q).unwrap(), 5);
        assert_eq!(kendall_rescaled(&p, &q).unwrap(), 5.0 / 6.0);
        assert_eq!(kendall(&p, &p).unwrap(), 0);
        assert_eq!(kendall(&ov(&[1, 2, 3]), &ov(&[3, 2, 1])).unwrap(), 3);
        assert_eq!(kendall_rescaled(&ov(&[1, 2, 3]), &ov(&[3, 2, 1])).unwrap(), 1.0);
        assert!(kendall(&p, &ov(&[1, 2])).is_err());
    }

    #[test]
    fn tie_against_strict_order_disagrees() {
        assert_eq!(kendall(&ov(&[1, 1]), &ov(&[1, 2])).unwrap(), 1);
        assert_eq!(kendall(&ov(&[1, 1]), &ov(&[1, 1])).unwrap(), 0);
    }

    #[test]
    fn ranking_distance_examples() {
        let w = pv(&[0.3, 0.5, 0.2]);
        assert_eq!(ranking_distance(&w, &w).unwrap(), (0.0, 0.0));
        let (md, krd) = ranking_distance(&w, &pv(&[0.5, 0.3, 0.2])).unwrap();
        assert!((md - 0.4).abs() < 1e-15);
        assert!((krd - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn order_is_best_first() {
        assert_eq!(
            ranking_order(&pv(&[0.20976, 0.31796, 0.31406, 0.15822])),
            vec![1, 2, 0, 3]
        );
    }

    #[test]
    fn ordinal_rejects_out_of_range() {
        assert!(OrdinalVector::new(vec![0, 1]).is_none());
        assert!(OrdinalVector::new(vec![1, 3]).is_none());
    }
}
