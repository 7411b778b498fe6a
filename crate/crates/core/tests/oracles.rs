use nalgebra::DMatrix;
use num_bigint::BigInt;
use pcrank::indices::{alpha_index, beta_index, compound_index, tree_index};
use pcrank::metrics::kendall;
use pcrank::montecarlo::{
    random_consistent, random_irreducible_incomplete, removal_pattern_irregular, removal_pattern_regular,
    rng_from_seed,
};
use pcrank::priority::{evm_pc, harker_rank, DEFAULT_MAX_ITER, DEFAULT_TOL};
use pcrank::spanning::spanning_tree_count;
use pcrank::{ComparisonGraph, OrdinalVector, PcMatrix};
use rand::Rng;

fn random_matrix(n: usize, rng: &mut impl Rng) -> PcMatrix {
    PcMatrix::from_upper(n, |_, _| rng.random_range(-2.2f64..2.2).exp())
}

fn dense(c: &PcMatrix) -> DMatrix<f64> {
    let n = c.order();
    DMatrix::from_fn(n, n, |i, j| c.get(i, j).unwrap())
}

#[test]
fn principal_eigenvalue_matches_dense_solver() {
    let mut rng = rng_from_seed(11);
    for t in 0..100 {
        let n = 4 + t % 4;
        let c = random_matrix(n, &mut rng);
        let reference = dense(&c)
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let e = evm_pc(&c, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((e.lambda_max - reference).abs() < 1e-8, "{} vs {reference}", e.lambda_max);

        let av = dense(&c) * nalgebra::DVector::from_column_slice(e.vector.weights());
        for i in 0..n {
            assert!((av[i] - e.lambda_max * e.vector.get(i)).abs() < 1e-9);
        }
    }
}

#[test]
fn harker_on_complete_input_is_evm() {
    let mut rng = rng_from_seed(12);
    for n in 3..=9 {
        let c = random_matrix(n, &mut rng);
        let a = evm_pc(&c, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let b = harker_rank(&c, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        for i in 0..n {
            assert!((a.vector.get(i) - b.vector.get(i)).abs() < 1e-10);
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for at in 0..=p.len() {
            let mut q = p.clone();
            q.insert(at, n);
            out.push(q);
        }
    }
    out
}

/// Adjacent swaps needed to turn the order given by `p` into the order given
/// by `q`.
fn bubble_swaps(p: &[usize], q: &[usize]) -> usize {
    let mut by_p: Vec<usize> = (0..p.len()).collect();
    by_p.sort_by_key(|&i| p[i]);
    let mut seq: Vec<usize> = by_p.iter().map(|&i| q[i]).collect();
    let mut swaps = 0;
    for end in (1..seq.len()).rev() {
        for k in 0..end {
            if seq[k] > seq[k + 1] {
                seq.swap(k, k + 1);
                swaps += 1;
            }
        }
    }
    swaps
}

#[test]
fn kendall_counts_bubble_sort_swaps() {
    for n in 1..=6 {
        let all = permutations(n);
        for p in &all {
            for q in &all {
                let k = kendall(
                    &OrdinalVector::new(p.clone()).unwrap(),
                    &OrdinalVector::new(q.clone()).unwrap(),
                )
                .unwrap();
                assert_eq!(k, bubble_swaps(p, q), "{p:?} {q:?}");
            }
        }
    }
}

fn brute_force_trees(n: usize, edges: &[(usize, usize)]) -> u64 {
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let m = edges.len();
    if m < n - 1 {
        return 0;
    }
    let mut count = 0;
    let mut pick: Vec<usize> = (0..n - 1).collect();
    loop {
        let mut parent: Vec<usize> = (0..n).collect();
        let acyclic = pick.iter().all(|&e| {
            let (a, b) = edges[e];
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
            ra != rb
        });
        if acyclic {
            count += 1;
        }
        // next combination
        let k = pick.len();
        let Some(i) = (0..k).rev().find(|&i| pick[i] < m - k + i) else {
            return count;
        };
        pick[i] += 1;
        for j in i + 1..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

#[test]
fn spanning_trees_match_enumeration() {
    let mut rng = rng_from_seed(13);
    let mut checked = 0;
    while checked < 150 {
        let n = rng.random_range(2..=7);
        let p = rng.random_range(0.3..1.0);
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|_| rng.random_bool(p))
            .collect();
        let g = ComparisonGraph::from_edges(n, edges.iter().copied());
        let expected = BigInt::from(brute_force_trees(n, &edges));
        assert_eq!(spanning_tree_count(&g), expected);
        if n > 2 {
            assert_eq!(g.laplacian().cofactor(n - 1), expected);
        }
        if g.is_connected() {
            checked += 1;
        }
    }
}

#[test]
fn irregular_scheme_dominates_regular_on_every_index() {
    for n in 4..=10 {
        let full = PcMatrix::from_upper(n, |_, _| 1.0);
        let max = (n - 1) * (n - 2) / 2;
        for x in 0..=max {
            let w = full.without(removal_pattern_irregular(n, x).unwrap());
            let b = full.without(removal_pattern_regular(n, x).unwrap());
            assert!(w.is_irreducible() && b.is_irreducible());
            assert_eq!(w.missing_count(), x);
            assert_eq!(b.missing_count(), x);
            assert!(alpha_index(&w, 1.5) >= alpha_index(&b, 1.5), "n={n} x={x}");
            assert!(beta_index(&w, 1.0) >= beta_index(&b, 1.0), "n={n} x={x}");
            assert!(compound_index(&w, 1.5, 1.0) >= compound_index(&b, 1.5, 1.0), "n={n} x={x}");
            assert!(tree_index(&w).unwrap() >= tree_index(&b).unwrap() - 1e-12, "n={n} x={x}");
        }
    }
}

#[test]
fn random_removal_keeps_matrices_irreducible() {
    let mut rng = rng_from_seed(14);
    for n in 3..=9 {
        let c = random_consistent(n, &mut rng);
        for k in 0..=(n - 1) * (n - 2) / 2 {
            let d = random_irreducible_incomplete(&c, k, &mut rng).unwrap();
            assert_eq!(d.missing_count(), k);
            assert!(d.is_irreducible());
        }
        assert!(random_irreducible_incomplete(&c, (n - 1) * (n - 2) / 2 + 1, &mut rng).is_err());
    }
}

#[test]
fn random_removal_reaches_every_spanning_tree() {
    // At maximal removal the result is a uniformly chosen spanning tree of
    // K4; all 16 must appear.
    let c = PcMatrix::from_upper(4, |_, _| 1.0);
    let mut rng = rng_from_seed(15);
    let mut seen = std::collections::BTreeSet::new();
    for _ in 0..2000 {
        let d = random_irreducible_incomplete(&c, 3, &mut rng).unwrap();
        let known: Vec<(usize, usize)> = d.upper_pairs().filter(|&(i, j)| d.is_known(i, j)).collect();
        seen.insert(known);
    }
    assert_eq!(seen.len(), 16);
}
