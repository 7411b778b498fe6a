//! Undirected view of a comparison matrix: vertices are alternatives, edges
//! are known comparisons.

use std::collections::VecDeque;

use crate::matrix::PcMatrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonGraph {
    n: usize,
    adjacency: Vec<bool>,
}

impl ComparisonGraph {
    pub fn from_matrix(c: &PcMatrix) -> Self {
        let n = c.order();
        let mut adjacency = vec![false; n * n];
        for (i, j) in c.upper_pairs() {
            if c.is_known(i, j) {
                adjacency[i * n + j] = true;
                adjacency[j * n + i] = true;
            }
        }
        Self { n, adjacency }
    }

    /// Graph on `n` vertices with the given undirected edges.
    pub fn from_edges<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adjacency = vec![false; n * n];
        for (i, j) in edges {
            if i != j {
                adjacency[i * n + j] = true;
                adjacency[j * n + i] = true;
            }
        }
        Self { n, adjacency }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().filter(|&&a| a).count() / 2
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.has_edge(i, j))
    }

    /// Vertices reachable from `start`, in breadth-first order.
    pub fn reachable_from(&self, start: usize) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        let mut order = Vec::with_capacity(self.n);
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for u in self.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        order
    }

    /// Breadth-first traversal from vertex 0 reaches every vertex.
    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.reachable_from(0).len() == self.n
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut assigned = vec![false; self.n];
        let mut out = Vec::new();
        for v in 0..self.n {
            if assigned[v] {
                continue;
            }
            let mut comp = self.reachable_from(v);
            comp.sort_unstable();
            for &u in &comp {
                assigned[u] = true;
            }
            out.push(comp);
        }
        out
    }

    /// Kirchhoff matrix: degree on the diagonal, -1 for adjacent pairs.
    pub fn laplacian(&self) -> Laplacian {
        let n = self.n;
        let mut entries = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                if self.has_edge(i, j) {
                    entries[i * n + j] = -1;
                    entries[i * n + i] += 1;
                }
            }
        }
        Laplacian { n, entries }
    }
}

/// Integer Laplacian of a comparison graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Laplacian {
    n: usize,
    entries: Vec<i64>,
}

impl Laplacian {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.n).map(<[_]>::to_vec).collect()
    }

    pub fn diagonal(&self) -> Vec<i64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// The matrix with row `skip` and column `skip` deleted.
    pub fn minor(&self, skip: usize) -> Vec<Vec<i64>> {
        (0..self.n)
            .filter(|&i| i != skip)
            .map(|i| {
                (0..self.n)
                    .filter(|&j| j != skip)
                    .map(|j| self.get(i, j))
                    .collect()
            })
            .collect()
    }
}

impl PcMatrix {
    pub fn laplacian(&self) -> Laplacian {
        self.graph().laplacian()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::fixtures::*;

    #[test]
    fn laplacian_of_paper_fixtures() {
        let l1 = c1().laplacian();
        assert_eq!(l1.diagonal(), vec![1, 4, 3, 3, 3]);
        assert_eq!(
            l1.rows(),
            vec![
                vec![1, -1, 0, 0, 0],
                vec![-1, 4, -1, -1, -1],
                vec![0, -1, 3, -1, -1],
                vec![0, -1, -1, 3, -1],
                vec![0, -1, -1, -1, 3],
            ]
        );
        let l2 = c2().laplacian();
        assert_eq!(
            l2.rows(),
            vec![
                vec![2, -1, 0, 0, -1],
                vec![-1, 3, -1, 0, -1],
                vec![0, -1, 3, -1, -1],
                vec![0, 0, -1, 2, -1],
                vec![-1, -1, -1, -1, 4],
            ]
        );
    }

    #[test]
    fn laplacian_of_k3() {
        let k3 = PcMatrix::from_upper(3, |_, _| 3.0);
        assert_eq!(
            k3.laplacian().rows(),
            vec![vec![2, -1, -1], vec![-1, 2, -1], vec![-1, -1, 2]]
        );
    }

    #[test]
    fn components_name_isolated_vertices() {
        let g = ComparisonGraph::from_edges(5, [(0, 1), (3, 4)]);
        assert_eq!(g.components(), vec![vec![0, 1], vec![2], vec![3, 4]]);
        assert!(!g.is_connected());
        assert_eq!(g.edge_count(), 2);
        assert_eq!(example2().graph().components(), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn minor_drops_row_and_column() {
        let m = c1().laplacian().minor(0);
        assert_eq!(m[0], vec![4, -1, -1, -1]);
        assert_eq!(m.len(), 4);
    }
}
