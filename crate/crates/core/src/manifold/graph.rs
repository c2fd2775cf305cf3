use crate::embedding::SimilarityMatrix;
use crate::error::{Error, Result};

/// Undirected weighted k-NN graph in compressed-sparse-row layout.
///
/// Every undirected edge is stored twice (once per endpoint). Within a row,
/// column indices are strictly ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    weights: Vec<f64>,
}

impl KnnGraph {
    /// Builds a graph from undirected `(u, v, weight)` edges.
    pub fn from_undirected_edges(node_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut normalized = Vec::with_capacity(edges.len());
        for &(u, v, w) in edges {
            if u >= node_count || v >= node_count {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) out of range for {node_count} nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidArgument(format!("self-loop at node {u}")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) has invalid weight {w}"
                )));
            }
            normalized.push((u.min(v), u.max(v), w));
        }
        normalized.sort_unstable_by_key(|e| (e.0, e.1));
        if let Some(w) = normalized
            .windows(2)
            .find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return Err(Error::InvalidArgument(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Self::from_sorted_edges(node_count, &normalized))
    }

    /// `edges` must be sorted by `(lo, hi)` with `lo < hi` and no duplicates.
    fn from_sorted_edges(node_count: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut degree = vec![0usize; node_count];
        for &(a, b, _) in edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut row_offsets = Vec::with_capacity(node_count + 1);
        row_offsets.push(0);
        for d in &degree {
            row_offsets.push(row_offsets.last().unwrap() + d);
        }
        let nnz = *row_offsets.last().unwrap();
        let mut col_indices = vec![0; nnz];
        let mut weights = vec![0.0; nnz];
        let mut cursor = row_offsets[..node_count].to_vec();
        // Sorted (lo, hi) order fills every row in ascending column order.
        for &(a, b, w) in edges {
            col_indices[cursor[a]] = b;
            weights[cursor[a]] = w;
            cursor[a] += 1;
            col_indices[cursor[b]] = a;
            weights[cursor[b]] = w;
            cursor[b] += 1;
        }
        Self {
            row_offsets,
            col_indices,
            weights,
        }
    }

    pub fn node_count(&self) -> usize {
        self.row_offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.col_indices.len() / 2
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree(&self, node: usize) -> usize {
        self.row_offsets[node + 1] - self.row_offsets[node]
    }

    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[node]..self.row_offsets[node + 1];
        self.col_indices[span.clone()]
            .iter()
            .copied()
            .zip(self.weights[span].iter().copied())
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        let span = self.row_offsets[u]..self.row_offsets[u + 1];
        self.col_indices[span.clone()]
            .binary_search(&v)
            .ok()
            .map(|p| self.weights[span.start + p])
    }

    /// Undirected edges as `(lo, hi, weight)` with `lo < hi`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        (0..self.node_count())
            .flat_map(|u| {
                self.neighbors(u)
                    .filter(move |&(v, _)| v > u)
                    .map(move |(v, w)| (u, v, w))
            })
            .collect()
    }
}

/// Builds the union-of-kNN graph: `(i, j)` is an edge iff `j` is among the
/// `k` most similar nodes to `i` or vice versa. Edge weight is `1 - sim`.
///
/// `k` is clamped to `M - 1`. Equal similarities are broken by ascending
/// node index.
pub fn build_knn_graph(sims: &SimilarityMatrix, k: usize) -> Result<KnnGraph> {
    let m = sims.size();
    if m == 0 {
        return Err(Error::Empty("similarity matrix"));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let k = k.min(m - 1);
    let mut edges = Vec::with_capacity(m * k);
    let mut others: Vec<usize> = Vec::with_capacity(m);
    if k > 0 {
        for i in 0..m {
            let row = sims.row(i);
            others.clear();
            others.extend((0..m).filter(|&j| j != i));
            let cmp = |a: &usize, b: &usize| row[*b].total_cmp(&row[*a]).then(a.cmp(b));
            if k < others.len() {
                others.select_nth_unstable_by(k - 1, cmp);
            }
            for &j in &others[..k] {
                edges.push((i.min(j), i.max(j), 0.0));
            }
        }
    }
    edges.sort_unstable_by_key(|e| (e.0, e.1));
    edges.dedup_by(|a, b| (a.0, a.1) == (b.0, b.1));
    for e in &mut edges {
        e.2 = 1.0 - sims.get(e.0, e.1);
    }
    Ok(KnnGraph::from_sorted_edges(m, &edges))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_node() -> SimilarityMatrix {
        SimilarityMatrix::from_upper(3, |i, j| match (i, j) {
            (0, 1) => 0.9,
            (0, 2) => 0.1,
            (1, 2) => 0.8,
            _ => unreachable!(),
        })
    }

    #[test]
    fn two_nodes_single_edge() {
        let sims = SimilarityMatrix::from_upper(2, |_, _| 0.3);
        for k in [1, 2, 7] {
            let g = build_knn_graph(&sims, k).unwrap();
            assert_eq!(g.edges(), vec![(0, 1, 0.7)]);
        }
    }

    #[test]
    fn three_node_union() {
        let g = build_knn_graph(&three_node(), 1).unwrap();
        let edges = g.edges();
        assert_eq!(edges.len(), 2);
        assert_eq!((edges[0].0, edges[0].1), (0, 1));
        assert!((edges[0].2 - 0.1).abs() < 1e-12);
        assert_eq!((edges[1].0, edges[1].1), (1, 2));
        assert!((edges[1].2 - 0.2).abs() < 1e-12);
    }

    #[test]
    fn single_node_has_no_edges() {
        let sims = SimilarityMatrix::from_upper(1, |_, _| unreachable!());
        let g = build_knn_graph(&sims, 5).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn ties_prefer_lower_index() {
        // Node 0 is equally similar to 1, 2, 3; k = 1 must pick node 1.
        let sims = SimilarityMatrix::from_upper(4, |i, j| if i == 0 && j > 0 { 0.5 } else { -0.9 });
        let g = build_knn_graph(&sims, 1).unwrap();
        assert!(g.weight(0, 1).is_some());
        // Nodes 2 and 3 each pick node 0 as their nearest, so those edges exist by union.
        assert!(g.weight(0, 2).is_some());
        assert!(g.weight(0, 3).is_some());
        assert!(g.weight(1, 2).is_none());
    }

    #[test]
    fn errors() {
        let sims = SimilarityMatrix::from_upper(0, |_, _| 0.0);
        assert!(build_knn_graph(&sims, 1).is_err());
        assert!(build_knn_graph(&three_node(), 0).is_err());
    }

    #[test]
    fn explicit_edges_validation() {
        assert!(KnnGraph::from_undirected_edges(2, &[(0, 0, 0.1)]).is_err());
        assert!(KnnGraph::from_undirected_edges(2, &[(0, 1, -0.1)]).is_err());
        assert!(KnnGraph::from_undirected_edges(2, &[(0, 1, 0.1), (1, 0, 0.1)]).is_err());
        assert!(KnnGraph::from_undirected_edges(2, &[(0, 2, 0.1)]).is_err());
        let g = KnnGraph::from_undirected_edges(3, &[(2, 0, 0.5), (1, 0, 0.25)]).unwrap();
        assert_eq!(g.row_offsets(), &[0, 2, 3, 4]);
        assert_eq!(g.col_indices(), &[1, 2, 0, 0]);
        assert_eq!(g.weight(2, 0), Some(0.5));
    }
}
