//! Dense reference implementations of the geodesic stage.
//!
//! Neither shares code with the sparse path in [`super::graph`] or
//! [`super::geodesic`]; they exist to check it and to measure it against.

use super::geodesic::{GeodesicDistances, UNREACHABLE};
use crate::embedding::SimilarityMatrix;
use crate::error::{Error, Result};

/// Largest pool the dense oracle accepts.
pub const ORACLE_MAX_NODES: usize = 256;

fn check_inputs(sims: &SimilarityMatrix, k: usize, anchor: usize) -> Result<usize> {
    let m = sims.size();
    if m == 0 {
        return Err(Error::Empty("similarity matrix"));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if anchor >= m {
        return Err(Error::InvalidArgument(format!(
            "anchor {anchor} out of range for {m} nodes"
        )));
    }
    Ok(k.min(m - 1))
}

/// Union-kNN graph as a dense matrix (`UNREACHABLE` for no edge), then
/// Floyd–Warshall, then the anchor's row.
#[allow(clippy::needless_range_loop)] // index form mirrors the textbook recurrence
pub fn dense_geodesic_oracle(
    sims: &SimilarityMatrix,
    k: usize,
    anchor: usize,
) -> Result<GeodesicDistances> {
    let m = sims.size();
    if m > ORACLE_MAX_NODES {
        return Err(Error::TooLarge {
            what: "oracle pool size",
            actual: m,
            limit: ORACLE_MAX_NODES,
        });
    }
    let k = check_inputs(sims, k, anchor)?;

    let mut dist = vec![vec![UNREACHABLE; m]; m];
    for i in 0..m {
        let mut order: Vec<usize> = (0..m).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| sims.get(i, b).total_cmp(&sims.get(i, a)).then(a.cmp(&b)));
        for &j in order.iter().take(k) {
            let w = 1.0 - sims.get(i, j);
            dist[i][j] = w;
            dist[j][i] = w;
        }
    }
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for via in 0..m {
        for i in 0..m {
            let d_iv = dist[i][via];
            if !d_iv.is_finite() {
                continue;
            }
            for j in 0..m {
                let alt = d_iv + dist[via][j];
                if alt < dist[i][j] {
                    dist[i][j] = alt;
                }
            }
        }
    }
    GeodesicDistances::new(anchor, dist.swap_remove(anchor))
}

/// The unoptimized baseline: membership of every pair in the kNN union is
/// re-derived by counting (O(M³)), adjacency is dense, and Dijkstra finds
/// each next node by scanning all unvisited nodes (O(M²)).
pub fn naive_dense_geodesics(
    sims: &SimilarityMatrix,
    k: usize,
    anchor: usize,
) -> Result<GeodesicDistances> {
    let k = check_inputs(sims, k, anchor)?;
    let m = sims.size();

    // j ∈ kNN(i) iff fewer than k other nodes outrank j in row i.
    let in_knn = |i: usize, j: usize| {
        let s_ij = sims.get(i, j);
        let outranking = (0..m)
            .filter(|&l| l != i && l != j)
            .filter(|&l| {
                let s_il = sims.get(i, l);
                s_il > s_ij || (s_il == s_ij && l < j)
            })
            .count();
        outranking < k
    };
    let mut adj = vec![UNREACHABLE; m * m];
    for i in 0..m {
        for j in 0..m {
            if i != j && (in_knn(i, j) || in_knn(j, i)) {
                adj[i * m + j] = 1.0 - sims.get(i, j);
            }
        }
    }

    let mut dist = vec![UNREACHABLE; m];
    let mut done = vec![false; m];
    dist[anchor] = 0.0;
    loop {
        let mut best: Option<usize> = None;
        for v in 0..m {
            if !done[v] && dist[v].is_finite() && best.is_none_or(|b| dist[v] < dist[b]) {
                best = Some(v);
            }
        }
        let Some(u) = best else { break };
        done[u] = true;
        for v in 0..m {
            let w = adj[u * m + v];
            if w.is_finite() && dist[u] + w < dist[v] {
                dist[v] = dist[u] + w;
            }
        }
    }
    GeodesicDistances::new(anchor, dist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_sims() -> SimilarityMatrix {
        // Nodes on a line: adjacent similarity 0.9, everything else far lower.
        SimilarityMatrix::from_upper(4, |i, j| if j == i + 1 { 0.9 } else { -0.5 })
    }

    #[test]
    fn chain_fixture() {
        for f in [dense_geodesic_oracle, naive_dense_geodesics] {
            let d = f(&chain_sims(), 1, 0).unwrap();
            let expected = [0.0, 0.1, 0.2, 0.3];
            for (a, b) in d.as_slice().iter().zip(expected) {
                assert!((a - b).abs() < 1e-12, "{:?}", d.as_slice());
            }
        }
    }

    #[test]
    fn disconnected_fixture() {
        let sims = SimilarityMatrix::from_upper(4, |i, j| match (i, j) {
            (0, 1) => 0.7,
            (2, 3) => 0.6,
            _ => -0.9,
        });
        for f in [dense_geodesic_oracle, naive_dense_geodesics] {
            let d = f(&sims, 1, 0).unwrap();
            assert!((d.as_slice()[1] - 0.3).abs() < 1e-12);
            assert!(!d.is_reachable(2));
            assert!(!d.is_reachable(3));
        }
    }

    #[test]
    fn oracle_size_guard() {
        let sims = SimilarityMatrix::from_upper(ORACLE_MAX_NODES + 1, |_, _| 0.0);
        assert!(matches!(
            dense_geodesic_oracle(&sims, 5, 0),
            Err(Error::TooLarge { .. })
        ));
    }
}
