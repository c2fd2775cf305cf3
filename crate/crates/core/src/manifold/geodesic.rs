use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::graph::KnnGraph;
use crate::error::{Error, Result};

/// Distance assigned to nodes with no path from the anchor.
pub const UNREACHABLE: f64 = f64::INFINITY;

/// Shortest-path distances from a single anchor node.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicDistances {
    anchor: usize,
    dist: Vec<f64>,
}

impl GeodesicDistances {
    pub fn new(anchor: usize, dist: Vec<f64>) -> Result<Self> {
        if anchor >= dist.len() {
            return Err(Error::InvalidArgument(format!(
                "anchor {anchor} out of range for {} nodes",
                dist.len()
            )));
        }
        if dist[anchor] != 0.0 {
            return Err(Error::InvalidArgument("anchor distance must be 0".into()));
        }
        if dist.iter().any(|d| d.is_nan() || *d < 0.0) {
            return Err(Error::InvalidArgument(
                "distances must be non-negative".into(),
            ));
        }
        Ok(Self { anchor, dist })
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.dist
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn is_reachable(&self, node: usize) -> bool {
        self.dist[node].is_finite()
    }
}

#[derive(Copy, Clone, PartialEq)]
struct Frontier {
    dist: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    // Reversed so `BinaryHeap` pops the smallest distance first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths from `anchor` using a binary heap.
pub fn dijkstra_from_anchor(graph: &KnnGraph, anchor: usize) -> Result<GeodesicDistances> {
    let n = graph.node_count();
    if anchor >= n {
        return Err(Error::InvalidArgument(format!(
            "anchor {anchor} out of range for {n} nodes"
        )));
    }
    let mut dist = vec![UNREACHABLE; n];
    let mut heap = BinaryHeap::with_capacity(graph.col_indices().len() + 1);
    dist[anchor] = 0.0;
    heap.push(Frontier {
        dist: 0.0,
        node: anchor,
    });
    while let Some(Frontier { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for (next, w) in graph.neighbors(node) {
            let candidate = d + w;
            if candidate < dist[next] {
                dist[next] = candidate;
                heap.push(Frontier {
                    dist: candidate,
                    node: next,
                });
            }
        }
    }
    Ok(GeodesicDistances { anchor, dist })
}

/// How geodesic distances are mapped to a similarity in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum GeodesicVariant {
    /// `1 - d / max_finite(d)`.
    #[default]
    #[serde(rename = "eq3")]
    Eq3MaxNorm,
    /// `1 / (1 + d)`.
    #[serde(rename = "inverse")]
    InverseOnePlusD,
}

impl GeodesicVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            GeodesicVariant::Eq3MaxNorm => "eq3",
            GeodesicVariant::InverseOnePlusD => "inverse",
        }
    }
}

impl fmt::Display for GeodesicVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GeodesicVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eq3" | "maxnorm" | "eq3_maxnorm" => Ok(GeodesicVariant::Eq3MaxNorm),
            "inverse" | "inverse_one_plus_d" => Ok(GeodesicVariant::InverseOnePlusD),
            other => Err(Error::InvalidArgument(format!(
                "unknown geodesic variant {other:?} (expected eq3 or inverse)"
            ))),
        }
    }
}

/// Maps distances to similarities. Unreachable nodes always score 0.
///
/// For max-normalization the maximum is taken over finite distances only;
/// when that maximum is 0 every reachable node scores 1.
pub fn geodesic_similarity(dist: &GeodesicDistances, variant: GeodesicVariant) -> Vec<f64> {
    let d = dist.as_slice();
    match variant {
        GeodesicVariant::Eq3MaxNorm => {
            let max = d
                .iter()
                .copied()
                .filter(|x| x.is_finite())
                .fold(0.0f64, f64::max);
            d.iter()
                .map(|&x| {
                    if !x.is_finite() {
                        0.0
                    } else if max == 0.0 {
                        1.0
                    } else {
                        1.0 - x / max
                    }
                })
                .collect()
        }
        GeodesicVariant::InverseOnePlusD => d
            .iter()
            .map(|&x| if x.is_finite() { 1.0 / (1.0 + x) } else { 0.0 })
            .collect(),
    }
}

/// `alpha * cos + (1 - alpha) * geo`, element-wise.
pub fn hybrid_score(cos: &[f64], geo: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if cos.len() != geo.len() {
        return Err(Error::CountMismatch {
            what: "geodesic similarities".into(),
            expected: cos.len(),
            actual: geo.len(),
        });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "alpha {alpha} outside [0, 1]"
        )));
    }
    Ok(cos
        .iter()
        .zip(geo)
        .map(|(&c, &g)| alpha * c + (1.0 - alpha) * g)
        .collect())
}
