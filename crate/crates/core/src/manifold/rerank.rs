use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::geodesic::{dijkstra_from_anchor, geodesic_similarity, hybrid_score, GeodesicVariant};
use super::graph::build_knn_graph;
use crate::embedding::pairwise_similarities;
use crate::error::{Error, Result};
use crate::telescope::CandidatePool;

pub const DEFAULT_K: usize = 5;
pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RerankConfig {
    pub k: usize,
    pub alpha: f64,
    pub variant: GeodesicVariant,
}

impl Default for RerankConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            alpha: DEFAULT_ALPHA,
            variant: GeodesicVariant::Eq3MaxNorm,
        }
    }
}

impl RerankConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha {} outside [0, 1]",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// The two similarity terms behind a candidate's hybrid score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreComponents {
    pub cos: f64,
    pub geo: f64,
}

/// Reranked pool. `order`, `scores` and `components` are aligned by output
/// rank; `order[r]` is the candidate's position in the input pool.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    pub order: Vec<usize>,
    pub scores: Vec<f64>,
    pub components: Vec<ScoreComponents>,
    /// Wall-clock time of the whole rerank call.
    pub latency: Duration,
}

impl RankedResult {
    /// Equality ignoring latency.
    pub fn same_ranking(&self, other: &Self) -> bool {
        self.order == other.order
            && self.scores.len() == other.scores.len()
            && self
                .scores
                .iter()
                .zip(&other.scores)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self.components.iter().zip(&other.components).all(|(a, b)| {
                a.cos.to_bits() == b.cos.to_bits() && a.geo.to_bits() == b.geo.to_bits()
            })
    }
}

/// Pool index of the anchor node: the top-1 candidate by query cosine.
pub fn select_anchor(pool: &CandidatePool) -> Result<usize> {
    if pool.is_empty() {
        return Err(Error::Empty("candidate pool"));
    }
    Ok(0)
}

/// Candidate order by descending score, ties by ascending pool position.
pub fn order_by_score(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Geodesic reranking of a candidate pool.
pub fn rerank(pool: &CandidatePool, cfg: &RerankConfig) -> Result<RankedResult> {
    let start = Instant::now();
    cfg.validate()?;
    let sims = pairwise_similarities(pool)?;
    let graph = build_knn_graph(&sims, cfg.k)?;
    let anchor = select_anchor(pool)?;
    let dist = dijkstra_from_anchor(&graph, anchor)?;
    let geo = geodesic_similarity(&dist, cfg.variant);
    let cos = pool.query_scores();
    let scores = hybrid_score(cos, &geo, cfg.alpha)?;
    let order = order_by_score(&scores);
    let result = RankedResult {
        scores: order.iter().map(|&i| scores[i]).collect(),
        components: order
            .iter()
            .map(|&i| ScoreComponents {
                cos: cos[i],
                geo: geo[i],
            })
            .collect(),
        order,
        latency: Duration::ZERO,
    };
    Ok(RankedResult {
        latency: start.elapsed(),
        ..result
    })
}
