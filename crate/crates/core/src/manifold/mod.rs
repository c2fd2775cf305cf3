//! Stage-2 reranking: k-NN graph over the pool, anchor-sourced geodesics,
//! and the hybrid cosine/geodesic score.

pub mod geodesic;
pub mod graph;
pub mod reference;
pub mod rerank;

pub use geodesic::{
    dijkstra_from_anchor, geodesic_similarity, hybrid_score, GeodesicDistances, GeodesicVariant,
    UNREACHABLE,
};
pub use graph::{build_knn_graph, KnnGraph};
pub use reference::{dense_geodesic_oracle, naive_dense_geodesics, ORACLE_MAX_NODES};
pub use rerank::{
    order_by_score, rerank, select_anchor, RankedResult, RerankConfig, ScoreComponents,
    DEFAULT_ALPHA, DEFAULT_K,
};
