//! Geodesic reranking for dense retrieval.
//!
//! A query first retrieves its top-M candidates by cosine similarity
//! ([`telescope`]). The candidates are then linked into a k-NN graph, shortest
//! paths are taken from the top-1 candidate, and each candidate's final score
//! blends its query cosine with its geodesic closeness to that anchor
//! ([`manifold`]).

pub mod bench;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod harness;
pub mod manifold;
pub mod metrics;
pub mod service;
pub mod synthgen;
pub mod telescope;

pub use embedding::{
    cosine_similarity, load_embeddings, normalize, pairwise_similarities, EmbeddingMatrix,
    QueryEmbedding, SimilarityMatrix,
};
pub use error::{Error, Result};
pub use manifold::{rerank, GeodesicVariant, RankedResult, RerankConfig};
pub use telescope::{retrieve_top_m, CandidatePool};
