//! Stateless HTTP reranking endpoint.
//!
//! `POST /v1/rerank` takes a query vector and candidate vectors, orders the
//! candidates by query cosine, reranks them, and returns the ranking.
//! `GET /healthz` reports readiness and the build version.
//!
//! Request:
//!
//! ```json
//! {"query_vector": [..], "candidates": [{"id": "a", "vector": [..]}],
//!  "k": 5, "alpha": 0.5, "variant": "eq3"}
//! ```
//!
//! `k`, `alpha` and `variant` are optional. Response:
//!
//! ```json
//! {"ranked": [{"id": "a", "score": 0.9, "cos": 0.8, "geo": 1.0}],
//!  "latency_ms": 0.12, "config_echo": {"k": 5, "alpha": 0.5, "variant": "eq3"}}
//! ```
//!
//! Scores are emitted as 32-bit floats in shortest round-trip form.
//! Validation failures return 400 with one entry per offending field.

use std::net::SocketAddr;

use axum::body::Bytes;
use axum::extract::DefaultBodyLimit;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::embedding::norm_f64;
use crate::manifold::{rerank, GeodesicVariant, RerankConfig};
use crate::telescope::rank_candidates;

pub const MAX_CANDIDATES: usize = 1000;
pub const DEFAULT_BODY_LIMIT: usize = 8 * 1024 * 1024;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateInput {
    pub id: String,
    pub vector: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankRequest {
    pub query_vector: Vec<f32>,
    pub candidates: Vec<CandidateInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub id: String,
    pub score: f32,
    pub cos: f32,
    pub geo: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankResponse {
    pub ranked: Vec<RankedCandidate>,
    pub latency_ms: f64,
    pub config_echo: RerankConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub details: Vec<FieldError>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ServiceError {
    Validation(Vec<FieldError>),
    Malformed(String),
    Internal(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::Validation(_) | ServiceError::Malformed(_) => StatusCode::BAD_REQUEST,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn body(self) -> ErrorBody {
        match self {
            ServiceError::Validation(details) => ErrorBody {
                error: "validation failed".into(),
                details,
            },
            ServiceError::Malformed(msg) => ErrorBody {
                error: format!("malformed request: {msg}"),
                details: vec![],
            },
            ServiceError::Internal(msg) => ErrorBody {
                error: format!("internal error: {msg}"),
                details: vec![],
            },
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.body())).into_response()
    }
}

fn check_vector(field: &str, v: &[f32], errors: &mut Vec<FieldError>) {
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        errors.push(FieldError::new(
            field,
            format!("non-finite value at index {i}"),
        ));
    } else if norm_f64(v) == 0.0 {
        errors.push(FieldError::new(field, "vector has zero norm"));
    }
}

/// Checks a request and resolves defaults.
pub fn validate_request(req: &RerankRequest) -> Result<RerankConfig, Vec<FieldError>> {
    let mut errors = Vec::new();
    let dim = req.query_vector.len();
    if dim == 0 {
        errors.push(FieldError::new("query_vector", "must not be empty"));
    } else {
        check_vector("query_vector", &req.query_vector, &mut errors);
    }

    let n = req.candidates.len();
    if n == 0 || n > MAX_CANDIDATES {
        errors.push(FieldError::new(
            "candidates",
            format!("expected 1..={MAX_CANDIDATES} candidates, got {n}"),
        ));
    }
    for (i, c) in req.candidates.iter().enumerate() {
        if c.id.is_empty() {
            errors.push(FieldError::new(
                format!("candidates[{i}].id"),
                "must not be empty",
            ));
        }
        let field = format!("candidates[{i}].vector");
        if c.vector.len() != dim {
            errors.push(FieldError::new(
                field,
                format!(
                    "candidate {:?} has dimension {}, query has {dim}",
                    c.id,
                    c.vector.len()
                ),
            ));
        } else if dim > 0 {
            check_vector(&field, &c.vector, &mut errors);
        }
    }

    let mut cfg = RerankConfig::default();
    if let Some(k) = req.k {
        if k == 0 {
            errors.push(FieldError::new("k", "must be at least 1"));
        }
        cfg.k = k;
    }
    if let Some(alpha) = req.alpha {
        if !(0.0..=1.0).contains(&alpha) {
            errors.push(FieldError::new("alpha", "must be within [0, 1]"));
        }
        cfg.alpha = alpha;
    }
    if let Some(v) = &req.variant {
        match v.parse::<GeodesicVariant>() {
            Ok(v) => cfg.variant = v,
            Err(e) => errors.push(FieldError::new("variant", e.to_string())),
        }
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}

/// Request handler logic, independent of the HTTP layer.
pub fn handle_rerank(req: &RerankRequest) -> Result<RerankResponse, ServiceError> {
    let cfg = validate_request(req).map_err(ServiceError::Validation)?;
    let dim = req.query_vector.len();
    let ids: Vec<String> = req.candidates.iter().map(|c| c.id.clone()).collect();
    let rows: Vec<f32> = req
        .candidates
        .iter()
        .flat_map(|c| c.vector.iter().copied())
        .collect();
    let internal = |e: crate::Error| ServiceError::Internal(e.to_string());
    let pool = rank_candidates(&req.query_vector, ids, &rows, dim).map_err(internal)?;
    let result = rerank(&pool, &cfg).map_err(internal)?;
    let ranked = result
        .order
        .iter()
        .zip(&result.scores)
        .zip(&result.components)
        .map(|((&i, &score), comp)| RankedCandidate {
            id: pool.ids()[i].clone(),
            score: score as f32,
            cos: comp.cos as f32,
            geo: comp.geo as f32,
        })
        .collect();
    Ok(RerankResponse {
        ranked,
        latency_ms: result.latency.as_secs_f64() * 1e3,
        config_echo: cfg,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthStatus {
    pub status: String,
    pub version: String,
    pub ready: bool,
}

pub fn handle_health() -> HealthStatus {
    HealthStatus {
        status: "ok".into(),
        version: VERSION.into(),
        ready: true,
    }
}

async fn rerank_endpoint(body: Bytes) -> Result<Json<RerankResponse>, ServiceError> {
    // Parsing large bodies and the pipeline are both CPU-bound; keep them off
    // the async workers so health checks stay responsive.
    tokio::task::spawn_blocking(move || {
        let req: RerankRequest =
            serde_json::from_slice(&body).map_err(|e| ServiceError::Malformed(e.to_string()))?;
        handle_rerank(&req)
    })
    .await
    .map_err(|e| ServiceError::Internal(e.to_string()))?
    .map(Json)
}

async fn health_endpoint() -> Json<HealthStatus> {
    Json(handle_health())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceConfig {
    pub body_limit: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            body_limit: DEFAULT_BODY_LIMIT,
        }
    }
}

pub fn router(cfg: ServiceConfig) -> Router {
    Router::new()
        .route("/v1/rerank", post(rerank_endpoint))
        .route("/healthz", get(health_endpoint))
        .layer(DefaultBodyLimit::max(cfg.body_limit))
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
    log::info!("shutdown requested; draining in-flight requests");
}

/// Serves until SIGINT/SIGTERM, then drains in-flight requests.
pub async fn serve(addr: SocketAddr, cfg: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(cfg))
        .with_graceful_shutdown(shutdown_signal())
        .await
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(candidates: Vec<(&str, Vec<f32>)>) -> RerankRequest {
        RerankRequest {
            query_vector: vec![1.0, 0.0, 0.0],
            candidates: candidates
                .into_iter()
                .map(|(id, vector)| CandidateInput {
                    id: id.into(),
                    vector,
                })
                .collect(),
            k: None,
            alpha: None,
            variant: None,
        }
    }

    #[test]
    fn single_candidate() {
        let r = handle_rerank(&req(vec![("only", vec![0.6, 0.8, 0.0])])).unwrap();
        assert_eq!(r.ranked.len(), 1);
        assert_eq!(r.ranked[0].id, "only");
        let expected = (0.5 * 0.6f64 + 0.5) as f32;
        assert_eq!(r.ranked[0].score, expected);
        assert_eq!(r.config_echo, RerankConfig::default());
    }

    #[test]
    fn mismatched_dims_name_the_candidate() {
        let err = handle_rerank(&req(vec![
            ("good", vec![1.0, 0.0, 0.0]),
            ("bad", vec![1.0, 0.0]),
        ]))
        .unwrap_err();
        let ServiceError::Validation(details) = err else {
            panic!("{err:?}")
        };
        assert_eq!(details.len(), 1);
        assert_eq!(details[0].field, "candidates[1].vector");
        assert!(details[0].message.contains("\"bad\""));
    }

    #[test]
    fn collects_all_field_errors() {
        let mut r = req(vec![]);
        r.query_vector = vec![0.0, 0.0, 0.0];
        r.k = Some(0);
        r.alpha = Some(2.0);
        r.variant = Some("pagerank".into());
        let Err(details) = validate_request(&r) else {
            panic!()
        };
        let fields: Vec<&str> = details.iter().map(|d| d.field.as_str()).collect();
        assert_eq!(
            fields,
            vec!["query_vector", "candidates", "k", "alpha", "variant"]
        );
    }

    #[test]
    fn too_many_candidates() {
        let many = (0..MAX_CANDIDATES + 1)
            .map(|i| CandidateInput {
                id: i.to_string(),
                vector: vec![1.0, 0.0, 0.0],
            })
            .collect();
        let r = RerankRequest {
            candidates: many,
            ..req(vec![])
        };
        assert!(validate_request(&r).is_err());
    }

    #[test]
    fn duplicate_ids_are_kept() {
        let r = handle_rerank(&req(vec![
            ("x", vec![1.0, 0.0, 0.0]),
            ("x", vec![0.0, 1.0, 0.0]),
        ]))
        .unwrap();
        assert_eq!(r.ranked.iter().filter(|c| c.id == "x").count(), 2);
    }

    #[test]
    fn health() {
        let h = handle_health();
        assert_eq!(h.status, "ok");
        assert_eq!(h.version, env!("CARGO_PKG_VERSION"));
    }
}
