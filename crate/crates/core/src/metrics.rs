//! Ranking metrics (MRR, NDCG@k, P@k) and latency summaries.
//!
//! NDCG uses linear gain (the raw grade) and a `1 / log2(rank + 1)`
//! discount. Precision treats lists shorter than `k` as padded with
//! non-relevant items.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Graded relevance judgments for one query.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QrelSet {
    pub query_id: String,
    pub judgments: BTreeMap<String, u32>,
}

impl QrelSet {
    pub fn new(query_id: impl Into<String>) -> Self {
        Self {
            query_id: query_id.into(),
            judgments: BTreeMap::new(),
        }
    }

    pub fn with(mut self, doc_id: impl Into<String>, grade: u32) -> Self {
        self.judgments.insert(doc_id.into(), grade);
        self
    }

    pub fn grade(&self, doc_id: &str) -> u32 {
        self.judgments.get(doc_id).copied().unwrap_or(0)
    }

    pub fn has_relevant(&self) -> bool {
        self.judgments.values().any(|&g| g > 0)
    }
}

/// Parses `query_id<TAB>doc_id<TAB>grade` lines. Blank lines are skipped.
pub fn parse_qrels(text: &str) -> Result<BTreeMap<String, QrelSet>> {
    let mut out: BTreeMap<String, QrelSet> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = |why: &str| {
            Error::InvalidArgument(format!("qrels line {}: {why}: {line:?}", lineno + 1))
        };
        if fields.len() != 3 {
            return Err(bad("expected 3 tab-separated fields"));
        }
        let grade: u32 = fields[2]
            .trim()
            .parse()
            .map_err(|_| bad("grade is not a non-negative integer"))?;
        let (q, d) = (fields[0], fields[1]);
        if q.is_empty() || d.is_empty() {
            return Err(bad("empty id"));
        }
        let set = out.entry(q.to_string()).or_insert_with(|| QrelSet::new(q));
        if set.judgments.insert(d.to_string(), grade).is_some() {
            return Err(bad("duplicate judgment"));
        }
    }
    Ok(out)
}

pub fn load_qrels(path: &Path) -> Result<BTreeMap<String, QrelSet>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_qrels(&text)
}

pub fn format_qrels<'a>(sets: impl IntoIterator<Item = &'a QrelSet>) -> String {
    let mut out = String::new();
    for set in sets {
        for (doc, grade) in &set.judgments {
            out.push_str(&format!("{}\t{}\t{}\n", set.query_id, doc, grade));
        }
    }
    out
}

/// Reciprocal rank of the first item with positive grade; 0 if none.
pub fn mrr<S: AsRef<str>>(ranked_ids: &[S], qrels: &QrelSet) -> f64 {
    ranked_ids
        .iter()
        .position(|id| qrels.grade(id.as_ref()) > 0)
        .map_or(0.0, |p| 1.0 / (p as f64 + 1.0))
}

fn dcg(grades: impl Iterator<Item = u32>) -> f64 {
    grades
        .enumerate()
        .map(|(i, g)| g as f64 / (i as f64 + 2.0).log2())
        .sum()
}

pub fn ndcg_at_k<S: AsRef<str>>(ranked_ids: &[S], qrels: &QrelSet, k: usize) -> f64 {
    let mut ideal: Vec<u32> = qrels
        .judgments
        .values()
        .copied()
        .filter(|&g| g > 0)
        .collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(ideal.into_iter().take(k));
    if idcg == 0.0 {
        return 0.0;
    }
    dcg(ranked_ids.iter().take(k).map(|id| qrels.grade(id.as_ref()))) / idcg
}

pub fn precision_at_k<S: AsRef<str>>(ranked_ids: &[S], qrels: &QrelSet, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let hits = ranked_ids
        .iter()
        .take(k)
        .filter(|id| qrels.grade(id.as_ref()) > 0)
        .count();
    hits as f64 / k as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
}

/// Mean and nearest-rank percentiles of latency samples (milliseconds).
pub fn latency_stats(samples: &[f64]) -> Result<LatencyStats> {
    if samples.is_empty() {
        return Err(Error::Empty("latency samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(LatencyStats {
        mean: samples.iter().sum::<f64>() / samples.len() as f64,
        p50: nearest_rank(&sorted, 50.0),
        p95: nearest_rank(&sorted, 95.0),
    })
}

/// Nearest-rank percentile of an ascending, non-empty slice.
pub fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    let n = sorted.len();
    let rank = ((pct / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Metrics for one evaluated query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub query_id: String,
    pub mrr: f64,
    pub ndcg_at_3: f64,
    pub p_at_3: f64,
    pub latency_ms: f64,
}

impl QueryMetrics {
    pub fn evaluate<S: AsRef<str>>(ranked_ids: &[S], qrels: &QrelSet, latency_ms: f64) -> Self {
        Self {
            query_id: qrels.query_id.clone(),
            mrr: mrr(ranked_ids, qrels),
            ndcg_at_3: ndcg_at_k(ranked_ids, qrels, 3),
            p_at_3: precision_at_k(ranked_ids, qrels, 3),
            latency_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub mrr: f64,
    pub ndcg_at_3: f64,
    pub p_at_3: f64,
    pub latency_mean_ms: f64,
    pub latency_p50_ms: f64,
    pub latency_p95_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_query: Vec<QueryMetrics>,
    pub aggregates: Aggregates,
}

impl EvalReport {
    pub fn from_queries(per_query: Vec<QueryMetrics>) -> Result<Self> {
        if per_query.is_empty() {
            return Err(Error::NoQueries);
        }
        let n = per_query.len() as f64;
        let mean = |f: fn(&QueryMetrics) -> f64| per_query.iter().map(f).sum::<f64>() / n;
        let latencies: Vec<f64> = per_query.iter().map(|q| q.latency_ms).collect();
        let lat = latency_stats(&latencies)?;
        let aggregates = Aggregates {
            mrr: mean(|q| q.mrr),
            ndcg_at_3: mean(|q| q.ndcg_at_3),
            p_at_3: mean(|q| q.p_at_3),
            latency_mean_ms: lat.mean,
            latency_p50_ms: lat.p50,
            latency_p95_ms: lat.p95,
        };
        Ok(Self {
            per_query,
            aggregates,
        })
    }

    /// Zeroes every latency field so reports can be compared byte-for-byte.
    pub fn mask_latency(&mut self) {
        for q in &mut self.per_query {
            q.latency_ms = 0.0;
        }
        self.aggregates.latency_mean_ms = 0.0;
        self.aggregates.latency_p50_ms = 0.0;
        self.aggregates.latency_p95_ms = 0.0;
    }
}
