//! Latency measurement of the rerank stage on synthetic pools.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::embedding::{pairwise_similarities, QueryEmbedding};
use crate::error::{Error, Result};
use crate::manifold::{
    build_knn_graph, dijkstra_from_anchor, naive_dense_geodesics, rerank, GeodesicVariant,
    RerankConfig,
};
use crate::metrics::{latency_stats, nearest_rank, LatencyStats};
use crate::synthgen::{generate, SynthSpec};
use crate::telescope::{retrieve_top_m, CandidatePool};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchParams {
    pub m: usize,
    pub dim: usize,
    pub k: usize,
    pub alpha: f64,
    pub variant: GeodesicVariant,
    pub queries: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl Default for BenchParams {
    fn default() -> Self {
        Self {
            m: 100,
            dim: 384,
            k: 5,
            alpha: 0.5,
            variant: GeodesicVariant::Eq3MaxNorm,
            queries: 1000,
            warmup: 5,
            seed: 2024,
        }
    }
}

const BENCH_CLUSTERS: usize = 5;

/// Synthetic pools of size `m`: five chain clusters of `m` documents each,
/// queries spread evenly over the cluster heads.
pub fn bench_pools(params: &BenchParams) -> Result<Vec<CandidatePool>> {
    if params.queries == 0 {
        return Err(Error::NoQueries);
    }
    let spec = SynthSpec {
        clusters: BENCH_CLUSTERS,
        per_cluster: params.m.max(1),
        dim: params.dim,
        chain_step: 0.02,
        noise_sigma: 0.05,
        seed: params.seed,
        head_angle: SynthSpec::DEFAULT_HEAD_ANGLE,
        queries_per_cluster: params.queries.div_ceil(BENCH_CLUSTERS),
    };
    let data = generate(&spec)?;
    (0..params.queries)
        .map(|i| {
            let q = QueryEmbedding::new(data.queries.row(i).to_vec())?;
            retrieve_top_m(&q, &data.corpus, params.m)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyBenchmark {
    pub params: BenchParams,
    pub stats: LatencyStats,
    pub min_ms: f64,
    pub max_ms: f64,
    pub p99_ms: f64,
}

/// Times `params.queries` rerank calls after `params.warmup` untimed ones.
pub fn latency_benchmark(params: &BenchParams) -> Result<LatencyBenchmark> {
    let pools = bench_pools(params)?;
    let cfg = RerankConfig {
        k: params.k,
        alpha: params.alpha,
        variant: params.variant,
    };
    for pool in pools.iter().cycle().take(params.warmup) {
        rerank(pool, &cfg)?;
    }
    let mut samples = Vec::with_capacity(pools.len());
    for pool in &pools {
        samples.push(rerank(pool, &cfg)?.latency.as_secs_f64() * 1e3);
    }
    let stats = latency_stats(&samples)?;
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(LatencyBenchmark {
        params: params.clone(),
        stats,
        min_ms: sorted[0],
        max_ms: sorted[sorted.len() - 1],
        p99_ms: nearest_rank(&sorted, 99.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderComparison {
    pub m: usize,
    pub k: usize,
    pub reps: usize,
    /// Median time of the dense reference (O(M³) membership + scan Dijkstra).
    pub naive_median_ms: f64,
    /// Median time of CSR construction + heap Dijkstra.
    pub sparse_median_ms: f64,
}

impl LadderComparison {
    pub fn speedup(&self) -> f64 {
        self.naive_median_ms / self.sparse_median_ms
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    nearest_rank(&xs, 50.0)
}

/// Times the graph + shortest-path stage both ways on the same similarity
/// matrices. Fails if the two paths disagree.
pub fn ladder_comparison(params: &BenchParams, reps: usize) -> Result<LadderComparison> {
    let pools = bench_pools(&BenchParams {
        queries: reps.max(1),
        ..params.clone()
    })?;
    let sims = pools
        .iter()
        .map(pairwise_similarities)
        .collect::<Result<Vec<_>>>()?;

    let mut naive = Vec::with_capacity(sims.len());
    let mut sparse = Vec::with_capacity(sims.len());
    for s in &sims {
        let t = Instant::now();
        let a = naive_dense_geodesics(s, params.k, 0)?;
        naive.push(t.elapsed().as_secs_f64() * 1e3);

        let t = Instant::now();
        let g = build_knn_graph(s, params.k)?;
        let b = dijkstra_from_anchor(&g, 0)?;
        sparse.push(t.elapsed().as_secs_f64() * 1e3);

        let agree = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .all(|(x, y)| x == y || (x - y).abs() <= 1e-9);
        if !agree {
            return Err(Error::InvalidArgument(
                "dense reference and sparse path disagree".into(),
            ));
        }
    }
    Ok(LadderComparison {
        m: params.m,
        k: params.k,
        reps: sims.len(),
        naive_median_ms: median(naive),
        sparse_median_ms: median(sparse),
    })
}

/// CPU model, logical core count, OS and architecture.
pub fn hardware_description() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        })
        .unwrap_or_else(|| "unknown CPU".into());
    let cores = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    format!(
        "{cpu}, {cores} logical cores, {}/{}",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

pub fn render_benchmark_markdown(
    lat: &LatencyBenchmark,
    ladder: Option<&LadderComparison>,
) -> String {
    let p = &lat.params;
    let mut out = String::new();
    out.push_str("# Rerank latency benchmark\n\n");
    out.push_str(&format!("Hardware: {}\n\n", hardware_description()));
    out.push_str(&format!(
        "Pool M={}, D={}, k={}, alpha={}, variant={}; {} timed queries after {} warmups (seed {}).\n\n",
        p.m, p.dim, p.k, p.alpha, p.variant, p.queries, p.warmup, p.seed
    ));
    out.push_str("| Statistic | Latency (ms) |\n|---|---|\n");
    for (name, v) in [
        ("mean", lat.stats.mean),
        ("p50", lat.stats.p50),
        ("p95", lat.stats.p95),
        ("p99", lat.p99_ms),
        ("min", lat.min_ms),
        ("max", lat.max_ms),
    ] {
        out.push_str(&format!("| {name} | {v:.4} |\n"));
    }
    if let Some(l) = ladder {
        out.push_str(&format!(
            "\n## Graph + shortest-path stage (M={}, k={}, {} reps)\n\n",
            l.m, l.k, l.reps
        ));
        out.push_str("| Implementation | Median (ms) |\n|---|---|\n");
        out.push_str(&format!(
            "| dense adjacency + scan Dijkstra | {:.4} |\n",
            l.naive_median_ms
        ));
        out.push_str(&format!(
            "| CSR + binary-heap Dijkstra | {:.4} |\n",
            l.sparse_median_ms
        ));
        out.push_str(&format!("\nSpeedup: {:.1}×\n", l.speedup()));
    }
    out
}
