//! Evaluation driver: retrieval, optional reranking, metrics, reports.
//!
//! The canonical report is JSON:
//!
//! ```text
//! {
//!   "schema_version": 1,
//!   "seed": <u64 or null>,          // recorded only; evaluation is deterministic
//!   "runs": [{
//!     "dataset": "<dir name>",
//!     "reranker": "cosine" | "maniscope",
//!     "config": {"top_m", "k", "alpha", "variant", "warmup_queries"},
//!     "queries_evaluated": <n>,
//!     "queries_skipped": <n>,       // no qrels or no positive grade
//!     "aggregates": {"mrr", "ndcg_at_3", "p_at_3",
//!                    "latency_mean_ms", "latency_p50_ms", "latency_p95_ms"},
//!     "per_query": [{"query_id", "mrr", "ndcg_at_3", "p_at_3", "latency_ms"}]
//!   }]
//! }
//! ```
//!
//! Latency covers the rerank stage only. Warmup calls run before timing and
//! are not part of any aggregate.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::embedding::QueryEmbedding;
use crate::error::{Error, Result};
use crate::manifold::{order_by_score, rerank, GeodesicVariant, RerankConfig};
use crate::metrics::{Aggregates, EvalReport, QrelSet, QueryMetrics};
use crate::telescope::{retrieve_top_m, CandidatePool};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_WARMUP_QUERIES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RerankerKind {
    /// Query-cosine order from retrieval, unchanged.
    #[serde(rename = "cosine")]
    CosineOnly,
    #[serde(rename = "maniscope")]
    Maniscope,
}

impl RerankerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RerankerKind::CosineOnly => "cosine",
            RerankerKind::Maniscope => "maniscope",
        }
    }
}

impl fmt::Display for RerankerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RerankerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" | "cosine_only" => Ok(RerankerKind::CosineOnly),
            "maniscope" => Ok(RerankerKind::Maniscope),
            other => Err(Error::InvalidArgument(format!(
                "unknown reranker {other:?} (expected cosine or maniscope)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(Error::InvalidArgument(format!(
                "unknown report format {other:?} (expected json, csv or markdown)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset_dir: PathBuf,
    pub rerankers: Vec<RerankerKind>,
    pub top_m: usize,
    pub k: usize,
    pub alpha: f64,
    pub variant: GeodesicVariant,
    pub output: Option<PathBuf>,
    pub format: ReportFormat,
    pub warmup_queries: usize,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn new(dataset_dir: impl Into<PathBuf>, top_m: usize) -> Self {
        Self {
            dataset_dir: dataset_dir.into(),
            rerankers: vec![RerankerKind::Maniscope, RerankerKind::CosineOnly],
            top_m,
            k: crate::manifold::DEFAULT_K,
            alpha: crate::manifold::DEFAULT_ALPHA,
            variant: GeodesicVariant::Eq3MaxNorm,
            output: None,
            format: ReportFormat::Json,
            warmup_queries: DEFAULT_WARMUP_QUERIES,
            seed: None,
        }
    }

    pub fn rerank_config(&self) -> RerankConfig {
        RerankConfig {
            k: self.k,
            alpha: self.alpha,
            variant: self.variant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rerankers.is_empty() {
            return Err(Error::InvalidArgument("no rerankers selected".into()));
        }
        if self.top_m == 0 {
            return Err(Error::InvalidArgument("top_m must be positive".into()));
        }
        self.rerank_config().validate()?;
        if self.top_m < self.k + 1 {
            log::warn!(
                "top_m = {} is below k + 1 = {}; k will be clamped inside each pool",
                self.top_m,
                self.k + 1
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub top_m: usize,
    pub k: usize,
    pub alpha: f64,
    pub variant: GeodesicVariant,
    pub warmup_queries: usize,
}

/// One reranker's results on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub reranker: RerankerKind,
    pub config: RunSettings,
    pub queries_evaluated: usize,
    pub queries_skipped: usize,
    pub aggregates: Aggregates,
    pub per_query: Vec<QueryMetrics>,
}

impl RunReport {
    pub fn eval_report(&self) -> EvalReport {
        EvalReport {
            per_query: self.per_query.clone(),
            aggregates: self.aggregates.clone(),
        }
    }

    pub fn mask_latency(&mut self) {
        let mut r = self.eval_report();
        r.mask_latency();
        self.per_query = r.per_query;
        self.aggregates = r.aggregates;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub seed: Option<u64>,
    pub runs: Vec<RunReport>,
}

impl ReportFile {
    pub fn new(runs: Vec<RunReport>, seed: Option<u64>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed,
            runs,
        }
    }

    pub fn mask_latency(&mut self) {
        self.runs.iter_mut().for_each(RunReport::mask_latency);
    }
}

struct EvalQuery<'a> {
    qrels: &'a QrelSet,
    pool: CandidatePool,
}

/// Retrieves pools for every judged query; returns them with the skip count.
fn prepare_queries<'a>(dataset: &'a Dataset, top_m: usize) -> Result<(Vec<EvalQuery<'a>>, usize)> {
    let mut out = Vec::new();
    let mut skipped = 0;
    for i in 0..dataset.queries.count() {
        let qid = dataset.queries.id(i);
        let Some(qrels) = dataset.qrels.get(qid).filter(|q| q.has_relevant()) else {
            skipped += 1;
            continue;
        };
        let query = QueryEmbedding::new(dataset.queries.row(i).to_vec())?;
        let pool = retrieve_top_m(&query, &dataset.corpus, top_m)?;
        out.push(EvalQuery { qrels, pool });
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} queries without positive relevance judgments");
    }
    if out.is_empty() {
        return Err(Error::NoQueries);
    }
    Ok((out, skipped))
}

/// Ranked candidate ids plus the rerank-stage latency in milliseconds.
fn rank_pool(
    pool: &CandidatePool,
    kind: RerankerKind,
    cfg: &RerankConfig,
) -> Result<(Vec<String>, f64)> {
    match kind {
        RerankerKind::CosineOnly => {
            let start = Instant::now();
            let order = order_by_score(pool.query_scores());
            let elapsed = start.elapsed();
            let ids = order.iter().map(|&i| pool.ids()[i].clone()).collect();
            Ok((ids, elapsed.as_secs_f64() * 1e3))
        }
        RerankerKind::Maniscope => {
            let r = rerank(pool, cfg)?;
            let ids = r.order.iter().map(|&i| pool.ids()[i].clone()).collect();
            Ok((ids, r.latency.as_secs_f64() * 1e3))
        }
    }
}

/// Evaluates every configured reranker on an already-loaded dataset.
pub fn run_eval_on(dataset: &Dataset, name: &str, cfg: &RunConfig) -> Result<Vec<RunReport>> {
    cfg.validate()?;
    let (queries, skipped) = prepare_queries(dataset, cfg.top_m)?;
    evaluate_prepared(&queries, skipped, name, cfg)
}

fn evaluate_prepared(
    queries: &[EvalQuery<'_>],
    skipped: usize,
    name: &str,
    cfg: &RunConfig,
) -> Result<Vec<RunReport>> {
    let rcfg = cfg.rerank_config();
    rcfg.validate()?;
    let mut reports = Vec::with_capacity(cfg.rerankers.len());
    for &kind in &cfg.rerankers {
        for q in queries.iter().cycle().take(cfg.warmup_queries) {
            rank_pool(&q.pool, kind, &rcfg)?;
        }
        let mut per_query = Vec::with_capacity(queries.len());
        for q in queries {
            let (ids, latency_ms) = rank_pool(&q.pool, kind, &rcfg)?;
            per_query.push(QueryMetrics::evaluate(&ids, q.qrels, latency_ms));
        }
        let report = EvalReport::from_queries(per_query)?;
        reports.push(RunReport {
            dataset: name.to_string(),
            reranker: kind,
            config: RunSettings {
                top_m: cfg.top_m,
                k: cfg.k,
                alpha: cfg.alpha,
                variant: cfg.variant,
                warmup_queries: cfg.warmup_queries,
            },
            queries_evaluated: report.per_query.len(),
            queries_skipped: skipped,
            aggregates: report.aggregates,
            per_query: report.per_query,
        });
    }
    Ok(reports)
}

/// Loads `cfg.dataset_dir` and evaluates every configured reranker.
pub fn run_eval(cfg: &RunConfig) -> Result<Vec<RunReport>> {
    let dataset = Dataset::load(&cfg.dataset_dir)?;
    run_eval_on(&dataset, &Dataset::name_from_dir(&cfg.dataset_dir), cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub k: usize,
    pub alpha: f64,
    pub reports: Vec<RunReport>,
}

/// Evaluates the k × alpha grid in k-major order.
pub fn sweep_on(
    dataset: &Dataset,
    name: &str,
    cfg: &RunConfig,
    k_values: &[usize],
    alpha_values: &[f64],
) -> Result<Vec<SweepCell>> {
    if k_values.is_empty() || alpha_values.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep grids must be non-empty".into(),
        ));
    }
    cfg.validate()?;
    let (queries, skipped) = prepare_queries(dataset, cfg.top_m)?;
    let mut cells = Vec::with_capacity(k_values.len() * alpha_values.len());
    for &k in k_values {
        for &alpha in alpha_values {
            let cell_cfg = RunConfig {
                k,
                alpha,
                ..cfg.clone()
            };
            cells.push(SweepCell {
                k,
                alpha,
                reports: evaluate_prepared(&queries, skipped, name, &cell_cfg)?,
            });
        }
    }
    Ok(cells)
}

pub fn sweep(cfg: &RunConfig, k_values: &[usize], alpha_values: &[f64]) -> Result<Vec<SweepCell>> {
    let dataset = Dataset::load(&cfg.dataset_dir)?;
    sweep_on(
        &dataset,
        &Dataset::name_from_dir(&cfg.dataset_dir),
        cfg,
        k_values,
        alpha_values,
    )
}

fn reranker_label(r: &RunReport, with_params: bool) -> String {
    match r.reranker {
        RerankerKind::CosineOnly => "Cosine".to_string(),
        RerankerKind::Maniscope if with_params => format!(
            "Maniscope (k={}, α={}, {})",
            r.config.k, r.config.alpha, r.config.variant
        ),
        RerankerKind::Maniscope => "Maniscope".to_string(),
    }
}

/// Renders a report in the requested format.
pub fn render_report(report: &ReportFile, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Markdown => Ok(render_markdown(report)),
    }
}

fn render_csv(report: &ReportFile) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = [
        "dataset",
        "reranker",
        "top_m",
        "k",
        "alpha",
        "variant",
        "query_id",
        "mrr",
        "ndcg_at_3",
        "p_at_3",
        "latency_ms",
    ];
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for run in &report.runs {
        let prefix = [
            run.dataset.clone(),
            run.reranker.to_string(),
            run.config.top_m.to_string(),
            run.config.k.to_string(),
            run.config.alpha.to_string(),
            run.config.variant.to_string(),
        ];
        for q in &run.per_query {
            let row = prefix.iter().cloned().chain([
                q.query_id.clone(),
                q.mrr.to_string(),
                q.ndcg_at_3.to_string(),
                q.p_at_3.to_string(),
                q.latency_ms.to_string(),
            ]);
            w.write_record(row).map_err(csv_err)?;
        }
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn render_markdown(report: &ReportFile) -> String {
    let mut maniscope_configs: Vec<(usize, u64, GeodesicVariant)> = report
        .runs
        .iter()
        .filter(|r| r.reranker == RerankerKind::Maniscope)
        .map(|r| (r.config.k, r.config.alpha.to_bits(), r.config.variant))
        .collect();
    maniscope_configs.sort_by_key(|c| (c.0, c.1, c.2.as_str()));
    maniscope_configs.dedup();
    let with_params = maniscope_configs.len() > 1;

    let mut out = String::new();
    out.push_str("| Dataset | Reranker | MRR | NDCG@3 | P@3 | Latency (ms) |\n");
    out.push_str("|---|---|---|---|---|---|\n");
    for r in &report.runs {
        let a = &r.aggregates;
        out.push_str(&format!(
            "| {} | {} | {:.4} | {:.4} | {:.4} | {:.3} |\n",
            r.dataset,
            reranker_label(r, with_params),
            a.mrr,
            a.ndcg_at_3,
            a.p_at_3,
            a.latency_mean_ms
        ));
    }
    out
}

/// Writes `report` to `path` in `format`.
pub fn emit_report(report: &ReportFile, format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_report(report, format)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{generate, SynthSpec};

    fn fixture() -> Dataset {
        generate(&SynthSpec {
            queries_per_cluster: 3,
            ..SynthSpec::new(2, 8, 16, 7)
        })
        .unwrap()
    }

    fn cfg() -> RunConfig {
        RunConfig {
            warmup_queries: 1,
            ..RunConfig::new("unused", 16)
        }
    }

    #[test]
    fn reports_both_rerankers() {
        let runs = run_eval_on(&fixture(), "synth", &cfg()).unwrap();
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0].reranker, RerankerKind::Maniscope);
        assert_eq!(runs[1].reranker, RerankerKind::CosineOnly);
        for r in &runs {
            assert_eq!(r.queries_evaluated, 6);
            assert_eq!(r.queries_skipped, 0);
        }
    }

    #[test]
    fn alpha_one_matches_cosine() {
        let c = RunConfig {
            alpha: 1.0,
            ..cfg()
        };
        let runs = run_eval_on(&fixture(), "synth", &c).unwrap();
        for (a, b) in runs[0].per_query.iter().zip(&runs[1].per_query) {
            assert_eq!(
                (a.mrr, a.ndcg_at_3, a.p_at_3),
                (b.mrr, b.ndcg_at_3, b.p_at_3)
            );
        }
    }

    #[test]
    fn no_judged_queries_is_an_error() {
        let mut d = fixture();
        d.qrels.clear();
        let err = run_eval_on(&d, "synth", &cfg()).unwrap_err();
        assert!(matches!(err, Error::NoQueries));
        assert_eq!(err.to_string(), "no queries to evaluate");
    }

    #[test]
    fn skips_unjudged_queries() {
        let mut d = fixture();
        d.qrels.remove("q0_0");
        let runs = run_eval_on(&d, "synth", &cfg()).unwrap();
        assert_eq!(runs[0].queries_evaluated, 5);
        assert_eq!(runs[0].queries_skipped, 1);
    }

    #[test]
    fn sweep_shapes() {
        let d = fixture();
        let cells = sweep_on(&d, "synth", &cfg(), &[1, 5], &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(cells.len(), 6);
        assert_eq!(
            cells.iter().map(|c| (c.k, c.alpha)).collect::<Vec<_>>(),
            vec![(1, 0.0), (1, 0.5), (1, 1.0), (5, 0.0), (5, 0.5), (5, 1.0)]
        );
        assert!(sweep_on(&d, "synth", &cfg(), &[], &[0.5]).is_err());
    }

    #[test]
    fn markdown_shape() {
        let runs = run_eval_on(&fixture(), "synth", &cfg()).unwrap();
        let md = render_report(&ReportFile::new(runs, None), ReportFormat::Markdown).unwrap();
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("| synth | Maniscope |"));
        assert!(lines[3].starts_with("| synth | Cosine |"));
    }

    #[test]
    fn csv_has_row_per_query() {
        let runs = run_eval_on(&fixture(), "synth", &cfg()).unwrap();
        let text = render_report(&ReportFile::new(runs, None), ReportFormat::Csv).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 6);
        assert!(text.starts_with("dataset,reranker,top_m"));
    }

    #[test]
    fn parse_enums() {
        assert_eq!(
            "maniscope".parse::<RerankerKind>().unwrap(),
            RerankerKind::Maniscope
        );
        assert_eq!(
            "md".parse::<ReportFormat>().unwrap(),
            ReportFormat::Markdown
        );
        assert!("bm25".parse::<RerankerKind>().is_err());
    }
}
