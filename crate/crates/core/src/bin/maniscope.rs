use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use maniscope::bench::{
    ladder_comparison, latency_benchmark, render_benchmark_markdown, BenchParams,
};
use maniscope::dataset::Dataset;
use maniscope::harness::{
    emit_report, render_report, run_eval_on, sweep_on, ReportFile, ReportFormat, RerankerKind,
    RunConfig, DEFAULT_WARMUP_QUERIES,
};
use maniscope::manifold::GeodesicVariant;
use maniscope::service::{serve, ServiceConfig, DEFAULT_BODY_LIMIT};
use maniscope::synthgen::{generate, write_dataset, SynthSpec};

#[derive(Parser)]
#[command(
    name = "maniscope",
    version,
    about = "Geodesic reranking of retrieved candidates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate rerankers on a dataset directory.
    Eval(EvalArgs),
    /// Evaluate a k × alpha grid.
    Sweep {
        #[command(flatten)]
        eval: EvalArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        k_grid: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        alpha_grid: Vec<f64>,
    },
    /// Write a synthetic chain-cluster dataset.
    Generate(GenerateArgs),
    /// Run the HTTP reranking service.
    Serve(ServeArgs),
    /// Measure rerank latency on synthetic pools.
    Bench(BenchArgs),
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "maniscope,cosine")]
    reranker: Vec<RerankerKind>,
    /// Candidate pool size retrieved by cosine before reranking.
    #[arg(long)]
    top_m: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value = "eq3")]
    variant: GeodesicVariant,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
    /// Defaults to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Recorded in the report; evaluation itself is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_WARMUP_QUERIES)]
    warmup: usize,
    /// Zero all latency fields so output is reproducible byte-for-byte.
    #[arg(long)]
    mask_latency: bool,
}

impl EvalArgs {
    fn run_config(&self) -> RunConfig {
        RunConfig {
            dataset_dir: self.dataset.clone(),
            rerankers: self.reranker.clone(),
            top_m: self.top_m,
            k: self.k,
            alpha: self.alpha,
            variant: self.variant,
            output: self.output.clone(),
            format: self.format,
            warmup_queries: self.warmup,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2)]
    clusters: usize,
    #[arg(long, default_value_t = 8)]
    per_cluster: usize,
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long, default_value_t = 0.15)]
    chain_step: f64,
    #[arg(long, default_value_t = 0.02)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = SynthSpec::DEFAULT_HEAD_ANGLE)]
    head_angle: f64,
    #[arg(long, default_value_t = 1)]
    queries_per_cluster: usize,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "MANISCOPE_BIND", default_value = "127.0.0.1")]
    bind: IpAddr,
    #[arg(long, env = "MANISCOPE_PORT", default_value_t = 8080)]
    port: u16,
    /// Maximum request body in bytes.
    #[arg(long, env = "MANISCOPE_BODY_LIMIT", default_value_t = DEFAULT_BODY_LIMIT)]
    body_limit: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 384)]
    dim: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value = "eq3")]
    variant: GeodesicVariant,
    #[arg(long, default_value_t = 1000)]
    queries: usize,
    #[arg(long, default_value_t = 5)]
    warmup: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Repetitions for the dense-vs-sparse comparison; 0 skips it.
    #[arg(long, default_value_t = 200)]
    ladder_reps: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn write_output(
    report: &ReportFile,
    format: ReportFormat,
    output: Option<&PathBuf>,
) -> anyhow::Result<()> {
    match output {
        Some(path) => emit_report(report, format, path)
            .with_context(|| format!("writing report to {}", path.display())),
        None => {
            print!("{}", render_report(report, format)?);
            Ok(())
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Eval(args) => {
            let cfg = args.run_config();
            let dataset = Dataset::load(&cfg.dataset_dir)
                .with_context(|| format!("loading dataset {}", cfg.dataset_dir.display()))?;
            let runs = run_eval_on(&dataset, &Dataset::name_from_dir(&cfg.dataset_dir), &cfg)?;
            let mut report = ReportFile::new(runs, cfg.seed);
            if args.mask_latency {
                report.mask_latency();
            }
            write_output(&report, cfg.format, cfg.output.as_ref())
        }
        Command::Sweep {
            eval,
            k_grid,
            alpha_grid,
        } => {
            let cfg = eval.run_config();
            let dataset = Dataset::load(&cfg.dataset_dir)
                .with_context(|| format!("loading dataset {}", cfg.dataset_dir.display()))?;
            let name = Dataset::name_from_dir(&cfg.dataset_dir);
            let cells = sweep_on(&dataset, &name, &cfg, &k_grid, &alpha_grid)?;
            let runs = cells.into_iter().flat_map(|c| c.reports).collect();
            let mut report = ReportFile::new(runs, cfg.seed);
            if eval.mask_latency {
                report.mask_latency();
            }
            write_output(&report, cfg.format, cfg.output.as_ref())
        }
        Command::Generate(a) => {
            let spec = SynthSpec {
                clusters: a.clusters,
                per_cluster: a.per_cluster,
                dim: a.dim,
                chain_step: a.chain_step,
                noise_sigma: a.noise_sigma,
                seed: a.seed,
                head_angle: a.head_angle,
                queries_per_cluster: a.queries_per_cluster,
            };
            let data = generate(&spec)?;
            write_dataset(&data, Some(&spec), &a.out)
                .with_context(|| format!("writing dataset to {}", a.out.display()))?;
            eprintln!(
                "wrote {} documents and {} queries to {}",
                data.corpus.count(),
                data.queries.count(),
                a.out.display()
            );
            Ok(())
        }
        Command::Serve(a) => {
            let addr = SocketAddr::new(a.bind, a.port);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(
                addr,
                ServiceConfig {
                    body_limit: a.body_limit,
                },
            ))
            .with_context(|| format!("serving on {addr}"))
        }
        Command::Bench(a) => {
            let params = BenchParams {
                m: a.m,
                dim: a.dim,
                k: a.k,
                alpha: a.alpha,
                variant: a.variant,
                queries: a.queries,
                warmup: a.warmup,
                seed: a.seed,
            };
            let lat = latency_benchmark(&params)?;
            let ladder = if a.ladder_reps > 0 {
                Some(ladder_comparison(&params, a.ladder_reps)?)
            } else {
                None
            };
            let md = render_benchmark_markdown(&lat, ladder.as_ref());
            match a.output {
                Some(p) => {
                    std::fs::write(&p, md).with_context(|| format!("writing {}", p.display()))?
                }
                None => print!("{md}"),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
