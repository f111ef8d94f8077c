use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use guideqa_core::benchharness::{
    bundled_dataset, load_dataset, run_benchmark, BenchOptions, BenchmarkRun, EvaluationReport,
    HumanRating, ReportFormat,
};
use guideqa_core::docstore::{ingest_document, DocumentCatalog, SourceFormat};
use guideqa_core::ragchat::Corpus;
use guideqa_server::config::ServerConfig;
use guideqa_server::state::{build_engine, documents_dir, runs_dir};
use guideqa_server::{router, AppState};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(
    name = "guideqa",
    version,
    about = "Local guideline question answering and model benchmarking"
)]
struct Cli {
    /// JSON config file; built-in defaults otherwise.
    #[arg(long, global = true, env = "GUIDEQA_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP gateway.
    Serve,
    /// Add a PDF, text or markdown file to the local corpus.
    Ingest {
        file: PathBuf,
        #[arg(long)]
        title: Option<String>,
    },
    /// Ask one question against the local corpus.
    Ask {
        question: String,
        #[arg(long)]
        model: String,
        #[arg(long)]
        k: Option<usize>,
    },
    /// List configured model backends.
    Models,
    /// Benchmark models on a dataset (the bundled one by default).
    Bench {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Comma-separated model ids; all configured models by default.
        #[arg(long, value_delimiter = ',')]
        models: Vec<String>,
        #[arg(long, default_value_t = 1)]
        concurrency: usize,
        /// Accept datasets without the 3 x 4 group shape.
        #[arg(long)]
        no_strict: bool,
    },
    /// Render the report of a stored run.
    Report {
        run_id: String,
        #[arg(long, default_value = "md")]
        format: String,
    },
    /// Record a human rating for one benchmark record.
    Rate {
        record_id: String,
        #[arg(long)]
        rater: String,
        #[arg(long)]
        fidelity: f64,
        #[arg(long)]
        relevance: f64,
    },
}

fn corpus_dir(config: &ServerConfig) -> PathBuf {
    config.data_dir.join("corpus")
}

fn load_corpus(config: &ServerConfig) -> anyhow::Result<Corpus> {
    let dir = corpus_dir(config);
    if dir.join("chunks.json").exists() {
        let corpus = Corpus::load(&dir)?;
        if corpus.dim() != config.embedder.dim {
            bail!(
                "stored corpus has dimension {}, config says {}",
                corpus.dim(),
                config.embedder.dim
            );
        }
        Ok(corpus)
    } else {
        Ok(Corpus::new(config.embedder.dim))
    }
}

fn run_path(config: &ServerConfig, run_id: &str) -> PathBuf {
    runs_dir(config).join(format!("{run_id}.json"))
}

fn find_run_for_record(
    config: &ServerConfig,
    record_id: &str,
) -> anyhow::Result<(PathBuf, BenchmarkRun)> {
    let dir = runs_dir(config);
    if dir.is_dir() {
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) == Some("json") {
                let run = BenchmarkRun::load(&path)?;
                if run.record(record_id).is_some() {
                    return Ok((path, run));
                }
            }
        }
    }
    bail!("no stored run contains record {record_id}")
}

async fn serve(config: ServerConfig) -> anyhow::Result<()> {
    let token = std::env::var(&config.token_env).with_context(|| {
        format!(
            "set {} to the bearer token clients must present",
            config.token_env
        )
    })?;
    let addr = format!("{}:{}", config.host, config.port);
    let state = Arc::new(AppState::new(config, token)?);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .with_context(|| format!("cannot bind {addr}"))?;
    tracing::info!(%addr, "gateway listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(path) => ServerConfig::load(path)?,
        None => ServerConfig::default(),
    };

    match cli.command {
        Command::Serve => serve(config).await?,
        Command::Ingest { file, title } => {
            let bytes =
                std::fs::read(&file).with_context(|| format!("cannot read {}", file.display()))?;
            let name = file
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default();
            let format = SourceFormat::from_file_name(name)?;
            let doc = ingest_document(&bytes, format, title.as_deref().unwrap_or(name))?;
            let engine = build_engine(&config)?;
            let mut corpus = load_corpus(&config)?;
            let chunks = corpus
                .add_document(&doc, &config.chunking, engine.embedder().as_ref())
                .await?;
            corpus.save(&corpus_dir(&config))?;
            let pages = doc.pages();
            let doc = DocumentCatalog::open(documents_dir(&config))?.insert(doc)?;
            println!("{}\t{pages} page(s)\t{chunks} chunk(s)", doc.doc_id);
        }
        Command::Ask { question, model, k } => {
            let engine = build_engine(&config)?;
            let corpus = load_corpus(&config)?;
            let k = k.unwrap_or(config.chat.default_k);
            let answer = engine.answer(&corpus, &question, &model, k, &[]).await?;
            println!("{}\n", answer.text.trim_end());
            for hit in &answer.hits {
                println!("[{:.3}] {}", hit.similarity, hit.chunk_id);
            }
            println!(
                "latency {:.2} s, retrieval {:.3} s",
                answer.latency_s, answer.retrieval_s
            );
        }
        Command::Models => {
            for m in build_engine(&config)?.list_models() {
                println!("{}\t{}\t{:?}", m.model_id, m.label(), m.kind);
            }
        }
        Command::Bench {
            dataset,
            models,
            concurrency,
            no_strict,
        } => {
            let engine = build_engine(&config)?;
            let dataset = match dataset {
                Some(path) => load_dataset(&path, !no_strict)?,
                None => bundled_dataset(),
            };
            let models = if models.is_empty() {
                engine
                    .list_models()
                    .into_iter()
                    .map(|m| m.model_id)
                    .collect()
            } else {
                models
            };
            let corpus = load_corpus(&config)?;
            let opts = BenchOptions {
                chrf: config.chrf,
                k: config.chat.default_k,
                concurrency,
                ..BenchOptions::default()
            };
            let run = run_benchmark(&engine, &corpus, &dataset, &models, &opts).await?;
            run.save(&run_path(&config, &run.run_id))?;
            let failed = run.records.iter().filter(|r| r.error.is_some()).count();
            eprintln!(
                "run {} stored ({} records, {failed} failed)",
                run.run_id,
                run.records.len()
            );
            print!("{}", EvaluationReport::from_run(&run)?.to_markdown());
        }
        Command::Report { run_id, format } => {
            let format: ReportFormat = format.parse().map_err(anyhow::Error::msg)?;
            let run = BenchmarkRun::load(&run_path(&config, &run_id))?;
            print!("{}", EvaluationReport::from_run(&run)?.render(format));
        }
        Command::Rate {
            record_id,
            rater,
            fidelity,
            relevance,
        } => {
            let (path, mut run) = find_run_for_record(&config, &record_id)?;
            run.add_rating(HumanRating::new(record_id, rater, fidelity, relevance))?;
            run.save(Path::new(&path))?;
        }
    }
    Ok(())
}
