use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::http::StatusCode;
use guideqa_core::benchharness::{
    run_benchmark, BenchOptions, BenchmarkDataset, BenchmarkRun, HumanRating,
};
use guideqa_core::docstore::DocumentCatalog;
use guideqa_core::embedindex::build_embedder;
use guideqa_core::ragchat::{Corpus, ModelRegistry, RagEngine, Session};
use tokio::sync::{Mutex, RwLock};

use crate::config::ServerConfig;
use crate::error::ApiError;

pub enum RunState {
    Running {
        progress: Arc<AtomicUsize>,
        total: usize,
    },
    Done(Box<BenchmarkRun>),
    Failed(String),
}

/// Everything the handlers share.
pub struct AppState {
    pub config: ServerConfig,
    pub engine: Arc<RagEngine>,
    pub catalog: DocumentCatalog,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    runs: RwLock<HashMap<String, RunState>>,
    active_run: Mutex<Option<String>>,
    token: String,
}

pub fn runs_dir(config: &ServerConfig) -> PathBuf {
    config.data_dir.join("runs")
}

pub fn documents_dir(config: &ServerConfig) -> PathBuf {
    config.data_dir.join("documents")
}

/// Builds the query engine a config describes.
pub fn build_engine(config: &ServerConfig) -> anyhow::Result<RagEngine> {
    let embedder = build_embedder(&config.embedder)?;
    let models = ModelRegistry::from_configs(&config.backends)?;
    Ok(RagEngine::new(
        embedder,
        models,
        config.prompt.clone(),
        config.chat,
    )?)
}

impl AppState {
    /// Opens the document catalog and earlier benchmark runs under
    /// `config.data_dir`.
    pub fn new(config: ServerConfig, token: String) -> anyhow::Result<Self> {
        anyhow::ensure!(!token.is_empty(), "bearer token is empty");
        config.validate()?;
        let engine = Arc::new(build_engine(&config)?);
        let catalog = DocumentCatalog::open(documents_dir(&config))?;
        let mut runs = HashMap::new();
        let dir = runs_dir(&config);
        if dir.is_dir() {
            for entry in std::fs::read_dir(&dir)? {
                let path = entry?.path();
                if path.extension().and_then(|e| e.to_str()) == Some("json") {
                    let run = BenchmarkRun::load(&path)?;
                    runs.insert(run.run_id.clone(), RunState::Done(Box::new(run)));
                }
            }
        }
        Ok(Self {
            config,
            engine,
            catalog,
            sessions: RwLock::new(HashMap::new()),
            runs: RwLock::new(runs),
            active_run: Mutex::new(None),
            token,
        })
    }

    pub fn token(&self) -> &str {
        &self.token
    }

    pub async fn create_session(&self) -> (String, Arc<Mutex<Session>>) {
        let session = self.engine.new_session();
        let id = session.session_id.clone();
        let handle = Arc::new(Mutex::new(session));
        self.sessions
            .write()
            .await
            .insert(id.clone(), handle.clone());
        (id, handle)
    }

    pub async fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session {id}")))
    }

    /// Starts a background run. Only one run may be active at a time.
    pub async fn start_benchmark(
        self: &Arc<Self>,
        dataset: BenchmarkDataset,
        model_ids: Vec<String>,
        corpus: Arc<Corpus>,
        concurrency: usize,
    ) -> Result<(String, usize), ApiError> {
        if model_ids.is_empty() {
            return Err(ApiError::bad_request("model_ids is empty"));
        }
        if let Some(unknown) = model_ids
            .iter()
            .find(|id| self.engine.models().get(id).is_none())
        {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "unknown_model",
                format!("unknown model: {unknown}"),
            ));
        }
        if concurrency == 0 {
            return Err(ApiError::bad_request("concurrency must be positive"));
        }
        let mut active = self.active_run.lock().await;
        if let Some(running) = active.as_ref() {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "run_in_progress",
                format!("benchmark {running} is still running"),
            ));
        }
        let run_id = uuid::Uuid::new_v4().to_string();
        let total = dataset.items.len() * model_ids.len();
        let progress = Arc::new(AtomicUsize::new(0));
        self.runs.write().await.insert(
            run_id.clone(),
            RunState::Running {
                progress: progress.clone(),
                total,
            },
        );
        *active = Some(run_id.clone());
        drop(active);

        let opts = BenchOptions {
            chrf: self.config.chrf,
            k: self.config.chat.default_k,
            concurrency,
            run_id: Some(run_id.clone()),
            progress: Some(progress),
        };
        let state = self.clone();
        let id = run_id.clone();
        tokio::spawn(async move {
            let outcome = run_benchmark(&state.engine, &corpus, &dataset, &model_ids, &opts).await;
            let next = match outcome {
                Ok(run) => match run.save(&runs_dir(&state.config).join(format!("{id}.json"))) {
                    Ok(()) => RunState::Done(Box::new(run)),
                    Err(e) => RunState::Failed(e.to_string()),
                },
                Err(e) => RunState::Failed(e.to_string()),
            };
            if let RunState::Failed(msg) = &next {
                tracing::error!(run_id = %id, error = %msg, "benchmark failed");
            }
            state.runs.write().await.insert(id, next);
            *state.active_run.lock().await = None;
        });
        Ok((run_id, total))
    }

    /// Calls `f` with the run's current state.
    pub async fn with_run<T>(
        &self,
        run_id: &str,
        f: impl FnOnce(&RunState) -> T,
    ) -> Result<T, ApiError> {
        let runs = self.runs.read().await;
        let state = runs
            .get(run_id)
            .ok_or_else(|| ApiError::not_found(format!("unknown run {run_id}")))?;
        Ok(f(state))
    }

    /// Stores a rating on the finished run that owns the record.
    pub async fn rate(&self, rating: HumanRating) -> Result<(), ApiError> {
        rating.validate()?;
        let mut runs = self.runs.write().await;
        let run = runs
            .values_mut()
            .find_map(|state| match state {
                RunState::Done(run) if run.record(&rating.record_id).is_some() => Some(run),
                _ => None,
            })
            .ok_or_else(|| ApiError::not_found(format!("unknown record {}", rating.record_id)))?;
        run.add_rating(rating)?;
        run.save(&runs_dir(&self.config).join(format!("{}.json", run.run_id)))?;
        Ok(())
    }
}

pub fn progress_of(state: &RunState) -> (usize, usize) {
    match state {
        RunState::Running { progress, total } => (progress.load(Ordering::Relaxed), *total),
        RunState::Done(run) => (run.records.len(), run.records.len()),
        RunState::Failed(_) => (0, 0),
    }
}
