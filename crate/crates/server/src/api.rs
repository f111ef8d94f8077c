use std::path::{Component, Path as FsPath};
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use guideqa_core::benchharness::{
    bundled_dataset, load_dataset, BenchmarkDataset, EvaluationReport, HumanRating, ReportFormat,
};
use guideqa_core::docstore::{ingest_document, SourceFormat};
use guideqa_core::ragchat::{ContextHit, Corpus};
use serde::{Deserialize, Serialize};
use serde_json::json;
use subtle::ConstantTimeEq;

use crate::error::ApiError;
use crate::state::{progress_of, AppState, RunState};

type AppResult<T> = Result<T, ApiError>;

/// Every route except `/api/health` requires `Authorization: Bearer <token>`.
pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.config.max_upload_bytes;
    let protected = Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{session_id}", get(get_session))
        .route("/api/sessions/{session_id}/query", post(query))
        .route("/api/documents", post(upload_document).get(list_documents))
        .route("/api/models", get(list_models))
        .route("/api/benchmark/run", post(start_benchmark))
        .route("/api/benchmark/{run_id}", get(benchmark_status))
        .route("/api/benchmark/{run_id}/report", get(benchmark_report))
        .route("/api/ratings", post(rate))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .layer(middleware::from_fn_with_state(state.clone(), require_token));
    Router::new()
        .route(
            "/api/health",
            get(|| async { Json(json!({ "status": "ok" })) }),
        )
        .merge(protected)
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

async fn require_token(
    State(state): State<Arc<AppState>>,
    request: Request,
    next: Next,
) -> Response {
    let presented = request
        .headers()
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    match presented {
        Some(token) if bool::from(token.as_bytes().ct_eq(state.token().as_bytes())) => {
            next.run(request).await
        }
        _ => ApiError::unauthorized().into_response(),
    }
}

fn json_body<T>(body: Result<Json<T>, JsonRejection>) -> AppResult<T> {
    body.map(|Json(v)| v).map_err(ApiError::from)
}

#[derive(Serialize)]
struct SessionInfo {
    session_id: String,
    doc_ids: Vec<String>,
    chunks: usize,
    turns: usize,
}

async fn create_session(State(state): State<Arc<AppState>>) -> impl IntoResponse {
    let (session_id, _) = state.create_session().await;
    (
        StatusCode::CREATED,
        Json(json!({ "session_id": session_id })),
    )
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> AppResult<Json<SessionInfo>> {
    let handle = state.session(&id).await?;
    let session = handle.lock().await;
    Ok(Json(SessionInfo {
        session_id: session.session_id.clone(),
        doc_ids: session.doc_ids.clone(),
        chunks: session.corpus().len(),
        turns: session.history.len(),
    }))
}

#[derive(Serialize)]
struct UploadResponse {
    doc_id: String,
    session_id: String,
    title: String,
    source_format: SourceFormat,
    pages: usize,
    chunks: usize,
}

/// Multipart fields: `file` (required, named `*.pdf`, `*.txt` or `*.md`),
/// `title` and `session_id` (both optional). Without a session id a new
/// session is created.
async fn upload_document(
    State(state): State<Arc<AppState>>,
    mut form: Multipart,
) -> AppResult<Response> {
    let mut file: Option<(String, Vec<u8>)> = None;
    let mut title = None;
    let mut session_id = None;
    while let Some(field) = form.next_field().await? {
        match field.name() {
            Some("file") => {
                let name = field.file_name().unwrap_or_default().to_string();
                file = Some((name, field.bytes().await?.to_vec()));
            }
            Some("title") => title = Some(field.text().await?),
            Some("session_id") => session_id = Some(field.text().await?),
            _ => {}
        }
    }
    let (file_name, bytes) =
        file.ok_or_else(|| ApiError::bad_request("multipart field `file` is required"))?;
    let format = SourceFormat::from_file_name(&file_name)?;
    let title = title
        .filter(|t| !t.trim().is_empty())
        .unwrap_or_else(|| file_name.clone());

    let handle = match session_id.filter(|s| !s.is_empty()) {
        Some(id) => state.session(&id).await?,
        None => state.create_session().await.1,
    };
    let doc = tokio::task::spawn_blocking(move || ingest_document(&bytes, format, &title))
        .await
        .map_err(|e| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
        })??;

    let mut session = handle.lock().await;
    let chunks = session
        .add_document(
            &doc,
            &state.config.chunking,
            state.engine.embedder().as_ref(),
        )
        .await?;
    let doc = state.catalog.insert(doc)?;
    tracing::info!(doc_id = %doc.doc_id, chunks, "document ingested");
    let body = UploadResponse {
        doc_id: doc.doc_id.clone(),
        session_id: session.session_id.clone(),
        title: doc.title.clone(),
        source_format: doc.source_format,
        pages: doc.pages(),
        chunks,
    };
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn list_documents(State(state): State<Arc<AppState>>) -> impl IntoResponse {
    let docs: Vec<_> = state
        .catalog
        .list()
        .iter()
        .map(|d| {
            json!({
                "doc_id": d.doc_id,
                "title": d.title,
                "source_format": d.source_format,
                "pages": d.pages(),
                "chars": d.char_len(),
                "created_at": d.created_at,
            })
        })
        .collect();
    Json(docs)
}

async fn list_models(State(state): State<Arc<AppState>>) -> impl IntoResponse {
    let models: Vec<_> = state
        .engine
        .list_models()
        .iter()
        .map(|m| json!({ "model_id": m.model_id, "label": m.label(), "kind": m.kind }))
        .collect();
    Json(models)
}

#[derive(Deserialize)]
struct QueryRequest {
    question: String,
    model_id: String,
    k: Option<usize>,
}

#[derive(Serialize)]
struct QueryResponse {
    answer: String,
    model_id: String,
    contexts: Vec<ContextHit>,
    latency_s: f64,
    retrieval_s: f64,
}

async fn query(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<QueryRequest>, JsonRejection>,
) -> AppResult<Json<QueryResponse>> {
    let req = json_body(body)?;
    let handle = state.session(&id).await?;
    let mut session = handle.lock().await;
    let answer = state
        .engine
        .answer_query(&mut session, &req.question, &req.model_id, req.k)
        .await?;
    Ok(Json(QueryResponse {
        answer: answer.text,
        model_id: answer.model_id,
        contexts: answer.hits,
        latency_s: answer.latency_s,
        retrieval_s: answer.retrieval_s,
    }))
}

#[derive(Deserialize)]
struct BenchmarkRequest {
    /// Inline dataset; takes precedence over `dataset_path`.
    dataset: Option<BenchmarkDataset>,
    /// Path relative to `<data_dir>/datasets`. The bundled dataset is used
    /// when neither is given.
    dataset_path: Option<String>,
    model_ids: Vec<String>,
    /// Corpus to retrieve from; an empty corpus otherwise.
    session_id: Option<String>,
    #[serde(default = "strict_default")]
    strict: bool,
    #[serde(default = "one")]
    concurrency: usize,
}

fn strict_default() -> bool {
    true
}

fn one() -> usize {
    1
}

fn dataset_file(state: &AppState, rel: &str) -> AppResult<std::path::PathBuf> {
    let rel = FsPath::new(rel);
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return Err(ApiError::bad_request(
            "dataset_path must be a plain relative path",
        ));
    }
    Ok(state.config.data_dir.join("datasets").join(rel))
}

async fn start_benchmark(
    State(state): State<Arc<AppState>>,
    body: Result<Json<BenchmarkRequest>, JsonRejection>,
) -> AppResult<Response> {
    let req = json_body(body)?;
    let dataset = match (req.dataset, req.dataset_path) {
        (Some(ds), _) => {
            ds.validate(req.strict)?;
            ds
        }
        (None, Some(rel)) => load_dataset(&dataset_file(&state, &rel)?, req.strict)?,
        (None, None) => {
            let ds = bundled_dataset();
            ds.validate(req.strict)?;
            ds
        }
    };
    if dataset.items.is_empty() {
        return Err(ApiError::unprocessable("dataset has no items"));
    }
    let corpus = match req.session_id {
        Some(id) => state.session(&id).await?.lock().await.corpus(),
        None => Arc::new(Corpus::new(state.engine.embedder().dim())),
    };
    let (run_id, total) = state
        .start_benchmark(dataset, req.model_ids, corpus, req.concurrency)
        .await?;
    Ok((
        StatusCode::ACCEPTED,
        Json(json!({ "run_id": run_id, "total": total })),
    )
        .into_response())
}

async fn benchmark_status(
    State(state): State<Arc<AppState>>,
    Path(run_id): Path<String>,
) -> AppResult<Response> {
    let body = state
        .with_run(&run_id, |run| {
            let (completed, total) = progress_of(run);
            let (status, error) = match run {
                RunState::Running { .. } => ("running", None),
                RunState::Done(_) => ("done", None),
                RunState::Failed(msg) => ("failed", Some(msg.clone())),
            };
            json!({ "run_id": run_id, "status": status, "completed": completed, "total": total, "error": error })
        })
        .await?;
    Ok(Json(body).into_response())
}

#[derive(Deserialize)]
struct ReportQuery {
    format: Option<String>,
}

async fn benchmark_report(
    State(state): State<Arc<AppState>>,
    Path(run_id): Path<String>,
    Query(q): Query<ReportQuery>,
) -> AppResult<Response> {
    let format: ReportFormat = q
        .format
        .as_deref()
        .unwrap_or("md")
        .parse()
        .map_err(ApiError::bad_request)?;
    let outcome = state
        .with_run(&run_id, |run| match run {
            RunState::Running { .. } => Ok(None),
            RunState::Failed(msg) => Err(ApiError::new(
                StatusCode::CONFLICT,
                "run_failed",
                msg.clone(),
            )),
            RunState::Done(run) => EvaluationReport::from_run(run)
                .map(Some)
                .map_err(ApiError::from),
        })
        .await??;
    match outcome {
        None => Ok((
            StatusCode::ACCEPTED,
            Json(json!({ "run_id": run_id, "status": "running" })),
        )
            .into_response()),
        Some(report) => Ok((
            [(header::CONTENT_TYPE, format.content_type())],
            report.render(format),
        )
            .into_response()),
    }
}

#[derive(Deserialize)]
struct RatingRequest {
    record_id: String,
    rater_id: String,
    fidelity_pct: f64,
    relevance_pct: f64,
}

async fn rate(
    State(state): State<Arc<AppState>>,
    body: Result<Json<RatingRequest>, JsonRejection>,
) -> AppResult<StatusCode> {
    let req = json_body(body)?;
    if req.rater_id.trim().is_empty() {
        return Err(ApiError::unprocessable("rater_id is empty"));
    }
    state
        .rate(HumanRating::new(
            req.record_id,
            req.rater_id,
            req.fidelity_pct,
            req.relevance_pct,
        ))
        .await?;
    Ok(StatusCode::NO_CONTENT)
}
