//! Query orchestration: embed the question, retrieve the top-k chunks,
//! fill the prompt template and call the selected model backend.

mod backend;
mod prompt;

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::docstore::{chunk_document, Chunk, ChunkingConfig, DocStoreError, Document};
use crate::embedindex::{EmbedError, Embedder, IndexError, VectorIndex};

pub use backend::{
    BackendError, BackendKind, GenerationRequest, HttpGenerateBackend, MockEchoBackend,
    MockReferenceBackend, ModelBackend, ModelBackendConfig, ModelRegistry,
};
pub use prompt::{
    build_context, build_prompt, PromptTemplate, CONTEXT_PLACEHOLDER, CONTEXT_SEPARATOR,
    QUESTION_PLACEHOLDER,
};

/// Chunks retrieved per query when the caller does not say.
pub const DEFAULT_TOP_K: usize = 4;

#[derive(Debug, Error)]
pub enum RagError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("k must be positive")]
    InvalidK,
    #[error("unknown model: {0}")]
    UnknownModel(String),
    #[error("model {model_id} did not answer within {timeout_s} s")]
    BackendTimeout { model_id: String, timeout_s: f64 },
    #[error("model {model_id} failed: {source}")]
    Backend {
        model_id: String,
        #[source]
        source: BackendError,
    },
    #[error("invalid prompt template: {0}")]
    TemplateInvalid(String),
    #[error("invalid backend configuration: {0}")]
    InvalidBackend(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    DocStore(#[from] DocStoreError),
    #[error("corpus persistence failed: {0}")]
    Persistence(String),
}

/// A retrieved chunk as handed to the prompt and returned to callers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextHit {
    pub chunk_id: String,
    pub doc_id: String,
    pub text: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    pub hits: Vec<ContextHit>,
    pub model_id: String,
    /// Wall-clock seconds from prompt dispatch to full response.
    pub latency_s: f64,
    /// Seconds spent embedding the question and searching; not part of
    /// `latency_s`.
    pub retrieval_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub question: String,
    pub answer: Answer,
    pub asked_at: DateTime<Utc>,
}

/// Chunks plus their vectors. Chunk `i` sits at index ordinal `i`.
#[derive(Debug, Clone)]
pub struct Corpus {
    chunks: Vec<Chunk>,
    index: VectorIndex,
}

const INDEX_FILE: &str = "corpus.idx";
const CHUNKS_FILE: &str = "chunks.json";

impl Corpus {
    pub fn new(dim: usize) -> Self {
        Self {
            chunks: Vec::new(),
            index: VectorIndex::new(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.index.dim()
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn index(&self) -> &VectorIndex {
        &self.index
    }

    /// Chunks, embeds and indexes `doc`. Nothing is added if any chunk fails
    /// to embed. Returns the number of chunks added.
    pub async fn add_document(
        &mut self,
        doc: &Document,
        cfg: &ChunkingConfig,
        embedder: &dyn Embedder,
    ) -> Result<usize, RagError> {
        let chunks = chunk_document(doc, cfg)?;
        let mut vectors = Vec::with_capacity(chunks.len());
        for chunk in &chunks {
            if let Some(existing) = self.index.position(&chunk.chunk_id) {
                return Err(IndexError::DuplicateId(self.chunks[existing].chunk_id.clone()).into());
            }
            vectors.push(embedder.embed(&chunk.text).await?);
        }
        for (chunk, vector) in chunks.iter().zip(&vectors) {
            self.index.add(&chunk.chunk_id, vector)?;
        }
        let added = chunks.len();
        self.chunks.extend(chunks);
        Ok(added)
    }

    /// Embeds `question` and returns the top-`k` chunks.
    pub async fn retrieve(
        &self,
        embedder: &dyn Embedder,
        question: &str,
        k: usize,
    ) -> Result<Vec<ContextHit>, RagError> {
        let query = embedder.embed(question).await?;
        let hits = self.index.search(&query, k)?;
        Ok(hits
            .into_iter()
            .map(|hit| {
                let chunk =
                    &self.chunks[self.index.position(&hit.chunk_id).expect("indexed chunk")];
                ContextHit {
                    chunk_id: hit.chunk_id,
                    doc_id: chunk.doc_id.clone(),
                    text: chunk.text.clone(),
                    similarity: hit.similarity,
                }
            })
            .collect())
    }

    /// Writes `corpus.idx` (+ id sidecar) and `chunks.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), RagError> {
        std::fs::create_dir_all(dir).map_err(|e| RagError::Persistence(e.to_string()))?;
        self.index.save(&dir.join(INDEX_FILE))?;
        let json =
            serde_json::to_vec(&self.chunks).map_err(|e| RagError::Persistence(e.to_string()))?;
        std::fs::write(dir.join(CHUNKS_FILE), json)
            .map_err(|e| RagError::Persistence(e.to_string()))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, RagError> {
        let index = VectorIndex::load(&dir.join(INDEX_FILE))?;
        let bytes = std::fs::read(dir.join(CHUNKS_FILE))
            .map_err(|e| RagError::Persistence(e.to_string()))?;
        let chunks: Vec<Chunk> =
            serde_json::from_slice(&bytes).map_err(|e| RagError::Persistence(e.to_string()))?;
        let aligned = chunks.len() == index.len()
            && chunks
                .iter()
                .zip(index.ids())
                .all(|(c, id)| &c.chunk_id == id);
        if !aligned {
            return Err(RagError::Persistence(
                "chunk list does not match the index sidecar".into(),
            ));
        }
        Ok(Self { chunks, index })
    }
}

/// A user's working set: uploaded documents, their shared index, and the
/// question history.
#[derive(Debug, Clone)]
pub struct Session {
    pub session_id: String,
    pub doc_ids: Vec<String>,
    pub history: Vec<Exchange>,
    corpus: Arc<Corpus>,
}

impl Session {
    pub fn new(dim: usize) -> Self {
        Self::with_corpus(Corpus::new(dim))
    }

    pub fn with_corpus(corpus: Corpus) -> Self {
        let mut doc_ids: Vec<String> = Vec::new();
        for chunk in corpus.chunks() {
            if !doc_ids.contains(&chunk.doc_id) {
                doc_ids.push(chunk.doc_id.clone());
            }
        }
        Self {
            session_id: uuid::Uuid::new_v4().to_string(),
            doc_ids,
            history: Vec::new(),
            corpus: Arc::new(corpus),
        }
    }

    /// Immutable snapshot of the current corpus.
    pub fn corpus(&self) -> Arc<Corpus> {
        self.corpus.clone()
    }

    /// Adds a document to the session's corpus. Snapshots taken earlier are
    /// unaffected.
    pub async fn add_document(
        &mut self,
        doc: &Document,
        cfg: &ChunkingConfig,
        embedder: &dyn Embedder,
    ) -> Result<usize, RagError> {
        let mut corpus = (*self.corpus).clone();
        let added = corpus.add_document(doc, cfg, embedder).await?;
        self.corpus = Arc::new(corpus);
        if !self.doc_ids.contains(&doc.doc_id) {
            self.doc_ids.push(doc.doc_id.clone());
        }
        Ok(added)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChatOptions {
    pub default_k: usize,
    /// Prepend earlier exchanges of the session to the context.
    pub include_history: bool,
    /// Most recent exchanges included when `include_history` is set.
    pub history_turns: usize,
}

impl Default for ChatOptions {
    fn default() -> Self {
        Self {
            default_k: DEFAULT_TOP_K,
            include_history: false,
            history_turns: 3,
        }
    }
}

/// Stateless query pipeline shared by all sessions.
pub struct RagEngine {
    embedder: Arc<dyn Embedder>,
    models: ModelRegistry,
    template: PromptTemplate,
    options: ChatOptions,
}

impl RagEngine {
    pub fn new(
        embedder: Arc<dyn Embedder>,
        models: ModelRegistry,
        template: PromptTemplate,
        options: ChatOptions,
    ) -> Result<Self, RagError> {
        template.validate()?;
        Ok(Self {
            embedder,
            models,
            template,
            options,
        })
    }

    pub fn embedder(&self) -> &Arc<dyn Embedder> {
        &self.embedder
    }

    pub fn models(&self) -> &ModelRegistry {
        &self.models
    }

    pub fn options(&self) -> &ChatOptions {
        &self.options
    }

    pub fn template(&self) -> &PromptTemplate {
        &self.template
    }

    /// Registered backend configs in registration order.
    pub fn list_models(&self) -> Vec<ModelBackendConfig> {
        self.models.list()
    }

    pub fn new_session(&self) -> Session {
        Session::new(self.embedder.dim())
    }

    /// Answers one question over `corpus` without touching any session.
    pub async fn answer(
        &self,
        corpus: &Corpus,
        question: &str,
        model_id: &str,
        k: usize,
        history: &[Exchange],
    ) -> Result<Answer, RagError> {
        if question.trim().is_empty() {
            return Err(RagError::EmptyQuestion);
        }
        if k == 0 {
            return Err(RagError::InvalidK);
        }
        let (config, backend) = self
            .models
            .get(model_id)
            .ok_or_else(|| RagError::UnknownModel(model_id.to_string()))?;

        let retrieval_start = Instant::now();
        let hits = corpus.retrieve(self.embedder.as_ref(), question, k).await?;
        let retrieval_s = retrieval_start.elapsed().as_secs_f64();

        let mut context = build_context(&hits);
        if self.options.include_history && !history.is_empty() {
            let skip = history.len().saturating_sub(self.options.history_turns);
            let mut previous = String::from("Earlier in this conversation:\n");
            for ex in &history[skip..] {
                previous.push_str(&format!("Q: {}\nA: {}\n", ex.question, ex.answer.text));
            }
            context = format!("{previous}{CONTEXT_SEPARATOR}{context}");
        }
        let prompt = self.template.render(&context, question)?;
        let request = GenerationRequest {
            model_id,
            prompt: &prompt,
            context: &context,
            question,
            max_tokens: config.max_tokens,
            temperature: config.temperature,
        };

        let timeout = config.timeout();
        let started = Instant::now();
        let outcome = tokio::time::timeout(timeout, backend.generate(&request)).await;
        let latency_s = started.elapsed().as_secs_f64();
        let text = match outcome {
            Err(_) | Ok(Err(BackendError::Timeout)) => {
                return Err(RagError::BackendTimeout {
                    model_id: model_id.to_string(),
                    timeout_s: config.timeout_s,
                })
            }
            Ok(Err(source)) => {
                return Err(RagError::Backend {
                    model_id: model_id.to_string(),
                    source,
                })
            }
            Ok(Ok(text)) => text,
        };
        tracing::debug!(
            model_id,
            latency_s,
            retrieval_s,
            hits = hits.len(),
            "answered query"
        );
        Ok(Answer {
            text,
            hits,
            model_id: model_id.to_string(),
            latency_s,
            retrieval_s,
        })
    }

    /// Answers over the session corpus and appends the exchange to its
    /// history. `k` defaults to the engine's `default_k`.
    pub async fn answer_query(
        &self,
        session: &mut Session,
        question: &str,
        model_id: &str,
        k: Option<usize>,
    ) -> Result<Answer, RagError> {
        let corpus = session.corpus();
        let k = k.unwrap_or(self.options.default_k);
        let answer = self
            .answer(&corpus, question, model_id, k, &session.history)
            .await?;
        session.history.push(Exchange {
            question: question.to_string(),
            answer: answer.clone(),
            asked_at: Utc::now(),
        });
        Ok(answer)
    }
}
