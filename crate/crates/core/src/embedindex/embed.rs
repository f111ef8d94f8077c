use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::{EmbedError, EmbeddingVector};

pub const DEFAULT_EMBEDDING_DIM: usize = 384;

/// Maps text to a unit-norm vector of fixed dimension.
#[async_trait]
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;

    async fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    ReferenceHash,
    HttpRemote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default = "default_ngram")]
    pub char_ngram_n: usize,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

fn default_dim() -> usize {
    DEFAULT_EMBEDDING_DIM
}

fn default_ngram() -> usize {
    3
}

fn default_timeout() -> f64 {
    30.0
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self::reference_hash(DEFAULT_EMBEDDING_DIM)
    }
}

impl EmbedderConfig {
    pub fn reference_hash(dim: usize) -> Self {
        Self {
            kind: EmbedderKind::ReferenceHash,
            dim,
            endpoint: None,
            char_ngram_n: default_ngram(),
            timeout_s: default_timeout(),
        }
    }

    pub fn http_remote(endpoint: impl Into<String>, dim: usize) -> Self {
        Self {
            kind: EmbedderKind::HttpRemote,
            dim,
            endpoint: Some(endpoint.into()),
            char_ngram_n: default_ngram(),
            timeout_s: default_timeout(),
        }
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dim == 0 {
            return Err(EmbedError::InvalidConfig("dim must be positive".into()));
        }
        match (self.kind, &self.endpoint) {
            (EmbedderKind::HttpRemote, None) => Err(EmbedError::InvalidConfig(
                "http_remote embedder requires an endpoint".into(),
            )),
            (EmbedderKind::ReferenceHash, Some(_)) => Err(EmbedError::InvalidConfig(
                "endpoint is only valid for http_remote".into(),
            )),
            (EmbedderKind::ReferenceHash, None) if self.char_ngram_n == 0 => Err(
                EmbedError::InvalidConfig("char_ngram_n must be positive".into()),
            ),
            (EmbedderKind::HttpRemote, Some(_))
                if !(self.timeout_s.is_finite() && self.timeout_s > 0.0) =>
            {
                Err(EmbedError::InvalidConfig(
                    "timeout_s must be positive".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

pub fn build_embedder(cfg: &EmbedderConfig) -> Result<Arc<dyn Embedder>, EmbedError> {
    cfg.validate()?;
    Ok(match cfg.kind {
        EmbedderKind::ReferenceHash => Arc::new(HashEmbedder::new(cfg.dim, cfg.char_ngram_n)),
        EmbedderKind::HttpRemote => Arc::new(RemoteEmbedder::new(
            cfg.endpoint.clone().unwrap_or_default(),
            cfg.dim,
            Duration::from_secs_f64(cfg.timeout_s),
        )),
    })
}

/// Deterministic bag of hashed character n-grams.
///
/// Text is lowercased and whitespace-collapsed; each n-gram is hashed with
/// 64-bit FNV-1a into one of `dim` buckets, and the bucket counts are
/// L2-normalised. Texts shorter than `n` characters form a single gram.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    n: usize,
}

impl HashEmbedder {
    pub fn new(dim: usize, n: usize) -> Self {
        assert!(dim > 0 && n > 0, "dim and n must be positive");
        Self { dim, n }
    }

    pub fn embed_sync(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let lowered = text.to_lowercase();
        let mut chars: Vec<char> = Vec::with_capacity(lowered.len());
        for word in lowered.split_whitespace() {
            if !chars.is_empty() {
                chars.push(' ');
            }
            chars.extend(word.chars());
        }
        if chars.is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let mut buckets = vec![0.0f64; self.dim];
        let width = self.n.min(chars.len());
        let mut buf = [0u8; 4];
        for gram in chars.windows(width) {
            let mut hash = FNV_OFFSET;
            for ch in gram {
                for &byte in ch.encode_utf8(&mut buf).as_bytes() {
                    hash ^= u64::from(byte);
                    hash = hash.wrapping_mul(FNV_PRIME);
                }
            }
            buckets[(hash % self.dim as u64) as usize] += 1.0;
        }
        EmbeddingVector::normalized(&buckets)
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

#[async_trait]
impl Embedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    async fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        self.embed_sync(text)
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    input: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    embedding: Vec<f64>,
}

/// Client for a local embedding service: `POST {"input": text}` answered by
/// `{"embedding": [...]}`.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    client: reqwest::Client,
    endpoint: String,
    dim: usize,
    timeout: Duration,
}

impl RemoteEmbedder {
    pub fn new(endpoint: impl Into<String>, dim: usize, timeout: Duration) -> Self {
        Self {
            client: reqwest::Client::new(),
            endpoint: endpoint.into(),
            dim,
            timeout,
        }
    }
}

#[async_trait]
impl Embedder for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    async fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let response = self
            .client
            .post(&self.endpoint)
            .timeout(self.timeout)
            .json(&EmbedRequest { input: text })
            .send()
            .await
            .map_err(|e| EmbedError::RemoteEmbedderUnavailable(e.to_string()))?;
        let status = response.status();
        if status.is_server_error() {
            return Err(EmbedError::RemoteEmbedderUnavailable(format!(
                "HTTP {status}"
            )));
        }
        if !status.is_success() {
            return Err(EmbedError::MalformedResponse(format!("HTTP {status}")));
        }
        let body: EmbedResponse = response.json().await.map_err(|e| {
            if e.is_timeout() {
                EmbedError::RemoteEmbedderUnavailable(e.to_string())
            } else {
                EmbedError::MalformedResponse(e.to_string())
            }
        })?;
        if body.embedding.len() != self.dim {
            return Err(EmbedError::DimensionMismatch {
                expected: self.dim,
                actual: body.embedding.len(),
            });
        }
        EmbeddingVector::normalized(&body.embedding)
    }
}
