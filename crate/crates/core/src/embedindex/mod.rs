//! Text embedding and exact cosine-similarity retrieval.

mod embed;
mod index;
mod persist;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use embed::{
    build_embedder, Embedder, EmbedderConfig, EmbedderKind, HashEmbedder, RemoteEmbedder,
    DEFAULT_EMBEDDING_DIM,
};
pub use index::{RetrievalHit, VectorIndex};
pub use persist::{sidecar_path, INDEX_MAGIC, INDEX_VERSION};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("text to embed is empty")]
    EmptyText,
    #[error("remote embedder unavailable: {0}")]
    RemoteEmbedderUnavailable(String),
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("remote embedder returned a malformed response: {0}")]
    MalformedResponse(String),
    #[error("embedding has zero norm or non-finite values")]
    DegenerateVector,
    #[error("invalid embedder configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("chunk id already indexed: {0}")]
    DuplicateId(String),
    #[error("vector dimension mismatch: index has {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("index I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt index file: {0}")]
    CorruptIndex(String),
}

/// A unit-norm embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    /// L2-normalises `values` (accumulating in f64).
    pub fn normalized(values: &[f64]) -> Result<Self, EmbedError> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::DegenerateVector);
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(EmbedError::DegenerateVector);
        }
        Ok(Self(values.iter().map(|v| (v / norm) as f32).collect()))
    }

    pub fn from_f32(values: &[f32]) -> Result<Self, EmbedError> {
        let wide: Vec<f64> = values.iter().map(|&v| f64::from(v)).collect();
        Self::normalized(&wide)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }
}
