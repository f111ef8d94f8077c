use serde::{Deserialize, Serialize};

use super::{DocStoreError, Document};

/// Fixed-window chunking parameters, in characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkingConfig {
    pub chunk_size: usize,
    pub overlap: usize,
}

impl Default for ChunkingConfig {
    fn default() -> Self {
        Self {
            chunk_size: 1000,
            overlap: 200,
        }
    }
}

impl ChunkingConfig {
    pub fn new(chunk_size: usize, overlap: usize) -> Result<Self, DocStoreError> {
        let cfg = Self {
            chunk_size,
            overlap,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DocStoreError> {
        if self.chunk_size == 0 {
            return Err(DocStoreError::InvalidConfig(
                "chunk_size must be positive".into(),
            ));
        }
        if self.overlap >= self.chunk_size {
            return Err(DocStoreError::InvalidConfig(format!(
                "overlap ({}) must be smaller than chunk_size ({})",
                self.overlap, self.chunk_size
            )));
        }
        Ok(())
    }

    /// Distance between consecutive chunk starts.
    pub fn stride(&self) -> usize {
        self.chunk_size - self.overlap
    }
}

/// A character span `[char_start, char_end)` of a document body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub doc_id: String,
    pub seq: usize,
    pub char_start: usize,
    pub char_end: usize,
    pub text: String,
}

/// Splits `doc.body` into windows starting every `chunk_size - overlap`
/// characters; the last window is the first one that reaches the end.
pub fn chunk_document(doc: &Document, cfg: &ChunkingConfig) -> Result<Vec<Chunk>, DocStoreError> {
    cfg.validate()?;
    // Byte offset of every char boundary, including the end of the body.
    let bounds: Vec<usize> = doc
        .body
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(doc.body.len()))
        .collect();
    let len = bounds.len() - 1;
    if len == 0 {
        return Err(DocStoreError::EmptyDocument);
    }

    let stride = cfg.stride();
    let mut chunks = Vec::with_capacity(len / stride + 1);
    for seq in 0.. {
        let start = seq * stride;
        let end = (start + cfg.chunk_size).min(len);
        chunks.push(Chunk {
            chunk_id: format!("{}#{}", doc.doc_id, seq),
            doc_id: doc.doc_id.clone(),
            seq,
            char_start: start,
            char_end: end,
            text: doc.body[bounds[start]..bounds[end]].to_string(),
        });
        if end == len {
            break;
        }
    }
    Ok(chunks)
}
