use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{EmbeddingVector, IndexError};

/// One search result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub chunk_id: String,
    /// Cosine similarity in `[-1, 1]`.
    pub similarity: f64,
}

/// Flat, exhaustive cosine index over unit-norm vectors.
///
/// Vectors are stored contiguously in insertion order; a vector's position
/// is its ordinal, which also breaks similarity ties (lower first).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
    positions: HashMap<String, usize>,
}

impl VectorIndex {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "index dimension must be positive");
        Self {
            dim,
            ids: Vec::new(),
            data: Vec::new(),
            positions: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Insertion ordinal of `chunk_id`.
    pub fn position(&self, chunk_id: &str) -> Option<usize> {
        self.positions.get(chunk_id).copied()
    }

    pub fn vector(&self, ordinal: usize) -> Option<&[f32]> {
        (ordinal < self.len()).then(|| &self.data[ordinal * self.dim..(ordinal + 1) * self.dim])
    }

    /// Adds a vector and returns the new record count.
    pub fn add(&mut self, chunk_id: &str, vector: &EmbeddingVector) -> Result<usize, IndexError> {
        if vector.dim() != self.dim {
            return Err(IndexError::DimensionMismatch {
                expected: self.dim,
                actual: vector.dim(),
            });
        }
        if self.positions.contains_key(chunk_id) {
            return Err(IndexError::DuplicateId(chunk_id.to_string()));
        }
        self.positions.insert(chunk_id.to_string(), self.ids.len());
        self.ids.push(chunk_id.to_string());
        self.data.extend_from_slice(vector.values());
        Ok(self.ids.len())
    }

    /// Exact top-`k` by cosine similarity (dot product of unit vectors),
    /// descending, ties by ascending insertion order.
    pub fn search(
        &self,
        query: &EmbeddingVector,
        k: usize,
    ) -> Result<Vec<RetrievalHit>, IndexError> {
        if query.dim() != self.dim {
            return Err(IndexError::DimensionMismatch {
                expected: self.dim,
                actual: query.dim(),
            });
        }
        let k = k.min(self.len());
        if k == 0 {
            return Ok(Vec::new());
        }
        let q = query.values();
        let mut scored: Vec<(f64, usize)> = self
            .data
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(ordinal, v)| {
                let dot: f64 = v
                    .iter()
                    .zip(q)
                    .map(|(&a, &b)| f64::from(a) * f64::from(b))
                    .sum();
                (dot.clamp(-1.0, 1.0), ordinal)
            })
            .collect();

        let by_rank = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
        };
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, by_rank);
            scored.truncate(k);
        }
        scored.sort_unstable_by(by_rank);
        Ok(scored
            .into_iter()
            .map(|(similarity, ordinal)| RetrievalHit {
                chunk_id: self.ids[ordinal].clone(),
                similarity,
            })
            .collect())
    }

    pub(crate) fn from_parts(
        dim: usize,
        ids: Vec<String>,
        data: Vec<f32>,
    ) -> Result<Self, IndexError> {
        let mut positions = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if positions.insert(id.clone(), i).is_some() {
                return Err(IndexError::CorruptIndex(format!("duplicate chunk id {id}")));
            }
        }
        Ok(Self {
            dim,
            ids,
            data,
            positions,
        })
    }

    pub(crate) fn raw_data(&self) -> &[f32] {
        &self.data
    }
}
