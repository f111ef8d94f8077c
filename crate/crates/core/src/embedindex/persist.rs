//! Binary index file.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "MDBIDX1\0"            8 bytes
//! version: u32           = 1
//! dim: u32
//! count: u64
//! count × { ordinal: u64, dim × f32 }
//! crc32: u32             over every preceding byte
//! ```
//!
//! Ordinal-to-chunk-id mapping lives in a JSON sidecar next to the file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{IndexError, VectorIndex};

pub const INDEX_MAGIC: &[u8; 8] = b"MDBIDX1\0";
pub const INDEX_VERSION: u32 = 1;

const HEADER_LEN: usize = 8 + 4 + 4 + 8;

#[derive(Serialize, Deserialize)]
struct Sidecar {
    dim: usize,
    chunk_ids: Vec<String>,
}

/// `<path>.ids.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".ids.json");
    PathBuf::from(name)
}

impl VectorIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let dim = self.dim();
        let mut out = Vec::with_capacity(HEADER_LEN + self.len() * (8 + 4 * dim) + 4);
        out.extend_from_slice(INDEX_MAGIC);
        out.extend_from_slice(&INDEX_VERSION.to_le_bytes());
        out.extend_from_slice(&(dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for (ordinal, vector) in self.raw_data().chunks_exact(dim).enumerate() {
            out.extend_from_slice(&(ordinal as u64).to_le_bytes());
            for v in vector {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    /// Parses the binary file; `chunk_ids[i]` names ordinal `i`.
    pub fn from_bytes(bytes: &[u8], chunk_ids: Vec<String>) -> Result<Self, IndexError> {
        let corrupt = |msg: &str| IndexError::CorruptIndex(msg.to_string());
        if bytes.len() < HEADER_LEN + 4 {
            return Err(corrupt("file shorter than header"));
        }
        if &bytes[..8] != INDEX_MAGIC {
            return Err(corrupt("bad magic bytes"));
        }
        let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let u64_at = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != INDEX_VERSION {
            return Err(IndexError::CorruptIndex(format!(
                "unsupported version {version}"
            )));
        }
        let dim = u32_at(12) as usize;
        if dim == 0 {
            return Err(corrupt("zero dimension"));
        }
        let count = u64_at(16);
        let record_len = 8 + 4 * dim as u64;
        let expected = count
            .checked_mul(record_len)
            .and_then(|n| n.checked_add((HEADER_LEN + 4) as u64))
            .ok_or_else(|| corrupt("record count overflows"))?;
        if bytes.len() as u64 != expected {
            return Err(IndexError::CorruptIndex(format!(
                "expected {expected} bytes for {count} records, found {}",
                bytes.len()
            )));
        }
        let payload_end = bytes.len() - 4;
        let stored_crc = u32_at(payload_end);
        if crc32fast::hash(&bytes[..payload_end]) != stored_crc {
            return Err(corrupt("checksum mismatch"));
        }
        let count = count as usize;
        if chunk_ids.len() != count {
            return Err(IndexError::CorruptIndex(format!(
                "sidecar lists {} ids for {count} records",
                chunk_ids.len()
            )));
        }

        let mut data = vec![0f32; count * dim];
        let mut at = HEADER_LEN;
        for (i, slot) in data.chunks_exact_mut(dim).enumerate() {
            if u64_at(at) != i as u64 {
                return Err(IndexError::CorruptIndex(format!(
                    "record {i} has ordinal {}",
                    u64_at(at)
                )));
            }
            at += 8;
            for v in slot.iter_mut() {
                *v = f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
                at += 4;
            }
        }
        VectorIndex::from_parts(dim, chunk_ids, data)
    }

    /// Writes the binary file and its id sidecar.
    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, self.to_bytes())?;
        let sidecar = Sidecar {
            dim: self.dim(),
            chunk_ids: self.ids().to_vec(),
        };
        let json = serde_json::to_vec_pretty(&sidecar)
            .map_err(|e| IndexError::CorruptIndex(e.to_string()))?;
        fs::write(sidecar_path(path), json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, IndexError> {
        let bytes = fs::read(path)?;
        let sidecar: Sidecar = serde_json::from_slice(&fs::read(sidecar_path(path))?)
            .map_err(|e| IndexError::CorruptIndex(format!("sidecar: {e}")))?;
        let index = Self::from_bytes(&bytes, sidecar.chunk_ids)?;
        if index.dim() != sidecar.dim {
            return Err(IndexError::CorruptIndex(
                "sidecar dimension disagrees with file".into(),
            ));
        }
        Ok(index)
    }
}
