use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{DocStoreError, Document, SourceFormat};

/// On-disk metadata record; the body lives next to it as `<doc_id>.txt`.
#[derive(Debug, Serialize, Deserialize)]
struct DocumentRecord {
    doc_id: String,
    title: String,
    source_format: SourceFormat,
    page_offsets: Vec<usize>,
    created_at: DateTime<Utc>,
    body_file: String,
}

/// Registry of ingested documents, optionally mirrored to a directory.
#[derive(Debug, Default)]
pub struct DocumentCatalog {
    docs: RwLock<HashMap<String, Arc<Document>>>,
    order: RwLock<Vec<String>>,
    dir: Option<PathBuf>,
}

impl DocumentCatalog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (creating if needed) a catalog directory and loads every record
    /// in it.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, DocStoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut loaded = Vec::new();
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) == Some("json") {
                loaded.push(read_record(&dir, &path)?);
            }
        }
        loaded.sort_by(|a, b| {
            a.created_at
                .cmp(&b.created_at)
                .then(a.doc_id.cmp(&b.doc_id))
        });
        let catalog = Self {
            dir: Some(dir),
            ..Self::default()
        };
        {
            let mut docs = catalog.docs.write().expect("catalog lock poisoned");
            let mut order = catalog.order.write().expect("catalog lock poisoned");
            for doc in loaded {
                order.push(doc.doc_id.clone());
                docs.insert(doc.doc_id.clone(), Arc::new(doc));
            }
        }
        Ok(catalog)
    }

    pub fn insert(&self, doc: Document) -> Result<Arc<Document>, DocStoreError> {
        // Writers serialise on the map lock, including the disk write.
        let mut docs = self.docs.write().expect("catalog lock poisoned");
        if let Some(dir) = &self.dir {
            write_record(dir, &doc)?;
        }
        let doc = Arc::new(doc);
        if docs.insert(doc.doc_id.clone(), doc.clone()).is_none() {
            self.order
                .write()
                .expect("catalog lock poisoned")
                .push(doc.doc_id.clone());
        }
        Ok(doc)
    }

    pub fn get(&self, doc_id: &str) -> Result<Arc<Document>, DocStoreError> {
        self.docs
            .read()
            .expect("catalog lock poisoned")
            .get(doc_id)
            .cloned()
            .ok_or_else(|| DocStoreError::NotFound(doc_id.to_string()))
    }

    /// Documents in insertion order.
    pub fn list(&self) -> Vec<Arc<Document>> {
        let docs = self.docs.read().expect("catalog lock poisoned");
        self.order
            .read()
            .expect("catalog lock poisoned")
            .iter()
            .filter_map(|id| docs.get(id).cloned())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.docs.read().expect("catalog lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn write_record(dir: &Path, doc: &Document) -> Result<(), DocStoreError> {
    let body_file = format!("{}.txt", doc.doc_id);
    fs::write(dir.join(&body_file), doc.body.as_bytes())?;
    let record = DocumentRecord {
        doc_id: doc.doc_id.clone(),
        title: doc.title.clone(),
        source_format: doc.source_format,
        page_offsets: doc.page_offsets.clone(),
        created_at: doc.created_at,
        body_file,
    };
    let json =
        serde_json::to_vec_pretty(&record).map_err(|e| DocStoreError::Corrupt(e.to_string()))?;
    fs::write(dir.join(format!("{}.json", doc.doc_id)), json)?;
    Ok(())
}

fn read_record(dir: &Path, path: &Path) -> Result<Document, DocStoreError> {
    let record: DocumentRecord = serde_json::from_slice(&fs::read(path)?)
        .map_err(|e| DocStoreError::Corrupt(format!("{}: {e}", path.display())))?;
    let body = fs::read_to_string(dir.join(&record.body_file))?;
    Ok(Document {
        doc_id: record.doc_id,
        title: record.title,
        source_format: record.source_format,
        body,
        page_offsets: record.page_offsets,
        created_at: record.created_at,
    })
}
