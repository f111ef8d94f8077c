//! Document ingestion and chunking.
//!
//! Uploaded bytes are decoded (or extracted page by page for PDFs),
//! normalised to NFC with `\n` line endings, and split into fixed-size,
//! overlapping character windows for indexing.

mod catalog;
mod chunker;
pub mod pdf;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

pub use catalog::DocumentCatalog;
pub use chunker::{chunk_document, Chunk, ChunkingConfig};
pub use pdf::{write_text_pdf, LopdfExtractor, PdfExtractor};

#[derive(Debug, Error)]
pub enum DocStoreError {
    #[error("unsupported document format: {0}")]
    UnsupportedFormat(String),
    #[error("text extraction failed: {0}")]
    ExtractionFailed(String),
    #[error("document contains no text")]
    EmptyDocument,
    #[error("invalid chunking configuration: {0}")]
    InvalidConfig(String),
    #[error("document not found: {0}")]
    NotFound(String),
    #[error("catalog I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("catalog record is malformed: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Pdf,
    Text,
    Markdown,
}

impl SourceFormat {
    /// Maps a file extension (`pdf`, `txt`, `md`) to a format.
    pub fn from_extension(ext: &str) -> Result<Self, DocStoreError> {
        match ext.to_ascii_lowercase().as_str() {
            "pdf" => Ok(Self::Pdf),
            "txt" | "text" => Ok(Self::Text),
            "md" | "markdown" => Ok(Self::Markdown),
            other => Err(DocStoreError::UnsupportedFormat(other.to_string())),
        }
    }

    /// Format for a file name, judged by its extension.
    pub fn from_file_name(name: &str) -> Result<Self, DocStoreError> {
        let ext = std::path::Path::new(name)
            .extension()
            .and_then(|e| e.to_str())
            .ok_or_else(|| DocStoreError::UnsupportedFormat(name.to_string()))?;
        Self::from_extension(ext)
    }
}

impl fmt::Display for SourceFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pdf => "pdf",
            Self::Text => "text",
            Self::Markdown => "markdown",
        })
    }
}

impl FromStr for SourceFormat {
    type Err = DocStoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pdf" => Ok(Self::Pdf),
            "text" => Ok(Self::Text),
            "markdown" => Ok(Self::Markdown),
            other => Self::from_extension(other),
        }
    }
}

/// An ingested document with a normalised body.
///
/// Offsets (`page_offsets`, chunk spans) count Unicode scalar values, not
/// bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub source_format: SourceFormat,
    pub body: String,
    pub page_offsets: Vec<usize>,
    pub created_at: DateTime<Utc>,
}

impl Document {
    pub fn char_len(&self) -> usize {
        self.body.chars().count()
    }

    pub fn pages(&self) -> usize {
        self.page_offsets.len()
    }
}

/// Line-ending and blank-line normalisation plus NFC.
///
/// `\r\n` and lone `\r` become `\n`; runs of three or more newlines collapse
/// to two.
pub fn normalize_text(text: &str) -> String {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut out = String::with_capacity(text.len());
    let mut newlines = 0usize;
    let mut chars = text.nfc().peekable();
    while let Some(ch) = chars.next() {
        let ch = if ch == '\r' {
            if chars.peek() == Some(&'\n') {
                chars.next();
            }
            '\n'
        } else {
            ch
        };
        if ch == '\n' {
            newlines += 1;
            if newlines > 2 {
                continue;
            }
        } else {
            newlines = 0;
        }
        out.push(ch);
    }
    out
}

/// Ingests a document with the default PDF extractor.
pub fn ingest_document(
    bytes: &[u8],
    format: SourceFormat,
    title: &str,
) -> Result<Document, DocStoreError> {
    ingest_document_with(bytes, format, title, &LopdfExtractor)
}

/// Ingests a document, using `extractor` for PDF input.
pub fn ingest_document_with(
    bytes: &[u8],
    format: SourceFormat,
    title: &str,
    extractor: &dyn PdfExtractor,
) -> Result<Document, DocStoreError> {
    if bytes.is_empty() {
        return Err(DocStoreError::EmptyDocument);
    }
    let (body, page_offsets) = match format {
        SourceFormat::Pdf => join_pages(&extractor.extract_pages(bytes)?),
        SourceFormat::Text | SourceFormat::Markdown => {
            let text = std::str::from_utf8(bytes)
                .map_err(|e| DocStoreError::ExtractionFailed(format!("input is not UTF-8: {e}")))?;
            (normalize_text(text), vec![0])
        }
    };
    if body.trim().is_empty() {
        return Err(DocStoreError::EmptyDocument);
    }
    Ok(Document {
        doc_id: uuid::Uuid::new_v4().to_string(),
        title: title.to_string(),
        source_format: format,
        body,
        page_offsets,
        created_at: Utc::now(),
    })
}

/// Concatenates normalised pages separated by one blank line. A page with no
/// text becomes a single space so every page keeps a distinct offset.
fn join_pages(pages: &[String]) -> (String, Vec<usize>) {
    let mut body = String::new();
    let mut offsets = Vec::with_capacity(pages.len());
    let mut chars = 0usize;
    for (i, page) in pages.iter().enumerate() {
        if i > 0 {
            body.push_str("\n\n");
            chars += 2;
        }
        offsets.push(chars);
        let normalized = normalize_text(page);
        let trimmed = normalized.trim_matches('\n');
        let text = if trimmed.is_empty() { " " } else { trimmed };
        body.push_str(text);
        chars += text.chars().count();
    }
    (body, offsets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crlf_normalised() {
        let doc = ingest_document(b"hello\r\nworld", SourceFormat::Text, "t").unwrap();
        assert_eq!(doc.body, "hello\nworld");
        assert_eq!(doc.page_offsets, vec![0]);
        assert_eq!(doc.source_format, SourceFormat::Text);
    }

    #[test]
    fn blank_line_runs_collapse() {
        assert_eq!(normalize_text("a\n\n\n\nb\r\r\rc"), "a\n\nb\n\nc");
        assert_eq!(normalize_text("a\r\n\r\n\r\nb"), "a\n\nb");
    }

    #[test]
    fn nfc_applied() {
        // "e" + combining acute composes to U+00E9.
        assert_eq!(normalize_text("caf\u{0065}\u{0301}"), "caf\u{e9}");
    }

    #[test]
    fn whitespace_only_is_empty() {
        assert!(matches!(
            ingest_document(b" \n\t \r\n", SourceFormat::Text, "t"),
            Err(DocStoreError::EmptyDocument)
        ));
        assert!(matches!(
            ingest_document(b"", SourceFormat::Markdown, "t"),
            Err(DocStoreError::EmptyDocument)
        ));
    }

    #[test]
    fn invalid_utf8_fails_extraction() {
        assert!(matches!(
            ingest_document(&[0xff, 0xfe, 0x41], SourceFormat::Text, "t"),
            Err(DocStoreError::ExtractionFailed(_))
        ));
    }

    #[test]
    fn formats_from_names() {
        assert_eq!(
            SourceFormat::from_file_name("g.PDF").unwrap(),
            SourceFormat::Pdf
        );
        assert_eq!(
            SourceFormat::from_file_name("notes.md").unwrap(),
            SourceFormat::Markdown
        );
        assert_eq!(
            SourceFormat::from_file_name("a.txt").unwrap(),
            SourceFormat::Text
        );
        assert!(matches!(
            SourceFormat::from_file_name("a.docx"),
            Err(DocStoreError::UnsupportedFormat(_))
        ));
        assert!(SourceFormat::from_file_name("noext").is_err());
    }

    struct FixedPages(Vec<&'static str>);

    impl PdfExtractor for FixedPages {
        fn extract_pages(&self, _bytes: &[u8]) -> Result<Vec<String>, DocStoreError> {
            Ok(self.0.iter().map(|s| s.to_string()).collect())
        }
    }

    #[test]
    fn page_offsets_strictly_increase() {
        let pages = FixedPages(vec!["first\n", "", "\n\nthird page\n\n\n", "x"]);
        let doc = ingest_document_with(b"%PDF", SourceFormat::Pdf, "p", &pages).unwrap();
        assert_eq!(doc.body, "first\n\n \n\nthird page\n\nx");
        assert_eq!(doc.page_offsets, vec![0, 7, 10, 22]);
        assert!(!doc.body.contains("\n\n\n"));
        for (i, &off) in doc.page_offsets.iter().enumerate().skip(1) {
            assert!(off > doc.page_offsets[i - 1]);
        }
        let third: String = doc.body.chars().skip(10).take(10).collect();
        assert_eq!(third, "third page");
    }

    #[test]
    fn pdf_with_only_blank_pages_is_empty() {
        let pages = FixedPages(vec!["  ", "\n"]);
        assert!(matches!(
            ingest_document_with(b"%PDF", SourceFormat::Pdf, "p", &pages),
            Err(DocStoreError::EmptyDocument)
        ));
    }
}
