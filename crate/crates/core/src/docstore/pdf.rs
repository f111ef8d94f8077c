//! PDF page text extraction.

use lopdf::content::{Content, Operation};
use lopdf::{dictionary, Document as PdfDocument, Object, Stream};

use super::DocStoreError;

/// Turns PDF bytes into one text string per page, in page order.
pub trait PdfExtractor: Send + Sync {
    fn extract_pages(&self, bytes: &[u8]) -> Result<Vec<String>, DocStoreError>;
}

/// Extractor backed by `lopdf`'s content-stream text decoding.
#[derive(Debug, Default, Clone, Copy)]
pub struct LopdfExtractor;

impl PdfExtractor for LopdfExtractor {
    fn extract_pages(&self, bytes: &[u8]) -> Result<Vec<String>, DocStoreError> {
        let doc = PdfDocument::load_mem(bytes)
            .map_err(|e| DocStoreError::ExtractionFailed(format!("unreadable PDF: {e}")))?;
        if doc.is_encrypted() {
            return Err(DocStoreError::ExtractionFailed("PDF is encrypted".into()));
        }
        let pages = doc.get_pages();
        if pages.is_empty() {
            return Err(DocStoreError::ExtractionFailed("PDF has no pages".into()));
        }
        pages
            .keys()
            .map(|&number| {
                doc.extract_text(&[number])
                    .map_err(|e| DocStoreError::ExtractionFailed(format!("page {number}: {e}")))
            })
            .collect()
    }
}

/// Writes a minimal text-only PDF with one page per entry (Courier 11pt,
/// one text line per input line). Handy for fixtures and demos.
pub fn write_text_pdf(pages: &[&str]) -> Vec<u8> {
    let mut doc = PdfDocument::with_version("1.5");
    let pages_id = doc.new_object_id();
    let font_id = doc.add_object(dictionary! {
        "Type" => "Font",
        "Subtype" => "Type1",
        "BaseFont" => "Courier",
    });
    let resources_id = doc.add_object(dictionary! {
        "Font" => dictionary! { "F1" => font_id },
    });

    let mut kids: Vec<Object> = Vec::with_capacity(pages.len());
    for page in pages {
        let mut ops = vec![
            Operation::new("BT", vec![]),
            Operation::new("Tf", vec!["F1".into(), 11.into()]),
            Operation::new("TL", vec![13.into()]),
            Operation::new("Td", vec![40.into(), 800.into()]),
        ];
        for line in page.lines() {
            ops.push(Operation::new("Tj", vec![Object::string_literal(line)]));
            ops.push(Operation::new("T*", vec![]));
        }
        ops.push(Operation::new("ET", vec![]));
        let content = Content { operations: ops };
        let content_id = doc.add_object(Stream::new(
            dictionary! {},
            content
                .encode()
                .expect("content encoding is infallible for plain ops"),
        ));
        let page_id = doc.add_object(dictionary! {
            "Type" => "Page",
            "Parent" => pages_id,
            "Contents" => content_id,
        });
        kids.push(page_id.into());
    }
    let count = kids.len() as i64;
    doc.objects.insert(
        pages_id,
        Object::Dictionary(dictionary! {
            "Type" => "Pages",
            "Kids" => kids,
            "Count" => count,
            "Resources" => resources_id,
            "MediaBox" => vec![0.into(), 0.into(), 595.into(), 842.into()],
        }),
    );
    let catalog_id = doc.add_object(dictionary! {
        "Type" => "Catalog",
        "Pages" => pages_id,
    });
    doc.trailer.set("Root", catalog_id);

    let mut out = Vec::new();
    doc.save_to(&mut out).expect("writing to a Vec cannot fail");
    out
}
