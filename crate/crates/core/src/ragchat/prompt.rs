use serde::{Deserialize, Serialize};

use super::{ContextHit, RagError};

pub const CONTEXT_PLACEHOLDER: &str = "{context}";
pub const QUESTION_PLACEHOLDER: &str = "{question}";
/// Line placed between consecutive context chunks.
pub const CONTEXT_SEPARATOR: &str = "\n---\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    /// Prepended to the filled template, followed by a blank line, when
    /// non-empty.
    #[serde(default)]
    pub system_text: String,
    /// Must contain `{context}` and `{question}` exactly once each.
    pub template: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            system_text: "You are an assistant helping clinicians read a practice guideline. \
                          Answer only from the provided context. If the context does not \
                          contain the answer, say that the guideline excerpt does not cover it."
                .to_string(),
            template: "Context:\n{context}\n\nQuestion: {question}\n\nAnswer:".to_string(),
        }
    }
}

impl PromptTemplate {
    pub fn new(
        system_text: impl Into<String>,
        template: impl Into<String>,
    ) -> Result<Self, RagError> {
        let tpl = Self {
            system_text: system_text.into(),
            template: template.into(),
        };
        tpl.validate()?;
        Ok(tpl)
    }

    pub fn validate(&self) -> Result<(), RagError> {
        for placeholder in [CONTEXT_PLACEHOLDER, QUESTION_PLACEHOLDER] {
            let n = self.template.matches(placeholder).count();
            if n != 1 {
                return Err(RagError::TemplateInvalid(format!(
                    "{placeholder} must appear exactly once, found {n}"
                )));
            }
        }
        Ok(())
    }

    /// Substitutes both placeholders in one pass, so placeholder-like text
    /// inside the context or question is left alone.
    pub fn render(&self, context: &str, question: &str) -> Result<String, RagError> {
        self.validate()?;
        let c = self.template.find(CONTEXT_PLACEHOLDER).unwrap();
        let q = self.template.find(QUESTION_PLACEHOLDER).unwrap();
        let mut slots = [
            (c, CONTEXT_PLACEHOLDER, context),
            (q, QUESTION_PLACEHOLDER, question),
        ];
        slots.sort_by_key(|s| s.0);

        let mut out = String::with_capacity(
            self.system_text.len() + self.template.len() + context.len() + question.len() + 2,
        );
        if !self.system_text.is_empty() {
            out.push_str(&self.system_text);
            out.push_str("\n\n");
        }
        let mut at = 0;
        for (pos, placeholder, value) in slots {
            out.push_str(&self.template[at..pos]);
            out.push_str(value);
            at = pos + placeholder.len();
        }
        out.push_str(&self.template[at..]);
        Ok(out)
    }
}

/// Chunk texts in descending similarity order, joined by the separator line.
pub fn build_context(hits: &[ContextHit]) -> String {
    let mut ordered: Vec<&ContextHit> = hits.iter().collect();
    ordered.sort_by(|a, b| b.similarity.total_cmp(&a.similarity));
    ordered
        .iter()
        .map(|h| h.text.as_str())
        .collect::<Vec<_>>()
        .join(CONTEXT_SEPARATOR)
}

pub fn build_prompt(
    question: &str,
    hits: &[ContextHit],
    tpl: &PromptTemplate,
) -> Result<String, RagError> {
    tpl.render(&build_context(hits), question)
}
