//! Model backends: a local HTTP inference server or deterministic mocks.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::RagError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpGenerate,
    /// Answers with the retrieved context section.
    MockEcho,
    /// Answers with a stored reference answer for the question.
    MockReference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBackendConfig {
    pub model_id: String,
    /// Column label in reports; falls back to `model_id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_name: Option<String>,
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    /// Artificial delay before a mock answers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mock_delay_s: Option<f64>,
    /// Question → answer table for `mock_reference`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub references: BTreeMap<String, String>,
    /// Benchmark dataset whose references seed `mock_reference`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_dataset: Option<PathBuf>,
}

fn default_max_tokens() -> u32 {
    512
}

fn default_timeout() -> f64 {
    600.0
}

impl ModelBackendConfig {
    pub fn new(model_id: impl Into<String>, kind: BackendKind) -> Self {
        Self {
            model_id: model_id.into(),
            display_name: None,
            kind,
            endpoint: None,
            max_tokens: default_max_tokens(),
            temperature: 0.0,
            timeout_s: default_timeout(),
            mock_delay_s: None,
            references: BTreeMap::new(),
            reference_dataset: None,
        }
    }

    pub fn http(model_id: impl Into<String>, endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: Some(endpoint.into()),
            ..Self::new(model_id, BackendKind::HttpGenerate)
        }
    }

    pub fn label(&self) -> &str {
        self.display_name.as_deref().unwrap_or(&self.model_id)
    }

    pub fn validate(&self) -> Result<(), RagError> {
        let invalid = |msg: String| {
            Err(RagError::InvalidBackend(format!(
                "{}: {msg}",
                self.model_id
            )))
        };
        if self.model_id.trim().is_empty() {
            return invalid("model_id is empty".into());
        }
        match (self.kind, &self.endpoint) {
            (BackendKind::HttpGenerate, None) => {
                return invalid("http_generate needs an endpoint".into())
            }
            (BackendKind::MockEcho | BackendKind::MockReference, Some(_)) => {
                return invalid("endpoint is only valid for http_generate".into())
            }
            _ => {}
        }
        if self.max_tokens == 0 {
            return invalid("max_tokens must be positive".into());
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return invalid(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            ));
        }
        if !(self.timeout_s.is_finite() && self.timeout_s > 0.0) {
            return invalid(format!(
                "timeout_s must be positive, got {}",
                self.timeout_s
            ));
        }
        if let Some(d) = self.mock_delay_s {
            if !(d.is_finite() && d >= 0.0) {
                return invalid(format!("mock_delay_s must be >= 0, got {d}"));
            }
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s)
    }
}

/// What a backend is asked to produce.
#[derive(Debug, Clone, Copy)]
pub struct GenerationRequest<'a> {
    pub model_id: &'a str,
    pub prompt: &'a str,
    /// The context section substituted into the prompt.
    pub context: &'a str,
    pub question: &'a str,
    pub max_tokens: u32,
    pub temperature: f64,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend timed out")]
    Timeout,
    #[error("backend returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("backend response is malformed: {0}")]
    Malformed(String),
    #[error("backend unreachable: {0}")]
    Transport(String),
    #[error("no reference answer for question {0:?}")]
    MissingReference(String),
}

#[async_trait]
pub trait ModelBackend: Send + Sync {
    async fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, BackendError>;
}

async fn mock_delay(delay: Option<Duration>) {
    if let Some(delay) = delay {
        tokio::time::sleep(delay).await;
    }
}

#[derive(Debug, Default, Clone)]
pub struct MockEchoBackend {
    pub delay: Option<Duration>,
}

#[async_trait]
impl ModelBackend for MockEchoBackend {
    async fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, BackendError> {
        mock_delay(self.delay).await;
        Ok(request.context.to_string())
    }
}

/// Looks answers up by trimmed question text.
#[derive(Debug, Default, Clone)]
pub struct MockReferenceBackend {
    answers: BTreeMap<String, String>,
    pub delay: Option<Duration>,
}

impl MockReferenceBackend {
    pub fn new(answers: impl IntoIterator<Item = (String, String)>) -> Self {
        Self {
            answers: answers
                .into_iter()
                .map(|(q, a)| (q.trim().to_string(), a))
                .collect(),
            delay: None,
        }
    }

    pub fn with_delay(mut self, delay: Option<Duration>) -> Self {
        self.delay = delay;
        self
    }
}

#[async_trait]
impl ModelBackend for MockReferenceBackend {
    async fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, BackendError> {
        mock_delay(self.delay).await;
        self.answers
            .get(request.question.trim())
            .cloned()
            .ok_or_else(|| BackendError::MissingReference(request.question.to_string()))
    }
}

#[derive(Serialize)]
struct GenerateBody<'a> {
    model: &'a str,
    prompt: &'a str,
    max_tokens: u32,
    temperature: f64,
}

#[derive(Deserialize)]
struct GenerateReply {
    text: String,
}

/// Client for a local inference server: `POST {"model", "prompt",
/// "max_tokens", "temperature"}` answered by `{"text": ...}`.
#[derive(Debug, Clone)]
pub struct HttpGenerateBackend {
    client: reqwest::Client,
    endpoint: String,
    timeout: Duration,
}

impl HttpGenerateBackend {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        Self {
            client: reqwest::Client::new(),
            endpoint: endpoint.into(),
            timeout,
        }
    }
}

fn transport_error(e: reqwest::Error) -> BackendError {
    if e.is_timeout() {
        BackendError::Timeout
    } else {
        BackendError::Transport(e.to_string())
    }
}

#[async_trait]
impl ModelBackend for HttpGenerateBackend {
    async fn generate(&self, request: &GenerationRequest<'_>) -> Result<String, BackendError> {
        let response = self
            .client
            .post(&self.endpoint)
            .timeout(self.timeout)
            .json(&GenerateBody {
                model: request.model_id,
                prompt: request.prompt,
                max_tokens: request.max_tokens,
                temperature: request.temperature,
            })
            .send()
            .await
            .map_err(transport_error)?;
        let status = response.status();
        if !status.is_success() {
            let body = response.text().await.unwrap_or_default();
            return Err(BackendError::Status {
                status: status.as_u16(),
                body: body.chars().take(200).collect(),
            });
        }
        let bytes = response.bytes().await.map_err(transport_error)?;
        let reply: GenerateReply =
            serde_json::from_slice(&bytes).map_err(|e| BackendError::Malformed(e.to_string()))?;
        Ok(reply.text)
    }
}

/// Backends in registration order.
#[derive(Clone, Default)]
pub struct ModelRegistry {
    entries: Vec<(ModelBackendConfig, Arc<dyn ModelBackend>)>,
}

impl std::fmt::Debug for ModelRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list()
            .entries(self.entries.iter().map(|(cfg, _)| &cfg.model_id))
            .finish()
    }
}

impl ModelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_configs(configs: &[ModelBackendConfig]) -> Result<Self, RagError> {
        let mut registry = Self::new();
        for cfg in configs {
            registry.register(cfg.clone())?;
        }
        Ok(registry)
    }

    /// Builds the backend a config describes and registers it.
    pub fn register(&mut self, config: ModelBackendConfig) -> Result<(), RagError> {
        config.validate()?;
        let delay = config.mock_delay_s.map(Duration::from_secs_f64);
        let backend: Arc<dyn ModelBackend> = match config.kind {
            BackendKind::HttpGenerate => Arc::new(HttpGenerateBackend::new(
                config.endpoint.clone().unwrap_or_default(),
                config.timeout(),
            )),
            BackendKind::MockEcho => Arc::new(MockEchoBackend { delay }),
            BackendKind::MockReference => {
                let mut answers: Vec<(String, String)> = config
                    .references
                    .iter()
                    .map(|(q, a)| (q.clone(), a.clone()))
                    .collect();
                if let Some(path) = &config.reference_dataset {
                    let dataset = crate::benchharness::load_dataset(path, false).map_err(|e| {
                        RagError::InvalidBackend(format!("{}: {e}", config.model_id))
                    })?;
                    answers.extend(
                        dataset
                            .items
                            .into_iter()
                            .map(|it| (it.question, it.reference)),
                    );
                }
                Arc::new(MockReferenceBackend::new(answers).with_delay(delay))
            }
        };
        self.register_backend(config, backend)
    }

    /// Registers a caller-supplied backend under `config`.
    pub fn register_backend(
        &mut self,
        config: ModelBackendConfig,
        backend: Arc<dyn ModelBackend>,
    ) -> Result<(), RagError> {
        config.validate()?;
        if self.get(&config.model_id).is_some() {
            return Err(RagError::InvalidBackend(format!(
                "model {} registered twice",
                config.model_id
            )));
        }
        self.entries.push((config, backend));
        Ok(())
    }

    pub fn get(&self, model_id: &str) -> Option<(&ModelBackendConfig, &Arc<dyn ModelBackend>)> {
        self.entries
            .iter()
            .find(|(cfg, _)| cfg.model_id == model_id)
            .map(|(cfg, backend)| (cfg, backend))
    }

    pub fn list(&self) -> Vec<ModelBackendConfig> {
        self.entries.iter().map(|(cfg, _)| cfg.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
