use std::path::{Path, PathBuf};

use guideqa_core::docstore::ChunkingConfig;
use guideqa_core::embedindex::EmbedderConfig;
use guideqa_core::evalmetrics::ChrfConfig;
use guideqa_core::ragchat::{ChatOptions, ModelBackendConfig, PromptTemplate};
use serde::{Deserialize, Serialize};

pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 50 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub host: String,
    pub port: u16,
    /// Environment variable holding the bearer token.
    pub token_env: String,
    pub max_upload_bytes: usize,
    /// Document catalog, CLI corpus and benchmark runs live here.
    pub data_dir: PathBuf,
    pub embedder: EmbedderConfig,
    pub chunking: ChunkingConfig,
    pub chrf: ChrfConfig,
    pub chat: ChatOptions,
    pub prompt: PromptTemplate,
    pub backends: Vec<ModelBackendConfig>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            token_env: "GUIDEQA_TOKEN".into(),
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
            data_dir: PathBuf::from("guideqa-data"),
            embedder: EmbedderConfig::default(),
            chunking: ChunkingConfig::default(),
            chrf: ChrfConfig::default(),
            chat: ChatOptions::default(),
            prompt: PromptTemplate::default(),
            backends: Vec::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl ServerConfig {
    /// Reads a JSON config. Relative `data_dir` and `reference_dataset`
    /// paths are taken relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.data_dir.is_relative() {
            cfg.data_dir = base.join(&cfg.data_dir);
        }
        for backend in &mut cfg.backends {
            if let Some(p) = &backend.reference_dataset {
                if p.is_relative() {
                    backend.reference_dataset = Some(base.join(p));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.embedder.validate().map_err(|e| invalid(&e))?;
        self.chunking.validate().map_err(|e| invalid(&e))?;
        self.chrf.validate().map_err(|e| invalid(&e))?;
        self.prompt.validate().map_err(|e| invalid(&e))?;
        for b in &self.backends {
            b.validate().map_err(|e| invalid(&e))?;
        }
        if self.chat.default_k == 0 {
            return Err(ConfigError::Invalid(
                "chat.default_k must be positive".into(),
            ));
        }
        if self.max_upload_bytes == 0 {
            return Err(ConfigError::Invalid(
                "max_upload_bytes must be positive".into(),
            ));
        }
        if self.token_env.is_empty() {
            return Err(ConfigError::Invalid("token_env is empty".into()));
        }
        Ok(())
    }
}
