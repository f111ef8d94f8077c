//! In-process gateway harness: requests go straight to the router.

#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, HeaderMap, Method, Request, StatusCode};
use axum::Router;
use guideqa_core::benchharness::bundled_dataset;
use guideqa_core::ragchat::{BackendKind, ModelBackendConfig};
use guideqa_server::{router, AppState, ServerConfig};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub const TOKEN: &str = "test-token-7f3a";
pub const REFERENCE_MODELS: [(&str, &str); 4] = [
    ("llama-2-13b", "Llama-2"),
    ("medalpaca-13b", "MedAlpaca"),
    ("meditron-7b", "Meditron"),
    ("mistral-7b-instruct", "Mistral"),
];

pub struct TestApp {
    pub router: Router,
    pub state: Arc<AppState>,
    pub dir: tempfile::TempDir,
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body)
            .unwrap_or_else(|e| panic!("not JSON ({e}): {}", String::from_utf8_lossy(&self.body)))
    }

    pub fn text(&self) -> String {
        String::from_utf8(self.body.clone()).unwrap()
    }

    pub fn content_type(&self) -> &str {
        self.headers
            .get(header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or("")
    }
}

/// Mock-only config: the four reference-answer models, an echo model, a
/// model that always times out and one whose server is unreachable.
pub fn mock_config(data_dir: &std::path::Path) -> ServerConfig {
    let references: std::collections::BTreeMap<String, String> = bundled_dataset()
        .items
        .into_iter()
        .map(|i| (i.question, i.reference))
        .collect();
    let mut backends: Vec<ModelBackendConfig> = REFERENCE_MODELS
        .iter()
        .map(|(id, label)| {
            let mut cfg = ModelBackendConfig::new(*id, BackendKind::MockReference);
            cfg.display_name = Some(label.to_string());
            cfg.references = references.clone();
            cfg
        })
        .collect();
    backends.push(ModelBackendConfig::new("echo", BackendKind::MockEcho));
    let mut slow = ModelBackendConfig::new("slow", BackendKind::MockEcho);
    slow.mock_delay_s = Some(2.0);
    slow.timeout_s = 0.2;
    backends.push(slow);
    let mut sluggish = ModelBackendConfig::new("sluggish", BackendKind::MockEcho);
    sluggish.mock_delay_s = Some(0.1);
    backends.push(sluggish);
    backends.push(ModelBackendConfig::http(
        "offline",
        "http://127.0.0.1:9/generate",
    ));
    ServerConfig {
        data_dir: data_dir.to_path_buf(),
        backends,
        ..ServerConfig::default()
    }
}

impl TestApp {
    pub fn new() -> Self {
        Self::with(|_| {})
    }

    pub fn with(tweak: impl FnOnce(&mut ServerConfig)) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let mut config = mock_config(dir.path());
        tweak(&mut config);
        Self::from_config(config, dir)
    }

    pub fn from_config(config: ServerConfig, dir: tempfile::TempDir) -> Self {
        let state = Arc::new(AppState::new(config, TOKEN.to_string()).unwrap());
        Self {
            router: router(state.clone()),
            state,
            dir,
        }
    }

    pub async fn send(&self, request: Request<Body>) -> Reply {
        let response = self.router.clone().oneshot(request).await.unwrap();
        let status = response.status();
        let headers = response.headers().clone();
        let body = response
            .into_body()
            .collect()
            .await
            .unwrap()
            .to_bytes()
            .to_vec();
        Reply {
            status,
            headers,
            body,
        }
    }

    pub async fn call(
        &self,
        method: Method,
        uri: &str,
        json: Option<Value>,
        token: Option<&str>,
    ) -> Reply {
        let mut builder = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            builder = builder.header(header::AUTHORIZATION, format!("Bearer {t}"));
        }
        let body = match json {
            Some(v) => {
                builder = builder.header(header::CONTENT_TYPE, "application/json");
                Body::from(serde_json::to_vec(&v).unwrap())
            }
            None => Body::empty(),
        };
        self.send(builder.body(body).unwrap()).await
    }

    pub async fn get(&self, uri: &str) -> Reply {
        self.call(Method::GET, uri, None, Some(TOKEN)).await
    }

    pub async fn post(&self, uri: &str, json: Value) -> Reply {
        self.call(Method::POST, uri, Some(json), Some(TOKEN)).await
    }

    /// Multipart upload with a `file` part and optional text parts.
    pub async fn upload(
        &self,
        file_name: &str,
        bytes: &[u8],
        fields: &[(&str, &str)],
        token: Option<&str>,
    ) -> Reply {
        let boundary = "----guideqa-test-boundary";
        let mut body = Vec::with_capacity(bytes.len() + 512);
        for (name, value) in fields {
            body.extend_from_slice(
                format!("--{boundary}\r\nContent-Disposition: form-data; name=\"{name}\"\r\n\r\n{value}\r\n").as_bytes(),
            );
        }
        body.extend_from_slice(
            format!(
                "--{boundary}\r\nContent-Disposition: form-data; name=\"file\"; filename=\"{file_name}\"\r\nContent-Type: application/octet-stream\r\n\r\n"
            )
            .as_bytes(),
        );
        body.extend_from_slice(bytes);
        body.extend_from_slice(format!("\r\n--{boundary}--\r\n").as_bytes());
        let mut builder = Request::builder()
            .method(Method::POST)
            .uri("/api/documents")
            .header(
                header::CONTENT_TYPE,
                format!("multipart/form-data; boundary={boundary}"),
            );
        if let Some(t) = token {
            builder = builder.header(header::AUTHORIZATION, format!("Bearer {t}"));
        }
        self.send(builder.body(Body::from(body)).unwrap()).await
    }

    /// Polls the run status until it leaves `running`.
    pub async fn wait_for_run(&self, run_id: &str) -> Value {
        for _ in 0..600 {
            let status = self.get(&format!("/api/benchmark/{run_id}")).await.json();
            if status["status"] != "running" {
                return status;
            }
            tokio::time::sleep(std::time::Duration::from_millis(20)).await;
        }
        panic!("run {run_id} did not finish");
    }
}
