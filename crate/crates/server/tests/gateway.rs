mod common;

use axum::http::{Method, StatusCode};
use common::{TestApp, REFERENCE_MODELS, TOKEN};
use guideqa_core::benchharness::EvaluationReport;
use guideqa_core::docstore::write_text_pdf;
use guideqa_server::ApiErrorBody;
use serde_json::json;

const GUIDELINE: &[u8] = include_bytes!("../../core/data/sample_guideline.txt");

fn assert_error(reply: &common::Reply, status: StatusCode, code: &str) {
    assert_eq!(reply.status, status, "{}", reply.text());
    let body: ApiErrorBody = serde_json::from_slice(&reply.body).unwrap();
    assert_eq!(body.code, code);
    assert!(!body.message.is_empty());
}

async fn session_with_guideline(app: &TestApp) -> String {
    let reply = app
        .upload(
            "guideline.txt",
            GUIDELINE,
            &[("title", "Sample")],
            Some(TOKEN),
        )
        .await;
    assert_eq!(reply.status, StatusCode::CREATED, "{}", reply.text());
    reply.json()["session_id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn every_protected_route_needs_the_token() {
    let app = TestApp::new();
    let routes = [
        (Method::POST, "/api/sessions"),
        (Method::GET, "/api/sessions/x"),
        (Method::POST, "/api/sessions/x/query"),
        (Method::POST, "/api/documents"),
        (Method::GET, "/api/documents"),
        (Method::GET, "/api/models"),
        (Method::POST, "/api/benchmark/run"),
        (Method::GET, "/api/benchmark/x"),
        (Method::GET, "/api/benchmark/x/report"),
        (Method::POST, "/api/ratings"),
        (Method::GET, "/api/no-such-route"),
    ];
    for (method, uri) in routes {
        for token in [None, Some("wrong"), Some("")] {
            let reply = app.call(method.clone(), uri, Some(json!({})), token).await;
            assert_error(&reply, StatusCode::UNAUTHORIZED, "unauthorized");
        }
    }
    let health = app.call(Method::GET, "/api/health", None, None).await;
    assert_eq!(health.status, StatusCode::OK);
    let up = app.upload("a.txt", b"text", &[], None).await;
    assert_error(&up, StatusCode::UNAUTHORIZED, "unauthorized");
}

#[tokio::test]
async fn upload_and_session_lifecycle() {
    let app = TestApp::new();
    let created = app.post("/api/sessions", json!({})).await;
    assert_eq!(created.status, StatusCode::CREATED);
    let sid = created.json()["session_id"].as_str().unwrap().to_string();

    let up = app
        .upload("g.md", GUIDELINE, &[("session_id", &sid)], Some(TOKEN))
        .await;
    assert_eq!(up.status, StatusCode::CREATED, "{}", up.text());
    let body = up.json();
    assert_eq!(body["session_id"], sid.as_str());
    assert_eq!(body["title"], "g.md");
    assert_eq!(body["pages"], 1);
    assert!(body["chunks"].as_u64().unwrap() >= 4);

    let pages = ["First page text.", "Second page text.", "Third page."];
    let pdf = write_text_pdf(&pages);
    let up = app
        .upload(
            "three.pdf",
            &pdf,
            &[("session_id", &sid), ("title", "Three")],
            Some(TOKEN),
        )
        .await;
    assert_eq!(up.status, StatusCode::CREATED, "{}", up.text());
    assert_eq!(up.json()["pages"], 3);

    let info = app.get(&format!("/api/sessions/{sid}")).await.json();
    assert_eq!(info["doc_ids"].as_array().unwrap().len(), 2);
    let docs = app.get("/api/documents").await.json();
    assert_eq!(docs.as_array().unwrap().len(), 2);

    assert_error(
        &app.upload("x.docx", b"abc", &[], Some(TOKEN)).await,
        StatusCode::UNPROCESSABLE_ENTITY,
        "unprocessable",
    );
    assert_error(
        &app.upload("x.txt", b"   \n", &[], Some(TOKEN)).await,
        StatusCode::UNPROCESSABLE_ENTITY,
        "unprocessable",
    );
    assert_error(
        &app.upload("x.pdf", b"%PDF-garbage", &[], Some(TOKEN)).await,
        StatusCode::UNPROCESSABLE_ENTITY,
        "unprocessable",
    );
    assert_error(
        &app.upload("x.txt", b"abc", &[("session_id", "missing")], Some(TOKEN))
            .await,
        StatusCode::NOT_FOUND,
        "not_found",
    );
    assert_error(
        &app.get("/api/sessions/missing").await,
        StatusCode::NOT_FOUND,
        "not_found",
    );
}

#[tokio::test]
async fn oversized_upload_is_rejected() {
    let app = TestApp::new();
    let big = vec![b'a'; 60 * 1024 * 1024];
    assert_error(
        &app.upload("big.txt", &big, &[], Some(TOKEN)).await,
        StatusCode::PAYLOAD_TOO_LARGE,
        "payload_too_large",
    );

    let small = TestApp::with(|c| c.max_upload_bytes = 1024);
    assert_error(
        &small.upload("b.txt", &[b'a'; 4096], &[], Some(TOKEN)).await,
        StatusCode::PAYLOAD_TOO_LARGE,
        "payload_too_large",
    );
    let ok = small.upload("b.txt", &[b'a'; 200], &[], Some(TOKEN)).await;
    assert_eq!(ok.status, StatusCode::CREATED);
}

#[tokio::test]
async fn query_contract() {
    let app = TestApp::new();
    let sid = session_with_guideline(&app).await;
    let uri = format!("/api/sessions/{sid}/query");

    let reply = app
        .post(
            &uri,
            json!({ "question": "What is masked hypertension?", "model_id": "echo", "k": 3 }),
        )
        .await;
    assert_eq!(reply.status, StatusCode::OK, "{}", reply.text());
    let body = reply.json();
    let contexts = body["contexts"].as_array().unwrap();
    assert_eq!(contexts.len(), 3);
    assert!(body["answer"]
        .as_str()
        .unwrap()
        .contains(contexts[0]["text"].as_str().unwrap()));
    assert!(body["latency_s"].as_f64().unwrap() >= 0.0);
    assert!(body["retrieval_s"].as_f64().unwrap() >= 0.0);

    let question = &guideqa_core::benchharness::bundled_dataset().items[0];
    let reply = app
        .post(
            &uri,
            json!({ "question": question.question, "model_id": "mistral-7b-instruct" }),
        )
        .await;
    assert_eq!(reply.json()["answer"], question.reference.as_str());
    assert_eq!(reply.json()["contexts"].as_array().unwrap().len(), 4);

    assert_error(
        &app.post(&uri, json!({ "question": "q", "model_id": "nope" }))
            .await,
        StatusCode::BAD_REQUEST,
        "unknown_model",
    );
    assert_error(
        &app.post(&uri, json!({ "question": " ", "model_id": "echo" }))
            .await,
        StatusCode::BAD_REQUEST,
        "invalid_request",
    );
    assert_error(
        &app.post(&uri, json!({ "question": "q", "model_id": "echo", "k": 0 }))
            .await,
        StatusCode::BAD_REQUEST,
        "invalid_request",
    );
    assert_error(
        &app.post(&uri, json!({ "question": "q" })).await,
        StatusCode::BAD_REQUEST,
        "invalid_request",
    );
    assert_error(
        &app.post(&uri, json!({ "question": "q", "model_id": "slow" }))
            .await,
        StatusCode::GATEWAY_TIMEOUT,
        "backend_timeout",
    );
    assert_error(
        &app.post(&uri, json!({ "question": "q", "model_id": "offline" }))
            .await,
        StatusCode::BAD_GATEWAY,
        "backend_failed",
    );
    assert_error(
        &app.post(
            "/api/sessions/missing/query",
            json!({ "question": "q", "model_id": "echo" }),
        )
        .await,
        StatusCode::NOT_FOUND,
        "not_found",
    );
    let info = app.get(&format!("/api/sessions/{sid}")).await.json();
    assert_eq!(info["turns"], 2);
}

#[tokio::test]
async fn models_are_listed_in_config_order() {
    let app = TestApp::new();
    let models = app.get("/api/models").await.json();
    let list = models.as_array().unwrap();
    for (entry, (id, label)) in list.iter().zip(REFERENCE_MODELS) {
        assert_eq!(
            (
                entry["model_id"].as_str().unwrap(),
                entry["label"].as_str().unwrap()
            ),
            (id, label)
        );
        assert_eq!(entry["kind"], "mock_reference");
    }
    assert_eq!(list[4]["kind"], "mock_echo");
}

#[tokio::test]
async fn benchmark_report_and_ratings() {
    let app = TestApp::new();
    let ids: Vec<&str> = REFERENCE_MODELS.iter().map(|m| m.0).collect();
    let start = app
        .post("/api/benchmark/run", json!({ "model_ids": ids }))
        .await;
    assert_eq!(start.status, StatusCode::ACCEPTED, "{}", start.text());
    let run_id = start.json()["run_id"].as_str().unwrap().to_string();
    assert_eq!(start.json()["total"], 48);
    let status = app.wait_for_run(&run_id).await;
    assert_eq!(
        (status["status"].as_str(), status["completed"].as_u64()),
        (Some("done"), Some(48))
    );

    let md = app
        .get(&format!("/api/benchmark/{run_id}/report?format=md"))
        .await;
    assert_eq!(md.status, StatusCode::OK);
    assert!(md.content_type().starts_with("text/markdown"));
    assert!(md
        .text()
        .contains("| Group | Llama-2 METEOR | Llama-2 chrF | MedAlpaca METEOR"));
    let csv = app
        .get(&format!("/api/benchmark/{run_id}/report?format=csv"))
        .await;
    assert!(csv.content_type().starts_with("text/csv"));
    assert_eq!(csv.text().lines().count(), 2 + 12);
    let default = app.get(&format!("/api/benchmark/{run_id}/report")).await;
    assert!(default.content_type().starts_with("text/markdown"));
    assert_error(
        &app.get(&format!("/api/benchmark/{run_id}/report?format=xml"))
            .await,
        StatusCode::BAD_REQUEST,
        "invalid_request",
    );

    let record_id = format!("{run_id}:meditron-7b:clinical-01");
    let rate = |f: f64, r: f64, rater: &str| json!({ "record_id": record_id, "rater_id": rater, "fidelity_pct": f, "relevance_pct": r });
    assert_eq!(
        app.post("/api/ratings", rate(90.0, 70.0, "a")).await.status,
        StatusCode::NO_CONTENT
    );
    assert_eq!(
        app.post("/api/ratings", rate(70.0, 50.0, "b")).await.status,
        StatusCode::NO_CONTENT
    );
    assert_eq!(
        app.post("/api/ratings", rate(80.0, 60.0, "b")).await.status,
        StatusCode::NO_CONTENT
    );
    assert_error(
        &app.post("/api/ratings", rate(120.0, 50.0, "a")).await,
        StatusCode::UNPROCESSABLE_ENTITY,
        "unprocessable",
    );
    assert_error(
        &app.post(
            "/api/ratings",
            json!({ "record_id": "nope", "rater_id": "a", "fidelity_pct": 1, "relevance_pct": 1 }),
        )
        .await,
        StatusCode::NOT_FOUND,
        "not_found",
    );

    let json_report = app
        .get(&format!("/api/benchmark/{run_id}/report?format=json"))
        .await;
    assert_eq!(json_report.content_type(), "application/json");
    let report: EvaluationReport = serde_json::from_slice(&json_report.body).unwrap();
    assert_eq!(report.ratings.len(), 1);
    let r = &report.ratings[0];
    assert_eq!(
        (
            r.model_id.as_str(),
            r.n,
            r.mean_fidelity_pct,
            r.mean_relevance_pct
        ),
        ("meditron-7b", 2, 85.0, 65.0)
    );
    assert_eq!(r.combined_unweighted, 75.0);

    // A fresh instance over the same data directory sees the stored run.
    let reopened = TestApp::from_config(app.state.config.clone(), tempfile::tempdir().unwrap());
    let again = reopened
        .get(&format!("/api/benchmark/{run_id}/report?format=json"))
        .await;
    let report2: EvaluationReport = serde_json::from_slice(&again.body).unwrap();
    assert_eq!(report2, report);
    assert_error(
        &app.get("/api/benchmark/unknown").await,
        StatusCode::NOT_FOUND,
        "not_found",
    );
    assert_error(
        &app.get("/api/benchmark/unknown/report").await,
        StatusCode::NOT_FOUND,
        "not_found",
    );
}

#[tokio::test]
async fn one_run_at_a_time() {
    let app = TestApp::new();
    let start = app
        .post("/api/benchmark/run", json!({ "model_ids": ["sluggish"] }))
        .await;
    assert_eq!(start.status, StatusCode::ACCEPTED);
    let run_id = start.json()["run_id"].as_str().unwrap().to_string();

    let pending = app.get(&format!("/api/benchmark/{run_id}/report")).await;
    assert_eq!(pending.status, StatusCode::ACCEPTED);
    assert_eq!(pending.json()["status"], "running");
    assert_error(
        &app.post("/api/benchmark/run", json!({ "model_ids": ["echo"] }))
            .await,
        StatusCode::CONFLICT,
        "run_in_progress",
    );
    assert_eq!(app.wait_for_run(&run_id).await["status"], "done");
    let next = app
        .post("/api/benchmark/run", json!({ "model_ids": ["echo"] }))
        .await;
    assert_eq!(next.status, StatusCode::ACCEPTED);
    app.wait_for_run(next.json()["run_id"].as_str().unwrap())
        .await;
}

#[tokio::test]
async fn benchmark_request_validation() {
    let app = TestApp::new();
    let tiny = json!({ "name": "tiny", "items": [{ "id": "a", "group": "general", "question": "q?", "reference": "r." }] });
    assert_error(
        &app.post(
            "/api/benchmark/run",
            json!({ "model_ids": ["echo"], "dataset": tiny }),
        )
        .await,
        StatusCode::UNPROCESSABLE_ENTITY,
        "strict_shape_violation",
    );
    let relaxed = app
        .post(
            "/api/benchmark/run",
            json!({ "model_ids": ["echo"], "dataset": tiny, "strict": false }),
        )
        .await;
    assert_eq!(relaxed.status, StatusCode::ACCEPTED);
    let run_id = relaxed.json()["run_id"].as_str().unwrap().to_string();
    app.wait_for_run(&run_id).await;

    assert_error(
        &app.post("/api/benchmark/run", json!({ "model_ids": ["ghost"] }))
            .await,
        StatusCode::BAD_REQUEST,
        "unknown_model",
    );
    assert_error(
        &app.post("/api/benchmark/run", json!({ "model_ids": [] }))
            .await,
        StatusCode::BAD_REQUEST,
        "invalid_request",
    );
    assert_error(
        &app.post(
            "/api/benchmark/run",
            json!({ "model_ids": ["echo"], "dataset_path": "../../etc/passwd" }),
        )
        .await,
        StatusCode::BAD_REQUEST,
        "invalid_request",
    );
    assert_error(
        &app.post(
            "/api/benchmark/run",
            json!({ "model_ids": ["echo"], "dataset_path": "missing.json" }),
        )
        .await,
        StatusCode::UNPROCESSABLE_ENTITY,
        "unprocessable",
    );

    let datasets = app.dir.path().join("datasets");
    std::fs::create_dir_all(&datasets).unwrap();
    std::fs::write(datasets.join("tiny.json"), tiny.to_string()).unwrap();
    let from_file = app
        .post(
            "/api/benchmark/run",
            json!({ "model_ids": ["echo"], "dataset_path": "tiny.json", "strict": false }),
        )
        .await;
    assert_eq!(
        from_file.status,
        StatusCode::ACCEPTED,
        "{}",
        from_file.text()
    );
    app.wait_for_run(from_file.json()["run_id"].as_str().unwrap())
        .await;
}

#[tokio::test]
async fn benchmark_uses_session_corpus() {
    let app = TestApp::new();
    let sid = session_with_guideline(&app).await;
    let tiny = json!({ "name": "tiny", "items": [{ "id": "a", "group": "clinical",
        "question": "What cut-point identifies LVH by echocardiography?", "reference": "45 g/m²" }] });
    let start = app
        .post(
            "/api/benchmark/run",
            json!({ "model_ids": ["echo"], "dataset": tiny, "strict": false, "session_id": sid }),
        )
        .await;
    let run_id = start.json()["run_id"].as_str().unwrap().to_string();
    app.wait_for_run(&run_id).await;
    let report: EvaluationReport = serde_json::from_slice(
        &app.get(&format!("/api/benchmark/{run_id}/report?format=json"))
            .await
            .body,
    )
    .unwrap();
    assert!(report.cells[0].chrf.unwrap() > 0.0);
}
