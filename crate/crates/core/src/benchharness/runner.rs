use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use super::{BenchError, BenchmarkDataset, BenchmarkItem, HumanRating, ModelLabel, QuestionGroup};
use crate::evalmetrics::{score_response, ChrfConfig, MetricScores};
use crate::ragchat::{Corpus, RagEngine, DEFAULT_TOP_K};

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub chrf: ChrfConfig,
    pub k: usize,
    /// Items in flight per model. Latency is only reported when this is 1,
    /// since parallel requests skew wall-clock timings.
    pub concurrency: usize,
    /// Fixed run id; a random UUID otherwise.
    pub run_id: Option<String>,
    /// Incremented once per finished record.
    pub progress: Option<Arc<AtomicUsize>>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            chrf: ChrfConfig::default(),
            k: DEFAULT_TOP_K,
            concurrency: 1,
            run_id: None,
            progress: None,
        }
    }
}

/// One model's answer to one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// `{run_id}:{model_id}:{item_id}`.
    pub record_id: String,
    pub item_id: String,
    pub group: QuestionGroup,
    pub model_id: String,
    pub answer_text: String,
    /// Absent when generation failed.
    pub scores: Option<MetricScores>,
    pub latency_s: Option<f64>,
    pub retrieval_s: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRun {
    pub run_id: String,
    pub dataset_name: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub chrf: ChrfConfig,
    pub k: usize,
    pub concurrency: usize,
    pub latency_reported: bool,
    pub models: Vec<ModelLabel>,
    /// Model-major, then dataset order.
    pub records: Vec<RunRecord>,
    #[serde(default)]
    pub ratings: Vec<HumanRating>,
}

impl BenchmarkRun {
    pub fn record(&self, record_id: &str) -> Option<&RunRecord> {
        self.records.iter().find(|r| r.record_id == record_id)
    }

    /// Copy with every wall-clock field zeroed, for comparing runs.
    pub fn without_timings(&self) -> Self {
        let mut run = self.clone();
        run.started_at = DateTime::<Utc>::UNIX_EPOCH;
        run.finished_at = DateTime::<Utc>::UNIX_EPOCH;
        for r in &mut run.records {
            r.latency_s = r.latency_s.map(|_| 0.0);
            r.retrieval_s = r.retrieval_s.map(|_| 0.0);
        }
        for rating in &mut run.ratings {
            rating.rated_at = DateTime::<Utc>::UNIX_EPOCH;
        }
        run
    }

    pub fn save(&self, path: &Path) -> Result<(), BenchError> {
        let json =
            serde_json::to_vec_pretty(self).map_err(|e| BenchError::Persistence(e.to_string()))?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| BenchError::Persistence(e.to_string()))?;
        }
        std::fs::write(path, json).map_err(|e| BenchError::Persistence(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let bytes = std::fs::read(path)
            .map_err(|e| BenchError::Persistence(format!("{}: {e}", path.display())))?;
        serde_json::from_slice(&bytes).map_err(|e| BenchError::Persistence(e.to_string()))
    }
}

/// Asks every item of `dataset` to each model in `model_ids` over `corpus`
/// and scores the answers. Backend failures are recorded per item and do
/// not abort the run.
pub async fn run_benchmark(
    engine: &RagEngine,
    corpus: &Corpus,
    dataset: &BenchmarkDataset,
    model_ids: &[String],
    opts: &BenchOptions,
) -> Result<BenchmarkRun, BenchError> {
    if dataset.items.is_empty() {
        return Err(BenchError::DatasetEmpty);
    }
    if model_ids.is_empty() {
        return Err(BenchError::NoModels);
    }
    if opts.k == 0 || opts.concurrency == 0 {
        return Err(BenchError::InvalidOptions(
            "k and concurrency must be positive".into(),
        ));
    }
    opts.chrf
        .validate()
        .map_err(|e| BenchError::InvalidOptions(e.to_string()))?;
    dataset.validate(false)?;

    let mut models = Vec::with_capacity(model_ids.len());
    for id in model_ids {
        let (cfg, _) = engine
            .models()
            .get(id)
            .ok_or_else(|| BenchError::UnknownModel(id.clone()))?;
        if models.iter().any(|m: &ModelLabel| &m.model_id == id) {
            return Err(BenchError::InvalidOptions(format!(
                "model {id} listed twice"
            )));
        }
        models.push(ModelLabel {
            model_id: id.clone(),
            label: cfg.label().to_string(),
        });
    }

    let run_id = opts
        .run_id
        .clone()
        .unwrap_or_else(|| uuid::Uuid::new_v4().to_string());
    let started_at = Utc::now();
    tracing::info!(%run_id, items = dataset.items.len(), models = models.len(), "benchmark started");

    let mut records = Vec::with_capacity(models.len() * dataset.items.len());
    for model in &models {
        let pending: Vec<_> = dataset
            .items
            .iter()
            .enumerate()
            .map(|(pos, item)| run_item(engine, corpus, item, &model.model_id, &run_id, opts, pos))
            .collect();
        let mut batch: Vec<(usize, RunRecord)> = stream::iter(pending)
            .buffer_unordered(opts.concurrency)
            .collect()
            .await;
        batch.sort_by_key(|(pos, _)| *pos);
        records.extend(batch.into_iter().map(|(_, r)| r));
    }

    Ok(BenchmarkRun {
        run_id,
        dataset_name: dataset.name.clone(),
        started_at,
        finished_at: Utc::now(),
        chrf: opts.chrf,
        k: opts.k,
        concurrency: opts.concurrency,
        latency_reported: opts.concurrency == 1,
        models,
        records,
        ratings: Vec::new(),
    })
}

async fn run_item(
    engine: &RagEngine,
    corpus: &Corpus,
    item: &BenchmarkItem,
    model_id: &str,
    run_id: &str,
    opts: &BenchOptions,
    pos: usize,
) -> (usize, RunRecord) {
    let mut record = RunRecord {
        record_id: format!("{run_id}:{model_id}:{}", item.item_id),
        item_id: item.item_id.clone(),
        group: item.group,
        model_id: model_id.to_string(),
        answer_text: String::new(),
        scores: None,
        latency_s: None,
        retrieval_s: None,
        error: None,
    };
    match engine
        .answer(corpus, &item.question, model_id, opts.k, &[])
        .await
    {
        Ok(answer) => match score_response(&answer.text, &item.reference, &opts.chrf) {
            Ok(scores) => {
                record.scores = Some(scores);
                record.latency_s = Some(answer.latency_s);
                record.retrieval_s = Some(answer.retrieval_s);
                record.answer_text = answer.text;
            }
            Err(e) => record.error = Some(e.to_string()),
        },
        Err(e) => {
            tracing::warn!(model_id, item = %item.item_id, error = %e, "benchmark item failed");
            record.error = Some(e.to_string());
        }
    }
    if let Some(progress) = &opts.progress {
        progress.fetch_add(1, Ordering::Relaxed);
    }
    (pos, record)
}
