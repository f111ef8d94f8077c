use std::fmt::Write as _;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{BenchError, BenchmarkRun, QuestionGroup};
use crate::evalmetrics::{average_scores, METEOR_VARIANT};

pub const LATENCY_DEFINITION: &str =
    "wall-clock seconds from prompt dispatch to full response, retrieval excluded";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelLabel {
    pub model_id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub run_id: String,
    pub dataset: String,
    pub generated_at: DateTime<Utc>,
    pub chrf_beta: f64,
    pub chrf_n_max: usize,
    pub meteor_variant: String,
    pub latency_definition: String,
    pub latency_reported: bool,
    pub concurrency: usize,
    pub k: usize,
}

/// Mean scores of one model on one question group. Means are over
/// successful records only; `failed` counts the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub group: QuestionGroup,
    pub model_id: String,
    pub meteor: Option<f64>,
    pub chrf: Option<f64>,
    pub mean_latency_s: Option<f64>,
    pub mean_latency_minutes: Option<f64>,
    pub n: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingSummary {
    pub model_id: String,
    pub mean_fidelity_pct: f64,
    pub mean_relevance_pct: f64,
    /// Plain mean of the two percentages.
    pub combined_unweighted: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metadata: ReportMetadata,
    pub models: Vec<ModelLabel>,
    /// Group-major, models in run order.
    pub cells: Vec<CellSummary>,
    pub ratings: Vec<RatingSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl ReportFormat {
    pub fn content_type(self) -> &'static str {
        match self {
            Self::Markdown => "text/markdown; charset=utf-8",
            Self::Csv => "text/csv; charset=utf-8",
            Self::Json => "application/json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "md" | "markdown" => Ok(Self::Markdown),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl EvaluationReport {
    pub fn from_run(run: &BenchmarkRun) -> Result<Self, BenchError> {
        if run.records.is_empty() {
            return Err(BenchError::NoRecords);
        }
        let mut cells = Vec::new();
        for group in QuestionGroup::ALL {
            for model in &run.models {
                let records: Vec<_> = run
                    .records
                    .iter()
                    .filter(|r| r.group == group && r.model_id == model.model_id)
                    .collect();
                if records.is_empty() {
                    continue;
                }
                let scores: Vec<_> = records.iter().filter_map(|r| r.scores).collect();
                let avg = average_scores(&scores).ok();
                let mean_latency_s = if run.latency_reported {
                    mean(
                        records
                            .iter()
                            .filter(|r| r.scores.is_some())
                            .filter_map(|r| r.latency_s),
                    )
                } else {
                    None
                };
                cells.push(CellSummary {
                    group,
                    model_id: model.model_id.clone(),
                    meteor: avg.map(|s| s.meteor),
                    chrf: avg.map(|s| s.chrf),
                    mean_latency_s,
                    mean_latency_minutes: mean_latency_s.map(|s| s / 60.0),
                    n: scores.len(),
                    failed: records.len() - scores.len(),
                });
            }
        }

        let mut ratings = Vec::new();
        for model in &run.models {
            let mine: Vec<_> = run
                .ratings
                .iter()
                .filter(|rt| {
                    run.record(&rt.record_id)
                        .is_some_and(|rec| rec.model_id == model.model_id)
                })
                .collect();
            if let (Some(f), Some(r)) = (
                mean(mine.iter().map(|rt| rt.fidelity_pct)),
                mean(mine.iter().map(|rt| rt.relevance_pct)),
            ) {
                ratings.push(RatingSummary {
                    model_id: model.model_id.clone(),
                    mean_fidelity_pct: f,
                    mean_relevance_pct: r,
                    combined_unweighted: (f + r) / 2.0,
                    n: mine.len(),
                });
            }
        }

        Ok(Self {
            metadata: ReportMetadata {
                run_id: run.run_id.clone(),
                dataset: run.dataset_name.clone(),
                generated_at: run.finished_at,
                chrf_beta: run.chrf.beta,
                chrf_n_max: run.chrf.n_max,
                meteor_variant: METEOR_VARIANT.to_string(),
                latency_definition: LATENCY_DEFINITION.to_string(),
                latency_reported: run.latency_reported,
                concurrency: run.concurrency,
                k: run.k,
            },
            models: run.models.clone(),
            cells,
            ratings,
        })
    }

    pub fn cell(&self, group: QuestionGroup, model_id: &str) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.group == group && c.model_id == model_id)
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Markdown => self.to_markdown(),
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Json => serde_json::to_string_pretty(self).expect("report serializes"),
        }
    }

    fn groups(&self) -> Vec<QuestionGroup> {
        QuestionGroup::ALL
            .into_iter()
            .filter(|g| self.cells.iter().any(|c| c.group == *g))
            .collect()
    }

    /// Two-decimal tables: metrics per group and model, latency in
    /// minutes, and human ratings when present.
    pub fn to_markdown(&self) -> String {
        let md = &self.metadata;
        let two = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"));
        let mut out = String::new();
        let _ = writeln!(out, "# Evaluation report: {}\n", md.dataset);
        let _ = writeln!(out, "- Run: `{}`", md.run_id);
        let _ = writeln!(out, "- Generated: {}", md.generated_at.to_rfc3339());
        let _ = writeln!(
            out,
            "- Metrics: {}, chrF (β = {}, character n-grams up to {})",
            md.meteor_variant, md.chrf_beta, md.chrf_n_max
        );
        let _ = writeln!(out, "- Retrieved chunks per question: {}\n", md.k);

        let _ = writeln!(out, "## Reference-based scores\n");
        let mut header = String::from("| Group |");
        let mut rule = String::from("|---|");
        for m in &self.models {
            let _ = write!(header, " {0} METEOR | {0} chrF |", m.label);
            rule.push_str("---:|---:|");
        }
        let _ = writeln!(out, "{header}\n{rule}");
        for group in self.groups() {
            let _ = write!(out, "| {} ({}) |", group.code(), group.name());
            for m in &self.models {
                let cell = self.cell(group, &m.model_id);
                let _ = write!(
                    out,
                    " {} | {} |",
                    two(cell.and_then(|c| c.meteor)),
                    two(cell.and_then(|c| c.chrf))
                );
            }
            out.push('\n');
        }
        let failed: usize = self.cells.iter().map(|c| c.failed).sum();
        if failed > 0 {
            let _ = writeln!(
                out,
                "\n{failed} answer(s) failed and are excluded from the means."
            );
        }

        let _ = writeln!(out, "\n## Mean response latency (minutes)\n");
        if md.latency_reported {
            let _ = writeln!(out, "Latency is {}.\n", md.latency_definition);
            let mut header = String::from("| Group |");
            let mut rule = String::from("|---|");
            for m in &self.models {
                let _ = write!(header, " {} |", m.label);
                rule.push_str("---:|");
            }
            let _ = writeln!(out, "{header}\n{rule}");
            for group in self.groups() {
                let _ = write!(out, "| {} ({}) |", group.code(), group.name());
                for m in &self.models {
                    let minutes = self
                        .cell(group, &m.model_id)
                        .and_then(|c| c.mean_latency_minutes);
                    let _ = write!(out, " {} |", two(minutes));
                }
                out.push('\n');
            }
        } else {
            let _ = writeln!(
                out,
                "Not reported: the run used concurrency {}, which distorts per-request timings.",
                md.concurrency
            );
        }

        if !self.ratings.is_empty() {
            let _ = writeln!(out, "\n## Human ratings\n");
            let _ = writeln!(
                out,
                "| Model | Fidelity % | Relevance % | Combined % | Ratings |"
            );
            let _ = writeln!(out, "|---|---:|---:|---:|---:|");
            for r in &self.ratings {
                let label = self
                    .models
                    .iter()
                    .find(|m| m.model_id == r.model_id)
                    .map_or(r.model_id.as_str(), |m| m.label.as_str());
                let _ = writeln!(
                    out,
                    "| {label} | {:.2} | {:.2} | {:.2} | {} |",
                    r.mean_fidelity_pct, r.mean_relevance_pct, r.combined_unweighted, r.n
                );
            }
        }
        out
    }

    /// Full-precision cells, one row per group and model, after a `#`
    /// comment line naming the metric settings.
    pub fn to_csv(&self) -> String {
        let md = &self.metadata;
        let mut out = format!(
            "# chrF beta={}, n_max={}; {}; run_id={}\n",
            md.chrf_beta, md.chrf_n_max, md.meteor_variant, md.run_id
        );
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        let mut w = csv::Writer::from_writer(Vec::new());
        let _ = w.write_record([
            "group",
            "model_id",
            "label",
            "meteor",
            "chrf",
            "n",
            "failed",
            "mean_latency_s",
            "mean_latency_minutes",
        ]);
        for c in &self.cells {
            let label = self
                .models
                .iter()
                .find(|m| m.model_id == c.model_id)
                .map_or(c.model_id.as_str(), |m| m.label.as_str());
            let _ = w.write_record([
                c.group.code(),
                &c.model_id,
                label,
                &opt(c.meteor),
                &opt(c.chrf),
                &c.n.to_string(),
                &c.failed.to_string(),
                &opt(c.mean_latency_s),
                &opt(c.mean_latency_minutes),
            ]);
        }
        let bytes = w.into_inner().expect("in-memory writer");
        out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        out
    }
}
