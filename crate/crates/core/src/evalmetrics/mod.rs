//! Reference-based answer scoring: chrF and exact-match METEOR.

mod chrf;
mod meteor;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chrf::{chrf, ChrfConfig};
pub use meteor::{
    align, breakdown, count_chunks, greedy_alignment, meteor, tokenize, Alignment, MeteorBreakdown,
    ALIGNMENT_CAP, METEOR_VARIANT,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("reference text is empty after preprocessing")]
    EmptyReference,
    #[error("invalid metric configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot average an empty list of scores")]
    EmptyList,
}

/// METEOR and chrF for one response, both in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricScores {
    pub meteor: f64,
    pub chrf: f64,
}

/// Scores `hypothesis` against `reference` with both metrics.
pub fn score_response(
    hypothesis: &str,
    reference: &str,
    chrf_cfg: &ChrfConfig,
) -> Result<MetricScores, MetricError> {
    let chrf = chrf(hypothesis, reference, chrf_cfg)?;
    let meteor = meteor(hypothesis, reference)?.score;
    Ok(MetricScores { meteor, chrf })
}

/// Arithmetic mean per metric. Rounding is left to renderers.
pub fn average_scores(scores: &[MetricScores]) -> Result<MetricScores, MetricError> {
    if scores.is_empty() {
        return Err(MetricError::EmptyList);
    }
    let n = scores.len() as f64;
    let (meteor, chrf) = scores
        .iter()
        .fold((0.0, 0.0), |(m, c), s| (m + s.meteor, c + s.chrf));
    Ok(MetricScores {
        meteor: meteor / n,
        chrf: chrf / n,
    })
}
