use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{BenchError, BenchmarkRun};

/// A rater's fidelity and relevance judgement of one record, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanRating {
    pub record_id: String,
    pub rater_id: String,
    pub fidelity_pct: f64,
    pub relevance_pct: f64,
    pub rated_at: DateTime<Utc>,
}

impl HumanRating {
    pub fn new(
        record_id: impl Into<String>,
        rater_id: impl Into<String>,
        fidelity_pct: f64,
        relevance_pct: f64,
    ) -> Self {
        Self {
            record_id: record_id.into(),
            rater_id: rater_id.into(),
            fidelity_pct,
            relevance_pct,
            rated_at: Utc::now(),
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        for (field, value) in [
            ("fidelity_pct", self.fidelity_pct),
            ("relevance_pct", self.relevance_pct),
        ] {
            if !(0.0..=100.0).contains(&value) {
                return Err(BenchError::OutOfRange { field, value });
            }
        }
        Ok(())
    }
}

impl BenchmarkRun {
    /// Stores `rating`, replacing an earlier one by the same rater for the
    /// same record.
    pub fn add_rating(&mut self, rating: HumanRating) -> Result<(), BenchError> {
        rating.validate()?;
        if self.record(&rating.record_id).is_none() {
            return Err(BenchError::UnknownRecord(rating.record_id));
        }
        match self
            .ratings
            .iter_mut()
            .find(|r| r.record_id == rating.record_id && r.rater_id == rating.rater_id)
        {
            Some(existing) => *existing = rating,
            None => self.ratings.push(rating),
        }
        Ok(())
    }
}
