use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::BenchError;

/// Items per group in a replication-shaped dataset.
pub const STRICT_ITEMS_PER_GROUP: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionGroup {
    Clinical,
    Visual,
    General,
}

impl QuestionGroup {
    pub const ALL: [QuestionGroup; 3] = [Self::Clinical, Self::Visual, Self::General];

    /// Short row label: G1, G2, G3.
    pub fn code(self) -> &'static str {
        match self {
            Self::Clinical => "G1",
            Self::Visual => "G2",
            Self::General => "G3",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Clinical => "clinical",
            Self::Visual => "visual",
            Self::General => "general",
        }
    }
}

impl fmt::Display for QuestionGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QuestionGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clinical" => Ok(Self::Clinical),
            "visual" => Ok(Self::Visual),
            "general" => Ok(Self::General),
            other => Err(format!("unknown group {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkItem {
    #[serde(rename = "id")]
    pub item_id: String,
    pub group: QuestionGroup,
    pub question: String,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkDataset {
    pub name: String,
    pub items: Vec<BenchmarkItem>,
}

impl BenchmarkDataset {
    pub fn count(&self, group: QuestionGroup) -> usize {
        self.items.iter().filter(|i| i.group == group).count()
    }

    /// Checks ids and texts; in strict mode also the 3 × 4 shape.
    pub fn validate(&self, strict: bool) -> Result<(), BenchError> {
        let mut seen = HashSet::new();
        for item in &self.items {
            if item.item_id.trim().is_empty() {
                return Err(BenchError::Parse("item with empty id".into()));
            }
            if !seen.insert(item.item_id.as_str()) {
                return Err(BenchError::DuplicateItemId(item.item_id.clone()));
            }
            if item.question.trim().is_empty() || item.reference.trim().is_empty() {
                return Err(BenchError::Parse(format!(
                    "item {} needs a non-empty question and reference",
                    item.item_id
                )));
            }
        }
        if strict {
            let counts = QuestionGroup::ALL.map(|g| self.count(g));
            if counts.iter().any(|&n| n != STRICT_ITEMS_PER_GROUP) {
                return Err(BenchError::StrictShapeViolation {
                    clinical: counts[0],
                    visual: counts[1],
                    general: counts[2],
                });
            }
        }
        Ok(())
    }
}

pub fn parse_dataset(json: &str, strict: bool) -> Result<BenchmarkDataset, BenchError> {
    let dataset: BenchmarkDataset =
        serde_json::from_str(json).map_err(|e| BenchError::Parse(e.to_string()))?;
    dataset.validate(strict)?;
    Ok(dataset)
}

pub fn load_dataset(path: &Path, strict: bool) -> Result<BenchmarkDataset, BenchError> {
    let json = std::fs::read_to_string(path)
        .map_err(|e| BenchError::Parse(format!("{}: {e}", path.display())))?;
    parse_dataset(&json, strict)
}

/// The dataset shipped with the crate: one published expert item and
/// eleven placeholders to be replaced with the full expert set.
pub fn bundled_dataset() -> BenchmarkDataset {
    parse_dataset(BUNDLED_DATASET_JSON, true).expect("bundled dataset is valid")
}

pub const BUNDLED_DATASET_JSON: &str = include_str!("../../data/benchmark_dataset.json");
