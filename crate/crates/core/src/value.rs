use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::bucket::Bucket;
use crate::dataset::MISSING_LABEL;

/// The value `u_c` a scenario targets within its column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioValue {
    /// A categorical label.
    Category(String),
    /// An exact value of a low-cardinality numeric column.
    Number(f64),
    /// A quantile bucket of a numeric column.
    Range(Bucket),
    /// Missing cells, swept as their own category.
    Missing,
}

impl ScenarioValue {
    /// Human readable label; round-trips through `Dataset::resolve_value`.
    pub fn label(&self) -> String {
        match self {
            ScenarioValue::Category(s) => s.clone(),
            ScenarioValue::Number(x) => format!("{x}"),
            ScenarioValue::Range(b) => b.label.clone(),
            ScenarioValue::Missing => String::from(MISSING_LABEL),
        }
    }
}
