use serde::{Deserialize, Serialize};

use super::ScalarValue;

/// One finalized result row. `index` is the partition key for indexed
/// outputs; `weight` is present for the weighted kinds
/// (maximum/minimum/top).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<String>,
    pub value: ScalarValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<ScalarValue>,
}

/// Finalized rows for one output variable, sorted by index key then by
/// rank. Finalization happens exactly once, after the merge phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputTable {
    pub name: String,
    pub rows: Vec<TableRow>,
}
