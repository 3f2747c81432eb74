use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::StatsError;

const BUNDLED_TABLE: &str = include_str!("../../data/prover_models.csv");
const COLUMNS: [&str; 4] = ["name", "size_b", "adj_zsct", "minif2f"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub name: String,
    /// Parameter count in billions.
    pub size_b: f64,
    pub adj_zsct: f64,
    pub minif2f: f64,
}

impl ModelRecord {
    pub fn get(&self, field: Field) -> f64 {
        match field {
            Field::SizeB => self.size_b,
            Field::AdjZsct => self.adj_zsct,
            Field::Minif2f => self.minif2f,
        }
    }

    fn validate(&self, row: usize) -> Result<(), StatsError> {
        let bad = |what: String| Err(StatsError::Schema(format!("row {row} ({}): {what}", self.name)));
        if self.name.trim().is_empty() {
            return bad("empty name".into());
        }
        if !(self.size_b.is_finite() && self.size_b > 0.0) {
            return bad(format!("size_b must be positive, got {}", self.size_b));
        }
        for field in [Field::AdjZsct, Field::Minif2f] {
            let v = self.get(field);
            if !(0.0..=100.0).contains(&v) {
                return bad(format!("{field} must lie in [0, 100], got {v}"));
            }
        }
        Ok(())
    }
}

/// Numeric column of a record table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    SizeB,
    AdjZsct,
    Minif2f,
}

impl Field {
    pub fn as_str(self) -> &'static str {
        match self {
            Field::SizeB => "size_b",
            Field::AdjZsct => "adj_zsct",
            Field::Minif2f => "minif2f",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Field {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "size_b" => Ok(Field::SizeB),
            "adj_zsct" => Ok(Field::AdjZsct),
            "minif2f" => Ok(Field::Minif2f),
            other => Err(StatsError::Schema(format!("unknown field {other:?}"))),
        }
    }
}

/// Parse a record table with header `name,size_b,adj_zsct,minif2f`
/// (column order is free, extra columns are ignored).
pub fn parse_model_records(text: &str) -> Result<Vec<ModelRecord>, StatsError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| StatsError::Schema(e.to_string()))?
        .clone();
    for col in COLUMNS {
        if !headers.iter().any(|h| h == col) {
            return Err(StatsError::Schema(format!("missing column {col:?}")));
        }
    }
    let mut records = Vec::new();
    for (i, row) in reader.deserialize::<ModelRecord>().enumerate() {
        let record = row.map_err(|e| StatsError::Schema(format!("row {}: {e}", i + 1)))?;
        record.validate(i + 1)?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(records)
}

pub fn load_model_records(path: &Path) -> Result<Vec<ModelRecord>, StatsError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| StatsError::Io(format!("{}: {e}", path.display())))?;
    parse_model_records(&text)
}

/// The ten prover models shipped with the crate, in table order.
pub fn default_records() -> Vec<ModelRecord> {
    parse_model_records(BUNDLED_TABLE).expect("bundled table is well-formed")
}

pub fn column(records: &[ModelRecord], field: Field) -> Vec<f64> {
    records.iter().map(|r| r.get(field)).collect()
}
