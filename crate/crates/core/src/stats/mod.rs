//! Exact combinatorial inference over a table of model capabilities.

mod enumerate;
mod inference;
mod records;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use enumerate::{compensated_sum, count_permutations, count_subsets, factorial, MAX_EXHAUSTIVE_N};
pub use inference::{
    global_pairing_test, global_pairing_test_with, pearson_permutation_test,
    pearson_permutation_test_with, pearson_r, select_tail, tail_partition_test,
    tail_partition_test_explicit, vacancy_statistic, ExactP, PartitionResult, PermutationResult,
};
pub use records::{column, default_records, load_model_records, parse_model_records, Field, ModelRecord};
pub use report::{run_stats, scatter_csv, Reference, StatsReport};

use crate::parallel::Exec;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("record table: {0}")]
    Schema(String),
    #[error("reading records: {0}")]
    Io(String),
    #[error("no records")]
    Empty,
    #[error("{n} records is beyond exhaustive enumeration (max {max})")]
    TooLarge { n: usize, max: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("zero variance")]
    ZeroVariance,
    #[error("tail size {k} must be in 1..={n}")]
    InvalidK { k: usize, n: usize },
    #[error("tie on {field} = {value} at the tail boundary; give the tail explicitly")]
    TieAtBoundary { field: Field, value: f64 },
    #[error("explicit tail: {0}")]
    InvalidTail(String),
}

pub const ALPHA: f64 = 0.05;

/// Threshold on the benchmark score that defines the hard tail.
pub const TAIL_THRESHOLD: f64 = 75.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorReport {
    pub predictor: Field,
    pub continuous: PermutationResult,
    pub tail: PartitionResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentReport {
    pub n_records: usize,
    pub tail_k: usize,
    pub predictors: Vec<PredictorReport>,
    pub verdict: String,
}

impl TournamentReport {
    pub fn predictor(&self, field: Field) -> Option<&PredictorReport> {
        self.predictors.iter().find(|p| p.predictor == field)
    }
}

/// Records scoring above [`TAIL_THRESHOLD`], or half the table when that
/// count is 0 or N.
pub fn default_tail_k(records: &[ModelRecord]) -> usize {
    let n = records.len();
    let above = records.iter().filter(|r| r.minif2f > TAIL_THRESHOLD).count();
    if above >= 1 && above < n {
        above
    } else {
        (n / 2).max(1)
    }
}

/// Continuous and tail tests for both predictors against the benchmark
/// score, on the same records and the same tail.
pub fn tournament(records: &[ModelRecord]) -> Result<TournamentReport, StatsError> {
    tournament_with(records, &TailSpec::Default, Exec::default())
}

/// How the hard tail is chosen.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TailSpec {
    /// Top [`default_tail_k`] records by benchmark score.
    #[default]
    Default,
    TopK(usize),
    /// Named records, for tables with ties at the cut.
    Named(Vec<String>),
}

impl TailSpec {
    pub fn resolve(&self, records: &[ModelRecord]) -> Result<Vec<usize>, StatsError> {
        match self {
            TailSpec::Default => select_tail(records, Field::Minif2f, default_tail_k(records)),
            TailSpec::TopK(k) => select_tail(records, Field::Minif2f, *k),
            TailSpec::Named(names) => {
                let mut tail = Vec::with_capacity(names.len());
                for name in names {
                    let idx = records.iter().position(|r| &r.name == name).ok_or_else(|| {
                        StatsError::InvalidTail(format!("no record named {name:?}"))
                    })?;
                    if tail.contains(&idx) {
                        return Err(StatsError::InvalidTail(format!("{name:?} listed twice")));
                    }
                    tail.push(idx);
                }
                if tail.is_empty() {
                    return Err(StatsError::InvalidTail("empty tail".into()));
                }
                tail.sort_unstable();
                Ok(tail)
            }
        }
    }
}

pub fn tournament_with(
    records: &[ModelRecord],
    tail_spec: &TailSpec,
    exec: Exec,
) -> Result<TournamentReport, StatsError> {
    let tail = tail_spec.resolve(records)?;
    let k = tail.len();
    let rank_field = match tail_spec {
        TailSpec::Named(_) => None,
        _ => Some(Field::Minif2f),
    };
    let mut predictors = Vec::new();
    for predictor in [Field::AdjZsct, Field::SizeB] {
        let continuous = pearson_permutation_test_with(records, predictor, Field::Minif2f, exec)?;
        let mut tail_result = inference::partition_test(records, &tail, predictor, exec)?;
        tail_result.rank_field = rank_field;
        predictors.push(PredictorReport {
            predictor,
            continuous,
            tail: tail_result,
        });
    }
    let verdict = predictors
        .iter()
        .map(|p| {
            let mut axes = Vec::new();
            if p.continuous.p_value.value < ALPHA {
                axes.push("continuous");
            }
            if p.tail.p_value.value < ALPHA {
                axes.push("tail");
            }
            let axes = if axes.is_empty() {
                "neither axis".to_owned()
            } else {
                axes.join(" and ")
            };
            format!("{}: p < {ALPHA} on {axes}", p.predictor)
        })
        .collect::<Vec<_>>()
        .join("; ");
    Ok(TournamentReport {
        n_records: records.len(),
        tail_k: k,
        predictors,
        verdict,
    })
}
