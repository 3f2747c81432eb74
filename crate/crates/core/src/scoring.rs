//! ZSCT, the above-chance adjustment, and aggregation over seeds.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episode::EpisodeLog;

#[derive(Debug, Error, PartialEq)]
pub enum ScoringError {
    #[error("no episode logs given")]
    NoLogs,
    #[error("logs mix seeds {0} and {1}")]
    MixedSeeds(u64, u64),
    #[error("no querying games to score")]
    NoQueryingGames,
    #[error("ZSCT {0} outside [0, 100]")]
    OutOfRange(f64),
    #[error("need at least 2 seeds for a standard error, got {0}")]
    TooFewSeeds(usize),
    #[error("seed {0} appears more than once")]
    DuplicateSeed(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub zsct: f64,
    pub games: usize,
    pub correct: usize,
    pub parse_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub mean_zsct: f64,
    pub stderr_zsct: f64,
    pub adj_zsct: f64,
    pub n_seeds: usize,
}

/// Accuracy over querying games, as a percentage. Unparsable responses
/// count as incorrect.
pub fn compute_zsct(logs: &[EpisodeLog]) -> Result<SeedResult, ScoringError> {
    let first = logs.first().ok_or(ScoringError::NoLogs)?;
    let seed = first.config.seed;
    if let Some(other) = logs.iter().find(|l| l.config.seed != seed) {
        return Err(ScoringError::MixedSeeds(seed, other.config.seed));
    }
    let (mut games, mut correct, mut parse_failures) = (0, 0, 0);
    for g in logs.iter().flat_map(EpisodeLog::querying_games) {
        games += 1;
        correct += usize::from(g.correct);
        parse_failures += usize::from(g.listener_decision.is_none());
    }
    if games == 0 {
        return Err(ScoringError::NoQueryingGames);
    }
    Ok(SeedResult {
        seed,
        zsct: 100.0 * correct as f64 / games as f64,
        games,
        correct,
        parse_failures,
    })
}

/// `max(0, (zsct - 50) / (100 - 50)) * 100`.
pub fn adjust_zsct(zsct: f64) -> Result<f64, ScoringError> {
    if !(0.0..=100.0).contains(&zsct) {
        return Err(ScoringError::OutOfRange(zsct));
    }
    Ok(((zsct - 50.0) / (100.0 - 50.0)).max(0.0) * 100.0)
}

/// Mean, standard error (n - 1 deviation over sqrt n), and the adjustment
/// applied to the mean.
pub fn aggregate(results: &[SeedResult]) -> Result<ScoreSummary, ScoringError> {
    let n = results.len();
    if n < 2 {
        return Err(ScoringError::TooFewSeeds(n));
    }
    let mut seen = BTreeSet::new();
    for r in results {
        if !seen.insert(r.seed) {
            return Err(ScoringError::DuplicateSeed(r.seed));
        }
    }
    // sort so the float sums do not depend on seed order
    let mut values: Vec<f64> = results.iter().map(|r| r.zsct).collect();
    values.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(ScoreSummary {
        mean_zsct: mean,
        stderr_zsct: var.sqrt() / (n as f64).sqrt(),
        adj_zsct: adjust_zsct(mean.clamp(0.0, 100.0))?,
        n_seeds: n,
    })
}
