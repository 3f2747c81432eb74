use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::enumerate::{
    at_least, compensated_sum, count_permutations, count_subsets, factorial, MAX_EXHAUSTIVE_N,
};
use super::records::{column, Field, ModelRecord};
use super::StatsError;
use crate::parallel::Exec;

/// An exact p-value `numerator / denominator`, reduced, with its decimal value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactP {
    pub numerator: u64,
    pub denominator: u64,
    pub value: f64,
}

impl ExactP {
    pub fn new(tally: u64, total: u64) -> Self {
        assert!(total > 0, "empty arrangement space");
        let g = tally.gcd(&total).max(1);
        Self {
            numerator: tally / g,
            denominator: total / g,
            value: tally as f64 / total as f64,
        }
    }
}

impl fmt::Display for ExactP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub x_field: Field,
    pub y_field: Field,
    pub observed: f64,
    pub tally_geq: u64,
    pub total_arrangements: u64,
    pub p_value: ExactP,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    /// `None` when the tail was given explicitly.
    pub rank_field: Option<Field>,
    pub sum_field: Field,
    pub k: usize,
    pub tail_names: Vec<String>,
    pub observed_sum: f64,
    pub tally_geq: u64,
    pub total: u64,
    pub p_value: ExactP,
}

fn check_exhaustive(n: usize) -> Result<(), StatsError> {
    if n == 0 {
        return Err(StatsError::Empty);
    }
    if n > MAX_EXHAUSTIVE_N {
        return Err(StatsError::TooLarge {
            n,
            max: MAX_EXHAUSTIVE_N,
        });
    }
    Ok(())
}

fn vacancy_of(x: &[f64], y: &[f64], perm: &[usize]) -> f64 {
    -compensated_sum(
        perm.iter()
            .zip(y)
            .map(|(&j, &yi)| (yi / 100.0 - x[j] / 100.0).max(0.0)),
    )
}

/// `T = -sum_i max(0, y_i/100 - x_i/100)`; zero when no point lies above
/// the diagonal.
pub fn vacancy_statistic(records: &[ModelRecord], x_field: Field, y_field: Field) -> f64 {
    let x = column(records, x_field);
    let y = column(records, y_field);
    let identity: Vec<usize> = (0..x.len()).collect();
    vacancy_of(&x, &y, &identity)
}

/// Keeps `y` fixed and permutes `x` over all N! pairings, counting those
/// whose vacancy statistic is at least the observed one.
pub fn global_pairing_test(
    records: &[ModelRecord],
    x_field: Field,
    y_field: Field,
) -> Result<PermutationResult, StatsError> {
    global_pairing_test_with(records, x_field, y_field, Exec::default())
}

pub fn global_pairing_test_with(
    records: &[ModelRecord],
    x_field: Field,
    y_field: Field,
    exec: Exec,
) -> Result<PermutationResult, StatsError> {
    let n = records.len();
    check_exhaustive(n)?;
    let x = column(records, x_field);
    let y = column(records, y_field);
    let observed = vacancy_statistic(records, x_field, y_field);
    let tally = count_permutations(n, exec, |p| at_least(vacancy_of(&x, &y, p), observed));
    let total = factorial(n);
    Ok(PermutationResult {
        x_field,
        y_field,
        observed,
        tally_geq: tally,
        total_arrangements: total,
        p_value: ExactP::new(tally, total),
    })
}

// Centred copies of x and y plus the normalising denominator.
struct Centred {
    x: Vec<f64>,
    y: Vec<f64>,
    denom: f64,
}

impl Centred {
    fn new(x: &[f64], y: &[f64]) -> Result<Self, StatsError> {
        if x.len() != y.len() {
            return Err(StatsError::LengthMismatch(x.len(), y.len()));
        }
        if x.len() < 2 {
            return Err(StatsError::TooFewPoints(x.len()));
        }
        let centre = |v: &[f64]| {
            let mean = compensated_sum(v.iter().copied()) / v.len() as f64;
            v.iter().map(|a| a - mean).collect::<Vec<_>>()
        };
        let (x, y) = (centre(x), centre(y));
        let sxx = compensated_sum(x.iter().map(|a| a * a));
        let syy = compensated_sum(y.iter().map(|a| a * a));
        if sxx == 0.0 || syy == 0.0 {
            return Err(StatsError::ZeroVariance);
        }
        Ok(Self {
            x,
            y,
            denom: (sxx * syy).sqrt(),
        })
    }

    fn r(&self, perm: &[usize]) -> f64 {
        compensated_sum(perm.iter().zip(&self.y).map(|(&j, &b)| self.x[j] * b)) / self.denom
    }
}

/// Product-moment correlation.
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    let c = Centred::new(x, y)?;
    let identity: Vec<usize> = (0..x.len()).collect();
    Ok(c.r(&identity))
}

/// One-sided exact test: fraction of the N! pairings with `r >= r_obs`.
pub fn pearson_permutation_test(
    records: &[ModelRecord],
    predictor: Field,
    y_field: Field,
) -> Result<PermutationResult, StatsError> {
    pearson_permutation_test_with(records, predictor, y_field, Exec::default())
}

pub fn pearson_permutation_test_with(
    records: &[ModelRecord],
    predictor: Field,
    y_field: Field,
    exec: Exec,
) -> Result<PermutationResult, StatsError> {
    let n = records.len();
    let c = Centred::new(&column(records, predictor), &column(records, y_field))?;
    check_exhaustive(n)?;
    let identity: Vec<usize> = (0..n).collect();
    let observed = c.r(&identity);
    let tally = count_permutations(n, exec, |p| at_least(c.r(p), observed));
    let total = factorial(n);
    Ok(PermutationResult {
        x_field: predictor,
        y_field,
        observed,
        tally_geq: tally,
        total_arrangements: total,
        p_value: ExactP::new(tally, total),
    })
}

/// Indices of the `k` records with the highest `rank_field`. A tie that
/// straddles the cut is an error; pass an explicit tail instead.
pub fn select_tail(
    records: &[ModelRecord],
    rank_field: Field,
    k: usize,
) -> Result<Vec<usize>, StatsError> {
    let n = records.len();
    if k == 0 || k > n {
        return Err(StatsError::InvalidK { k, n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| records[b].get(rank_field).total_cmp(&records[a].get(rank_field)));
    if k < n {
        let inside = records[order[k - 1]].get(rank_field);
        let outside = records[order[k]].get(rank_field);
        if inside == outside {
            return Err(StatsError::TieAtBoundary {
                field: rank_field,
                value: inside,
            });
        }
    }
    let mut tail = order[..k].to_vec();
    tail.sort_unstable();
    Ok(tail)
}

/// Tail = top-`k` records by `rank_field`; statistic = tail total of
/// `sum_field`; null = all C(N, k) subsets.
pub fn tail_partition_test(
    records: &[ModelRecord],
    rank_field: Field,
    k: usize,
    sum_field: Field,
) -> Result<PartitionResult, StatsError> {
    let tail = select_tail(records, rank_field, k)?;
    let mut result = partition_test(records, &tail, sum_field, Exec::default())?;
    result.rank_field = Some(rank_field);
    Ok(result)
}

/// Same test with the tail named record by record.
pub fn tail_partition_test_explicit(
    records: &[ModelRecord],
    tail_names: &[String],
    sum_field: Field,
) -> Result<PartitionResult, StatsError> {
    let tail = super::TailSpec::Named(tail_names.to_vec()).resolve(records)?;
    partition_test(records, &tail, sum_field, Exec::default())
}

pub(crate) fn partition_test(
    records: &[ModelRecord],
    tail: &[usize],
    sum_field: Field,
    exec: Exec,
) -> Result<PartitionResult, StatsError> {
    let n = records.len();
    let k = tail.len();
    let total = num_integer::binomial(n as u64, k as u64);
    if total > factorial(MAX_EXHAUSTIVE_N) {
        return Err(StatsError::TooLarge {
            n,
            max: MAX_EXHAUSTIVE_N,
        });
    }
    let values = column(records, sum_field);
    let subset_sum = |s: &[usize]| compensated_sum(s.iter().map(|&i| values[i]));
    let observed = subset_sum(tail);
    let tally = count_subsets(n, k, exec, |s| at_least(subset_sum(s), observed));
    Ok(PartitionResult {
        rank_field: None,
        sum_field,
        k,
        tail_names: tail.iter().map(|&i| records[i].name.clone()).collect(),
        observed_sum: observed,
        tally_geq: tally,
        total,
        p_value: ExactP::new(tally, total),
    })
}
