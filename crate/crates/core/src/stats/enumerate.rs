//! Exhaustive permutation and subset enumeration with integer tallies.
//!
//! Work is split on fixed index prefixes so each task enumerates its own
//! disjoint block; per-block tallies are summed, so the result is the same
//! for every worker count.

use crate::parallel::{sum_indexed, Exec};

/// Largest N for which all N! arrangements are enumerated.
pub const MAX_EXHAUSTIVE_N: usize = 12;

/// Relative tolerance used when comparing a permuted statistic against the
/// observed one.
pub const TALLY_REL_TOL: f64 = 1e-12;

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// `stat >= observed`, allowing for summation noise.
#[inline]
pub fn at_least(stat: f64, observed: f64) -> bool {
    stat >= observed - TALLY_REL_TOL * observed.abs().max(1.0)
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

// Heap's algorithm over perm[fixed..], calling `visit` with the whole slice
// for every arrangement of the suffix.
fn heap_suffix(perm: &mut [usize], fixed: usize, mut visit: impl FnMut(&[usize])) {
    let n = perm.len() - fixed;
    visit(perm);
    if n < 2 {
        return;
    }
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(fixed, fixed + i);
            } else {
                perm.swap(fixed + c[i], fixed + i);
            }
            visit(perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Number of permutations `pi` of `0..n` with `pred(pi)` true.
pub fn count_permutations<F>(n: usize, exec: Exec, pred: F) -> u64
where
    F: Fn(&[usize]) -> bool + Sync + Send,
{
    if n == 0 {
        return u64::from(pred(&[]));
    }
    // blocks keyed by the first two entries, or the first one when n = 2
    let prefix = n.min(2);
    let blocks = if prefix == 2 { n * (n - 1) } else { n };
    sum_indexed(exec, blocks, |b| {
        let (first, second) = if prefix == 2 {
            let first = b / (n - 1);
            let mut second = b % (n - 1);
            if second >= first {
                second += 1;
            }
            (first, Some(second))
        } else {
            (b, None)
        };
        let mut perm = Vec::with_capacity(n);
        perm.push(first);
        perm.extend(second);
        perm.extend((0..n).filter(|&i| i != first && Some(i) != second));
        let mut tally = 0u64;
        heap_suffix(&mut perm, prefix, |p| tally += u64::from(pred(p)));
        tally
    })
}

/// Number of `k`-subsets of `0..n` (as sorted index lists) with `pred` true.
pub fn count_subsets<F>(n: usize, k: usize, exec: Exec, pred: F) -> u64
where
    F: Fn(&[usize]) -> bool + Sync + Send,
{
    if k > n {
        return 0;
    }
    if k == 0 {
        return u64::from(pred(&[]));
    }
    // block b holds the subsets whose smallest element is b
    sum_indexed(exec, n - k + 1, |first| {
        let mut subset: Vec<usize> = (first..first + k).collect();
        let mut tally = 0u64;
        loop {
            tally += u64::from(pred(&subset));
            // advance positions 1..k lexicographically, keeping subset[0]
            let mut i = k;
            loop {
                if i <= 1 {
                    return tally;
                }
                i -= 1;
                if subset[i] < n - k + i {
                    subset[i] += 1;
                    for j in i + 1..k {
                        subset[j] = subset[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    })
}
