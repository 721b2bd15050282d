//! Descriptive statistics over a numeric multiset, accumulated exactly so
//! the result does not depend on summation order.

use serde::{Deserialize, Serialize};

use super::{Histogram, ValueCount};
use crate::exact::ExactMoments;
use crate::value::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub count: u64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub stddev: f64,
    pub sum: f64,
    pub sum_sq: f64,
    pub histogram: Histogram,
}

/// Summarize a plain sequence. Empty input has no summary.
pub fn compute_stats(values: &[f64], bin_count: u32) -> Option<Stats> {
    let weighted: Vec<(f64, u64)> = values.iter().map(|&v| (v, 1)).collect();
    compute_stats_weighted(&weighted, bin_count)
}

/// Summarize a multiset given as (value, multiplicity) pairs.
pub fn compute_stats_weighted(values: &[(f64, u64)], bin_count: u32) -> Option<Stats> {
    let mut moments = ExactMoments::new();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &(v, count) in values {
        if count == 0 {
            continue;
        }
        debug_assert!(v.is_finite());
        moments.add(v, count);
        min = min.min(v);
        max = max.max(v);
    }
    if moments.is_empty() {
        return None;
    }
    Some(Stats {
        count: moments.count(),
        min,
        max,
        mean: moments.mean(),
        stddev: moments.stddev(),
        sum: moments.sum_f64(),
        sum_sq: moments.sum_sq_f64(),
        histogram: numeric_histogram(values, min, max, bin_count),
    })
}

/// Equal-width bins over [lo, hi]. Values map by floor((v - lo) / width);
/// the last bin is closed so hi itself falls in it. A degenerate range
/// (lo == hi) puts everything in bin zero.
pub fn numeric_histogram(values: &[(f64, u64)], lo: f64, hi: f64, bin_count: u32) -> Histogram {
    assert!(bin_count > 0, "histogram needs at least one bin");
    let mut counts = vec![0u64; bin_count as usize];
    let width = (hi - lo) / bin_count as f64;
    for &(v, count) in values {
        if count == 0 {
            continue;
        }
        let idx = if width > 0.0 {
            (((v - lo) / width).floor() as i64).clamp(0, bin_count as i64 - 1) as usize
        } else {
            0
        };
        counts[idx] += count;
    }
    Histogram::Numeric {
        lo,
        hi,
        bin_count,
        counts,
    }
}

/// Top-k values by count (ties broken by canonical string, ascending), with
/// everything past k folded into `other_count`.
pub fn categorical_histogram(
    value_counts: &[(Scalar, u64)],
    top_k: usize,
) -> Histogram {
    let top = top_value_list(value_counts, top_k);
    let total: u64 = value_counts.iter().map(|(_, c)| c).sum();
    let kept: u64 = top.iter().map(|e| e.count).sum();
    Histogram::Categorical {
        top,
        other_count: total - kept,
    }
}

pub fn top_value_list(value_counts: &[(Scalar, u64)], top_k: usize) -> Vec<ValueCount> {
    let mut entries: Vec<ValueCount> = value_counts
        .iter()
        .map(|(v, c)| ValueCount {
            value: v.canonical_string(),
            count: *c,
        })
        .collect();
    entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.value.cmp(&b.value)));
    entries.truncate(top_k);
    entries
}
