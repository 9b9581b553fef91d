//! Optimal single-feature threshold search under the Gini and max-cut
//! criteria.
//!
//! Both searches consider only thresholds placed midway between
//! consecutive distinct sorted values, so every candidate realizes a
//! distinct left/right partition. The max-cut search scores a split by
//! the summed distance over all cross-threshold pairs of observations
//! with differing classes, and evaluates all prefixes in one pass using
//! a per-class running-sum recurrence after sorting; its score is
//! maximized. The Gini search minimizes the cardinality-weighted mean
//! child impurity.
//!
//! `brute_force_max_cut` and `brute_force_gini` evaluate the same
//! objectives by direct enumeration and exist as independent oracles for
//! the fast paths.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Split evaluation criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    Gini,
    MaxCut,
}

/// Non-negative per-class counts with their total.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    counts: Vec<usize>,
    total: usize,
}

impl ClassCounts {
    pub fn from_labels(labels: &[usize], class_count: usize) -> Self {
        let mut counts = vec![0usize; class_count];
        for &y in labels {
            counts[y] += 1;
        }
        ClassCounts {
            counts,
            total: labels.len(),
        }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Number of classes with at least one observation.
    pub fn present_classes(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn is_pure(&self) -> bool {
        self.present_classes() <= 1
    }

    /// Majority class; ties go to the lowest class id.
    pub fn majority_class(&self) -> usize {
        let mut best = 0usize;
        for (c, &count) in self.counts.iter().enumerate() {
            if count > self.counts[best] {
                best = c;
            }
        }
        best
    }
}

/// One candidate threshold on one feature, with its criterion score and
/// the sizes of the two sides it induces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub feature_index: usize,
    pub threshold: f64,
    pub score: f64,
    pub left_count: usize,
    pub right_count: usize,
}

impl SplitCandidate {
    fn imbalance(&self) -> usize {
        self.left_count.abs_diff(self.right_count)
    }
}

/// Gini impurity of a class distribution: sum of p_c (1 - p_c).
pub fn gini_impurity(counts: &ClassCounts) -> Result<f64> {
    if counts.total == 0 {
        return Err(Error::contract("gini impurity of an empty node"));
    }
    Ok(gini_from_counts(&counts.counts, counts.total))
}

fn gini_from_counts(counts: &[usize], total: usize) -> f64 {
    let n = total as f64;
    counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * (1.0 - p)
        })
        .sum()
}

// Both the sweep and the brute-force route score a partition with this
// exact expression so that mathematically tied candidates stay ties.
fn weighted_child_impurity(
    left: &[usize],
    left_total: usize,
    right: &[usize],
    right_total: usize,
) -> f64 {
    let n = (left_total + right_total) as f64;
    (left_total as f64 * gini_from_counts(left, left_total)
        + right_total as f64 * gini_from_counts(right, right_total))
        / n
}

/// Threshold between two consecutive distinct values. Falls back to the
/// lower value if the midpoint rounds onto the upper one, so that a
/// `<= threshold` test always reproduces the intended partition.
fn midpoint(lower: f64, upper: f64) -> f64 {
    let mid = (lower + upper) / 2.0;
    if mid < upper {
        mid
    } else {
        lower
    }
}

/// True if `a` beats `b`. Ordering: better score, then smaller
/// left/right imbalance, then lower feature index, then lower threshold.
/// Scores compare with exact floating-point equality.
fn is_better(a: &SplitCandidate, b: &SplitCandidate, criterion: SplitCriterion) -> bool {
    if a.score != b.score {
        return match criterion {
            SplitCriterion::Gini => a.score < b.score,
            SplitCriterion::MaxCut => a.score > b.score,
        };
    }
    if a.imbalance() != b.imbalance() {
        return a.imbalance() < b.imbalance();
    }
    if a.feature_index != b.feature_index {
        return a.feature_index < b.feature_index;
    }
    a.threshold < b.threshold
}

fn take_better(
    best: &mut Option<SplitCandidate>,
    candidate: SplitCandidate,
    criterion: SplitCriterion,
) {
    match best {
        Some(current) if !is_better(&candidate, current, criterion) => {}
        _ => *best = Some(candidate),
    }
}

fn check_lengths(values: &[f64], labels: &[usize]) -> Result<()> {
    if values.len() != labels.len() {
        return Err(Error::contract(format!(
            "values ({}) and labels ({}) differ in length",
            values.len(),
            labels.len()
        )));
    }
    if values.len() < 2 {
        return Err(Error::contract("need at least 2 observations to split"));
    }
    Ok(())
}

fn sorted_pairs(values: &[f64], labels: &[usize]) -> Vec<(f64, usize)> {
    let mut pairs: Vec<(f64, usize)> = values.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

fn class_count_of(labels: &[usize]) -> usize {
    labels.iter().copied().max().map_or(0, |m| m + 1)
}

/// Best threshold on one feature by minimum cardinality-weighted mean
/// child impurity. Returns `None` when all values are identical or only
/// one class is present (no split can improve a pure node).
pub fn best_gini_split(values: &[f64], labels: &[usize]) -> Result<Option<SplitCandidate>> {
    check_lengths(values, labels)?;
    let class_count = class_count_of(labels);
    let pairs = sorted_pairs(values, labels);
    let n = pairs.len();

    let total = ClassCounts::from_labels(labels, class_count);
    if total.is_pure() {
        return Ok(None);
    }

    let mut left = vec![0usize; class_count];
    let mut right = total.counts.clone();
    let mut best: Option<SplitCandidate> = None;
    for i in 1..n {
        let (value, label) = pairs[i - 1];
        left[label] += 1;
        right[label] -= 1;
        if value < pairs[i].0 {
            let candidate = SplitCandidate {
                feature_index: 0,
                threshold: midpoint(value, pairs[i].0),
                score: weighted_child_impurity(&left, i, &right, n - i),
                left_count: i,
                right_count: n - i,
            };
            take_better(&mut best, candidate, SplitCriterion::Gini);
        }
    }
    Ok(best)
}

/// Direct O(n^2) re-evaluation of the Gini objective at every candidate
/// threshold; oracle for [`best_gini_split`].
pub fn brute_force_gini(values: &[f64], labels: &[usize]) -> Result<Option<SplitCandidate>> {
    check_lengths(values, labels)?;
    let class_count = class_count_of(labels);
    let pairs = sorted_pairs(values, labels);
    let n = pairs.len();
    if ClassCounts::from_labels(labels, class_count).is_pure() {
        return Ok(None);
    }

    let mut best: Option<SplitCandidate> = None;
    for i in 1..n {
        if pairs[i - 1].0 < pairs[i].0 {
            let threshold = midpoint(pairs[i - 1].0, pairs[i].0);
            let mut left = vec![0usize; class_count];
            let mut right = vec![0usize; class_count];
            let mut left_total = 0usize;
            for &(v, y) in &pairs {
                if v <= threshold {
                    left[y] += 1;
                    left_total += 1;
                } else {
                    right[y] += 1;
                }
            }
            let candidate = SplitCandidate {
                feature_index: 0,
                threshold,
                score: weighted_child_impurity(&left, left_total, &right, n - left_total),
                left_count: left_total,
                right_count: n - left_total,
            };
            take_better(&mut best, candidate, SplitCriterion::Gini);
        }
    }
    Ok(best)
}

// Per-class complement sums used by the max-cut sweep: for each class c,
// the sum of values and the count over observations NOT in class c.
struct ComplementStats {
    sums: Vec<f64>,
    counts: Vec<usize>,
}

fn complement_stats(pairs: &[(f64, usize)], class_count: usize) -> ComplementStats {
    let mut class_sum = vec![0.0f64; class_count];
    let mut class_n = vec![0usize; class_count];
    for &(v, y) in pairs {
        class_sum[y] += v;
        class_n[y] += 1;
    }
    let mut sums = vec![0.0f64; class_count];
    let mut counts = vec![0usize; class_count];
    for c in 0..class_count {
        for other in 0..class_count {
            if other != c {
                sums[c] += class_sum[other];
                counts[c] += class_n[other];
            }
        }
    }
    ComplementStats { sums, counts }
}

/// Cut value after every prefix of the sorted observations, computed by
/// the constant-time update `cut += S[y] - x * N[y]` as each observation
/// moves to the left side. Entry `i` is the cut between sorted positions
/// `i` and `i + 1`; exposed for diagnostics and tests.
pub fn max_cut_prefix_values(values: &[f64], labels: &[usize]) -> Result<Vec<f64>> {
    check_lengths(values, labels)?;
    let class_count = class_count_of(labels);
    let pairs = sorted_pairs(values, labels);
    let stats = complement_stats(&pairs, class_count);
    let mut cuts = Vec::with_capacity(pairs.len() - 1);
    let mut cut = 0.0f64;
    for &(v, y) in pairs.iter().take(pairs.len() - 1) {
        cut += stats.sums[y] - v * stats.counts[y] as f64;
        cuts.push(cut);
    }
    Ok(cuts)
}

/// Best threshold on one feature by maximum cut value, in one sweep over
/// the sorted observations. Returns `None` when no candidate threshold
/// exists or the best cut value is zero (no separated cross-class pair).
pub fn max_cut_scan(values: &[f64], labels: &[usize]) -> Result<Option<SplitCandidate>> {
    check_lengths(values, labels)?;
    let class_count = class_count_of(labels);
    let pairs = sorted_pairs(values, labels);
    let n = pairs.len();
    let stats = complement_stats(&pairs, class_count);

    let mut best: Option<SplitCandidate> = None;
    let mut cut = 0.0f64;
    for i in 1..n {
        let (value, label) = pairs[i - 1];
        cut += stats.sums[label] - value * stats.counts[label] as f64;
        if value < pairs[i].0 {
            let candidate = SplitCandidate {
                feature_index: 0,
                threshold: midpoint(value, pairs[i].0),
                score: cut,
                left_count: i,
                right_count: n - i,
            };
            take_better(&mut best, candidate, SplitCriterion::MaxCut);
        }
    }
    Ok(best.filter(|c| c.score > 0.0))
}

/// Direct O(n^2) evaluation of the max-cut objective: sums
/// `|x_i - x_k|` over all cross-threshold pairs with differing classes
/// at every candidate threshold. Oracle for [`max_cut_scan`].
pub fn brute_force_max_cut(values: &[f64], labels: &[usize]) -> Result<Option<SplitCandidate>> {
    check_lengths(values, labels)?;
    let pairs = sorted_pairs(values, labels);
    let n = pairs.len();

    let mut best: Option<SplitCandidate> = None;
    for i in 1..n {
        if pairs[i - 1].0 < pairs[i].0 {
            let threshold = midpoint(pairs[i - 1].0, pairs[i].0);
            let mut score = 0.0f64;
            for &(vl, yl) in &pairs[..i] {
                for &(vr, yr) in &pairs[i..] {
                    if yl != yr {
                        score += (vl - vr).abs();
                    }
                }
            }
            let candidate = SplitCandidate {
                feature_index: 0,
                threshold,
                score,
                left_count: i,
                right_count: n - i,
            };
            take_better(&mut best, candidate, SplitCriterion::MaxCut);
        }
    }
    Ok(best.filter(|c| c.score > 0.0))
}

fn per_feature_split(
    values: &[f64],
    labels: &[usize],
    criterion: SplitCriterion,
) -> Result<Option<SplitCandidate>> {
    match criterion {
        SplitCriterion::Gini => best_gini_split(values, labels),
        SplitCriterion::MaxCut => max_cut_scan(values, labels),
    }
}

/// Runs the per-feature search on every column of `features` restricted
/// to `rows` (with `labels[i]` labeling `rows[i]`) and returns the best
/// candidate overall, or `None` if every column declines to split.
pub fn select_best_split(
    features: &Array2<f64>,
    rows: &[usize],
    labels: &[usize],
    criterion: SplitCriterion,
) -> Result<Option<SplitCandidate>> {
    select_with(features, rows, labels, criterion, per_feature_split)
}

/// [`select_best_split`] with each per-feature search replaced by its
/// brute-force counterpart; equals an exhaustive enumeration over all
/// (feature, threshold) pairs. Oracle for the fast path.
pub fn brute_force_select(
    features: &Array2<f64>,
    rows: &[usize],
    labels: &[usize],
    criterion: SplitCriterion,
) -> Result<Option<SplitCandidate>> {
    select_with(features, rows, labels, criterion, |v, l, c| match c {
        SplitCriterion::Gini => brute_force_gini(v, l),
        SplitCriterion::MaxCut => brute_force_max_cut(v, l),
    })
}

fn select_with(
    features: &Array2<f64>,
    rows: &[usize],
    labels: &[usize],
    criterion: SplitCriterion,
    search: impl Fn(&[f64], &[usize], SplitCriterion) -> Result<Option<SplitCandidate>>,
) -> Result<Option<SplitCandidate>> {
    if rows.len() != labels.len() {
        return Err(Error::contract("rows and labels differ in length"));
    }
    if rows.len() < 2 {
        return Err(Error::contract("need at least 2 observations to split"));
    }
    if features.ncols() == 0 {
        return Err(Error::contract("need at least one feature"));
    }
    let mut best: Option<SplitCandidate> = None;
    let mut column = Vec::with_capacity(rows.len());
    for j in 0..features.ncols() {
        column.clear();
        column.extend(rows.iter().map(|&r| features[[r, j]]));
        if let Some(mut candidate) = search(&column, labels, criterion)? {
            candidate.feature_index = j;
            take_better(&mut best, candidate, criterion);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn counts(v: &[usize]) -> ClassCounts {
        let mut labels = Vec::new();
        for (c, &k) in v.iter().enumerate() {
            labels.extend(std::iter::repeat_n(c, k));
        }
        ClassCounts::from_labels(&labels, v.len())
    }

    #[test]
    fn gini_impurity_spot_values() {
        assert_eq!(gini_impurity(&counts(&[10, 0])).unwrap(), 0.0);
        assert_eq!(gini_impurity(&counts(&[5, 5])).unwrap(), 0.5);
        assert!((gini_impurity(&counts(&[1, 3])).unwrap() - 0.375).abs() < 1e-15);
        assert!(gini_impurity(&counts(&[0, 0])).is_err());
    }

    #[test]
    fn majority_ties_go_to_lowest_class() {
        assert_eq!(counts(&[3, 3, 1]).majority_class(), 0);
        assert_eq!(counts(&[1, 3, 3]).majority_class(), 1);
    }

    #[test]
    fn gini_split_separable() {
        let c = best_gini_split(&[1.0, 2.0, 3.0, 4.0], &[0, 0, 1, 1])
            .unwrap()
            .unwrap();
        assert_eq!(c.threshold, 2.5);
        assert_eq!(c.score, 0.0);
        assert_eq!((c.left_count, c.right_count), (2, 2));
    }

    #[test]
    fn gini_split_tie_prefers_low_threshold() {
        // splits after elements 1 and 3 tie at score 1/3 with equal
        // imbalance; the lower threshold wins
        let c = best_gini_split(&[1.0, 2.0, 3.0, 4.0], &[0, 1, 0, 1])
            .unwrap()
            .unwrap();
        assert_eq!(c.threshold, 1.5);
        assert!((c.score - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn gini_split_constant_values_is_none() {
        assert!(best_gini_split(&[7.0, 7.0, 7.0], &[0, 1, 0])
            .unwrap()
            .is_none());
    }

    #[test]
    fn gini_split_pure_labels_is_none() {
        assert!(best_gini_split(&[1.0, 2.0, 3.0], &[1, 1, 1])
            .unwrap()
            .is_none());
        assert!(brute_force_gini(&[1.0, 2.0, 3.0], &[1, 1, 1])
            .unwrap()
            .is_none());
    }

    #[test]
    fn gini_two_points() {
        let c = brute_force_gini(&[1.0, 2.0], &[0, 1]).unwrap().unwrap();
        assert_eq!((c.threshold, c.score), (1.5, 0.0));
    }

    #[test]
    fn max_cut_appendix_recurrence_values() {
        let cuts = max_cut_prefix_values(&[0.0, 2.0, 5.0, 6.0], &[0, 0, 1, 1]).unwrap();
        assert_eq!(cuts, vec![11.0, 18.0, 10.0]);
        let c = max_cut_scan(&[0.0, 2.0, 5.0, 6.0], &[0, 0, 1, 1])
            .unwrap()
            .unwrap();
        assert_eq!((c.threshold, c.score), (3.5, 18.0));
        assert_eq!((c.left_count, c.right_count), (2, 2));
        let b = brute_force_max_cut(&[0.0, 2.0, 5.0, 6.0], &[0, 0, 1, 1])
            .unwrap()
            .unwrap();
        assert_eq!((b.threshold, b.score), (3.5, 18.0));
    }

    #[test]
    fn max_cut_three_points() {
        let c = max_cut_scan(&[0.0, 1.0, 3.0], &[0, 1, 0]).unwrap().unwrap();
        assert_eq!((c.threshold, c.score), (2.0, 2.0));
    }

    #[test]
    fn max_cut_no_threshold_is_none() {
        assert!(max_cut_scan(&[1.0, 1.0], &[0, 1]).unwrap().is_none());
        assert!(brute_force_max_cut(&[1.0, 1.0], &[0, 1]).unwrap().is_none());
    }

    #[test]
    fn max_cut_single_class_is_none() {
        assert!(max_cut_scan(&[0.0, 1.0, 2.0], &[0, 0, 0]).unwrap().is_none());
        assert!(brute_force_max_cut(&[0.0, 1.0, 2.0], &[0, 0, 0])
            .unwrap()
            .is_none());
    }

    #[test]
    fn max_cut_two_points() {
        let c = brute_force_max_cut(&[0.0, 4.0], &[0, 1]).unwrap().unwrap();
        assert_eq!((c.threshold, c.score), (2.0, 4.0));
    }

    #[test]
    fn scan_is_order_invariant() {
        let a = max_cut_scan(&[5.0, 0.0, 6.0, 2.0], &[1, 0, 1, 0])
            .unwrap()
            .unwrap();
        assert_eq!((a.threshold, a.score), (3.5, 18.0));
    }

    #[test]
    fn length_mismatch_is_contract_error() {
        assert!(max_cut_scan(&[1.0], &[0, 1]).is_err());
        assert!(best_gini_split(&[1.0, 2.0], &[0]).is_err());
    }

    #[test]
    fn select_picks_the_separating_column() {
        // column 0 is useless, column 1 separates
        let m = array![[5.0, 0.0], [5.0, 1.0], [5.0, 2.0], [5.0, 3.0]];
        let rows = [0, 1, 2, 3];
        let labels = [0, 0, 1, 1];
        for criterion in [SplitCriterion::Gini, SplitCriterion::MaxCut] {
            let c = select_best_split(&m, &rows, &labels, criterion)
                .unwrap()
                .unwrap();
            assert_eq!(c.feature_index, 1);
            assert_eq!(c.threshold, 1.5);
        }
    }

    #[test]
    fn select_single_column_matches_per_feature() {
        let m = array![[1.0], [2.0], [3.0], [4.0]];
        let labels = [0, 1, 0, 1];
        let c = select_best_split(&m, &[0, 1, 2, 3], &labels, SplitCriterion::Gini)
            .unwrap()
            .unwrap();
        let single = best_gini_split(&[1.0, 2.0, 3.0, 4.0], &labels)
            .unwrap()
            .unwrap();
        assert_eq!(c.threshold, single.threshold);
        assert_eq!(c.score, single.score);
    }

    #[test]
    fn select_none_when_every_column_declines() {
        let m = array![[1.0, 2.0], [1.0, 2.0]];
        let labels = [0, 1];
        assert!(
            select_best_split(&m, &[0, 1], &labels, SplitCriterion::Gini)
                .unwrap()
                .is_none()
        );
    }
}
