//! Randomized equivalence checking of the fast split searches against
//! their brute-force counterparts, runnable from the command line.

use mctree::{
    best_gini_split, brute_force_gini, brute_force_max_cut, brute_force_select, max_cut_scan,
    select_best_split, Error, Result, SplitCandidate, SplitCriterion,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type FeatureSearch = fn(&[f64], &[usize]) -> Result<Option<SplitCandidate>>;

#[derive(Debug)]
pub struct OracleSummary {
    pub trials: usize,
    /// Replayable descriptions of every mismatch found.
    pub failures: Vec<String>,
}

impl OracleSummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs `trials` random instances comparing the production searches to
/// brute force. Mismatches are collected with enough detail to replay.
pub fn oracle_check(seed: u64, trials: usize) -> Result<OracleSummary> {
    run_trials(seed, trials, max_cut_scan, best_gini_split)
}

/// Same as [`oracle_check`] but with injectable fast-path
/// implementations, so the harness itself can be tested against a
/// deliberately broken search.
pub fn run_trials(
    seed: u64,
    trials: usize,
    scan_max_cut: FeatureSearch,
    scan_gini: FeatureSearch,
) -> Result<OracleSummary> {
    if trials == 0 {
        return Err(Error::contract("trials must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();

    for trial in 0..trials {
        let n = rng.random_range(2..=200usize);
        let d = rng.random_range(1..=5usize);
        let classes = rng.random_range(1..=5usize);
        // integer grids inject heavy duplication; continuous values
        // probe generic positions
        let grid = rng.random_bool(0.5);
        let mut values = Vec::with_capacity(n * d);
        for _ in 0..n * d {
            let v = if grid {
                rng.random_range(0..10) as f64
            } else {
                rng.random_range(-100.0..100.0)
            };
            values.push(v);
        }
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
        let matrix = Array2::from_shape_vec((n, d), values).expect("trial shape");

        for j in 0..d {
            let column: Vec<f64> = matrix.column(j).to_vec();
            let fast = scan_max_cut(&column, &labels)?;
            let slow = brute_force_max_cut(&column, &labels)?;
            if let Some(diff) = compare("max_cut", &fast, &slow) {
                failures.push(describe(trial, seed, j, &column, &labels, &diff));
            }
            let fast = scan_gini(&column, &labels)?;
            let slow = brute_force_gini(&column, &labels)?;
            if let Some(diff) = compare("gini", &fast, &slow) {
                failures.push(describe(trial, seed, j, &column, &labels, &diff));
            }
        }

        let rows: Vec<usize> = (0..n).collect();
        for criterion in [SplitCriterion::Gini, SplitCriterion::MaxCut] {
            let fast = select_best_split(&matrix, &rows, &labels, criterion)?;
            let slow = brute_force_select(&matrix, &rows, &labels, criterion)?;
            if let Some(diff) = compare(&format!("select/{criterion:?}"), &fast, &slow) {
                failures.push(format!(
                    "trial {trial} (seed {seed}): {diff}; full {n}x{d} instance, labels {labels:?}"
                ));
            }
        }
    }

    Ok(OracleSummary { trials, failures })
}

fn approx(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn compare(
    what: &str,
    fast: &Option<SplitCandidate>,
    slow: &Option<SplitCandidate>,
) -> Option<String> {
    match (fast, slow) {
        (None, None) => None,
        (Some(f), Some(s)) => {
            if f.feature_index != s.feature_index
                || f.left_count != s.left_count
                || f.right_count != s.right_count
                || !approx(f.threshold, s.threshold)
                || !approx(f.score, s.score)
            {
                Some(format!("{what}: fast {f:?} != brute {s:?}"))
            } else {
                None
            }
        }
        (f, s) => Some(format!("{what}: fast {f:?} != brute {s:?}")),
    }
}

fn describe(
    trial: usize,
    seed: u64,
    column: usize,
    values: &[f64],
    labels: &[usize],
    diff: &str,
) -> String {
    format!(
        "trial {trial} (seed {seed}) column {column}: {diff}; values {values:?}, labels {labels:?}"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_run_passes() {
        let summary = oracle_check(7, 50).unwrap();
        assert_eq!(summary.trials, 50);
        assert!(summary.passed(), "{:?}", summary.failures);
    }

    #[test]
    fn zero_trials_is_contract_error() {
        assert!(oracle_check(7, 0).is_err());
    }

    #[test]
    fn injected_fault_is_caught_with_counterexample() {
        // a "scan" that returns a corrupted score
        fn broken(values: &[f64], labels: &[usize]) -> Result<Option<SplitCandidate>> {
            Ok(max_cut_scan(values, labels)?.map(|mut c| {
                c.score += 1.0;
                c
            }))
        }
        let summary = run_trials(7, 20, broken, best_gini_split).unwrap();
        assert!(!summary.passed());
        assert!(summary.failures[0].contains("max_cut"));
        assert!(summary.failures[0].contains("values"));
    }
}
