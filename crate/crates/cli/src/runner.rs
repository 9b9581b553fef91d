//! Experiment execution: trains every requested algorithm on identical
//! train/test rows, times construction, aggregates, and applies the
//! paired significance procedure.

use std::path::Path;
use std::time::Instant;

use mctree::{
    build_tree, derive_seed, generate, holm_bonferroni, load_csv, make_fold_plan, mean_ci95,
    paired_t_one_tailed, split_train_test, split_train_test_counts, stats, synth::SynthConfig,
    Error, LabeledDataset, PairedSample, Result, TailDirection,
};
use rayon::prelude::*;

use crate::report::{
    AggregateRow, CellReport, EnvironmentStamp, ExperimentReport, GroupReport, Marking,
    PairedTestRow, ReverseBlock, SignificanceReport, REPORT_SCHEMA,
};
use crate::spec::{AlgorithmId, CsvSource, DataSource, EvalMode, ExperimentSpec, SyntheticSource};

pub const ALPHA: f64 = 0.05;

/// One train/test instance presented identically to every algorithm.
struct Instance {
    id: String,
    train: LabeledDataset,
    test: LabeledDataset,
}

/// Runs the full experiment described by `spec`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let mut warnings = Vec::new();
    let (groups, label_names) = match &spec.source {
        DataSource::Synthetic(source) => (run_synthetic(spec, source, &mut warnings)?, None),
        DataSource::Csv(source) => run_csv(spec, source, &mut warnings)?,
    };
    Ok(ExperimentReport {
        schema: REPORT_SCHEMA.to_string(),
        environment: EnvironmentStamp::new(spec.seed),
        spec: spec.clone(),
        label_names,
        warnings,
        groups,
    })
}

fn run_synthetic(
    spec: &ExperimentSpec,
    source: &SyntheticSource,
    warnings: &mut Vec<String>,
) -> Result<Vec<GroupReport>> {
    let mut groups = Vec::new();
    for (group_index, &train_size) in source.train_sizes.iter().enumerate() {
        let group_id = format!("n={train_size}");
        let replicates: Vec<usize> = (0..source.replicates).collect();
        let instances: Result<Vec<Instance>> = replicates
            .par_iter()
            .map(|&rep| {
                let tag = ((group_index as u64) << 32) | rep as u64;
                let dataset_seed = derive_seed(spec.seed, tag);
                let config = SynthConfig {
                    n_samples: train_size + source.test_size,
                    n_classes: source.classes,
                    n_informative: source.dims,
                    n_noise: source.noise_dims,
                    flip_fraction: source.flip_fraction,
                    class_sep: source.class_sep,
                    seed: dataset_seed,
                    mix_clusters: true,
                    affine_disguise: true,
                };
                let full = generate(&config)?;
                if let Some(dir) = &source.dump_csv {
                    let dir = Path::new(dir);
                    std::fs::create_dir_all(dir)?;
                    full.save_csv(dir.join(format!("{group_id}-rep{rep:03}.csv")))?;
                }
                let (train, test) =
                    split_train_test_counts(&full, train_size, derive_seed(dataset_seed, 1))?;
                Ok(Instance {
                    id: format!("rep{rep:03}"),
                    train,
                    test,
                })
            })
            .collect();
        groups.push(evaluate_group(spec, group_id, &instances?, warnings)?);
    }
    Ok(groups)
}

fn run_csv(
    spec: &ExperimentSpec,
    source: &CsvSource,
    warnings: &mut Vec<String>,
) -> Result<(Vec<GroupReport>, Option<Vec<String>>)> {
    let data = load_csv(Path::new(&source.path), &source.label, source.has_header)?;
    let label_names = Some(data.label_names().to_vec());
    let (group_id, instances) = match source.eval {
        EvalMode::Holdout { fraction } => {
            let (train, test) = split_train_test(&data, fraction, derive_seed(spec.seed, 0))?;
            (
                format!("holdout{fraction}"),
                vec![Instance {
                    id: "holdout".to_string(),
                    train,
                    test,
                }],
            )
        }
        EvalMode::Cv { reps, folds } => {
            let plan = make_fold_plan(data.n_samples(), reps, folds, spec.seed)?;
            let cells: Vec<(usize, usize)> = (0..reps)
                .flat_map(|r| (0..folds).map(move |f| (r, f)))
                .collect();
            let instances: Result<Vec<Instance>> = cells
                .par_iter()
                .map(|&(rep, fold)| {
                    let (train_rows, test_rows) = plan.train_test_indices(rep, fold);
                    Ok(Instance {
                        id: format!("rep{rep}/fold{fold}"),
                        train: data.subset(&train_rows)?,
                        test: data.subset(&test_rows)?,
                    })
                })
                .collect();
            (format!("cv{reps}x{folds}"), instances?)
        }
    };
    let group = evaluate_group(spec, group_id, &instances, warnings)?;
    Ok((vec![group], label_names))
}

struct Measurement {
    accuracy: f64,
    build_seconds: f64,
    leaves: usize,
    depth: usize,
}

fn run_cell(instance: &Instance, algorithm: AlgorithmId, scaled: bool) -> Result<Measurement> {
    let config = algorithm.tree_config(scaled);
    let started = Instant::now();
    let tree = build_tree(&instance.train, config)?;
    let build_seconds = started.elapsed().as_secs_f64();
    let predicted = tree.predict_batch(&instance.test)?;
    let accuracy = stats::accuracy(&predicted, instance.test.labels())?;
    Ok(Measurement {
        accuracy,
        build_seconds,
        leaves: tree.leaf_count(),
        depth: tree.depth(),
    })
}

fn evaluate_group(
    spec: &ExperimentSpec,
    group_id: String,
    instances: &[Instance],
    warnings: &mut Vec<String>,
) -> Result<GroupReport> {
    let variants = spec.scaling.variants();

    // every (instance, algorithm, variant) cell, instances in parallel
    let cell_rows: Vec<Vec<CellReport>> = instances
        .par_iter()
        .map(|instance| {
            let mut rows = Vec::new();
            for &algorithm in &spec.algorithms {
                for &scaled in variants {
                    let cell = match run_cell(instance, algorithm, scaled) {
                        Ok(m) => CellReport {
                            dataset: instance.id.clone(),
                            algorithm,
                            scaled,
                            accuracy: Some(m.accuracy),
                            build_seconds: Some(m.build_seconds),
                            leaves: Some(m.leaves),
                            depth: Some(m.depth),
                            error: None,
                        },
                        Err(err) => CellReport {
                            dataset: instance.id.clone(),
                            algorithm,
                            scaled,
                            accuracy: None,
                            build_seconds: None,
                            leaves: None,
                            depth: None,
                            error: Some(err.to_string()),
                        },
                    };
                    rows.push(cell);
                }
            }
            rows
        })
        .collect();
    let cells: Vec<CellReport> = cell_rows.into_iter().flatten().collect();

    // per algorithm, pick the reported scaling variant and collect its
    // per-instance accuracies
    let mut chosen_scaled: Vec<bool> = Vec::new();
    let mut chosen_scores: Vec<Vec<f64>> = Vec::new();
    let mut aggregates = Vec::new();
    let mut any_failed = false;
    for &algorithm in &spec.algorithms {
        let mut best: Option<(bool, VariantSummary)> = None;
        for &scaled in variants {
            let summary = summarize_variant(&cells, algorithm, scaled);
            if summary.complete < instances.len() {
                any_failed = true;
            }
            best = Some(match best {
                None => (scaled, summary),
                Some((held_scaled, held)) => {
                    if summary.prefer_over(&held) {
                        (scaled, summary)
                    } else {
                        (held_scaled, held)
                    }
                }
            });
        }
        let (scaled, summary) = best.expect("at least one scaling variant");
        let ci95 = if summary.accuracies.len() >= 2 {
            let (_, lo, hi) = mean_ci95(&summary.accuracies)?;
            Some([lo, hi])
        } else {
            None
        };
        aggregates.push(AggregateRow {
            algorithm,
            scaled,
            datasets: summary.complete,
            mean_accuracy: summary.mean_accuracy,
            ci95,
            mean_build_seconds: summary.mean_seconds,
            mean_leaves: summary.mean_leaves,
            mean_depth: summary.mean_depth,
            marking: Marking::None,
        });
        chosen_scaled.push(scaled);
        chosen_scores.push(summary.accuracies);
    }

    // significance needs >= 2 paired datasets, >= 2 algorithms, and
    // complete cells
    let significance = if instances.len() < 2 {
        warnings.push(format!(
            "group {group_id}: significance flags omitted (only {} dataset instance)",
            instances.len()
        ));
        None
    } else if spec.algorithms.len() < 2 {
        warnings.push(format!(
            "group {group_id}: significance flags omitted (single algorithm)"
        ));
        None
    } else if any_failed {
        warnings.push(format!(
            "group {group_id}: significance flags omitted (failed cells)"
        ));
        None
    } else {
        let sig = significance(&spec.algorithms, &chosen_scores, ALPHA)?;
        for row in aggregates.iter_mut() {
            row.marking = marking_for(row.algorithm, &sig);
        }
        Some(sig)
    };

    Ok(GroupReport {
        id: group_id,
        cells,
        aggregates,
        significance,
    })
}

struct VariantSummary {
    accuracies: Vec<f64>,
    complete: usize,
    mean_accuracy: f64,
    mean_seconds: f64,
    mean_leaves: f64,
    mean_depth: f64,
}

impl VariantSummary {
    /// Higher mean accuracy wins; ties prefer the faster build, then
    /// the unscaled variant (the held value, evaluated first).
    fn prefer_over(&self, held: &VariantSummary) -> bool {
        if self.mean_accuracy != held.mean_accuracy {
            return self.mean_accuracy > held.mean_accuracy;
        }
        self.mean_seconds < held.mean_seconds
    }
}

fn summarize_variant(cells: &[CellReport], algorithm: AlgorithmId, scaled: bool) -> VariantSummary {
    let mut accuracies = Vec::new();
    let mut seconds = Vec::new();
    let mut leaves = Vec::new();
    let mut depths = Vec::new();
    for cell in cells {
        if cell.algorithm == algorithm && cell.scaled == scaled && cell.error.is_none() {
            accuracies.push(cell.accuracy.unwrap_or(f64::NAN));
            seconds.push(cell.build_seconds.unwrap_or(f64::NAN));
            leaves.push(cell.leaves.unwrap_or(0) as f64);
            depths.push(cell.depth.unwrap_or(0) as f64);
        }
    }
    let mean = |v: &[f64]| {
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    VariantSummary {
        complete: accuracies.len(),
        mean_accuracy: mean(&accuracies),
        mean_seconds: mean(&seconds),
        mean_leaves: mean(&leaves),
        mean_depth: mean(&depths),
        accuracies,
    }
}

/// The paired significance procedure on an accuracy matrix
/// (`scores[a][i]` is algorithm `a` on dataset `i`).
///
/// The top-mean algorithm is tested one-tailed against every other
/// algorithm (alternative: top is better); all nulls rejecting after
/// Holm-Bonferroni earns the `//` mark. Every algorithm with a strictly
/// lower mean is tested one-tailed against every other algorithm
/// (alternative: it is worse); at least one rejection earns `\\`.
pub fn significance(
    algorithms: &[AlgorithmId],
    scores: &[Vec<f64>],
    alpha: f64,
) -> Result<SignificanceReport> {
    if algorithms.len() != scores.len() || algorithms.len() < 2 {
        return Err(Error::contract(
            "significance needs aligned scores for at least two algorithms",
        ));
    }
    let m = scores[0].len();
    if m < 2 || scores.iter().any(|s| s.len() != m) {
        return Err(Error::contract(
            "significance needs at least two aligned paired observations",
        ));
    }

    let means: Vec<f64> = scores
        .iter()
        .map(|s| s.iter().sum::<f64>() / m as f64)
        .collect();
    let mut top = 0usize;
    for (i, &mean) in means.iter().enumerate() {
        if mean > means[top] {
            top = i;
        }
    }
    let strictly_top = means
        .iter()
        .enumerate()
        .all(|(i, &mean)| i == top || mean < means[top]);

    let forward = run_tests(algorithms, scores, top, TailDirection::Greater, alpha)?;
    let all_forward_rejected = strictly_top && forward.iter().all(|row| row.reject);

    let mut reverse = Vec::new();
    for (a, &mean) in means.iter().enumerate() {
        if mean < means[top] {
            let tests = run_tests(algorithms, scores, a, TailDirection::Less, alpha)?;
            let any_rejected = tests.iter().any(|row| row.reject);
            reverse.push(ReverseBlock {
                algorithm: algorithms[a],
                tests,
                any_rejected,
            });
        }
    }

    Ok(SignificanceReport {
        alpha,
        top_algorithm: algorithms[top],
        forward,
        all_forward_rejected,
        reverse,
    })
}

// One-tailed paired tests of `subject` against every other algorithm,
// jointly corrected with Holm-Bonferroni.
fn run_tests(
    algorithms: &[AlgorithmId],
    scores: &[Vec<f64>],
    subject: usize,
    direction: TailDirection,
    alpha: f64,
) -> Result<Vec<PairedTestRow>> {
    let mut rows = Vec::new();
    let mut p_values = Vec::new();
    for (b, other) in algorithms.iter().enumerate() {
        if b == subject {
            continue;
        }
        let sample = PairedSample::from_scores(&scores[subject], &scores[b])?;
        let (t, p) = paired_t_one_tailed(&sample, direction)?;
        p_values.push(p);
        rows.push(PairedTestRow {
            algorithm: *other,
            t: t.is_finite().then_some(t),
            p,
            reject: false,
        });
    }
    let rejects = holm_bonferroni(&p_values, alpha)?;
    for (row, reject) in rows.iter_mut().zip(rejects) {
        row.reject = reject;
    }
    Ok(rows)
}

fn marking_for(algorithm: AlgorithmId, sig: &SignificanceReport) -> Marking {
    if algorithm == sig.top_algorithm {
        if sig.all_forward_rejected {
            return Marking::Best;
        }
        return Marking::None;
    }
    if sig
        .reverse
        .iter()
        .any(|block| block.algorithm == algorithm && block.any_rejected)
    {
        return Marking::Worse;
    }
    Marking::None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn algos(n: usize) -> Vec<AlgorithmId> {
        AlgorithmId::ALL[..n].to_vec()
    }

    #[test]
    fn clear_winner_gets_best_mark_only() {
        // algorithm 0 dominates by a wide, consistent margin
        let scores = vec![
            vec![0.95, 0.96, 0.94, 0.95, 0.97, 0.96, 0.95, 0.94],
            vec![0.80, 0.81, 0.79, 0.80, 0.82, 0.81, 0.80, 0.79],
            vec![0.70, 0.71, 0.69, 0.70, 0.72, 0.71, 0.70, 0.69],
        ];
        let sig = significance(&algos(3), &scores, 0.05).unwrap();
        assert_eq!(sig.top_algorithm, AlgorithmId::GiniFeatures);
        assert!(sig.all_forward_rejected);
        assert_eq!(sig.forward.len(), 2);
        // losers are flagged worse, never the top
        assert_eq!(sig.reverse.len(), 2);
        assert!(sig.reverse.iter().all(|b| b.any_rejected));
        assert!(sig
            .reverse
            .iter()
            .all(|b| b.algorithm != sig.top_algorithm));
        assert_eq!(marking_for(AlgorithmId::GiniFeatures, &sig), Marking::Best);
        assert_eq!(
            marking_for(AlgorithmId::GiniPrePcaFeatures, &sig),
            Marking::Worse
        );
    }

    #[test]
    fn noisy_tie_rejects_nothing() {
        let scores = vec![
            vec![0.90, 0.80, 0.85, 0.95, 0.70],
            vec![0.80, 0.90, 0.95, 0.85, 0.72],
        ];
        let sig = significance(&algos(2), &scores, 0.05).unwrap();
        assert!(!sig.all_forward_rejected);
        for block in &sig.reverse {
            assert!(!block.any_rejected);
        }
    }

    #[test]
    fn exact_mean_tie_blocks_best_mark() {
        // dyadic values keep the two means exactly equal regardless of
        // summation order
        let scores = vec![
            vec![1.0, 0.5, 0.75],
            vec![0.75, 0.5, 1.0],
            vec![0.125, 0.125, 0.125],
        ];
        let sig = significance(&algos(3), &scores, 0.05).unwrap();
        // top mean is tied between 0 and 1, so // must not appear
        assert!(!sig.all_forward_rejected);
        // and neither tied algorithm appears in the reverse blocks
        assert!(sig
            .reverse
            .iter()
            .all(|b| b.algorithm == AlgorithmId::GiniNodeFeaturesPca));
    }

    #[test]
    fn significance_validates_shapes() {
        assert!(significance(&algos(2), &[vec![0.9, 0.8]], 0.05).is_err());
        assert!(significance(&algos(2), &[vec![0.9], vec![0.8]], 0.05).is_err());
        assert!(significance(&algos(1), &[vec![0.9, 0.8]], 0.05).is_err());
    }
}
