//! Dataset representation, CSV ingestion, standardization, and
//! train/test and cross-validation splitting.

use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense numeric feature matrix with one integer class label per row.
///
/// Labels are contiguous ids in `0..class_count`. The original label
/// strings (for CSV data) are kept for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Array2<f64>,
    labels: Vec<usize>,
    class_count: usize,
    label_names: Vec<String>,
}

impl LabeledDataset {
    /// Builds a dataset, checking the structural invariants: all feature
    /// values finite, one label per row, every label below `class_count`.
    pub fn new(features: Array2<f64>, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        let names = (0..class_count).map(|c| c.to_string()).collect();
        Self::with_label_names(features, labels, class_count, names)
    }

    pub fn with_label_names(
        features: Array2<f64>,
        labels: Vec<usize>,
        class_count: usize,
        label_names: Vec<String>,
    ) -> Result<Self> {
        if class_count == 0 {
            return Err(Error::contract("class_count must be at least 1"));
        }
        if labels.len() != features.nrows() {
            return Err(Error::contract(format!(
                "label count {} does not match row count {}",
                labels.len(),
                features.nrows()
            )));
        }
        if label_names.len() != class_count {
            return Err(Error::contract("one label name required per class"));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= class_count) {
            return Err(Error::contract(format!(
                "label {bad} out of range for class_count {class_count}"
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::contract("feature values must be finite"));
        }
        Ok(Self {
            features,
            labels,
            class_count,
            label_names,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        crate::row_slice(&self.features, i)
    }

    /// Copies the given rows into a new dataset with the same label space.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let d = self.n_features();
        let mut data = Vec::with_capacity(rows.len() * d);
        let mut labels = Vec::with_capacity(rows.len());
        for &r in rows {
            data.extend_from_slice(self.row(r));
            labels.push(self.labels[r]);
        }
        let features = Array2::from_shape_vec((rows.len(), d), data)
            .map_err(|e| Error::Internal(e.to_string()))?;
        Self::with_label_names(features, labels, self.class_count, self.label_names.clone())
    }

    /// Writes the dataset as a CSV file with columns `x0..x{d-1},label`.
    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path.as_ref())?;
        let d = self.n_features();
        let mut header: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
        header.push("label".to_string());
        w.write_record(&header)?;
        for i in 0..self.n_samples() {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            rec.push(self.label_names[self.labels[i]].clone());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// How to identify the label column of a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    /// Header name; requires `has_header`.
    Name(String),
    /// 0-based column index.
    Index(usize),
}

impl From<&str> for LabelColumn {
    fn from(s: &str) -> Self {
        LabelColumn::Name(s.to_string())
    }
}

impl From<usize> for LabelColumn {
    fn from(i: usize) -> Self {
        LabelColumn::Index(i)
    }
}

/// Loads an RFC-4180-style CSV file into a [`LabeledDataset`].
///
/// Every non-label cell must parse as a real number. Label cells are
/// treated as discrete values and mapped to `0..C-1` in order of first
/// appearance; the mapping is kept on the dataset for reporting.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &LabelColumn,
    has_header: bool,
) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .from_path(path.as_ref())?;

    let label_idx = match label_column {
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(name) => {
            if !has_header {
                return Err(Error::contract(
                    "label column by name requires a header row",
                ));
            }
            let headers = reader.headers()?.clone();
            match headers.iter().position(|h| h == name) {
                Some(i) => i,
                None => {
                    return Err(Error::Format(format!(
                        "label column {name:?} not found in header"
                    )))
                }
            }
        }
    };

    let mut width: Option<usize> = None;
    let mut data: Vec<f64> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    let mut row_no = 0usize;

    for record in reader.records() {
        let record = record.map_err(|e| Error::Format(e.to_string()))?;
        row_no += 1;
        let w = record.len();
        match width {
            None => {
                if label_idx >= w {
                    return Err(Error::Format(format!(
                        "label column index {label_idx} out of range for {w}-column file"
                    )));
                }
                width = Some(w);
            }
            Some(expect) if expect != w => {
                return Err(Error::Format(format!(
                    "ragged row {row_no}: expected {expect} columns, found {w}"
                )));
            }
            _ => {}
        }
        for (col, cell) in record.iter().enumerate() {
            if col == label_idx {
                let name = cell.trim();
                let id = match label_names.iter().position(|n| n == name) {
                    Some(id) => id,
                    None => {
                        label_names.push(name.to_string());
                        label_names.len() - 1
                    }
                };
                labels.push(id);
            } else {
                let value: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                    row: row_no,
                    column: col + 1,
                    message: format!("cannot parse {cell:?} as a number"),
                })?;
                if !value.is_finite() {
                    return Err(Error::Parse {
                        row: row_no,
                        column: col + 1,
                        message: format!("non-finite value {cell:?}"),
                    });
                }
                data.push(value);
            }
        }
    }

    let Some(width) = width else {
        return Err(Error::Format("empty file: no data rows".to_string()));
    };
    let d = width - 1;
    let features = Array2::from_shape_vec((row_no, d), data)
        .map_err(|e| Error::Internal(e.to_string()))?;
    let class_count = label_names.len();
    LabeledDataset::with_label_names(features, labels, class_count, label_names)
}

/// Loads a CSV file of features only (no label column).
pub fn load_features_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .from_path(path.as_ref())?;
    let mut width: Option<usize> = None;
    let mut data: Vec<f64> = Vec::new();
    let mut row_no = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Format(e.to_string()))?;
        row_no += 1;
        match width {
            None => width = Some(record.len()),
            Some(expect) if expect != record.len() => {
                return Err(Error::Format(format!(
                    "ragged row {row_no}: expected {expect} columns, found {}",
                    record.len()
                )));
            }
            _ => {}
        }
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                row: row_no,
                column: col + 1,
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            data.push(value);
        }
    }
    let Some(width) = width else {
        return Err(Error::Format("empty file: no data rows".to_string()));
    };
    Array2::from_shape_vec((row_no, width), data).map_err(|e| Error::Internal(e.to_string()))
}

/// Per-column location/scale parameters fitted on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizerParams {
    pub means: Vec<f64>,
    pub stdevs: Vec<f64>,
}

impl StandardizerParams {
    /// Standardizes a single sample with the same arithmetic used for
    /// whole datasets, so training and inference agree bit for bit.
    pub fn apply_row(&self, sample: &[f64]) -> Vec<f64> {
        sample
            .iter()
            .zip(self.means.iter().zip(&self.stdevs))
            .map(|(&x, (&m, &s))| standardize_value(x, m, s))
            .collect()
    }
}

// Columns with zero spread are centered only.
fn standardize_value(x: f64, mean: f64, stdev: f64) -> f64 {
    if stdev == 0.0 {
        x - mean
    } else {
        (x - mean) / stdev
    }
}

/// Fits per-column means and population standard deviations (divisor n).
pub fn standardize_fit(train: &LabeledDataset) -> StandardizerParams {
    let n = train.n_samples() as f64;
    let d = train.n_features();
    let mut means = vec![0.0; d];
    let mut stdevs = vec![0.0; d];
    for i in 0..train.n_samples() {
        for (j, &v) in train.row(i).iter().enumerate() {
            means[j] += v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    for i in 0..train.n_samples() {
        for (j, &v) in train.row(i).iter().enumerate() {
            let dev = v - means[j];
            stdevs[j] += dev * dev;
        }
    }
    for s in &mut stdevs {
        *s = (*s / n).sqrt();
    }
    StandardizerParams { means, stdevs }
}

/// Applies fitted parameters: each cell becomes `(x - mean) / stdev`,
/// or `x - mean` where the fitted stdev is zero. Labels are unchanged.
pub fn standardize_apply(
    data: &LabeledDataset,
    params: &StandardizerParams,
) -> Result<LabeledDataset> {
    if params.means.len() != data.n_features() || params.stdevs.len() != data.n_features() {
        return Err(Error::contract(format!(
            "standardizer dimension {} does not match data dimension {}",
            params.means.len(),
            data.n_features()
        )));
    }
    let mut features = data.features().clone();
    for mut row in features.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = standardize_value(*v, params.means[j], params.stdevs[j]);
        }
    }
    LabeledDataset::with_label_names(
        features,
        data.labels().to_vec(),
        data.class_count(),
        data.label_names().to_vec(),
    )
}

/// Splits rows into train/test by a seeded uniform permutation. The first
/// `floor(train_fraction * n)` permuted rows become the training set.
pub fn split_train_test(
    data: &LabeledDataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let n = data.n_samples();
    if n < 2 {
        return Err(Error::contract("need at least 2 rows to split"));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::contract("train_fraction must lie in (0, 1)"));
    }
    let train_n = (train_fraction * n as f64).floor() as usize;
    split_train_test_counts(data, train_n, seed)
}

/// As [`split_train_test`] but with an exact training-row count.
pub fn split_train_test_counts(
    data: &LabeledDataset,
    train_n: usize,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let n = data.n_samples();
    if train_n == 0 || train_n >= n {
        return Err(Error::contract(format!(
            "split leaves an empty side: train {train_n} of {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let train = data.subset(&idx[..train_n])?;
    let test = data.subset(&idx[train_n..])?;
    Ok((train, test))
}

/// Fold assignments for repeated k-fold cross-validation.
///
/// Each repetition independently shuffles the row indices and deals folds
/// round-robin, so fold sizes within a repetition differ by at most one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub repetitions: usize,
    pub folds: usize,
    /// `assignments[rep][row]` is the fold index of `row` in `rep`.
    pub assignments: Vec<Vec<usize>>,
    pub seed: u64,
}

impl FoldPlan {
    /// Row indices for the training and test sides of one (rep, fold) cell.
    pub fn train_test_indices(&self, rep: usize, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let assignment = &self.assignments[rep];
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (row, &f) in assignment.iter().enumerate() {
            if f == fold {
                test.push(row);
            } else {
                train.push(row);
            }
        }
        (train, test)
    }
}

/// Builds a seeded plan for `repetitions x folds` cross-validation.
/// Repetition `r` draws from stream `r` of the seed.
pub fn make_fold_plan(n: usize, repetitions: usize, folds: usize, seed: u64) -> Result<FoldPlan> {
    if folds == 0 || repetitions == 0 {
        return Err(Error::contract("repetitions and folds must be positive"));
    }
    if folds > n {
        return Err(Error::contract(format!(
            "cannot make {folds} folds from {n} rows"
        )));
    }
    let mut assignments = Vec::with_capacity(repetitions);
    for rep in 0..repetitions {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep as u64);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let mut assignment = vec![0usize; n];
        for (pos, &row) in idx.iter().enumerate() {
            assignment[row] = pos % folds;
        }
        assignments.push(assignment);
    }
    Ok(FoldPlan {
        repetitions,
        folds,
        assignments,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_csv_maps_labels_in_first_appearance_order() {
        let f = write_tmp("a,b,y\n1,2,A\n3,4,B\n5,6,A\n");
        let ds = load_csv(f.path(), &"y".into(), true).unwrap();
        assert_eq!(ds.n_samples(), 3);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.class_count(), 2);
        assert_eq!(ds.label_names(), &["A".to_string(), "B".to_string()]);
        assert_eq!(ds.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn load_csv_label_by_index_without_header() {
        let f = write_tmp("1,2,A\n3,4,B\n");
        let ds = load_csv(f.path(), &2usize.into(), false).unwrap();
        assert_eq!(ds.labels(), &[0, 1]);
        assert_eq!(ds.row(0), &[1.0, 2.0]);
    }

    #[test]
    fn load_csv_reports_bad_cell_position() {
        let f = write_tmp("a,b,y\n1,2,A\nfoo,4,B\n5,6,A\n");
        let err = load_csv(f.path(), &"y".into(), true).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, 1);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn load_csv_rejects_ragged_and_empty() {
        let f = write_tmp("a,b,y\n1,2,A\n3,4\n");
        assert!(matches!(
            load_csv(f.path(), &"y".into(), true),
            Err(Error::Format(_))
        ));
        let f = write_tmp("");
        assert!(matches!(
            load_csv(f.path(), &0usize.into(), false),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn standardize_fit_matches_hand_values() {
        let ds = LabeledDataset::new(
            Array2::from_shape_vec((3, 1), vec![1.0, 2.0, 3.0]).unwrap(),
            vec![0, 0, 0],
            1,
        )
        .unwrap();
        let p = standardize_fit(&ds);
        assert!((p.means[0] - 2.0).abs() < 1e-12);
        // population stdev: sqrt(((1)^2 + 0 + 1^2)/3) = sqrt(2/3)
        assert!((p.stdevs[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);

        let out = standardize_apply(&ds, &p).unwrap();
        let got: Vec<f64> = out.features().column(0).to_vec();
        let want = 1.224744871391589;
        assert!((got[0] + want).abs() < 1e-9);
        assert!(got[1].abs() < 1e-12);
        assert!((got[2] - want).abs() < 1e-9);
    }

    #[test]
    fn standardize_constant_column_centers_only() {
        let ds = LabeledDataset::new(
            Array2::from_shape_vec((3, 1), vec![5.0, 5.0, 5.0]).unwrap(),
            vec![0, 0, 0],
            1,
        )
        .unwrap();
        let p = standardize_fit(&ds);
        assert_eq!(p.means[0], 5.0);
        assert_eq!(p.stdevs[0], 0.0);
        let out = standardize_apply(&ds, &p).unwrap();
        assert!(out.features().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn standardize_identity_params_change_nothing() {
        let ds = LabeledDataset::new(
            Array2::from_shape_vec((2, 2), vec![1.0, -3.0, 0.5, 7.0]).unwrap(),
            vec![0, 1],
            2,
        )
        .unwrap();
        let p = StandardizerParams {
            means: vec![0.0, 0.0],
            stdevs: vec![1.0, 1.0],
        };
        let out = standardize_apply(&ds, &p).unwrap();
        assert_eq!(out.features(), ds.features());
    }

    #[test]
    fn standardize_already_standard_column_is_fixed_point() {
        let v = 1.224744871391589;
        let ds = LabeledDataset::new(
            Array2::from_shape_vec((3, 1), vec![-v, 0.0, v]).unwrap(),
            vec![0, 0, 0],
            1,
        )
        .unwrap();
        let p = standardize_fit(&ds);
        assert!(p.means[0].abs() < 1e-12);
        assert!((p.stdevs[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn standardize_apply_rejects_dimension_mismatch() {
        let ds = LabeledDataset::new(
            Array2::from_shape_vec((1, 2), vec![1.0, 2.0]).unwrap(),
            vec![0],
            1,
        )
        .unwrap();
        let p = StandardizerParams {
            means: vec![0.0],
            stdevs: vec![1.0],
        };
        assert!(matches!(
            standardize_apply(&ds, &p),
            Err(Error::Contract(_))
        ));
    }

    fn tiny(n: usize) -> LabeledDataset {
        let data: Vec<f64> = (0..n * 2).map(|i| i as f64).collect();
        LabeledDataset::new(
            Array2::from_shape_vec((n, 2), data).unwrap(),
            (0..n).map(|i| i % 2).collect(),
            2,
        )
        .unwrap()
    }

    #[test]
    fn split_sizes_follow_floor_rule() {
        let ds = tiny(10);
        let (train, test) = split_train_test(&ds, 0.8, 7).unwrap();
        assert_eq!((train.n_samples(), test.n_samples()), (8, 2));
        let (train, test) = split_train_test(&ds, 0.999, 7).unwrap();
        assert_eq!((train.n_samples(), test.n_samples()), (9, 1));
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let ds = tiny(12);
        let (a1, b1) = split_train_test(&ds, 0.75, 99).unwrap();
        let (a2, b2) = split_train_test(&ds, 0.75, 99).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
    }

    #[test]
    fn split_rejects_empty_sides() {
        let ds = tiny(3);
        assert!(split_train_test(&ds, 0.1, 0).is_err()); // floor -> 0 train rows
        assert!(split_train_test_counts(&ds, 3, 0).is_err());
    }

    #[test]
    fn fold_plan_balances_and_repeats() {
        let plan = make_fold_plan(12, 3, 5, 11).unwrap();
        for rep in 0..3 {
            let mut sizes = vec![0usize; 5];
            for &f in &plan.assignments[rep] {
                sizes[f] += 1;
            }
            sizes.sort_unstable();
            assert_eq!(sizes, vec![2, 2, 2, 3, 3]);
        }
        assert_eq!(plan, make_fold_plan(12, 3, 5, 11).unwrap());
        assert_ne!(
            plan.assignments[0],
            make_fold_plan(12, 3, 5, 12).unwrap().assignments[0]
        );
    }

    #[test]
    fn fold_plan_single_row_folds() {
        let plan = make_fold_plan(10, 10, 10, 0).unwrap();
        for rep in 0..10 {
            let mut seen = vec![0usize; 10];
            for &f in &plan.assignments[rep] {
                seen[f] += 1;
            }
            assert!(seen.iter().all(|&s| s == 1));
        }
    }

    #[test]
    fn fold_plan_rejects_more_folds_than_rows() {
        assert!(matches!(
            make_fold_plan(4, 1, 5, 0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn save_then_load_round_trips() {
        let ds = tiny(6);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dump.csv");
        ds.save_csv(&path).unwrap();
        let back = load_csv(&path, &"label".into(), true).unwrap();
        assert_eq!(back.features(), ds.features());
        assert_eq!(back.labels(), ds.labels());
    }
}
