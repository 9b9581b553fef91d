//! Classification decision trees built around two ideas: a max-cut
//! split criterion that scores a threshold by the total distance
//! between cross-threshold observations of differing classes, and
//! split directions constructed by PCA fitted locally at every tree
//! node (on the node's rows, or on its one-vs-rest class means).
//!
//! The crate provides the eight resulting tree variants (Gini / max-cut
//! crossed with original / global-PCA / node-PCA / node-means-PCA
//! features) plus the supporting pieces needed to compare them
//! reproducibly: CSV ingestion, standardization, train/test and k-fold
//! splitting, a synthetic cluster generator, and paired significance
//! testing with Holm-Bonferroni correction.

pub mod data;
pub mod error;
pub mod pca;
pub mod split;
pub mod stats;
pub mod synth;
pub mod tree;

pub use data::{
    load_csv, load_features_csv, make_fold_plan, split_train_test, split_train_test_counts,
    standardize_apply, standardize_fit, FoldPlan, LabelColumn, LabeledDataset, StandardizerParams,
};
pub use error::{Error, Result};
pub use pca::{fit_means_pca, fit_pca, rest_means, transform, PcaBasis};
pub use split::{
    best_gini_split, brute_force_gini, brute_force_max_cut, brute_force_select, gini_impurity,
    max_cut_prefix_values, max_cut_scan, select_best_split, ClassCounts, SplitCandidate,
    SplitCriterion,
};
pub use stats::{
    accuracy, holm_bonferroni, mean_ci95, paired_t_one_tailed, PairedSample, TailDirection,
};
pub use synth::{derive_seed, generate, SynthConfig};
pub use tree::{build_tree, DecisionTree, FeatureMode, NodeProjector, TreeConfig, TreeNode};

/// Contiguous view of one row of a standard-layout matrix.
pub(crate) fn row_slice(matrix: &ndarray::Array2<f64>, i: usize) -> &[f64] {
    matrix
        .row(i)
        .to_slice()
        .expect("feature matrices are standard layout")
}
