//! Classification tree construction, prediction, and structural
//! metrics for every combination of split criterion (Gini / max-cut)
//! and feature construction (original axes, one global PCA, PCA refit
//! at every node, or one-vs-rest means PCA refit at every node).
//!
//! Growth stops only when a node is pure or its split search declines
//! (no candidate threshold, a zero max-cut score, or a rank-zero local
//! basis); there is no pruning and no depth limit. Node-local bases are
//! always fitted in the tree's working space (the input features, after
//! standardization and the global projection when those are enabled),
//! never nested through ancestor projections.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{standardize_apply, standardize_fit, LabeledDataset, StandardizerParams};
use crate::error::{Error, Result};
use crate::pca::{self, PcaBasis};
use crate::split::{self, ClassCounts, SplitCandidate, SplitCriterion};
use crate::row_slice;

/// How candidate split features are constructed at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Split on the input features as-is.
    Original,
    /// Fit one PCA on the training set and split on its coordinates.
    GlobalPca,
    /// Refit PCA on each node's own rows and split on the local
    /// coordinates.
    NodeFeaturesPca,
    /// Fit PCA on each node's one-vs-rest class means; yields at most
    /// (classes present - 1) candidate directions.
    NodeMeansPca,
}

/// Full algorithm selection: criterion, feature construction, and
/// whether features are standardized before anything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub criterion: SplitCriterion,
    pub feature_mode: FeatureMode,
    pub standardize: bool,
}

/// Decision rule of an internal node: either a single working-space
/// coordinate or a signed distance along an oblique direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeProjector {
    Axis { feature: usize },
    Oblique { center: Vec<f64>, direction: Vec<f64> },
}

impl NodeProjector {
    /// Projected coordinate of a working-space sample. Training-time
    /// partitions and prediction both route through this function.
    pub fn project(&self, x: &[f64]) -> f64 {
        match self {
            NodeProjector::Axis { feature } => x[*feature],
            NodeProjector::Oblique { center, direction } => {
                pca::centered_dot(x, center, direction)
            }
        }
    }
}

/// One node of the tree arena. Children are arena indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Internal {
        projector: NodeProjector,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class: usize,
        support: ClassCounts,
    },
}

/// A fitted decision tree. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
    config: TreeConfig,
    standardizer: Option<StandardizerParams>,
    global_basis: Option<PcaBasis>,
    input_dim: usize,
    class_count: usize,
}

const TREE_SCHEMA: &str = "tree/v1";

/// On-disk form of a tree, with a schema tag and the optional label
/// names needed to print predictions.
#[derive(Debug, Serialize, Deserialize)]
struct TreeDocument {
    schema: String,
    label_names: Option<Vec<String>>,
    tree: DecisionTree,
}

struct BuildContext<'a> {
    working: &'a Array2<f64>,
    labels: &'a [usize],
    class_count: usize,
    config: TreeConfig,
}

/// Grows a tree on `train` under `config`.
///
/// Standardization parameters are fitted on `train` itself; the global
/// basis (GlobalPca mode) is fitted once on the standardized features.
/// At each node the majority-class leaf is emitted when the node is
/// pure or the split search over the node's candidate features declines;
/// otherwise rows partition by projected value `<= threshold`.
pub fn build_tree(train: &LabeledDataset, config: TreeConfig) -> Result<DecisionTree> {
    if train.n_samples() == 0 {
        return Err(Error::contract("cannot build a tree on an empty set"));
    }
    let input_dim = train.n_features();

    let standardizer = config.standardize.then(|| standardize_fit(train));
    let standardized;
    let after_scaling: &LabeledDataset = match &standardizer {
        Some(params) => {
            standardized = standardize_apply(train, params)?;
            &standardized
        }
        None => train,
    };

    let global_basis = match config.feature_mode {
        FeatureMode::GlobalPca => Some(pca::fit_pca(after_scaling.features())?),
        _ => None,
    };
    let transformed;
    let working: &Array2<f64> = match &global_basis {
        Some(basis) => {
            transformed = pca::transform(after_scaling.features(), basis)?;
            &transformed
        }
        None => after_scaling.features(),
    };

    let ctx = BuildContext {
        working,
        labels: after_scaling.labels(),
        class_count: after_scaling.class_count(),
        config,
    };

    let mut nodes: Vec<TreeNode> = Vec::new();
    nodes.push(placeholder());
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(0, (0..train.n_samples()).collect())];
    while let Some((slot, rows)) = stack.pop() {
        match grow_node(&ctx, &rows)? {
            Grown::Leaf(node) => nodes[slot] = node,
            Grown::Split {
                projector,
                threshold,
                left_rows,
                right_rows,
            } => {
                let left = nodes.len();
                nodes.push(placeholder());
                let right = nodes.len();
                nodes.push(placeholder());
                nodes[slot] = TreeNode::Internal {
                    projector,
                    threshold,
                    left,
                    right,
                };
                stack.push((right, right_rows));
                stack.push((left, left_rows));
            }
        }
    }

    Ok(DecisionTree {
        nodes,
        config,
        standardizer,
        global_basis,
        input_dim,
        class_count: train.class_count(),
    })
}

fn placeholder() -> TreeNode {
    TreeNode::Leaf {
        class: 0,
        support: ClassCounts::from_labels(&[], 0),
    }
}

enum Grown {
    Leaf(TreeNode),
    Split {
        projector: NodeProjector,
        threshold: f64,
        left_rows: Vec<usize>,
        right_rows: Vec<usize>,
    },
}

fn grow_node(ctx: &BuildContext, rows: &[usize]) -> Result<Grown> {
    let labels: Vec<usize> = rows.iter().map(|&r| ctx.labels[r]).collect();
    let counts = ClassCounts::from_labels(&labels, ctx.class_count);
    if counts.is_pure() {
        return Ok(leaf(counts));
    }

    let outcome = match ctx.config.feature_mode {
        FeatureMode::Original | FeatureMode::GlobalPca => {
            if ctx.working.ncols() == 0 {
                None
            } else {
                split::select_best_split(ctx.working, rows, &labels, ctx.config.criterion)?.map(
                    |c| {
                        let projector = NodeProjector::Axis {
                            feature: c.feature_index,
                        };
                        let (left_rows, right_rows) =
                            partition_by_column(ctx.working, rows, c.feature_index, c.threshold);
                        (c, projector, left_rows, right_rows)
                    },
                )
            }
        }
        FeatureMode::NodeFeaturesPca => {
            let basis = pca::fit_pca_rows(ctx.working, rows)?;
            try_oblique(ctx, rows, &labels, basis)?
        }
        FeatureMode::NodeMeansPca => {
            let basis = pca::fit_means_pca_rows(ctx.working, rows, &labels, ctx.class_count)?;
            if basis.p() + 1 > counts.present_classes() {
                return Err(Error::Internal(format!(
                    "means PCA produced {} components for {} classes",
                    basis.p(),
                    counts.present_classes()
                )));
            }
            try_oblique(ctx, rows, &labels, basis)?
        }
    };
    match outcome {
        None => Ok(leaf(counts)),
        Some((c, projector, left_rows, right_rows)) => {
            finish_split(counts, c, projector, left_rows, right_rows)
        }
    }
}

type ObliqueOutcome = Option<(SplitCandidate, NodeProjector, Vec<usize>, Vec<usize>)>;

fn try_oblique(
    ctx: &BuildContext,
    rows: &[usize],
    labels: &[usize],
    basis: PcaBasis,
) -> Result<ObliqueOutcome> {
    if basis.p() == 0 {
        return Ok(None);
    }
    let local = pca::transform_rows(ctx.working, rows, &basis)?;
    let local_rows: Vec<usize> = (0..rows.len()).collect();
    let Some(candidate) =
        split::select_best_split(&local, &local_rows, labels, ctx.config.criterion)?
    else {
        return Ok(None);
    };
    let projector = NodeProjector::Oblique {
        center: basis.center().to_vec(),
        direction: basis.component(candidate.feature_index).to_vec(),
    };
    // partition on the very projections the search saw
    let mut left_rows = Vec::new();
    let mut right_rows = Vec::new();
    for (i, &r) in rows.iter().enumerate() {
        if local[[i, candidate.feature_index]] <= candidate.threshold {
            left_rows.push(r);
        } else {
            right_rows.push(r);
        }
    }
    Ok(Some((candidate, projector, left_rows, right_rows)))
}

fn partition_by_column(
    working: &Array2<f64>,
    rows: &[usize],
    column: usize,
    threshold: f64,
) -> (Vec<usize>, Vec<usize>) {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &r in rows {
        if working[[r, column]] <= threshold {
            left.push(r);
        } else {
            right.push(r);
        }
    }
    (left, right)
}

fn leaf(counts: ClassCounts) -> Grown {
    Grown::Leaf(TreeNode::Leaf {
        class: counts.majority_class(),
        support: counts,
    })
}

fn finish_split(
    counts: ClassCounts,
    candidate: SplitCandidate,
    projector: NodeProjector,
    left_rows: Vec<usize>,
    right_rows: Vec<usize>,
) -> Result<Grown> {
    // A candidate threshold always separates two distinct values, so
    // both sides are populated; an empty side would mean the partition
    // disagreed with the search.
    if left_rows.is_empty() || right_rows.is_empty() {
        return Ok(leaf(counts));
    }
    if left_rows.len() != candidate.left_count || right_rows.len() != candidate.right_count {
        return Err(Error::Internal(
            "partition sizes disagree with the chosen candidate".to_string(),
        ));
    }
    Ok(Grown::Split {
        projector,
        threshold: candidate.threshold,
        left_rows,
        right_rows,
    })
}

impl DecisionTree {
    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn standardizer(&self) -> Option<&StandardizerParams> {
        self.standardizer.as_ref()
    }

    pub fn global_basis(&self) -> Option<&PcaBasis> {
        self.global_basis.as_ref()
    }

    fn to_working(&self, sample: &[f64]) -> Result<Vec<f64>> {
        if sample.len() != self.input_dim {
            return Err(Error::contract(format!(
                "sample dimension {} does not match trained dimension {}",
                sample.len(),
                self.input_dim
            )));
        }
        let scaled = match &self.standardizer {
            Some(params) => params.apply_row(sample),
            None => sample.to_vec(),
        };
        match &self.global_basis {
            Some(basis) => basis.transform_row(&scaled),
            None => Ok(scaled),
        }
    }

    /// Predicted class for one sample.
    pub fn predict(&self, sample: &[f64]) -> Result<usize> {
        let working = self.to_working(sample)?;
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { class, .. } => return Ok(*class),
                TreeNode::Internal {
                    projector,
                    threshold,
                    left,
                    right,
                } => {
                    at = if projector.project(&working) <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    /// Node indices visited from the root to the absorbing leaf.
    pub fn decision_path(&self, sample: &[f64]) -> Result<Vec<usize>> {
        let working = self.to_working(sample)?;
        let mut path = vec![0usize];
        loop {
            match &self.nodes[*path.last().expect("path starts at root")] {
                TreeNode::Leaf { .. } => return Ok(path),
                TreeNode::Internal {
                    projector,
                    threshold,
                    left,
                    right,
                } => {
                    let next = if projector.project(&working) <= *threshold {
                        *left
                    } else {
                        *right
                    };
                    path.push(next);
                }
            }
        }
    }

    /// Predictions for every row of a dataset.
    pub fn predict_batch(&self, data: &LabeledDataset) -> Result<Vec<usize>> {
        self.predict_rows(data.features())
    }

    /// Predictions for every row of a feature matrix.
    pub fn predict_rows(&self, features: &Array2<f64>) -> Result<Vec<usize>> {
        (0..features.nrows())
            .map(|i| self.predict(row_slice(features, i)))
            .collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    /// Maximum root-to-leaf edge count.
    pub fn depth(&self) -> usize {
        let mut max_depth = 0usize;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((at, depth)) = stack.pop() {
            match &self.nodes[at] {
                TreeNode::Leaf { .. } => max_depth = max_depth.max(depth),
                TreeNode::Internal { left, right, .. } => {
                    stack.push((*left, depth + 1));
                    stack.push((*right, depth + 1));
                }
            }
        }
        max_depth
    }

    /// Serializes the tree as a versioned JSON document. `label_names`
    /// are embedded when given so predictions can be printed with the
    /// original class names.
    pub fn to_json(&self, label_names: Option<&[String]>) -> Result<String> {
        let doc = TreeDocument {
            schema: TREE_SCHEMA.to_string(),
            label_names: label_names.map(|n| n.to_vec()),
            tree: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses a tree document produced by [`DecisionTree::to_json`],
    /// re-checking structural invariants.
    pub fn from_json(text: &str) -> Result<(DecisionTree, Option<Vec<String>>)> {
        let doc: TreeDocument = serde_json::from_str(text)?;
        if doc.schema != TREE_SCHEMA {
            return Err(Error::Format(format!(
                "unsupported tree schema {:?}, expected {TREE_SCHEMA:?}",
                doc.schema
            )));
        }
        doc.tree.validate()?;
        Ok((doc.tree, doc.label_names))
    }

    /// Structural invariants: child indices in range, every leaf
    /// supported, projector shapes consistent, oblique directions unit
    /// norm, auxiliary transforms present exactly when the config says.
    pub fn validate(&self) -> Result<()> {
        if self.standardizer.is_some() != self.config.standardize {
            return Err(Error::Format(
                "standardizer presence disagrees with config".to_string(),
            ));
        }
        if self.global_basis.is_some() != (self.config.feature_mode == FeatureMode::GlobalPca) {
            return Err(Error::Format(
                "global basis presence disagrees with config".to_string(),
            ));
        }
        for node in &self.nodes {
            match node {
                TreeNode::Leaf { class, support } => {
                    if support.total() == 0 {
                        return Err(Error::Format("leaf with empty support".to_string()));
                    }
                    if *class >= self.class_count {
                        return Err(Error::Format("leaf class out of range".to_string()));
                    }
                }
                TreeNode::Internal {
                    projector,
                    left,
                    right,
                    ..
                } => {
                    if *left >= self.nodes.len() || *right >= self.nodes.len() {
                        return Err(Error::Format("child index out of range".to_string()));
                    }
                    if let NodeProjector::Oblique { center, direction } = projector {
                        if center.len() != direction.len() {
                            return Err(Error::Format(
                                "oblique projector shape mismatch".to_string(),
                            ));
                        }
                        let norm: f64 = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if (norm - 1.0).abs() > 1e-8 {
                            return Err(Error::Format(
                                "oblique direction is not unit norm".to_string(),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn dataset(features: Array2<f64>, labels: Vec<usize>, classes: usize) -> LabeledDataset {
        LabeledDataset::new(features, labels, classes).unwrap()
    }

    fn config(criterion: SplitCriterion, mode: FeatureMode) -> TreeConfig {
        TreeConfig {
            criterion,
            feature_mode: mode,
            standardize: false,
        }
    }

    fn xor() -> LabeledDataset {
        dataset(
            array![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]],
            vec![0, 0, 1, 1],
            2,
        )
    }

    #[test]
    fn xor_needs_more_than_one_axis_split() {
        let tree = build_tree(&xor(), config(SplitCriterion::Gini, FeatureMode::Original)).unwrap();
        let preds = tree.predict_batch(&xor()).unwrap();
        assert_eq!(preds, vec![0, 0, 1, 1]);
        assert!(tree.leaf_count() >= 3);
        // near the (0,0) corner we stay in class 0 territory
        assert_eq!(tree.predict(&[0.1, 0.1]).unwrap(), 0);
    }

    #[test]
    fn single_class_collapses_to_one_leaf() {
        let ds = dataset(array![[1.0], [2.0], [3.0]], vec![0, 0, 0], 1);
        let tree = build_tree(&ds, config(SplitCriterion::MaxCut, FeatureMode::Original)).unwrap();
        assert_eq!(tree.leaf_count(), 1);
        assert_eq!(tree.depth(), 0);
        assert_eq!(tree.predict(&[99.0]).unwrap(), 0);
    }

    #[test]
    fn separable_pair_splits_once() {
        let ds = dataset(array![[0.0], [1.0], [10.0], [11.0]], vec![0, 0, 1, 1], 2);
        let tree = build_tree(&ds, config(SplitCriterion::Gini, FeatureMode::Original)).unwrap();
        assert_eq!(tree.leaf_count(), 2);
        assert_eq!(tree.depth(), 1);
    }

    #[test]
    fn means_pca_blobs_split_along_mean_difference() {
        // two separated blobs; the single rest-means direction is the
        // (normalized) difference of the class means
        let ds = dataset(
            array![
                [0.0, 0.0],
                [0.2, -0.1],
                [-0.1, 0.1],
                [4.0, 6.0],
                [4.2, 5.9],
                [3.9, 6.1]
            ],
            vec![0, 0, 0, 1, 1, 1],
            2,
        );
        let tree = build_tree(&ds, config(SplitCriterion::Gini, FeatureMode::NodeMeansPca)).unwrap();
        assert_eq!(tree.depth(), 1);
        assert_eq!(tree.leaf_count(), 2);
        match &tree.nodes()[0] {
            TreeNode::Internal { projector, .. } => match projector {
                NodeProjector::Oblique { direction, .. } => {
                    // mean difference is ~(4, 6)/|.|
                    let expect = [4.0 / 52.0f64.sqrt(), 6.0 / 52.0f64.sqrt()];
                    let cosine: f64 =
                        direction[0] * expect[0] + direction[1] * expect[1];
                    assert!(cosine.abs() > 1.0 - 1e-6, "direction {direction:?}");
                }
                other => panic!("expected oblique root, got {other:?}"),
            },
            other => panic!("expected internal root, got {other:?}"),
        }
        let preds = tree.predict_batch(&ds).unwrap();
        assert_eq!(preds, ds.labels());
    }

    #[test]
    fn all_variants_fit_distinct_rows_to_purity() {
        // generic real-valued rows, no duplicate conflicts
        let ds = dataset(
            array![
                [0.31, 1.7, -0.4],
                [1.9, -0.3, 0.55],
                [-1.2, 0.8, 1.3],
                [0.7, 0.71, -1.6],
                [2.3, 1.1, 0.9],
                [-0.6, -1.4, 0.2],
                [1.1, 0.33, -0.8],
                [-2.0, 0.5, 1.9],
                [0.05, -0.95, 1.45]
            ],
            vec![0, 1, 2, 0, 1, 2, 0, 1, 2],
            3,
        );
        for criterion in [SplitCriterion::Gini, SplitCriterion::MaxCut] {
            for mode in [
                FeatureMode::Original,
                FeatureMode::GlobalPca,
                FeatureMode::NodeFeaturesPca,
                FeatureMode::NodeMeansPca,
            ] {
                for standardize in [false, true] {
                    let tree = build_tree(
                        &ds,
                        TreeConfig {
                            criterion,
                            feature_mode: mode,
                            standardize,
                        },
                    )
                    .unwrap();
                    let preds = tree.predict_batch(&ds).unwrap();
                    assert_eq!(preds, ds.labels(), "{criterion:?}/{mode:?}/{standardize}");
                }
            }
        }
    }

    #[test]
    fn conflicting_duplicate_rows_stop_at_majority_leaf() {
        let ds = dataset(array![[1.0], [1.0], [1.0]], vec![0, 1, 0], 2);
        for criterion in [SplitCriterion::Gini, SplitCriterion::MaxCut] {
            let tree = build_tree(&ds, config(criterion, FeatureMode::Original)).unwrap();
            assert_eq!(tree.leaf_count(), 1);
            assert_eq!(tree.predict(&[1.0]).unwrap(), 0);
        }
    }

    #[test]
    fn predict_checks_dimension() {
        let tree = build_tree(&xor(), config(SplitCriterion::Gini, FeatureMode::Original)).unwrap();
        assert!(tree.predict(&[1.0]).is_err());
        assert!(tree.predict(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn json_round_trip_preserves_structure_and_predictions() {
        let ds = xor();
        for mode in [
            FeatureMode::Original,
            FeatureMode::GlobalPca,
            FeatureMode::NodeFeaturesPca,
            FeatureMode::NodeMeansPca,
        ] {
            let tree = build_tree(
                &ds,
                TreeConfig {
                    criterion: SplitCriterion::MaxCut,
                    feature_mode: mode,
                    standardize: true,
                },
            )
            .unwrap();
            let json = tree.to_json(Some(&["a".into(), "b".into()])).unwrap();
            let (back, names) = DecisionTree::from_json(&json).unwrap();
            assert_eq!(back, tree);
            assert_eq!(names.unwrap(), vec!["a".to_string(), "b".to_string()]);
            assert_eq!(
                back.predict_batch(&ds).unwrap(),
                tree.predict_batch(&ds).unwrap()
            );
        }
    }

    #[test]
    fn from_json_rejects_other_schemas() {
        let ds = xor();
        let tree = build_tree(&ds, config(SplitCriterion::Gini, FeatureMode::Original)).unwrap();
        let json = tree.to_json(None).unwrap();
        let bad = json.replace("tree/v1", "tree/v9");
        assert!(matches!(
            DecisionTree::from_json(&bad),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn decision_path_starts_at_root_and_ends_at_leaf() {
        let tree = build_tree(&xor(), config(SplitCriterion::Gini, FeatureMode::Original)).unwrap();
        let path = tree.decision_path(&[0.0, 0.0]).unwrap();
        assert_eq!(path[0], 0);
        assert!(matches!(
            tree.nodes()[*path.last().unwrap()],
            TreeNode::Leaf { .. }
        ));
        assert!(path.len() as usize >= 2);
    }
}
