//! Experiment specification: which data, which algorithms, how to
//! evaluate, and where the report goes. The same schema is accepted
//! from a JSON file via `--spec`.

use mctree::{Error, FeatureMode, LabelColumn, Result, SplitCriterion, TreeConfig};
use serde::{Deserialize, Serialize};

pub const SPEC_SCHEMA: &str = "spec/v1";

/// The eight tree variants under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmId {
    GiniFeatures,
    GiniPrePcaFeatures,
    GiniNodeFeaturesPca,
    GiniNodeMeansPca,
    MaxCutFeatures,
    MaxCutPrePcaFeatures,
    MaxCutNodeFeaturesPca,
    MaxCutNodeMeansPca,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 8] = [
        AlgorithmId::GiniFeatures,
        AlgorithmId::GiniPrePcaFeatures,
        AlgorithmId::GiniNodeFeaturesPca,
        AlgorithmId::GiniNodeMeansPca,
        AlgorithmId::MaxCutFeatures,
        AlgorithmId::MaxCutPrePcaFeatures,
        AlgorithmId::MaxCutNodeFeaturesPca,
        AlgorithmId::MaxCutNodeMeansPca,
    ];

    /// Human-readable name used in summaries.
    pub fn display_name(&self) -> &'static str {
        match self {
            AlgorithmId::GiniFeatures => "Gini Features",
            AlgorithmId::GiniPrePcaFeatures => "Gini Pre PCA Features",
            AlgorithmId::GiniNodeFeaturesPca => "Gini Node Features PCA",
            AlgorithmId::GiniNodeMeansPca => "Gini Node Means PCA",
            AlgorithmId::MaxCutFeatures => "Max Cut Features",
            AlgorithmId::MaxCutPrePcaFeatures => "Max Cut Pre PCA Features",
            AlgorithmId::MaxCutNodeFeaturesPca => "Max Cut Node Features PCA",
            AlgorithmId::MaxCutNodeMeansPca => "Max Cut Node Means PCA",
        }
    }

    /// Stable kebab-case id used on the command line and in files.
    pub fn key(&self) -> &'static str {
        match self {
            AlgorithmId::GiniFeatures => "gini-features",
            AlgorithmId::GiniPrePcaFeatures => "gini-pre-pca-features",
            AlgorithmId::GiniNodeFeaturesPca => "gini-node-features-pca",
            AlgorithmId::GiniNodeMeansPca => "gini-node-means-pca",
            AlgorithmId::MaxCutFeatures => "max-cut-features",
            AlgorithmId::MaxCutPrePcaFeatures => "max-cut-pre-pca-features",
            AlgorithmId::MaxCutNodeFeaturesPca => "max-cut-node-features-pca",
            AlgorithmId::MaxCutNodeMeansPca => "max-cut-node-means-pca",
        }
    }

    pub fn parse(s: &str) -> Result<AlgorithmId> {
        Self::ALL
            .into_iter()
            .find(|a| a.key() == s)
            .ok_or_else(|| Error::contract(format!("unknown algorithm {s:?}")))
    }

    /// Expands a CLI list: each entry is an algorithm key or `all`.
    pub fn parse_list(entries: &[String]) -> Result<Vec<AlgorithmId>> {
        let mut out = Vec::new();
        for entry in entries {
            if entry == "all" {
                for a in Self::ALL {
                    if !out.contains(&a) {
                        out.push(a);
                    }
                }
            } else {
                let a = Self::parse(entry)?;
                if !out.contains(&a) {
                    out.push(a);
                }
            }
        }
        Ok(out)
    }

    pub fn tree_config(&self, standardize: bool) -> TreeConfig {
        let (criterion, feature_mode) = match self {
            AlgorithmId::GiniFeatures => (SplitCriterion::Gini, FeatureMode::Original),
            AlgorithmId::GiniPrePcaFeatures => (SplitCriterion::Gini, FeatureMode::GlobalPca),
            AlgorithmId::GiniNodeFeaturesPca => (SplitCriterion::Gini, FeatureMode::NodeFeaturesPca),
            AlgorithmId::GiniNodeMeansPca => (SplitCriterion::Gini, FeatureMode::NodeMeansPca),
            AlgorithmId::MaxCutFeatures => (SplitCriterion::MaxCut, FeatureMode::Original),
            AlgorithmId::MaxCutPrePcaFeatures => (SplitCriterion::MaxCut, FeatureMode::GlobalPca),
            AlgorithmId::MaxCutNodeFeaturesPca => {
                (SplitCriterion::MaxCut, FeatureMode::NodeFeaturesPca)
            }
            AlgorithmId::MaxCutNodeMeansPca => (SplitCriterion::MaxCut, FeatureMode::NodeMeansPca),
        };
        TreeConfig {
            criterion,
            feature_mode,
            standardize,
        }
    }
}

impl std::fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.key())
    }
}

/// Whether features are standardized before training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingMode {
    On,
    Off,
    /// Evaluate both and report, per algorithm, whichever variant has
    /// the higher mean accuracy (ties broken by lower mean build time,
    /// then unscaled).
    Best,
}

impl ScalingMode {
    /// The standardize flags to evaluate under this mode.
    pub fn variants(&self) -> &'static [bool] {
        match self {
            ScalingMode::On => &[true],
            ScalingMode::Off => &[false],
            ScalingMode::Best => &[false, true],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synthetic(SyntheticSource),
    Csv(CsvSource),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSource {
    pub classes: usize,
    /// Informative dimensions.
    pub dims: usize,
    #[serde(default)]
    pub noise_dims: usize,
    /// One experiment group is run per training-set size.
    pub train_sizes: Vec<usize>,
    pub test_size: usize,
    pub replicates: usize,
    #[serde(default = "default_flip")]
    pub flip_fraction: f64,
    #[serde(default = "default_sep")]
    pub class_sep: f64,
    /// When set, every generated dataset is also written to
    /// `<dir>/<group>-rep<k>.csv` for audit.
    #[serde(default)]
    pub dump_csv: Option<String>,
}

fn default_flip() -> f64 {
    0.01
}

fn default_sep() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSource {
    pub path: String,
    pub label: LabelColumn,
    #[serde(default = "default_true")]
    pub has_header: bool,
    pub eval: EvalMode,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Holdout { fraction: f64 },
    Cv { reps: usize, folds: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: String,
    pub format: ReportFormat,
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub source: DataSource,
    pub algorithms: Vec<AlgorithmId>,
    pub scaling: ScalingMode,
    pub seed: u64,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

fn default_schema() -> String {
    SPEC_SCHEMA.to_string()
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.schema != SPEC_SCHEMA {
            return Err(Error::contract(format!(
                "unsupported spec schema {:?}, expected {SPEC_SCHEMA:?}",
                self.schema
            )));
        }
        if self.algorithms.is_empty() {
            return Err(Error::contract("at least one algorithm is required"));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.algorithms.iter().find(|a| !seen.insert(**a)) {
            return Err(Error::contract(format!("duplicate algorithm {dup}")));
        }
        match &self.source {
            DataSource::Synthetic(s) => {
                if s.replicates == 0 {
                    return Err(Error::contract("replicates must be at least 1"));
                }
                if s.train_sizes.is_empty() {
                    return Err(Error::contract("at least one training size is required"));
                }
                if s.train_sizes.iter().any(|&n| n == 0) || s.test_size == 0 {
                    return Err(Error::contract("training and test sizes must be positive"));
                }
            }
            DataSource::Csv(c) => match c.eval {
                EvalMode::Holdout { fraction } => {
                    if !(fraction > 0.0 && fraction < 1.0) {
                        return Err(Error::contract("holdout fraction must lie in (0, 1)"));
                    }
                }
                EvalMode::Cv { reps, folds } => {
                    if reps == 0 || folds < 2 {
                        return Err(Error::contract(
                            "cross-validation needs reps >= 1 and folds >= 2",
                        ));
                    }
                }
            },
        }
        Ok(())
    }

    /// Parses and validates a spec file.
    pub fn from_file(path: &std::path::Path) -> Result<ExperimentSpec> {
        let text = std::fs::read_to_string(path)?;
        let spec: ExperimentSpec = serde_json::from_str(&text)
            .map_err(|e| Error::contract(format!("bad spec file {}: {e}", path.display())))?;
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_keys_round_trip() {
        for a in AlgorithmId::ALL {
            assert_eq!(AlgorithmId::parse(a.key()).unwrap(), a);
            let json = serde_json::to_string(&a).unwrap();
            assert_eq!(json, format!("\"{}\"", a.key()));
            let back: AlgorithmId = serde_json::from_str(&json).unwrap();
            assert_eq!(back, a);
        }
        assert!(AlgorithmId::parse("gini").is_err());
    }

    #[test]
    fn all_expands_to_eight() {
        let list = AlgorithmId::parse_list(&["all".to_string()]).unwrap();
        assert_eq!(list.len(), 8);
        let list =
            AlgorithmId::parse_list(&["gini-features".into(), "gini-features".into()]).unwrap();
        assert_eq!(list.len(), 1);
    }

    #[test]
    fn spec_json_round_trips() {
        let spec = ExperimentSpec {
            schema: SPEC_SCHEMA.to_string(),
            source: DataSource::Synthetic(SyntheticSource {
                classes: 2,
                dims: 4,
                noise_dims: 0,
                train_sizes: vec![1000],
                test_size: 2000,
                replicates: 30,
                flip_fraction: 0.01,
                class_sep: 1.0,
                dump_csv: None,
            }),
            algorithms: AlgorithmId::ALL.to_vec(),
            scaling: ScalingMode::On,
            seed: 42,
            output: None,
        };
        spec.validate().unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        let back: ExperimentSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn validation_rejects_degenerate_specs() {
        let mut spec = ExperimentSpec {
            schema: SPEC_SCHEMA.to_string(),
            source: DataSource::Csv(CsvSource {
                path: "x.csv".into(),
                label: "y".into(),
                has_header: true,
                eval: EvalMode::Cv { reps: 0, folds: 10 },
            }),
            algorithms: vec![AlgorithmId::GiniFeatures],
            scaling: ScalingMode::Best,
            seed: 0,
            output: None,
        };
        assert!(spec.validate().is_err());
        spec.source = DataSource::Csv(CsvSource {
            path: "x.csv".into(),
            label: "y".into(),
            has_header: true,
            eval: EvalMode::Holdout { fraction: 1.5 },
        });
        assert!(spec.validate().is_err());
        spec.algorithms.clear();
        assert!(spec.validate().is_err());
    }
}
