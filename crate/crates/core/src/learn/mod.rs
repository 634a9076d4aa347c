//! User-wise trip classification: CART tree, stratified folds, random
//! baselines and the metric suite.

mod baseline;
mod experiment;
mod metrics;
mod split;
mod tree;

use thiserror::Error;

pub use baseline::{uniform_random_baseline, weighted_random_baseline, BaselinePredictions};
pub use experiment::{
    run_classification, ClassMetrics, ClassificationConfig, ClassificationReport, FoldMetrics,
    MeanStd, ModelReport, RANDOM_GUESS, TREE, WEIGHTED_GUESS,
};
pub use metrics::{
    accuracy, binary_roc_auc, macro_f1, roc_auc_ovr_macro, ClassScores, ConfusionMatrix,
};
pub use split::{stratified_kfold, FoldAssignment};
pub use tree::{DecisionTree, TreeNode, TreeParams};

pub const DEFAULT_K_FOLDS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("feature vector has {got} components, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("class {class} has {count} rows, fewer than {k} folds")]
    ClassTooSmall {
        class: String,
        count: usize,
        k: usize,
    },
    #[error("need at least 2 folds, got {0}")]
    InvalidFoldCount(usize),
    #[error("{0} is undefined for these labels")]
    UndefinedMetric(&'static str),
}

/// A training or test example: class label plus feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVector {
    pub label: String,
    pub x: Vec<f64>,
}
