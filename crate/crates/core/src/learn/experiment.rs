//! k-fold classification experiment with paired random baselines.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::baseline::{uniform_random_baseline, weighted_random_baseline};
use super::metrics::{accuracy, roc_auc_ovr_macro, ConfusionMatrix};
use super::split::stratified_kfold;
use super::tree::{DecisionTree, TreeParams};
use super::{LabeledVector, LearnError, DEFAULT_K_FOLDS};
use crate::features::FeatureDataset;
use crate::rng::{derive_seed, seeded};

pub const TREE: &str = "decision_tree";
pub const WEIGHTED_GUESS: &str = "weighted_guess";
pub const RANDOM_GUESS: &str = "random_guess";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassificationConfig {
    pub k_folds: usize,
    pub seed: u64,
    pub tree: TreeParams,
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        Self {
            k_folds: DEFAULT_K_FOLDS,
            seed: 0,
            tree: TreeParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldMetrics {
    pub accuracy: f64,
    pub roc_auc: f64,
    pub macro_f1: f64,
}

/// Mean and population standard deviation across folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub model: String,
    pub folds: Vec<FoldMetrics>,
    pub accuracy: MeanStd,
    pub roc_auc: MeanStd,
    pub macro_f1: MeanStd,
    /// Summed over folds; rows and columns follow [`ClassificationReport::classes`].
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub class: String,
    pub trips: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub config: ClassificationConfig,
    /// Sorted by descending trip count, then id.
    pub classes: Vec<String>,
    pub class_trip_counts: Vec<usize>,
    pub models: Vec<ModelReport>,
    /// Per-class scores of the decision tree from its summed confusion matrix.
    pub per_class: Vec<ClassMetrics>,
}

impl ClassificationReport {
    pub fn model(&self, name: &str) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.model == name)
    }

    pub fn tree(&self) -> &ModelReport {
        self.model(TREE).expect("tree report is always present")
    }
}

struct FoldOutcome {
    truth: Vec<usize>,
    per_model: Vec<(Vec<usize>, Vec<Vec<f64>>)>,
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    rows: &[LabeledVector],
    y: &[usize],
    class_index: &HashMap<&str, usize>,
    n_classes: usize,
    train: &[usize],
    test: &[usize],
    config: &ClassificationConfig,
    fold: usize,
) -> Result<FoldOutcome, LearnError> {
    let train_rows: Vec<LabeledVector> = train.iter().map(|&i| rows[i].clone()).collect();
    let tree = DecisionTree::fit(&train_rows, config.tree)?;
    // Tree classes are ordered by training count; remap to the global order.
    let to_global: Vec<usize> = tree
        .classes()
        .iter()
        .map(|c| class_index[c.as_str()])
        .collect();

    let mut tree_labels = Vec::with_capacity(test.len());
    let mut tree_probs = Vec::with_capacity(test.len());
    for &i in test {
        let local = tree.predict_proba(&rows[i].x);
        let mut global = vec![0.0; n_classes];
        for (l, p) in local.iter().enumerate() {
            global[to_global[l]] = *p;
        }
        tree_labels.push(to_global[tree.predict_index(&rows[i].x)]);
        tree_probs.push(global);
    }

    let mut train_counts = vec![0; n_classes];
    for &i in train {
        train_counts[y[i]] += 1;
    }
    let mut rng = seeded(derive_seed(config.seed, "weighted_guess", &[fold as u64]));
    let weighted = weighted_random_baseline(&train_counts, test.len(), &mut rng);
    let mut rng = seeded(derive_seed(config.seed, "random_guess", &[fold as u64]));
    let uniform = uniform_random_baseline(n_classes, test.len(), &mut rng);

    Ok(FoldOutcome {
        truth: test.iter().map(|&i| y[i]).collect(),
        per_model: vec![
            (tree_labels, tree_probs),
            (weighted.labels, vec![weighted.probabilities; test.len()]),
            (uniform.labels, vec![uniform.probabilities; test.len()]),
        ],
    })
}

/// Trains and evaluates the tree and both baselines on identical stratified folds.
pub fn run_classification(
    dataset: &FeatureDataset,
    config: &ClassificationConfig,
) -> Result<ClassificationReport, LearnError> {
    let counts = dataset.user_counts();
    if counts.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    let classes: Vec<String> = counts.iter().map(|(c, _)| c.clone()).collect();
    let class_trip_counts: Vec<usize> = counts.iter().map(|(_, n)| *n).collect();
    let n_classes = classes.len();
    let class_index: HashMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();

    let rows: Vec<LabeledVector> = dataset
        .rows
        .iter()
        .map(|r| LabeledVector {
            label: r.user_id.clone(),
            x: r.features.to_array().to_vec(),
        })
        .collect();
    let y: Vec<usize> = rows.iter().map(|r| class_index[r.label.as_str()]).collect();
    let labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
    let folds = stratified_kfold(
        &labels,
        config.k_folds,
        derive_seed(config.seed, "folds", &[]),
    )?;

    let outcomes = (0..config.k_folds)
        .into_par_iter()
        .map(|f| {
            run_fold(
                &rows,
                &y,
                &class_index,
                n_classes,
                &folds.train_indices(f),
                &folds.test_indices(f),
                config,
                f,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut models = Vec::new();
    for (m, name) in [TREE, WEIGHTED_GUESS, RANDOM_GUESS].iter().enumerate() {
        let mut fold_metrics = Vec::new();
        let mut confusion = ConfusionMatrix::zeros(n_classes);
        for outcome in &outcomes {
            let (pred, probs) = &outcome.per_model[m];
            let fold_cm = ConfusionMatrix::from_predictions(&outcome.truth, pred, n_classes);
            fold_metrics.push(FoldMetrics {
                accuracy: accuracy(&outcome.truth, pred),
                roc_auc: roc_auc_ovr_macro(&outcome.truth, probs, n_classes)?,
                macro_f1: fold_cm.macro_f1(),
            });
            confusion.add(&fold_cm);
        }
        let pick = |f: fn(&FoldMetrics) -> f64| {
            MeanStd::of(&fold_metrics.iter().map(f).collect::<Vec<_>>())
        };
        models.push(ModelReport {
            model: name.to_string(),
            accuracy: pick(|m| m.accuracy),
            roc_auc: pick(|m| m.roc_auc),
            macro_f1: pick(|m| m.macro_f1),
            folds: fold_metrics,
            confusion,
        });
    }

    let per_class = classes
        .iter()
        .enumerate()
        .map(|(c, class)| {
            let s = models[0].confusion.class_scores(c);
            ClassMetrics {
                class: class.clone(),
                trips: class_trip_counts[c],
                precision: s.precision,
                recall: s.recall,
                f1: s.f1,
            }
        })
        .collect();

    Ok(ClassificationReport {
        config: *config,
        classes,
        class_trip_counts,
        models,
        per_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureRow, KinematicFeatures, N_FEATURES};
    use crate::ingest::Modality;

    fn dataset(per_user: &[(&str, usize, f64)]) -> FeatureDataset {
        let mut rows = Vec::new();
        for &(user, n, speed) in per_user {
            for i in 0..n {
                let mut v = [0.0; N_FEATURES];
                v[0] = 600.0;
                v[1] = speed + (i % 7) as f64 * 0.1;
                v[5] = speed * 0.5 + (i % 5) as f64 * 0.05;
                rows.push(FeatureRow {
                    user_id: user.into(),
                    modality: Modality::Walk,
                    features: KinematicFeatures::from_array(v),
                });
            }
        }
        FeatureDataset {
            rows,
            ..FeatureDataset::default()
        }
    }

    #[test]
    fn separable_users_are_classified() {
        let ds = dataset(&[("a", 40, 1.0), ("b", 35, 10.0), ("c", 31, 20.0)]);
        let report = run_classification(&ds, &ClassificationConfig::default()).unwrap();
        assert_eq!(report.classes, ["a", "b", "c"]);
        let tree = report.tree();
        assert_eq!(tree.accuracy.mean, 1.0);
        assert_eq!(tree.roc_auc.mean, 1.0);
        assert_eq!(tree.folds.len(), 5);
        assert_eq!(tree.confusion.total(), 106);
        for (row, n) in tree.confusion.counts.iter().zip(&report.class_trip_counts) {
            assert_eq!(row.iter().sum::<u64>(), *n as u64);
        }
        for name in [WEIGHTED_GUESS, RANDOM_GUESS] {
            let m = report.model(name).unwrap();
            assert_eq!(m.roc_auc.mean, 0.5);
            assert!(m.accuracy.mean < 0.7);
        }
    }

    #[test]
    fn confusion_trace_matches_fold_accuracy() {
        let ds = dataset(&[("a", 30, 1.0), ("b", 30, 1.2), ("c", 30, 1.1)]);
        let report = run_classification(
            &ds,
            &ClassificationConfig {
                seed: 9,
                ..Default::default()
            },
        )
        .unwrap();
        for m in &report.models {
            // Fold sizes are equal here, so the pooled accuracy equals the fold mean.
            assert!((m.confusion.accuracy() - m.accuracy.mean).abs() < 1e-12);
        }
    }

    #[test]
    fn reproducible() {
        let ds = dataset(&[("a", 30, 1.0), ("b", 33, 1.3), ("c", 36, 1.1)]);
        let cfg = ClassificationConfig {
            seed: 77,
            ..Default::default()
        };
        assert_eq!(
            run_classification(&ds, &cfg).unwrap(),
            run_classification(&ds, &cfg).unwrap()
        );
    }

    #[test]
    fn mean_std_is_population() {
        let m = MeanStd::of(&[1.0, 3.0]);
        assert_eq!((m.mean, m.std), (2.0, 1.0));
    }
}
