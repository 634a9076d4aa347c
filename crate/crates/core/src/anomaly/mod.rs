//! Anomaly-injection experiment: foreign trips are planted into one user's
//! trips, everything is scored with LOF, and the ranking is judged by PR-AUC.

mod experiment;
mod lof;
mod precision_recall;

use rand::seq::index::sample;
use serde::Serialize;
use thiserror::Error;

pub use experiment::{
    run_anomaly_experiment, AnomalyConfig, AnomalyReport, SummaryStats, TrialResult, UserSummary,
};
pub use lof::{lof_scores, DEFAULT_LOF_K};
pub use precision_recall::pr_auc;

use crate::features::{FeatureDataset, FeatureVector};
use crate::rng::seeded;

pub const DEFAULT_ANOMALY_RATE: f64 = 0.03;
pub const DEFAULT_TRIALS_PER_USER: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnomalyError {
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error("need {needed} donor trips for user {subject}, only {available} available")]
    InsufficientDonors {
        subject: String,
        needed: usize,
        available: usize,
    },
    #[error("LOF needs more than k = {k} rows, got {rows}")]
    TooFewRows { rows: usize, k: usize },
    #[error("ground truth has no positive rows")]
    NoPositives,
}

/// A subject user's trips plus sampled trips of other users.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectedDataset {
    pub subject: String,
    pub normal_rows: Vec<FeatureVector>,
    pub anomaly_rows: Vec<FeatureVector>,
    /// Donor user of each anomaly row.
    pub anomaly_sources: Vec<String>,
}

impl InjectedDataset {
    /// Normals first, then anomalies.
    pub fn vectors(&self) -> Vec<FeatureVector> {
        self.normal_rows
            .iter()
            .chain(&self.anomaly_rows)
            .copied()
            .collect()
    }

    /// `true` marks an injected (positive) row, aligned with [`Self::vectors`].
    pub fn ground_truth(&self) -> Vec<bool> {
        std::iter::repeat_n(false, self.normal_rows.len())
            .chain(std::iter::repeat_n(true, self.anomaly_rows.len()))
            .collect()
    }
}

/// `max(1, round(rate · n_normal))`.
pub fn anomaly_count(n_normal: usize, rate: f64) -> usize {
    ((rate * n_normal as f64).round() as usize).max(1)
}

/// Samples foreign trips uniformly without replacement from all other users' rows.
pub fn inject_anomalies(
    dataset: &FeatureDataset,
    subject: &str,
    rate: f64,
    seed: u64,
) -> Result<InjectedDataset, AnomalyError> {
    let (normal, donors): (Vec<_>, Vec<_>) =
        dataset.rows.iter().partition(|r| r.user_id == subject);
    if normal.is_empty() {
        return Err(AnomalyError::UnknownUser(subject.to_string()));
    }
    let needed = anomaly_count(normal.len(), rate);
    if donors.len() < needed {
        return Err(AnomalyError::InsufficientDonors {
            subject: subject.to_string(),
            needed,
            available: donors.len(),
        });
    }
    let mut rng = seeded(seed);
    let mut picked = sample(&mut rng, donors.len(), needed).into_vec();
    picked.sort_unstable();
    Ok(InjectedDataset {
        subject: subject.to_string(),
        normal_rows: normal.iter().map(|r| r.features.to_array()).collect(),
        anomaly_rows: picked
            .iter()
            .map(|&i| donors[i].features.to_array())
            .collect(),
        anomaly_sources: picked.iter().map(|&i| donors[i].user_id.clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Standardized<const D: usize> {
    pub rows: Vec<[f64; D]>,
    pub mean: [f64; D],
    pub std: [f64; D],
}

/// Column-wise z-scores with population std; zero-variance columns map to 0.
pub fn standardize<const D: usize>(rows: &[[f64; D]]) -> Standardized<D> {
    let n = rows.len() as f64;
    let mut mean = [0.0; D];
    let mut std = [0.0; D];
    for d in 0..D {
        mean[d] = rows.iter().map(|r| r[d]).sum::<f64>() / n;
        std[d] = (rows.iter().map(|r| (r[d] - mean[d]).powi(2)).sum::<f64>() / n).sqrt();
    }
    let scaled = rows
        .iter()
        .map(|r| {
            let mut z = [0.0; D];
            for d in 0..D {
                if std[d] > 0.0 {
                    z[d] = (r[d] - mean[d]) / std[d];
                }
            }
            z
        })
        .collect();
    Standardized {
        rows: scaled,
        mean,
        std,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureRow, KinematicFeatures, N_FEATURES};
    use crate::ingest::Modality;

    fn dataset(users: &[(&str, usize)]) -> FeatureDataset {
        let mut rows = Vec::new();
        for (u, &(user, n)) in users.iter().enumerate() {
            for i in 0..n {
                let mut v = [u as f64; N_FEATURES];
                v[0] = i as f64;
                rows.push(FeatureRow {
                    user_id: user.into(),
                    modality: Modality::Bus,
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
    fn anomaly_counts() {
        assert_eq!(anomaly_count(100, 0.03), 3);
        assert_eq!(anomaly_count(31, 0.03), 1);
        assert_eq!(anomaly_count(748, 0.03), 22);
        assert_eq!(anomaly_count(10, 0.03), 1);
    }

    #[test]
    fn injection_takes_only_foreign_rows() {
        let ds = dataset(&[("a", 100), ("b", 40), ("c", 40)]);
        let inj = inject_anomalies(&ds, "a", 0.03, 5).unwrap();
        assert_eq!(inj.normal_rows.len(), 100);
        assert_eq!(inj.anomaly_rows.len(), 3);
        assert!(inj.anomaly_sources.iter().all(|s| s != "a"));
        assert!(inj.anomaly_rows.iter().all(|r| r[1] != 0.0));
        assert_eq!(inj.ground_truth().iter().filter(|&&g| g).count(), 3);
        assert_eq!(inj.vectors().len(), 103);
        assert_eq!(inj, inject_anomalies(&ds, "a", 0.03, 5).unwrap());
    }

    #[test]
    fn injection_errors() {
        let ds = dataset(&[("a", 100), ("b", 2)]);
        assert!(matches!(
            inject_anomalies(&ds, "zzz", 0.03, 0),
            Err(AnomalyError::UnknownUser(_))
        ));
        assert!(matches!(
            inject_anomalies(&ds, "a", 0.03, 0),
            Err(AnomalyError::InsufficientDonors {
                needed: 3,
                available: 2,
                ..
            })
        ));
    }

    #[test]
    fn standardize_constant_column() {
        let s = standardize(&[[1.0, 5.0], [3.0, 5.0], [5.0, 5.0]]);
        assert_eq!(s.std[1], 0.0);
        assert!(s.rows.iter().all(|r| r[1] == 0.0));
        assert_eq!(s.mean, [3.0, 5.0]);
    }

    #[test]
    fn standardize_is_idempotent() {
        let raw: Vec<[f64; 3]> = (0..50)
            .map(|i| {
                let x = i as f64;
                [x * 3.0 - 7.0, (x * 0.37).sin() * 100.0, x * x]
            })
            .collect();
        let once = standardize(&raw);
        let twice = standardize(&once.rows);
        for (a, b) in once.rows.iter().zip(&twice.rows) {
            for d in 0..3 {
                assert!((a[d] - b[d]).abs() < 1e-12);
            }
        }
        // Naive recomputation of column moments.
        for d in 0..3 {
            let col: Vec<f64> = once.rows.iter().map(|r| r[d]).collect();
            let m = col.iter().sum::<f64>() / 50.0;
            let v = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 50.0;
            assert!(m.abs() < 1e-9 && (v.sqrt() - 1.0).abs() < 1e-9);
        }
    }
}
