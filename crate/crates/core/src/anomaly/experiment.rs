use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    inject_anomalies, lof_scores, pr_auc, standardize, AnomalyError, DEFAULT_ANOMALY_RATE,
    DEFAULT_LOF_K, DEFAULT_TRIALS_PER_USER,
};
use crate::features::{quantile, FeatureDataset};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnomalyConfig {
    pub trials_per_user: usize,
    pub rate: f64,
    pub lof_k: usize,
    pub seed: u64,
}

impl Default for AnomalyConfig {
    fn default() -> Self {
        Self {
            trials_per_user: DEFAULT_TRIALS_PER_USER,
            rate: DEFAULT_ANOMALY_RATE,
            lof_k: DEFAULT_LOF_K,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub subject_user: String,
    pub trial: usize,
    pub seed: u64,
    pub n_normal: usize,
    pub n_anomaly: usize,
    pub pr_auc_lof: f64,
    pub pr_auc_random: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl SummaryStats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        Self {
            mean,
            std,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            median: quantile(values, 0.5).unwrap_or(f64::NAN),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserSummary {
    pub user: String,
    pub trials: usize,
    pub mean_pr_auc_lof: f64,
    pub max_pr_auc_lof: f64,
    pub mean_pr_auc_random: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnomalyReport {
    pub config: AnomalyConfig,
    pub trials: Vec<TrialResult>,
    pub lof: SummaryStats,
    pub random: SummaryStats,
    /// Ordered by descending mean LOF PR-AUC.
    pub per_user: Vec<UserSummary>,
}

fn run_trial(
    dataset: &FeatureDataset,
    subject: &str,
    trial: usize,
    seed: u64,
    config: &AnomalyConfig,
) -> Result<TrialResult, AnomalyError> {
    let injected = inject_anomalies(
        dataset,
        subject,
        config.rate,
        derive_seed(seed, "inject", &[]),
    )?;
    let truth = injected.ground_truth();
    let z = standardize(&injected.vectors());
    let lof = lof_scores(&z.rows, config.lof_k)?;

    let mut rng = seeded(derive_seed(seed, "random_scores", &[]));
    let random: Vec<f64> = (0..truth.len()).map(|_| rng.random::<f64>()).collect();

    Ok(TrialResult {
        subject_user: subject.to_string(),
        trial,
        seed,
        n_normal: injected.normal_rows.len(),
        n_anomaly: injected.anomaly_rows.len(),
        pr_auc_lof: pr_auc(&truth, &lof)?,
        pr_auc_random: pr_auc(&truth, &random)?,
    })
}

/// Every user serves as the normal class for `trials_per_user` independent injections.
pub fn run_anomaly_experiment(
    dataset: &FeatureDataset,
    config: &AnomalyConfig,
) -> Result<AnomalyReport, AnomalyError> {
    let mut users: Vec<String> = dataset.user_counts().into_iter().map(|(u, _)| u).collect();
    users.sort();

    let jobs: Vec<(usize, usize)> = (0..users.len())
        .flat_map(|u| (0..config.trials_per_user).map(move |t| (u, t)))
        .collect();
    let trials = jobs
        .par_iter()
        .map(|&(u, t)| {
            let seed = derive_seed(config.seed, "anomaly_trial", &[u as u64, t as u64]);
            run_trial(dataset, &users[u], t, seed, config)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let lof: Vec<f64> = trials.iter().map(|t| t.pr_auc_lof).collect();
    let random: Vec<f64> = trials.iter().map(|t| t.pr_auc_random).collect();

    let mut per_user: Vec<UserSummary> = users
        .iter()
        .map(|user| {
            let mine: Vec<&TrialResult> =
                trials.iter().filter(|t| &t.subject_user == user).collect();
            let n = mine.len() as f64;
            UserSummary {
                user: user.clone(),
                trials: mine.len(),
                mean_pr_auc_lof: mine.iter().map(|t| t.pr_auc_lof).sum::<f64>() / n,
                max_pr_auc_lof: mine
                    .iter()
                    .map(|t| t.pr_auc_lof)
                    .fold(f64::NEG_INFINITY, f64::max),
                mean_pr_auc_random: mine.iter().map(|t| t.pr_auc_random).sum::<f64>() / n,
            }
        })
        .collect();
    per_user.sort_by(|a, b| {
        b.mean_pr_auc_lof
            .total_cmp(&a.mean_pr_auc_lof)
            .then_with(|| a.user.cmp(&b.user))
    });

    Ok(AnomalyReport {
        config: *config,
        lof: SummaryStats::of(&lof),
        random: SummaryStats::of(&random),
        trials,
        per_user,
    })
}
