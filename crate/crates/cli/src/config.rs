use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};
use trajkin::anomaly::{DEFAULT_ANOMALY_RATE, DEFAULT_LOF_K, DEFAULT_TRIALS_PER_USER};
use trajkin::features::{DEFAULT_IQR_MULTIPLIER, DEFAULT_MIN_TRIPS};
use trajkin::learn::DEFAULT_K_FOLDS;

use crate::Failure;

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML file with any of the settings below; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Geolife-layout dataset root (contains Data/)
    #[arg(long)]
    pub root: Option<PathBuf>,
    /// Feature CSV produced by `extract` (default: <out>/features.csv)
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub k_folds: Option<usize>,
    #[arg(long)]
    pub min_trips: Option<usize>,
    #[arg(long)]
    pub iqr_mult: Option<f64>,
    /// Injected anomalies as a fraction of the subject's trips
    #[arg(long)]
    pub rate: Option<f64>,
    /// Anomaly trials per user
    #[arg(long)]
    pub trials: Option<usize>,
    /// LOF neighbour count
    #[arg(long)]
    pub lof_k: Option<usize>,
    /// Synthetic user profiles (TOML with [[profiles]] tables, or JSON array)
    #[arg(long)]
    pub profiles: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    root: Option<PathBuf>,
    features: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    k_folds: Option<usize>,
    min_trips: Option<usize>,
    iqr_mult: Option<f64>,
    rate: Option<f64>,
    trials: Option<usize>,
    lof_k: Option<usize>,
    profiles: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub root: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub k_folds: usize,
    pub min_trips: usize,
    pub iqr_multiplier: f64,
    pub anomaly_rate: f64,
    pub trials_per_user: usize,
    pub lof_k: usize,
    pub profiles: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(args: &RunArgs) -> Result<Self, Failure> {
        let file = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))
                    .map_err(Failure::Input)?;
                toml::from_str::<FileConfig>(&text)
                    .with_context(|| format!("parsing config {}", path.display()))
                    .map_err(Failure::Invalid)?
            }
            None => FileConfig::default(),
        };
        let config = Self {
            root: args.root.clone().or(file.root),
            features: args.features.clone().or(file.features),
            out: args
                .out
                .clone()
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from("out")),
            seed: args.seed.or(file.seed).unwrap_or(0),
            k_folds: args.k_folds.or(file.k_folds).unwrap_or(DEFAULT_K_FOLDS),
            min_trips: args
                .min_trips
                .or(file.min_trips)
                .unwrap_or(DEFAULT_MIN_TRIPS),
            iqr_multiplier: args
                .iqr_mult
                .or(file.iqr_mult)
                .unwrap_or(DEFAULT_IQR_MULTIPLIER),
            anomaly_rate: args.rate.or(file.rate).unwrap_or(DEFAULT_ANOMALY_RATE),
            trials_per_user: args
                .trials
                .or(file.trials)
                .unwrap_or(DEFAULT_TRIALS_PER_USER),
            lof_k: args.lof_k.or(file.lof_k).unwrap_or(DEFAULT_LOF_K),
            profiles: args.profiles.clone().or(file.profiles),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), Failure> {
        let invalid = |msg: String| Err(Failure::Invalid(anyhow::anyhow!(msg)));
        for (name, v) in [
            ("k-folds", self.k_folds),
            ("min-trips", self.min_trips),
            ("trials", self.trials_per_user),
            ("lof-k", self.lof_k),
        ] {
            if v == 0 {
                return invalid(format!("--{name} must be positive"));
            }
        }
        if self.k_folds < 2 {
            return invalid("--k-folds must be at least 2".into());
        }
        if !(self.anomaly_rate > 0.0 && self.anomaly_rate < 1.0) {
            return invalid(format!(
                "--rate must lie in (0, 1), got {}",
                self.anomaly_rate
            ));
        }
        if !(self.iqr_multiplier > 0.0 && self.iqr_multiplier.is_finite()) {
            return invalid(format!(
                "--iqr-mult must be positive, got {}",
                self.iqr_multiplier
            ));
        }
        Ok(())
    }

    pub fn features_path(&self) -> PathBuf {
        self.features
            .clone()
            .unwrap_or_else(|| self.out.join("features.csv"))
    }
}

pub fn require<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    value
        .as_deref()
        .ok_or_else(|| Failure::Input(anyhow::anyhow!("--{flag} is required")))
}
