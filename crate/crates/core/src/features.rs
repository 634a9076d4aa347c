//! Per-trip kinematic features, the pooled IQR outlier filter and the
//! minimum-trips-per-user filter.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geokinematics::{acceleration_sequence, speed_sequence, KinematicsError};
use crate::ingest::{Modality, Trip};

pub const N_FEATURES: usize = 10;

/// Column names, in feature-vector order, as written to the feature CSV.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "duration_s",
    "max_speed",
    "min_speed",
    "max_pos_accel",
    "min_neg_accel",
    "mean_speed",
    "mean_abs_accel",
    "std_speed",
    "std_accel",
    "std_abs_accel",
];

pub const DEFAULT_IQR_MULTIPLIER: f64 = 1.5;
pub const DEFAULT_MIN_TRIPS: usize = 30;

pub type FeatureVector = [f64; N_FEATURES];

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("empty input")]
    EmptyInput,
    #[error("feature csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("feature csv line {line}: {reason}")]
    BadRow { line: u64, reason: String },
}

/// The ten per-trip kinematic features. Speeds in m/s, accelerations in m/s².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicFeatures {
    pub duration: f64,
    pub max_speed: f64,
    pub min_speed: f64,
    pub max_pos_accel: f64,
    pub min_neg_accel: f64,
    pub mean_speed: f64,
    pub mean_abs_accel: f64,
    pub std_speed: f64,
    pub std_accel: f64,
    pub std_abs_accel: f64,
}

impl KinematicFeatures {
    pub fn to_array(&self) -> FeatureVector {
        [
            self.duration,
            self.max_speed,
            self.min_speed,
            self.max_pos_accel,
            self.min_neg_accel,
            self.mean_speed,
            self.mean_abs_accel,
            self.std_speed,
            self.std_accel,
            self.std_abs_accel,
        ]
    }

    pub fn from_array(v: FeatureVector) -> Self {
        Self {
            duration: v[0],
            max_speed: v[1],
            min_speed: v[2],
            max_pos_accel: v[3],
            min_neg_accel: v[4],
            mean_speed: v[5],
            mean_abs_accel: v[6],
            std_speed: v[7],
            std_accel: v[8],
            std_abs_accel: v[9],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub user_id: String,
    pub modality: Modality,
    pub features: KinematicFeatures,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeatureBounds {
    pub q1: f64,
    pub q3: f64,
    pub lower: f64,
    pub upper: f64,
}

impl FeatureBounds {
    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IqrBounds(pub [FeatureBounds; N_FEATURES]);

/// Trip counts for one user before and after the minimum-trips filter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserCount {
    pub user_id: String,
    pub before: usize,
    pub after: usize,
}

/// How many trips each pipeline stage removed.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Provenance {
    pub trips_in: usize,
    pub too_few_points: usize,
    pub duplicate_timestamps: usize,
    pub iqr_outliers: usize,
    /// A trip outside several bounds counts once per offending feature here.
    pub iqr_drops_per_feature: BTreeMap<String, usize>,
    pub below_threshold: usize,
    pub users: Vec<UserCount>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureDataset {
    pub rows: Vec<FeatureRow>,
    pub provenance: Provenance,
}

impl FeatureDataset {
    /// `(user_id, trip count)` sorted by descending count, then id.
    pub fn user_counts(&self) -> Vec<(String, usize)> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for row in &self.rows {
            *counts.entry(&row.user_id).or_default() += 1;
        }
        let mut out: Vec<(String, usize)> = counts
            .into_iter()
            .map(|(u, c)| (u.to_string(), c))
            .collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out
    }

    pub fn n_users(&self) -> usize {
        self.user_counts().len()
    }

    /// Mean and population standard deviation of every feature column.
    pub fn column_stats(&self) -> Vec<ColumnStats> {
        FEATURE_NAMES
            .iter()
            .enumerate()
            .map(|(f, name)| {
                let column: Vec<f64> = self.rows.iter().map(|r| r.features.to_array()[f]).collect();
                let (m, s) = if column.is_empty() {
                    (f64::NAN, f64::NAN)
                } else {
                    let m = mean(&column);
                    (m, pop_std(&column, m))
                };
                ColumnStats {
                    feature: name.to_string(),
                    mean: m,
                    std: s,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnStats {
    pub feature: String,
    pub mean: f64,
    pub std: f64,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation around a precomputed mean.
fn pop_std(values: &[f64], mean: f64) -> f64 {
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

fn max(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Computes the ten features for one trip. Needs at least three fixes.
pub fn extract_features(trip: &Trip) -> Result<KinematicFeatures, KinematicsError> {
    let pts = &trip.points;
    if pts.len() < 3 {
        return Err(KinematicsError::TooFewPoints {
            required: 3,
            got: pts.len(),
        });
    }
    let speed_samples = speed_sequence(pts)?;
    let speeds: Vec<f64> = speed_samples.iter().map(|s| s.speed).collect();
    let accels: Vec<f64> = acceleration_sequence(&speed_samples)?
        .iter()
        .map(|a| a.acceleration)
        .collect();
    let abs_accels: Vec<f64> = accels.iter().map(|a| a.abs()).collect();

    let mean_speed = mean(&speeds);
    let mean_accel = mean(&accels);
    let mean_abs_accel = mean(&abs_accels);
    Ok(KinematicFeatures {
        duration: pts[pts.len() - 1].timestamp - pts[0].timestamp,
        max_speed: max(&speeds),
        min_speed: min(&speeds),
        max_pos_accel: max(&accels),
        min_neg_accel: min(&accels),
        mean_speed,
        mean_abs_accel,
        std_speed: pop_std(&speeds, mean_speed),
        std_accel: pop_std(&accels, mean_accel),
        std_abs_accel: pop_std(&abs_accels, mean_abs_accel),
    })
}

/// Linearly interpolated quantile between order statistics.
pub fn quantile(values: &[f64], q: f64) -> Result<f64, FeatureError> {
    if values.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    match sorted.get(lo + 1) {
        Some(&next) => sorted[lo] + (h - lo as f64) * (next - sorted[lo]),
        None => sorted[lo],
    }
}

/// Per-feature `[q1 - m·IQR, q3 + m·IQR]` over all rows pooled together.
pub fn compute_iqr_bounds(rows: &[FeatureRow], multiplier: f64) -> Result<IqrBounds, FeatureError> {
    if rows.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    let mut bounds = [FeatureBounds {
        q1: 0.0,
        q3: 0.0,
        lower: 0.0,
        upper: 0.0,
    }; N_FEATURES];
    for (f, b) in bounds.iter_mut().enumerate() {
        let mut column: Vec<f64> = rows.iter().map(|r| r.features.to_array()[f]).collect();
        column.sort_by(f64::total_cmp);
        let q1 = quantile_sorted(&column, 0.25);
        let q3 = quantile_sorted(&column, 0.75);
        let iqr = q3 - q1;
        *b = FeatureBounds {
            q1,
            q3,
            lower: q1 - multiplier * iqr,
            upper: q3 + multiplier * iqr,
        };
    }
    Ok(IqrBounds(bounds))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierFilterResult {
    pub kept: Vec<FeatureRow>,
    pub dropped: usize,
    pub drops_per_feature: [usize; N_FEATURES],
}

/// Keeps rows whose every feature lies inside its closed bounds.
pub fn filter_outlier_trips(rows: Vec<FeatureRow>, bounds: &IqrBounds) -> OutlierFilterResult {
    let mut drops_per_feature = [0; N_FEATURES];
    let mut kept = Vec::with_capacity(rows.len());
    let mut dropped = 0;
    for row in rows {
        let values = row.features.to_array();
        let mut inside = true;
        for (f, b) in bounds.0.iter().enumerate() {
            if !b.contains(values[f]) {
                drops_per_feature[f] += 1;
                inside = false;
            }
        }
        if inside {
            kept.push(row);
        } else {
            dropped += 1;
        }
    }
    OutlierFilterResult {
        kept,
        dropped,
        drops_per_feature,
    }
}

/// Keeps only users with at least `min_trips` rows.
pub fn filter_users(rows: Vec<FeatureRow>, min_trips: usize) -> FeatureDataset {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for row in &rows {
        *counts.entry(row.user_id.clone()).or_default() += 1;
    }
    let before = rows.len();
    let kept: Vec<FeatureRow> = rows
        .into_iter()
        .filter(|r| counts[&r.user_id] >= min_trips)
        .collect();
    let users = counts
        .into_iter()
        .map(|(user_id, n)| UserCount {
            user_id,
            before: n,
            after: if n >= min_trips { n } else { 0 },
        })
        .collect();
    FeatureDataset {
        provenance: Provenance {
            below_threshold: before - kept.len(),
            users,
            ..Provenance::default()
        },
        rows: kept,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub iqr_multiplier: f64,
    pub min_trips: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            iqr_multiplier: DEFAULT_IQR_MULTIPLIER,
            min_trips: DEFAULT_MIN_TRIPS,
        }
    }
}

/// extract → IQR filter → user threshold, recording what each stage removed.
pub fn build_dataset(trips: &[Trip], config: &PipelineConfig) -> FeatureDataset {
    let extracted: Vec<Result<FeatureRow, KinematicsError>> = trips
        .par_iter()
        .map(|trip| {
            extract_features(trip).map(|features| FeatureRow {
                user_id: trip.user_id.clone(),
                modality: trip.modality.clone(),
                features,
            })
        })
        .collect();

    let mut prov = Provenance {
        trips_in: trips.len(),
        ..Provenance::default()
    };
    let mut rows = Vec::with_capacity(extracted.len());
    for r in extracted {
        match r {
            Ok(row) => rows.push(row),
            Err(KinematicsError::DuplicateTimestamp { .. }) => prov.duplicate_timestamps += 1,
            Err(_) => prov.too_few_points += 1,
        }
    }

    let rows = match compute_iqr_bounds(&rows, config.iqr_multiplier) {
        Ok(bounds) => {
            let filtered = filter_outlier_trips(rows, &bounds);
            prov.iqr_outliers = filtered.dropped;
            prov.iqr_drops_per_feature = FEATURE_NAMES
                .iter()
                .zip(filtered.drops_per_feature)
                .map(|(name, n)| (name.to_string(), n))
                .collect();
            filtered.kept
        }
        Err(_) => rows,
    };

    let mut dataset = filter_users(rows, config.min_trips);
    prov.below_threshold = dataset.provenance.below_threshold;
    prov.users = std::mem::take(&mut dataset.provenance.users);
    dataset.provenance = prov;
    dataset
}

pub const CSV_HEADER: [&str; 2 + N_FEATURES] = [
    "user_id",
    "modality",
    "duration_s",
    "max_speed",
    "min_speed",
    "max_pos_accel",
    "min_neg_accel",
    "mean_speed",
    "mean_abs_accel",
    "std_speed",
    "std_accel",
    "std_abs_accel",
];

/// Writes rows as CSV. `f64` display is shortest round-trip, so values reload exactly.
pub fn write_feature_csv<W: Write>(rows: &[FeatureRow], out: W) -> Result<(), FeatureError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        let mut record = vec![row.user_id.clone(), row.modality.to_string()];
        record.extend(row.features.to_array().iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_feature_csv<R: Read>(input: R) -> Result<Vec<FeatureRow>, FeatureError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(FeatureError::BadRow {
            line: 1,
            reason: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut values: FeatureVector = [0.0; N_FEATURES];
        for (f, v) in values.iter_mut().enumerate() {
            let raw = &record[2 + f];
            *v = raw.parse().map_err(|_| FeatureError::BadRow {
                line,
                reason: format!("bad {} value {raw:?}", FEATURE_NAMES[f]),
            })?;
            if !v.is_finite() {
                return Err(FeatureError::BadRow {
                    line,
                    reason: format!("non-finite {}", FEATURE_NAMES[f]),
                });
            }
        }
        rows.push(FeatureRow {
            user_id: record[0].to_string(),
            modality: record[1].parse().unwrap_or_else(|never| match never {}),
            features: KinematicFeatures::from_array(values),
        });
    }
    Ok(rows)
}
