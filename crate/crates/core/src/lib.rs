//! Kinematic trip features mined from GPS trajectories, with two experiments
//! built on them: user-wise trip classification with a decision tree and
//! detection of injected foreign trips with Local Outlier Factor.
//!
//! The crate is organised bottom-up:
//!
//! * [`geokinematics`]: haversine distance, speed and acceleration sequences.
//! * [`ingest`]: Geolife PLT and `labels.txt` parsing, trip assembly.
//! * [`features`]: the ten per-trip features, IQR and minimum-trip filters, CSV.
//! * [`learn`]: CART tree, stratified folds, baselines, metrics.
//! * [`anomaly`]: injection, standardisation, LOF, PR-AUC, trial runner.
//! * [`synth`]: synthetic corpora with known per-user kinematic profiles.
//! * [`pipeline`]: directory-to-dataset orchestration.

pub mod anomaly;
pub mod features;
pub mod geokinematics;
pub mod ingest;
pub mod learn;
pub mod pipeline;
pub mod rng;
pub mod synth;

pub use features::{FeatureDataset, FeatureRow, KinematicFeatures, PipelineConfig};
pub use geokinematics::GpsPoint;
pub use ingest::{Modality, Trip};
