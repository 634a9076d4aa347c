//! Dataset directory to filtered feature rows, the full extraction chain.

use std::path::Path;

use serde::Serialize;

use crate::features::{build_dataset, FeatureDataset, PipelineConfig};
use crate::ingest::{assemble_trips, load_dataset, IngestError};

/// Loader-level counts that precede feature extraction.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestSummary {
    pub users_loaded: usize,
    pub users_without_labels: Vec<String>,
    pub inverted_labels_dropped: usize,
    pub labels_without_points: usize,
    pub trips_assembled: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractOutcome {
    pub ingest: IngestSummary,
    pub dataset: FeatureDataset,
}

/// load → assemble → extract → IQR filter → user filter.
pub fn extract_from_root(
    root: &Path,
    config: &PipelineConfig,
) -> Result<ExtractOutcome, IngestError> {
    let loaded = load_dataset(root)?;
    let mut ingest = IngestSummary {
        users_loaded: loaded.archives.len(),
        users_without_labels: loaded.skipped_users,
        inverted_labels_dropped: loaded.dropped_inverted_labels,
        ..IngestSummary::default()
    };
    let mut trips = Vec::new();
    for archive in &loaded.archives {
        let assembled = assemble_trips(archive);
        ingest.labels_without_points += assembled.skipped_labels;
        trips.extend(assembled.trips);
    }
    ingest.trips_assembled = trips.len();
    let dataset = build_dataset(&trips, config);
    Ok(ExtractOutcome { ingest, dataset })
}
