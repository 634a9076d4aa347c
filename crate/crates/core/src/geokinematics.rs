//! Great-circle distance and the per-interval speed / acceleration sequences
//! derived from a time-ordered list of GPS fixes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius in meters used for every distance computation.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("need at least {required} samples, got {got}")]
    TooFewPoints { required: usize, got: usize },
    #[error("non-increasing timestamp at sample {index}")]
    DuplicateTimestamp { index: usize },
    #[error(
        "invalid coordinate: latitude {latitude}, longitude {longitude}, timestamp {timestamp}"
    )]
    InvalidPoint {
        latitude: f64,
        longitude: f64,
        timestamp: f64,
    },
}

/// One timestamped fix. `timestamp` is seconds since the Unix epoch (UTC).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpsPoint {
    pub timestamp: f64,
    pub latitude: f64,
    pub longitude: f64,
}

impl GpsPoint {
    /// Builds a point, rejecting out-of-range coordinates and non-finite values.
    pub fn new(timestamp: f64, latitude: f64, longitude: f64) -> Result<Self, KinematicsError> {
        let valid = timestamp.is_finite()
            && (-90.0..=90.0).contains(&latitude)
            && (-180.0..=180.0).contains(&longitude);
        if valid {
            Ok(Self {
                timestamp,
                latitude,
                longitude,
            })
        } else {
            Err(KinematicsError::InvalidPoint {
                latitude,
                longitude,
                timestamp,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedSample {
    pub interval_end_time: f64,
    /// m/s
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelerationSample {
    pub interval_end_time: f64,
    /// m/s²
    pub acceleration: f64,
}

/// Haversine distance in meters on a sphere of radius [`EARTH_RADIUS_M`].
pub fn haversine_distance(a: &GpsPoint, b: &GpsPoint) -> f64 {
    let lat_a = a.latitude.to_radians();
    let lat_b = b.latitude.to_radians();
    let half_dlat = (b.latitude - a.latitude).to_radians() / 2.0;
    let half_dlon = (b.longitude - a.longitude).to_radians() / 2.0;

    let sin_lat = half_dlat.sin();
    let sin_lon = half_dlon.sin();
    // sin² is even, so swapping a and b yields bit-identical terms.
    let h = sin_lat * sin_lat + (lat_a.cos() * lat_b.cos()) * (sin_lon * sin_lon);
    2.0 * EARTH_RADIUS_M * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Average speed over each consecutive pair of fixes.
///
/// Returns `n - 1` samples; sample `i` covers `points[i]..points[i + 1]` and is
/// stamped with the end time of that interval.
pub fn speed_sequence(points: &[GpsPoint]) -> Result<Vec<SpeedSample>, KinematicsError> {
    if points.len() < 2 {
        return Err(KinematicsError::TooFewPoints {
            required: 2,
            got: points.len(),
        });
    }
    points
        .windows(2)
        .enumerate()
        .map(|(i, pair)| {
            let dt = pair[1].timestamp - pair[0].timestamp;
            if dt <= 0.0 {
                return Err(KinematicsError::DuplicateTimestamp { index: i + 1 });
            }
            Ok(SpeedSample {
                interval_end_time: pair[1].timestamp,
                speed: haversine_distance(&pair[0], &pair[1]) / dt,
            })
        })
        .collect()
}

/// Rate of change between consecutive speed samples, divided by the gap
/// between their interval end times.
pub fn acceleration_sequence(
    speeds: &[SpeedSample],
) -> Result<Vec<AccelerationSample>, KinematicsError> {
    if speeds.len() < 2 {
        return Err(KinematicsError::TooFewPoints {
            required: 2,
            got: speeds.len(),
        });
    }
    speeds
        .windows(2)
        .enumerate()
        .map(|(i, pair)| {
            let dt = pair[1].interval_end_time - pair[0].interval_end_time;
            if dt <= 0.0 {
                return Err(KinematicsError::DuplicateTimestamp { index: i + 1 });
            }
            Ok(AccelerationSample {
                interval_end_time: pair[1].interval_end_time,
                acceleration: (pair[1].speed - pair[0].speed) / dt,
            })
        })
        .collect()
}
