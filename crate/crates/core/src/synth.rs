//! Synthetic trips with controllable per-user kinematic profiles.
//!
//! Motion is one-dimensional along a great circle. Speed performs a
//! mean-reverting random walk around a per-trip cruise speed, advanced in
//! sub-steps of at most one second, so changing the sampling period only
//! changes which instants are observed, not the underlying motion.

use std::fs;
use std::io;
use std::path::Path;

use chrono::DateTime;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geokinematics::{GpsPoint, EARTH_RADIUS_M};
use crate::ingest::{write_labels, write_plt, Modality, Trip, TripLabel};
use crate::rng::{derive_seed, seeded, ExperimentRng};

/// Fraction of the gap to the cruise speed recovered per simulation step.
const MEAN_REVERSION: f64 = 0.2;
const ORIGIN_LAT: f64 = 39.9;
const ORIGIN_LON: f64 = 116.4;
/// 2008-01-01T00:00:00Z
const EPOCH_START: i64 = 1_199_145_600;

fn default_modality() -> String {
    "car".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    /// m/s
    pub mean_cruise_speed: f64,
    /// Std of the per-trip cruise speed, m/s.
    pub speed_jitter: f64,
    /// m/s²; the speed walk has step std `accel_scale · step`.
    pub accel_scale: f64,
    pub trips: usize,
    pub points_per_trip: usize,
    /// Seconds between emitted fixes.
    pub sampling_period: f64,
    /// Isotropic position noise, meters.
    pub gps_noise_std: f64,
    #[serde(default = "default_modality")]
    pub modality: String,
}

impl UserProfile {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("mean_cruise_speed", self.mean_cruise_speed),
            ("sampling_period", self.sampling_period),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!(
                    "{}: {name} must be positive, got {v}",
                    self.user_id
                ));
            }
        }
        let nonneg = [
            ("speed_jitter", self.speed_jitter),
            ("accel_scale", self.accel_scale),
            ("gps_noise_std", self.gps_noise_std),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{}: {name} must be >= 0, got {v}", self.user_id));
            }
        }
        if self.points_per_trip < 3 {
            return Err(format!("{}: points_per_trip must be >= 3", self.user_id));
        }
        if self.trips == 0 {
            return Err(format!("{}: trips must be positive", self.user_id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub trips: Vec<Trip>,
    pub profiles: Vec<UserProfile>,
}

fn destination(lat: f64, lon: f64, bearing: f64, distance: f64) -> (f64, f64) {
    let (phi1, lambda1) = (lat.to_radians(), lon.to_radians());
    let delta = distance / EARTH_RADIUS_M;
    let phi2 = (phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * bearing.cos()).asin();
    let lambda2 = lambda1
        + (bearing.sin() * delta.sin() * phi1.cos()).atan2(delta.cos() - phi1.sin() * phi2.sin());
    let lon2 = (lambda2.to_degrees() + 540.0).rem_euclid(360.0) - 180.0;
    (phi2.to_degrees(), lon2)
}

fn normal(rng: &mut ExperimentRng) -> f64 {
    rng.sample(StandardNormal)
}

fn trip_starting_at(profile: &UserProfile, start: f64, seed: u64) -> Trip {
    let mut motion = seeded(derive_seed(seed, "motion", &[]));
    let mut noise = seeded(derive_seed(seed, "gps_noise", &[]));

    let cruise = (profile.mean_cruise_speed + profile.speed_jitter * normal(&mut motion)).max(0.0);
    let origin_lat = ORIGIN_LAT + motion.random_range(-0.2..0.2);
    let origin_lon = ORIGIN_LON + motion.random_range(-0.2..0.2);
    let bearing = motion.random_range(0.0..std::f64::consts::TAU);

    let substeps = profile.sampling_period.round().max(1.0) as usize;
    let step = profile.sampling_period / substeps as f64;
    let step_std = profile.accel_scale * step;

    let mut speed = cruise;
    let mut travelled = 0.0;
    let mut points = Vec::with_capacity(profile.points_per_trip);
    for i in 0..profile.points_per_trip {
        if i > 0 {
            for _ in 0..substeps {
                travelled += speed * step;
                speed += MEAN_REVERSION * (cruise - speed) + step_std * normal(&mut motion);
                speed = speed.max(0.0);
            }
        }
        let (mut lat, mut lon) = destination(origin_lat, origin_lon, bearing, travelled);
        if profile.gps_noise_std > 0.0 {
            let north = profile.gps_noise_std * normal(&mut noise);
            let east = profile.gps_noise_std * normal(&mut noise);
            lat += (north / EARTH_RADIUS_M).to_degrees();
            lon += (east / (EARTH_RADIUS_M * lat.to_radians().cos())).to_degrees();
        }
        let t = start + i as f64 * profile.sampling_period;
        points.push(GpsPoint {
            timestamp: t,
            latitude: lat.clamp(-90.0, 90.0),
            longitude: lon,
        });
    }
    Trip {
        user_id: profile.user_id.clone(),
        modality: profile
            .modality
            .parse()
            .unwrap_or_else(|never| match never {}),
        points,
    }
}

/// One trip drawn from `profile`, starting at a seed-chosen whole second in 2008–2011.
pub fn generate_trip(profile: &UserProfile, seed: u64) -> Trip {
    let mut rng = seeded(derive_seed(seed, "start", &[]));
    let start = (EPOCH_START + rng.random_range(0..4 * 365 * 86_400)) as f64;
    trip_starting_at(profile, start, seed)
}

/// Trips for every profile. Each user's trips are laid out back to back in
/// time with at least an hour between them.
pub fn generate_corpus(profiles: &[UserProfile], seed: u64) -> SyntheticCorpus {
    let mut trips = Vec::new();
    for (u, profile) in profiles.iter().enumerate() {
        let mut gaps = seeded(derive_seed(seed, "schedule", &[u as u64]));
        let mut start = (EPOCH_START + gaps.random_range(0..86_400)) as f64;
        for t in 0..profile.trips {
            let trip_seed = derive_seed(seed, "trip", &[u as u64, t as u64]);
            let trip = trip_starting_at(profile, start, trip_seed);
            let end = trip.points.last().map_or(start, |p| p.timestamp);
            start = (end + 3600.0 + gaps.random_range(0..7200) as f64).ceil();
            trips.push(trip);
        }
    }
    SyntheticCorpus {
        trips,
        profiles: profiles.to_vec(),
    }
}

fn plt_file_name(timestamp: f64) -> String {
    DateTime::from_timestamp(timestamp.floor() as i64, 0)
        .unwrap_or_default()
        .format("%Y%m%d%H%M%S.plt")
        .to_string()
}

/// Writes the corpus in Geolife layout: one PLT file per trip plus a
/// `labels.txt` per user covering each trip's first to last fix.
pub fn write_corpus(corpus: &SyntheticCorpus, root: &Path) -> io::Result<()> {
    let data = root.join("Data");
    for profile in &corpus.profiles {
        let user_dir = data.join(&profile.user_id);
        let traj_dir = user_dir.join("Trajectory");
        fs::create_dir_all(&traj_dir)?;
        let mut labels = Vec::new();
        for trip in corpus.trips.iter().filter(|t| t.user_id == profile.user_id) {
            let (first, last) = match (trip.points.first(), trip.points.last()) {
                (Some(f), Some(l)) => (f.timestamp, l.timestamp),
                _ => continue,
            };
            fs::write(traj_dir.join(plt_file_name(first)), write_plt(&trip.points))?;
            labels.push(TripLabel {
                start_time: first.floor(),
                end_time: last.floor(),
                modality: trip.modality.clone(),
            });
        }
        fs::write(user_dir.join("labels.txt"), write_labels(&labels))?;
    }
    Ok(())
}

/// Profiles whose cruise speeds are far apart, for separability fixtures.
pub fn separated_profiles(n_users: usize, trips: usize) -> Vec<UserProfile> {
    (0..n_users)
        .map(|u| UserProfile {
            user_id: format!("{:03}", u),
            mean_cruise_speed: 3.0 + 6.0 * u as f64,
            speed_jitter: 0.3,
            accel_scale: 0.05,
            trips,
            points_per_trip: 60,
            sampling_period: 5.0,
            gps_noise_std: 0.0,
            modality: Modality::Car.to_string(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::extract_features;
    use crate::ingest::{assemble_trips, load_dataset};

    fn calm(speed: f64) -> UserProfile {
        UserProfile {
            user_id: "010".into(),
            mean_cruise_speed: speed,
            speed_jitter: 0.0,
            accel_scale: 0.0,
            trips: 3,
            points_per_trip: 40,
            sampling_period: 5.0,
            gps_noise_std: 0.0,
            modality: "walk".into(),
        }
    }

    #[test]
    fn noise_free_motion_is_constant_speed() {
        let trip = generate_trip(&calm(7.5), 3);
        let f = extract_features(&trip).unwrap();
        assert!(f.std_speed < 1e-6 * 7.5);
        assert!((f.mean_speed - 7.5).abs() < 1e-6 * 7.5);
        assert_eq!(f.duration, 39.0 * 5.0);
    }

    #[test]
    fn coarser_sampling_lowers_max_speed() {
        let fine = UserProfile {
            speed_jitter: 1.0,
            accel_scale: 1.5,
            sampling_period: 1.0,
            points_per_trip: 601,
            ..calm(12.0)
        };
        let coarse = UserProfile {
            sampling_period: 60.0,
            points_per_trip: 11,
            ..fine.clone()
        };
        let a = extract_features(&generate_trip(&fine, 21)).unwrap();
        let b = extract_features(&generate_trip(&coarse, 21)).unwrap();
        assert_eq!(a.duration, b.duration);
        assert!(
            b.max_speed < a.max_speed,
            "{} vs {}",
            b.max_speed,
            a.max_speed
        );
        // Same path, so the overall distance covered agrees.
        let (da, db) = (a.mean_speed * 600.0, b.mean_speed * 600.0);
        assert!((da - db).abs() < 1e-6 * da);
    }

    #[test]
    fn corpus_counts_and_determinism() {
        let profiles: Vec<UserProfile> = (0..26)
            .map(|u| UserProfile {
                user_id: format!("{u:03}"),
                trips: 40,
                points_per_trip: 5,
                ..calm(5.0)
            })
            .collect();
        let a = generate_corpus(&profiles, 8);
        assert_eq!(a.trips.len(), 1040);
        assert_eq!(a, generate_corpus(&profiles, 8));
        assert_ne!(a.trips[0], generate_corpus(&profiles, 9).trips[0]);
    }

    #[test]
    fn written_corpus_reingests() {
        let profiles = vec![
            UserProfile {
                user_id: "001".into(),
                gps_noise_std: 3.0,
                accel_scale: 0.4,
                ..calm(4.0)
            },
            UserProfile {
                user_id: "002".into(),
                trips: 2,
                ..calm(20.0)
            },
        ];
        let corpus = generate_corpus(&profiles, 1);
        let dir = tempfile::tempdir().unwrap();
        write_corpus(&corpus, dir.path()).unwrap();

        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded.archives.len(), 2);
        let trips: Vec<Trip> = loaded
            .archives
            .iter()
            .flat_map(|a| assemble_trips(a).trips)
            .collect();
        // Integer sampling from whole-second starts: nothing is truncated.
        assert_eq!(trips, corpus.trips);
    }

    #[test]
    fn profile_validation() {
        assert!(calm(1.0).validate().is_ok());
        assert!(UserProfile {
            points_per_trip: 2,
            ..calm(1.0)
        }
        .validate()
        .is_err());
        assert!(calm(0.0).validate().is_err());
        assert!(UserProfile {
            gps_noise_std: -1.0,
            ..calm(1.0)
        }
        .validate()
        .is_err());
    }
}
