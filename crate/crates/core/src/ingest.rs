//! Geolife-layout ingestion: PLT trajectory files, `labels.txt` transport
//! annotations, and assembly of labeled trips from the two.
//!
//! Layout expected by [`load_dataset`]:
//!
//! ```text
//! <root>/Data/<user_id>/Trajectory/*.plt
//! <root>/Data/<user_id>/labels.txt
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geokinematics::GpsPoint;

/// Number of header lines preceding the data in a PLT file.
pub const PLT_HEADER_LINES: usize = 6;

const PLT_FIELDS: usize = 7;
const LABEL_TIME_FORMAT: &str = "%Y/%m/%d %H:%M:%S";
/// Day 0 of the PLT fractional-day column (1899-12-30) expressed in Unix days.
const PLT_DAY_OFFSET: f64 = 25_569.0;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line_no}: {reason}")]
    MalformedLine { line_no: usize, reason: String },
    #[error("no data lines")]
    EmptyFile,
    #[error("dataset root {0} has no Data directory")]
    MissingRoot(PathBuf),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<IngestError>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl IngestError {
    fn in_file(self, path: &Path) -> Self {
        IngestError::File {
            path: path.to_path_buf(),
            source: Box::new(self),
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

fn malformed(line_no: usize, reason: impl Into<String>) -> IngestError {
    IngestError::MalformedLine {
        line_no,
        reason: reason.into(),
    }
}

/// Transport mode token from a label file.
///
/// Tokens outside the known set are kept verbatim in [`Modality::Other`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modality {
    Walk,
    Bike,
    Bus,
    Car,
    Taxi,
    Subway,
    Train,
    Airplane,
    Boat,
    Run,
    Motorcycle,
    Other(String),
}

impl Modality {
    pub fn as_str(&self) -> &str {
        match self {
            Modality::Walk => "walk",
            Modality::Bike => "bike",
            Modality::Bus => "bus",
            Modality::Car => "car",
            Modality::Taxi => "taxi",
            Modality::Subway => "subway",
            Modality::Train => "train",
            Modality::Airplane => "airplane",
            Modality::Boat => "boat",
            Modality::Run => "run",
            Modality::Motorcycle => "motorcycle",
            Modality::Other(token) => token,
        }
    }
}

impl FromStr for Modality {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let token = s.trim();
        Ok(match token.to_ascii_lowercase().as_str() {
            "walk" => Modality::Walk,
            "bike" => Modality::Bike,
            "bus" => Modality::Bus,
            "car" => Modality::Car,
            "taxi" => Modality::Taxi,
            "subway" => Modality::Subway,
            "train" => Modality::Train,
            "airplane" => Modality::Airplane,
            "boat" => Modality::Boat,
            "run" => Modality::Run,
            "motorcycle" => Modality::Motorcycle,
            _ => Modality::Other(token.to_string()),
        })
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Modality {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Modality {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(s.parse().unwrap_or_else(|never| match never {}))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripLabel {
    pub start_time: f64,
    pub end_time: f64,
    pub modality: Modality,
}

/// A modality-labeled, strictly time-ordered point sequence for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct Trip {
    pub user_id: String,
    pub modality: Modality,
    pub points: Vec<GpsPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserArchive {
    pub user_id: String,
    /// One point list per PLT file, in file-name order.
    pub trajectories: Vec<Vec<GpsPoint>>,
    /// Sorted by `start_time`.
    pub labels: Vec<TripLabel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedLabels {
    pub labels: Vec<TripLabel>,
    /// Rows dropped because `start_time >= end_time`.
    pub dropped_inverted: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssembledTrips {
    pub trips: Vec<Trip>,
    /// Labels that matched fewer than two points.
    pub skipped_labels: usize,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedDataset {
    pub archives: Vec<UserArchive>,
    /// User directories without a usable `labels.txt`.
    pub skipped_users: Vec<String>,
    pub dropped_inverted_labels: usize,
}

fn text_lines(bytes: &[u8]) -> impl Iterator<Item = (usize, &str)> {
    // Line numbers are 1-based to match what an editor shows.
    bytes.split(|&b| b == b'\n').enumerate().map(|(i, raw)| {
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        (i + 1, std::str::from_utf8(raw).unwrap_or("\u{FFFD}"))
    })
}

fn parse_plt_line(line_no: usize, line: &str) -> Result<GpsPoint, IngestError> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != PLT_FIELDS {
        return Err(malformed(
            line_no,
            format!("expected {PLT_FIELDS} fields, found {}", fields.len()),
        ));
    }
    let number = |idx: usize, name: &str| -> Result<f64, IngestError> {
        fields[idx]
            .parse::<f64>()
            .map_err(|_| malformed(line_no, format!("bad {name} {:?}", fields[idx])))
    };
    let latitude = number(0, "latitude")?;
    let longitude = number(1, "longitude")?;
    // Fields 2..=4 (flag, altitude, fractional days) are validated but unused.
    number(2, "flag")?;
    number(3, "altitude")?;
    number(4, "day count")?;

    let date = NaiveDate::parse_from_str(fields[5], "%Y-%m-%d")
        .map_err(|_| malformed(line_no, format!("bad date {:?}", fields[5])))?;
    let time = NaiveTime::parse_from_str(fields[6], "%H:%M:%S")
        .map_err(|_| malformed(line_no, format!("bad time {:?}", fields[6])))?;
    let timestamp = date.and_time(time).and_utc().timestamp() as f64;

    GpsPoint::new(timestamp, latitude, longitude).map_err(|e| malformed(line_no, e.to_string()))
}

/// Parses one PLT file. Header lines are skipped; blank lines are ignored.
pub fn parse_plt(bytes: &[u8]) -> Result<Vec<GpsPoint>, IngestError> {
    let points = text_lines(bytes)
        .skip(PLT_HEADER_LINES)
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(line_no, line)| parse_plt_line(line_no, line))
        .collect::<Result<Vec<_>, _>>()?;
    if points.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    Ok(points)
}

fn parse_label_time(line_no: usize, s: &str) -> Result<f64, IngestError> {
    NaiveDateTime::parse_from_str(s.trim(), LABEL_TIME_FORMAT)
        .map(|dt| dt.and_utc().timestamp() as f64)
        .map_err(|_| malformed(line_no, format!("bad label time {s:?}")))
}

/// Parses a `labels.txt` file. Output is sorted by start time.
pub fn parse_labels(bytes: &[u8]) -> Result<ParsedLabels, IngestError> {
    let mut labels = Vec::new();
    let mut dropped_inverted = 0;
    for (line_no, line) in text_lines(bytes).skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(malformed(
                line_no,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let start_time = parse_label_time(line_no, fields[0])?;
        let end_time = parse_label_time(line_no, fields[1])?;
        let modality: Modality = fields[2].parse().unwrap_or_else(|never| match never {});
        if modality.as_str().is_empty() {
            return Err(malformed(line_no, "empty transport mode"));
        }
        if start_time >= end_time {
            dropped_inverted += 1;
            continue;
        }
        labels.push(TripLabel {
            start_time,
            end_time,
            modality,
        });
    }
    if labels.is_empty() && dropped_inverted == 0 {
        return Err(IngestError::EmptyFile);
    }
    if dropped_inverted > 0 {
        warn!("dropped {dropped_inverted} label rows with start >= end");
    }
    labels.sort_by(|a, b| a.start_time.total_cmp(&b.start_time));
    Ok(ParsedLabels {
        labels,
        dropped_inverted,
    })
}

/// Slices each label's closed time window out of the user's merged point stream.
pub fn assemble_trips(archive: &UserArchive) -> AssembledTrips {
    let mut merged: Vec<GpsPoint> = archive.trajectories.iter().flatten().copied().collect();
    // Stable sort, so the first file's fix wins among equal timestamps.
    merged.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    merged.dedup_by(|later, earlier| later.timestamp == earlier.timestamp);

    let mut out = AssembledTrips::default();
    for label in &archive.labels {
        let lo = merged.partition_point(|p| p.timestamp < label.start_time);
        let hi = merged.partition_point(|p| p.timestamp <= label.end_time);
        if hi.saturating_sub(lo) < 2 {
            out.skipped_labels += 1;
            continue;
        }
        out.trips.push(Trip {
            user_id: archive.user_id.clone(),
            modality: label.modality.clone(),
            points: merged[lo..hi].to_vec(),
        });
    }
    out
}

fn read(path: &Path) -> Result<Vec<u8>, IngestError> {
    fs::read(path).map_err(|e| IngestError::io(path, e))
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, IngestError> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| IngestError::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| IngestError::io(dir, e))?;
    entries.sort();
    Ok(entries)
}

enum UserLoad {
    Loaded(UserArchive, usize),
    Skipped(String),
}

fn load_user(user_dir: &Path) -> Result<UserLoad, IngestError> {
    let user_id = user_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let labels_path = user_dir.join("labels.txt");
    if !labels_path.is_file() {
        return Ok(UserLoad::Skipped(user_id));
    }
    let parsed = match parse_labels(&read(&labels_path)?) {
        Ok(parsed) => parsed,
        Err(IngestError::EmptyFile) => return Ok(UserLoad::Skipped(user_id)),
        Err(e) => return Err(e.in_file(&labels_path)),
    };
    if parsed.labels.is_empty() {
        return Ok(UserLoad::Skipped(user_id));
    }

    let traj_dir = user_dir.join("Trajectory");
    let mut trajectories = Vec::new();
    if traj_dir.is_dir() {
        for path in sorted_entries(&traj_dir)? {
            let is_plt = path
                .extension()
                .is_some_and(|ext| ext.eq_ignore_ascii_case("plt"));
            if !is_plt {
                continue;
            }
            match parse_plt(&read(&path)?) {
                Ok(points) => trajectories.push(points),
                Err(IngestError::EmptyFile) => warn!("{}: no data lines", path.display()),
                Err(e) => return Err(e.in_file(&path)),
            }
        }
    }
    Ok(UserLoad::Loaded(
        UserArchive {
            user_id,
            trajectories,
            labels: parsed.labels,
        },
        parsed.dropped_inverted,
    ))
}

/// Loads every labeled user under `root/Data`, ordered by user id.
pub fn load_dataset(root: &Path) -> Result<LoadedDataset, IngestError> {
    let data_dir = root.join("Data");
    if !data_dir.is_dir() {
        return Err(IngestError::MissingRoot(root.to_path_buf()));
    }
    let user_dirs: Vec<PathBuf> = sorted_entries(&data_dir)?
        .into_iter()
        .filter(|p| p.is_dir())
        .collect();
    if user_dirs.is_empty() {
        warn!("{} contains no user directories", data_dir.display());
    }

    let loads = user_dirs
        .par_iter()
        .map(|dir| load_user(dir))
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = LoadedDataset::default();
    for load in loads {
        match load {
            UserLoad::Loaded(archive, dropped) => {
                out.dropped_inverted_labels += dropped;
                out.archives.push(archive);
            }
            UserLoad::Skipped(user) => out.skipped_users.push(user),
        }
    }
    Ok(out)
}

fn epoch_to_naive(timestamp: f64) -> NaiveDateTime {
    chrono::DateTime::from_timestamp(timestamp.floor() as i64, 0)
        .unwrap_or_default()
        .naive_utc()
}

/// Renders points in PLT format. Timestamps are truncated to whole seconds.
pub fn write_plt(points: &[GpsPoint]) -> String {
    let mut out = String::from(
        "Geolife trajectory\r\nWGS 84\r\nAltitude is in Feet\r\nReserved 3\r\n\
         0,2,255,My Track,0,0,2,8421376\r\n0\r\n",
    );
    for p in points {
        let dt = epoch_to_naive(p.timestamp);
        let days = dt.and_utc().timestamp() as f64 / 86_400.0 + PLT_DAY_OFFSET;
        out.push_str(&format!(
            "{},{},0,0,{:.10},{},{}\r\n",
            p.latitude,
            p.longitude,
            days,
            dt.format("%Y-%m-%d"),
            dt.format("%H:%M:%S"),
        ));
    }
    out
}

/// Renders labels in `labels.txt` format.
pub fn write_labels(labels: &[TripLabel]) -> String {
    let mut out = String::from("Start Time\tEnd Time\tTransportation Mode\r\n");
    for label in labels {
        out.push_str(&format!(
            "{}\t{}\t{}\r\n",
            epoch_to_naive(label.start_time).format(LABEL_TIME_FORMAT),
            epoch_to_naive(label.end_time).format(LABEL_TIME_FORMAT),
            label.modality,
        ));
    }
    out
}
