//! Measurement logs, class labels and train/test splits.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use vhfplan_svm::Class;

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::geodata::GeoPoint;

/// Receiver sensitivity, dBm. Any reported level at or above it is covered.
pub const SENSITIVITY_DBM: f64 = -119.0;
/// Level logged when a meter was not heard at all, dBm.
pub const NO_COVERAGE_DBM: f64 = -120.0;

pub const MEASUREMENT_COLUMNS: [&str; 9] = [
    "timestamp",
    "lat",
    "lon",
    "alt_m",
    "speed_mps",
    "heading_deg",
    "satellites",
    "meter_address",
    "rssi_dbm",
];

/// Smallest dataset [`permute_and_split`] accepts.
pub const MIN_SPLIT_SIZE: usize = 5;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub timestamp: DateTime<Utc>,
    /// GPS estimate of the receiver position.
    pub position: GeoPoint,
    pub speed: f64,
    pub heading: f64,
    pub satellite_count: u32,
    pub meter_address: String,
    pub rssi: f64,
}

/// Class label of a reported level. Levels strictly between the no-coverage
/// marker and the sensitivity, or below the marker, cannot be reported.
pub fn label_of(rssi: f64) -> Option<Class> {
    if rssi >= SENSITIVITY_DBM {
        Some(Class::Positive)
    } else if rssi == NO_COVERAGE_DBM {
        Some(Class::Negative)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub id: String,
    pub position: GeoPoint,
    pub features: FeatureVector,
    pub rssi: f64,
    pub label: Class,
    /// `town/district` tag of the area the sample was measured in.
    pub source_area: String,
}

pub fn label(m: &Measurement, features: FeatureVector, area: &str) -> Result<LabeledSample> {
    let label = label_of(m.rssi).ok_or(Error::Range {
        line: 0,
        value: m.rssi,
    })?;
    Ok(LabeledSample {
        id: m.meter_address.clone(),
        position: m.position,
        features,
        rssi: m.rssi,
        label,
        source_area: area.to_string(),
    })
}

fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|t| t.and_utc())
}

pub fn load_measurements(path: impl AsRef<Path>) -> Result<Vec<Measurement>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_measurements(file, path)
}

/// Parses a measurement log; `path` only labels errors.
pub fn read_measurements<R: Read>(input: R, path: &Path) -> Result<Vec<Measurement>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(input);
    let row_error = |line: u64, message: String| Error::ParseRow {
        path: path.to_path_buf(),
        line,
        message,
    };
    let headers = reader
        .headers()
        .map_err(|e| row_error(1, e.to_string()))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(Vec::new());
    }
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    if names.len() < MEASUREMENT_COLUMNS.len() || names[..MEASUREMENT_COLUMNS.len()] != MEASUREMENT_COLUMNS {
        return Err(Error::Schema {
            message: format!(
                "{}: header must start with {}, found {}",
                path.display(),
                MEASUREMENT_COLUMNS.join(","),
                names.join(",")
            ),
            ids: Vec::new(),
        });
    }
    if names.len() > MEASUREMENT_COLUMNS.len() {
        log::warn!(
            "{}: ignoring extra columns {}",
            path.display(),
            names[MEASUREMENT_COLUMNS.len()..].join(",")
        );
    }

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            row_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() < MEASUREMENT_COLUMNS.len() {
            return Err(row_error(
                line,
                format!("expected {} fields, found {}", MEASUREMENT_COLUMNS.len(), record.len()),
            ));
        }
        let field = |k: usize| record[k].trim();
        let number = |k: usize| -> Result<f64> {
            field(k)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| row_error(line, format!("{} is not a number: {:?}", MEASUREMENT_COLUMNS[k], field(k))))
        };
        let timestamp = parse_timestamp(field(0))
            .ok_or_else(|| row_error(line, format!("timestamp is not ISO-8601: {:?}", field(0))))?;
        let position = GeoPoint::new(number(1)?, number(2)?)
            .map_err(|e| row_error(line, e.to_string()))?
            .with_altitude(number(3)?);
        let satellite_count = field(6)
            .parse::<u32>()
            .map_err(|_| row_error(line, format!("satellites is not a count: {:?}", field(6))))?;
        let rssi = number(8)?;
        if label_of(rssi).is_none() {
            return Err(Error::Range { line, value: rssi });
        }
        out.push(Measurement {
            timestamp,
            position,
            speed: number(4)?,
            heading: number(5)?,
            satellite_count,
            meter_address: field(7).to_string(),
            rssi,
        });
    }
    Ok(out)
}

pub fn write_measurements<W: Write>(out: W, rows: &[Measurement]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::InvalidInput {
        name: "measurements",
        message: e.to_string(),
    };
    w.write_record(MEASUREMENT_COLUMNS).map_err(err)?;
    for m in rows {
        w.write_record([
            m.timestamp.to_rfc3339_opts(SecondsFormat::Millis, true),
            m.position.latitude.to_string(),
            m.position.longitude.to_string(),
            m.position.altitude.unwrap_or(0.0).to_string(),
            m.speed.to_string(),
            m.heading.to_string(),
            m.satellite_count.to_string(),
            m.meter_address.clone(),
            m.rssi.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io("measurements", e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDataset {
    pub train_cls: Vec<LabeledSample>,
    pub test_cls: Vec<LabeledSample>,
    /// `train_cls` without the uncovered samples, order kept.
    pub train_reg: Vec<LabeledSample>,
    /// `test_cls` without the uncovered samples, order kept.
    pub test_reg: Vec<LabeledSample>,
    pub seed: u64,
}

/// Number of training samples: `train_fraction * n` rounded half up.
pub fn train_size(n: usize, train_fraction: f64) -> usize {
    (train_fraction * n as f64 + 0.5).floor() as usize
}

/// Seeded uniform shuffle followed by a head/tail split.
pub fn permute_and_split(samples: &[LabeledSample], seed: u64, train_fraction: f64) -> Result<SplitDataset> {
    if samples.len() < MIN_SPLIT_SIZE {
        return Err(Error::InsufficientData {
            required: MIN_SPLIT_SIZE,
            actual: samples.len(),
        });
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidInput {
            name: "train_fraction",
            message: format!("must lie in (0, 1), got {train_fraction}"),
        });
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = train_size(samples.len(), train_fraction).clamp(1, samples.len() - 1);
    let pick = |idx: &[usize]| idx.iter().map(|&i| samples[i].clone()).collect::<Vec<_>>();
    let train_cls = pick(&order[..cut]);
    let test_cls = pick(&order[cut..]);
    let covered = |v: &[LabeledSample]| v.iter().filter(|s| s.label == Class::Positive).cloned().collect();
    Ok(SplitDataset {
        train_reg: covered(&train_cls),
        test_reg: covered(&test_cls),
        train_cls,
        test_cls,
        seed,
    })
}

/// Samples the classifier places inside the coverage area.
pub fn filter_test_by_decision<F>(test_reg: &[LabeledSample], decide: F) -> Vec<LabeledSample>
where
    F: Fn(&LabeledSample) -> Class,
{
    test_reg.iter().filter(|s| decide(s) == Class::Positive).cloned().collect()
}

/// Fraction of covered samples; warns outside `[0.3, 0.7]`.
pub fn class_balance(samples: &[LabeledSample]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let positive = samples.iter().filter(|s| s.label == Class::Positive).count();
    let balance = positive as f64 / samples.len() as f64;
    if !(0.3..=0.7).contains(&balance) {
        log::warn!("class balance {balance:.3} outside [0.3, 0.7]");
    }
    Some(balance)
}
