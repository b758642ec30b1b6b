//! Supervised instances built from per-vessel report streams.
//!
//! A point instance pairs one report with the same vessel's report one
//! prediction interval later. Reports without such a partner are dropped;
//! nothing is interpolated or imputed. Window instances do the same for the
//! last report of ten consecutive reports.

use std::io::Write;

use chrono::{DateTime, Duration, SecondsFormat, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::ingest::{AisRecord, Mmsi, VesselStreams};

pub const DEFAULT_TOLERANCE_S: u32 = 30;
pub const DEFAULT_MAX_GAP_S: u32 = 180;
pub const WINDOW_LEN: usize = 10;
pub const DEFAULT_INTERVALS: [u32; 4] = [4, 10, 20, 30];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DatasetError {
    #[error("prediction interval must be positive")]
    InvalidInterval,
    #[error("window length must be at least 1")]
    InvalidWindow,
    #[error("cannot split: {0}")]
    Split(String),
    #[error("cannot assign folds: {0}")]
    Fold(String),
    #[error("dataset csv: {0}")]
    Csv(String),
}

/// Which coordinate a regressor predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Lon,
    Lat,
}

impl Target {
    pub const BOTH: [Target; 2] = [Target::Lon, Target::Lat];

    pub fn name(self) -> &'static str {
        match self {
            Target::Lon => "LON",
            Target::Lat => "LAT",
        }
    }
}

/// Per-report model inputs, in the order [speed, lon, lat, course].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureTuple {
    pub speed: f64,
    pub lon: f64,
    pub lat: f64,
    pub course: f64,
}

impl FeatureTuple {
    pub const DIM: usize = 4;
    pub const NAMES: [&'static str; 4] = ["speed", "lon", "lat", "course"];

    pub fn of(r: &AisRecord) -> Self {
        FeatureTuple { speed: r.sog_knots, lon: r.position.lon_deg, lat: r.position.lat_deg, course: r.cog_deg }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.speed, self.lon, self.lat, self.course]
    }
}

/// Behaviour shared by point and window instances.
pub trait Instance: Clone + Send + Sync {
    fn mmsi(&self) -> Mmsi;
    fn t0(&self) -> DateTime<Utc>;
    fn feature_dim(&self) -> usize;
    fn extend_features(&self, out: &mut Vec<f64>);
    fn target(&self, target: Target) -> f64;
    fn csv_header(&self) -> Vec<String>;
    fn csv_row(&self) -> Vec<String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingInstance {
    pub mmsi: Mmsi,
    pub t0: DateTime<Utc>,
    pub features: FeatureTuple,
    pub next_lon: f64,
    pub next_lat: f64,
    pub interval_min: u32,
    pub target_time: DateTime<Utc>,
}

fn ts(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

impl Instance for TrainingInstance {
    fn mmsi(&self) -> Mmsi {
        self.mmsi
    }
    fn t0(&self) -> DateTime<Utc> {
        self.t0
    }
    fn feature_dim(&self) -> usize {
        FeatureTuple::DIM
    }
    fn extend_features(&self, out: &mut Vec<f64>) {
        out.extend(self.features.to_array());
    }
    fn target(&self, target: Target) -> f64 {
        match target {
            Target::Lon => self.next_lon,
            Target::Lat => self.next_lat,
        }
    }
    fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["mmsi", "t0", "interval_min"].map(String::from).into();
        h.extend(FeatureTuple::NAMES.map(String::from));
        h.extend(["next_lon", "next_lat", "target_time"].map(String::from));
        h
    }
    fn csv_row(&self) -> Vec<String> {
        let mut row = vec![self.mmsi.to_string(), ts(self.t0), self.interval_min.to_string()];
        row.extend(self.features.to_array().map(|v| v.to_string()));
        row.extend([self.next_lon.to_string(), self.next_lat.to_string(), ts(self.target_time)]);
        row
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowInstance {
    pub mmsi: Mmsi,
    /// Timestamp of the last report in the window.
    pub t0: DateTime<Utc>,
    /// Consecutive reports, oldest first.
    pub window: Vec<FeatureTuple>,
    pub next_lon: f64,
    pub next_lat: f64,
    pub interval_min: u32,
    pub target_time: DateTime<Utc>,
}

impl Instance for WindowInstance {
    fn mmsi(&self) -> Mmsi {
        self.mmsi
    }
    fn t0(&self) -> DateTime<Utc> {
        self.t0
    }
    fn feature_dim(&self) -> usize {
        FeatureTuple::DIM * self.window.len()
    }
    fn extend_features(&self, out: &mut Vec<f64>) {
        for f in &self.window {
            out.extend(f.to_array());
        }
    }
    fn target(&self, target: Target) -> f64 {
        match target {
            Target::Lon => self.next_lon,
            Target::Lat => self.next_lat,
        }
    }
    fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["mmsi", "t0", "interval_min"].map(String::from).into();
        for i in 0..self.window.len() {
            h.extend(FeatureTuple::NAMES.map(|n| format!("{n}_{i}")));
        }
        h.extend(["next_lon", "next_lat", "target_time"].map(String::from));
        h
    }
    fn csv_row(&self) -> Vec<String> {
        let mut row = vec![self.mmsi.to_string(), ts(self.t0), self.interval_min.to_string()];
        for f in &self.window {
            row.extend(f.to_array().map(|v| v.to_string()));
        }
        row.extend([self.next_lon.to_string(), self.next_lat.to_string(), ts(self.target_time)]);
        row
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<I> {
    pub instances: Vec<I>,
    pub interval_min: u32,
    pub provenance: String,
}

pub type PointDataset = Dataset<TrainingInstance>;
pub type WindowDataset = Dataset<WindowInstance>;

/// Row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
}

impl<I: Instance> Dataset<I> {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.instances.first().map_or(0, |i| i.feature_dim())
    }

    pub fn features(&self) -> FeatureMatrix {
        let dim = self.feature_dim();
        let mut values = Vec::with_capacity(dim * self.len());
        for inst in &self.instances {
            inst.extend_features(&mut values);
        }
        FeatureMatrix { rows: self.len(), dim, values }
    }

    pub fn targets(&self, target: Target) -> Vec<f64> {
        self.instances.iter().map(|i| i.target(target)).collect()
    }

    /// Same interval and provenance, different instances.
    pub fn with_instances(&self, instances: Vec<I>) -> Self {
        Dataset { instances, interval_min: self.interval_min, provenance: self.provenance.clone() }
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        self.with_instances(indices.iter().map(|&i| self.instances[i].clone()).collect())
    }

    /// Audit CSV: identity, features, targets.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DatasetError> {
        let csv_err = |e: csv::Error| DatasetError::Csv(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        match self.instances.first() {
            Some(first) => w.write_record(first.csv_header()).map_err(csv_err)?,
            None => w.write_record(["mmsi", "t0", "interval_min"]).map_err(csv_err)?,
        }
        for inst in &self.instances {
            w.write_record(inst.csv_row()).map_err(csv_err)?;
        }
        w.flush().map_err(|e| DatasetError::Csv(e.to_string()))
    }
}

/// Index of the report closest to `t + interval`, within tolerance and
/// strictly after index `from`. Ties go to the earlier report.
fn find_target(stream: &[AisRecord], from: usize, interval: Duration, tolerance: Duration) -> Option<usize> {
    let t = stream[from].timestamp;
    let want = t + interval;
    let lo = want - tolerance;
    let hi = want + tolerance;
    let start = stream.partition_point(|r| r.timestamp < lo).max(from + 1);
    let mut best: Option<(usize, Duration)> = None;
    for (j, r) in stream.iter().enumerate().skip(start) {
        if r.timestamp > hi {
            break;
        }
        let miss = (r.timestamp - want).abs();
        if best.is_none_or(|(_, m)| miss < m) {
            best = Some((j, miss));
        }
    }
    best.map(|(j, _)| j)
}

fn point_instances(stream: &[AisRecord], interval_min: u32, tolerance_s: u32) -> Vec<TrainingInstance> {
    let interval = Duration::minutes(interval_min as i64);
    let tolerance = Duration::seconds(tolerance_s as i64);
    (0..stream.len())
        .filter_map(|i| {
            let j = find_target(stream, i, interval, tolerance)?;
            let (r, target) = (&stream[i], &stream[j]);
            Some(TrainingInstance {
                mmsi: r.mmsi,
                t0: r.timestamp,
                features: FeatureTuple::of(r),
                next_lon: target.position.lon_deg,
                next_lat: target.position.lat_deg,
                interval_min,
                target_time: target.timestamp,
            })
        })
        .collect()
}

/// Pairs every report with the same vessel's report one interval later.
/// Output is ordered by (mmsi, t0).
pub fn build_instances(
    streams: &VesselStreams,
    interval_min: u32,
    tolerance_s: u32,
    exec: Execution,
) -> Result<PointDataset, DatasetError> {
    if interval_min == 0 {
        return Err(DatasetError::InvalidInterval);
    }
    let vessels: Vec<&Vec<AisRecord>> = streams.values().collect();
    let per_vessel = exec.map(&vessels, |s| point_instances(s, interval_min, tolerance_s));
    Ok(Dataset {
        instances: per_vessel.into_iter().flatten().collect(),
        interval_min,
        provenance: format!("point pairs, interval {interval_min} min, tolerance {tolerance_s} s"),
    })
}

fn window_instances(
    stream: &[AisRecord],
    window: usize,
    interval_min: u32,
    tolerance_s: u32,
    max_gap_s: u32,
) -> Vec<WindowInstance> {
    let interval = Duration::minutes(interval_min as i64);
    let tolerance = Duration::seconds(tolerance_s as i64);
    let max_gap = Duration::seconds(max_gap_s as i64);
    let mut out = Vec::new();
    // number of consecutive reports ending at `end` whose gaps are all small
    let mut run = 0usize;
    for end in 0..stream.len() {
        run = if end > 0 && stream[end].timestamp - stream[end - 1].timestamp <= max_gap { run + 1 } else { 1 };
        if run < window {
            continue;
        }
        let Some(j) = find_target(stream, end, interval, tolerance) else { continue };
        let last = &stream[end];
        out.push(WindowInstance {
            mmsi: last.mmsi,
            t0: last.timestamp,
            window: stream[end + 1 - window..=end].iter().map(FeatureTuple::of).collect(),
            next_lon: stream[j].position.lon_deg,
            next_lat: stream[j].position.lat_deg,
            interval_min,
            target_time: stream[j].timestamp,
        });
    }
    out
}

/// Sliding windows of `window` consecutive reports with every in-window gap
/// at most `max_gap_s`, each paired with the report one interval after the
/// window's last report.
pub fn build_window_instances(
    streams: &VesselStreams,
    window: usize,
    interval_min: u32,
    tolerance_s: u32,
    max_gap_s: u32,
    exec: Execution,
) -> Result<WindowDataset, DatasetError> {
    if interval_min == 0 {
        return Err(DatasetError::InvalidInterval);
    }
    if window == 0 {
        return Err(DatasetError::InvalidWindow);
    }
    let vessels: Vec<&Vec<AisRecord>> = streams.values().collect();
    let per_vessel = exec.map(&vessels, |s| window_instances(s, window, interval_min, tolerance_s, max_gap_s));
    Ok(Dataset {
        instances: per_vessel.into_iter().flatten().collect(),
        interval_min,
        provenance: format!(
            "windows of {window}, interval {interval_min} min, tolerance {tolerance_s} s, max gap {max_gap_s} s"
        ),
    })
}

/// Splits at a timestamp boundary: instances before it train, the rest test.
/// The boundary maximises the train share subject to it not exceeding
/// `train_fraction`, with both sides non-empty.
pub fn chronological_split<I: Instance>(
    d: &Dataset<I>,
    train_fraction: f64,
) -> Result<(Dataset<I>, Dataset<I>), DatasetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::Split(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let n = d.len();
    if n < 2 {
        return Err(DatasetError::Split(format!("need at least 2 instances, have {n}")));
    }
    let mut times: Vec<DateTime<Utc>> = d.instances.iter().map(Instance::t0).collect();
    times.sort_unstable();
    let limit = train_fraction * n as f64;
    // times[i] as boundary puts exactly i instances in train
    let mut boundary = None;
    for i in 1..n {
        if times[i] != times[i - 1] {
            if i as f64 > limit {
                break;
            }
            boundary = Some(times[i]);
        }
    }
    let Some(boundary) = boundary else {
        return Err(DatasetError::Split(format!(
            "no timestamp boundary gives a non-empty train share <= {train_fraction}"
        )));
    };
    let (train, test): (Vec<I>, Vec<I>) = d.instances.iter().cloned().partition(|i| i.t0() < boundary);
    Ok((d.with_instances(train), d.with_instances(test)))
}

/// Seeded shuffle followed by round-robin fold labels.
pub fn kfold_assign(n: usize, k: usize, seed: u64) -> Result<Vec<usize>, DatasetError> {
    if k < 2 {
        return Err(DatasetError::Fold(format!("k = {k}, need at least 2 folds")));
    }
    if n < k {
        return Err(DatasetError::Fold(format!("{n} instances cannot fill {k} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut labels = vec![0; n];
    for (pos, &idx) in order.iter().enumerate() {
        labels[idx] = pos % k;
    }
    Ok(labels)
}
