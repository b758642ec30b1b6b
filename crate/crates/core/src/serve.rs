//! Stateless forecast service core: a registry of per-interval predictors
//! loaded once at startup, and request handlers that never mutate it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::FeatureTuple;
use crate::exec::Execution;
use crate::geo::GeoPoint;
use crate::ingest::MAX_ENCODABLE_SOG;
use crate::models::{load_model, PositionPredictor, PredictorKind, MODEL_EXTENSION};

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("no model files (*.{MODEL_EXTENSION}) found in {0}")]
    Empty(PathBuf),
    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("{path}: {reason}")]
    Load { path: PathBuf, reason: String },
    #[error("interval {interval} min is provided by both {first} and {second}")]
    DuplicateInterval { interval: u32, first: PathBuf, second: PathBuf },
    #[error("{path}: probe prediction failed: {reason}")]
    Probe { path: PathBuf, reason: String },
}

/// Per-request failures, each mapped to an HTTP-style status class.
#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum ServeError {
    #[error("no model for interval {requested} min; available: {}", fmt_intervals(available))]
    UnknownInterval { requested: u32, available: Vec<u32> },
    #[error("invalid request: {reason}")]
    Validation { reason: String },
    #[error("prediction failed: {reason}")]
    Prediction { reason: String },
}

fn fmt_intervals(v: &[u32]) -> String {
    v.iter().map(u32::to_string).collect::<Vec<_>>().join(", ")
}

impl ServeError {
    pub fn status_code(&self) -> u16 {
        match self {
            ServeError::UnknownInterval { .. } => 404,
            ServeError::Validation { .. } => 400,
            ServeError::Prediction { .. } => 422,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub interval_min: u32,
    pub predictor: String,
    pub kind: PredictorKind,
    pub path: PathBuf,
    /// SHA-256 of the model file, used as the model version.
    pub digest: String,
}

/// Immutable after loading; share it by reference across handlers.
#[derive(Debug, Clone)]
pub struct ModelRegistry {
    models: BTreeMap<u32, (PositionPredictor, RegistryEntry)>,
}

/// A fixed, plausible report used to smoke-test every model at load time.
const PROBE: FeatureTuple = FeatureTuple { speed: 10.0, lon: 25.5, lat: 37.8, course: 90.0 };

fn probe(p: &PositionPredictor) -> Result<GeoPoint, String> {
    let out = if p.is_window() {
        let len = match &p.model {
            crate::models::PredictorModel::Window { window_len, .. } => *window_len,
            _ => unreachable!(),
        };
        p.predict_window(&vec![PROBE; len])
    } else {
        p.predict_features(&PROBE)
    };
    let out = out.map_err(|e| e.to_string())?;
    if out.lat_deg.is_finite() && out.lon_deg.is_finite() {
        Ok(out)
    } else {
        Err("non-finite position".into())
    }
}

impl ModelRegistry {
    /// Builds a registry from already-loaded predictors, applying the same
    /// checks as file loading.
    pub fn from_predictors(items: Vec<(PathBuf, PositionPredictor, String)>) -> Result<Self, RegistryError> {
        let mut models: BTreeMap<u32, (PositionPredictor, RegistryEntry)> = BTreeMap::new();
        for (path, p, digest) in items {
            if let Some((_, existing)) = models.get(&p.interval_min) {
                return Err(RegistryError::DuplicateInterval {
                    interval: p.interval_min,
                    first: existing.path.clone(),
                    second: path,
                });
            }
            probe(&p).map_err(|reason| RegistryError::Probe { path: path.clone(), reason })?;
            let entry = RegistryEntry { interval_min: p.interval_min, predictor: p.label.clone(), kind: p.kind(), path, digest };
            models.insert(p.interval_min, (p, entry));
        }
        if models.is_empty() {
            return Err(RegistryError::Empty(PathBuf::new()));
        }
        Ok(ModelRegistry { models })
    }

    pub fn intervals(&self) -> Vec<u32> {
        self.models.keys().copied().collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = &RegistryEntry> {
        self.models.values().map(|(_, e)| e)
    }

    pub fn get(&self, interval_min: u32) -> Option<&PositionPredictor> {
        self.models.get(&interval_min).map(|(p, _)| p)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

/// Loads every listed model file. Fails as a whole on the first bad file.
pub fn load_registry(paths: &[PathBuf]) -> Result<ModelRegistry, RegistryError> {
    let mut items = Vec::with_capacity(paths.len());
    for path in paths {
        let bytes = fs::read(path).map_err(|e| RegistryError::Io { path: path.clone(), reason: e.to_string() })?;
        let p = load_model(&bytes).map_err(|e| RegistryError::Load { path: path.clone(), reason: e.to_string() })?;
        items.push((path.clone(), p, hex::encode(Sha256::digest(&bytes))));
    }
    if items.is_empty() {
        return Err(RegistryError::Empty(PathBuf::new()));
    }
    ModelRegistry::from_predictors(items)
}

/// Loads every `*.dcmodel` file directly inside `dir`, in name order.
pub fn load_registry_dir(dir: &Path) -> Result<ModelRegistry, RegistryError> {
    let io = |e: std::io::Error| RegistryError::Io { path: dir.to_path_buf(), reason: e.to_string() };
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == MODEL_EXTENSION) {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(RegistryError::Empty(dir.to_path_buf()));
    }
    load_registry(&paths)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRequest {
    pub lat: f64,
    pub lon: f64,
    #[serde(rename = "sog")]
    pub sog_knots: f64,
    #[serde(rename = "cog")]
    pub cog_deg: f64,
    pub interval_min: u32,
}

impl PredictionRequest {
    /// Same ranges the ingest layer accepts for a usable report.
    pub fn validate(&self) -> Result<GeoPoint, ServeError> {
        let bad = |reason: String| Err(ServeError::Validation { reason });
        if !self.lat.is_finite() || !(-90.0..=90.0).contains(&self.lat) {
            return bad(format!("lat {} outside [-90, 90]", self.lat));
        }
        if !self.lon.is_finite() || !(-180.0..=180.0).contains(&self.lon) {
            return bad(format!("lon {} outside [-180, 180]", self.lon));
        }
        if !self.sog_knots.is_finite() || !(0.0..=MAX_ENCODABLE_SOG).contains(&self.sog_knots) {
            return bad(format!("sog {} outside [0, {MAX_ENCODABLE_SOG}] knots", self.sog_knots));
        }
        if !self.cog_deg.is_finite() || !(0.0..360.0).contains(&self.cog_deg) {
            return bad(format!("cog {} outside [0, 360) degrees", self.cog_deg));
        }
        GeoPoint::new(self.lat, self.lon).map_err(|e| ServeError::Validation { reason: e.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionResponse {
    pub lat: f64,
    pub lon: f64,
    pub predictor: String,
    pub model_version: String,
    /// Time spent computing the forecast, excluding transport.
    pub compute_micros: f64,
}

pub fn handle_predict(req: &PredictionRequest, reg: &ModelRegistry) -> Result<PredictionResponse, ServeError> {
    let start = req.validate()?;
    let Some((p, entry)) = reg.models.get(&req.interval_min) else {
        return Err(ServeError::UnknownInterval { requested: req.interval_min, available: reg.intervals() });
    };
    if p.is_window() {
        return Err(ServeError::Prediction {
            reason: format!("{} needs a window of past reports; the service takes a single report", p.label),
        });
    }
    let timer = Instant::now();
    let out = p.predict_position(req.sog_knots, start.lon_deg, start.lat_deg, req.cog_deg);
    let compute_micros = timer.elapsed().as_nanos() as f64 / 1000.0;
    let out = out.map_err(|e| ServeError::Prediction { reason: e.to_string() })?;
    Ok(PredictionResponse {
        lat: out.lat_deg,
        lon: out.lon_deg,
        predictor: p.label.clone(),
        model_version: entry.digest.clone(),
        compute_micros,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub n: usize,
    pub mean_micros: f64,
    pub median_micros: f64,
    pub p99_micros: f64,
}

impl LatencyStats {
    /// Nearest-rank summary; `None` for an empty sample.
    pub fn from_micros(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let rank = |pct: f64| sorted[((pct / 100.0 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1];
        Some(LatencyStats {
            n: samples.len(),
            mean_micros: samples.iter().sum::<f64>() / samples.len() as f64,
            median_micros: rank(50.0),
            p99_micros: rank(99.0),
        })
    }
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub responses: Vec<Result<PredictionResponse, ServeError>>,
    /// Over successful items only; `None` when there were none.
    pub stats: Option<LatencyStats>,
}

/// Answers every request in order; failures stay in their own slot.
pub fn batch_predict(requests: &[PredictionRequest], reg: &ModelRegistry, exec: Execution) -> BatchOutcome {
    let responses = exec.map(requests, |r| handle_predict(r, reg));
    let micros: Vec<f64> = responses.iter().filter_map(|r| r.as_ref().ok().map(|r| r.compute_micros)).collect();
    BatchOutcome { stats: LatencyStats::from_micros(&micros), responses }
}
