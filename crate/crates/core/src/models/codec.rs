//! Model file container.
//!
//! Layout, integers little-endian:
//!
//! ```text
//! "DRIFTCAST-MODEL\n"   16 bytes
//! version               u16
//! metadata length       u32, then UTF-8 JSON metadata
//! body length           u32, then bincode-encoded model (empty for kinematic)
//! sha256                32 bytes over everything before it
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ModelError, PositionPredictor, PredictorKind, PredictorModel, TrainingInfo};

pub const MAGIC: &[u8; 16] = b"DRIFTCAST-MODEL\n";
pub const FORMAT_VERSION: u16 = 1;
pub const MODEL_EXTENSION: &str = "dcmodel";
const CHECKSUM_LEN: usize = 32;

/// Self-describing header, readable without decoding the body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub kind: PredictorKind,
    pub label: String,
    pub interval_min: u32,
    pub n_train: usize,
    pub config_digest: String,
}

fn load_err(msg: impl Into<String>) -> ModelError {
    ModelError::Load(msg.into())
}

pub fn save_model(p: &PositionPredictor) -> Vec<u8> {
    let meta = ModelMetadata {
        kind: p.kind(),
        label: p.label.clone(),
        interval_min: p.interval_min,
        n_train: p.training.n_train,
        config_digest: p.training.config_digest.clone(),
    };
    let meta = serde_json::to_vec(&meta).expect("metadata serializes");
    let body = match &p.model {
        PredictorModel::Kinematic => Vec::new(),
        model => bincode::serialize(model).expect("model serializes"),
    };
    let mut out = Vec::with_capacity(MAGIC.len() + 10 + meta.len() + body.len() + CHECKSUM_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    out.extend_from_slice(&meta);
    out.extend_from_slice(&(body.len() as u32).to_le_bytes());
    out.extend_from_slice(&body);
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ModelError> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| load_err(format!("truncated while reading {what}")))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<usize, ModelError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
    }
}

/// Reads only the header, after verifying the checksum.
pub fn read_metadata(bytes: &[u8]) -> Result<ModelMetadata, ModelError> {
    parse(bytes).map(|(meta, _)| meta)
}

fn parse(bytes: &[u8]) -> Result<(ModelMetadata, &[u8]), ModelError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(load_err("not a model file (bad magic)"));
    }
    let mut c = Cursor { bytes, at: MAGIC.len() };
    let version = u16::from_le_bytes(c.take(2, "version")?.try_into().expect("2 bytes"));
    if version != FORMAT_VERSION {
        return Err(load_err(format!("unsupported format version {version}, expected {FORMAT_VERSION}")));
    }
    let meta_len = c.u32("metadata length")?;
    let meta = c.take(meta_len, "metadata")?;
    let body_len = c.u32("body length")?;
    let body = c.take(body_len, "model body")?;
    let payload_end = c.at;
    let checksum = c.take(CHECKSUM_LEN, "checksum")?;
    if c.at != bytes.len() {
        return Err(load_err(format!("{} unexpected trailing bytes", bytes.len() - c.at)));
    }
    if Sha256::digest(&bytes[..payload_end]).as_slice() != checksum {
        return Err(load_err("checksum mismatch"));
    }
    let meta: ModelMetadata = serde_json::from_slice(meta).map_err(|e| load_err(format!("metadata: {e}")))?;
    Ok((meta, body))
}

pub fn load_model(bytes: &[u8]) -> Result<PositionPredictor, ModelError> {
    let (meta, body) = parse(bytes)?;
    let model = match meta.kind {
        PredictorKind::Kinematic if body.is_empty() => PredictorModel::Kinematic,
        PredictorKind::Kinematic => return Err(load_err("kinematic model with a non-empty body")),
        _ => bincode::deserialize(body).map_err(|e| load_err(format!("model body: {e}")))?,
    };
    let training = TrainingInfo { n_train: meta.n_train, config_digest: meta.config_digest };
    let p = PositionPredictor::new(meta.interval_min, meta.label, model, training)
        .map_err(|e| load_err(format!("decoded model is invalid: {e}")))?;
    if p.kind() != meta.kind {
        return Err(load_err(format!("header says {} but body holds {}", meta.kind, p.kind())));
    }
    Ok(p)
}

pub fn save_model_file(p: &PositionPredictor, path: &Path) -> Result<(), ModelError> {
    fs::write(path, save_model(p)).map_err(|e| load_err(format!("{}: {e}", path.display())))
}

pub fn load_model_file(path: &Path) -> Result<PositionPredictor, ModelError> {
    let bytes = fs::read(path).map_err(|e| load_err(format!("{}: {e}", path.display())))?;
    load_model(&bytes).map_err(|e| match e {
        ModelError::Load(m) => load_err(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Dataset, FeatureTuple, TrainingInstance};
    use crate::exec::Execution;
    use crate::ingest::Mmsi;
    use crate::models::{fit_point_predictor, ForestConfig, MlpConfig, ModelSpec};
    use chrono::{TimeZone, Utc};

    fn toy_dataset() -> crate::dataset::PointDataset {
        let t = Utc.with_ymd_and_hms(2014, 11, 1, 0, 0, 0).unwrap();
        let instances = (0..12)
            .map(|i| {
                let f = i as f64;
                TrainingInstance {
                    mmsi: Mmsi(237000000 + i % 3),
                    t0: t,
                    features: FeatureTuple { speed: 5.0 + f, lon: 25.0 + 0.01 * f, lat: 37.0 + 0.02 * f * f / 10.0, course: (30.0 * f) % 360.0 },
                    next_lon: 25.01 + 0.011 * f,
                    next_lat: 37.0 + 0.021 * f,
                    interval_min: 4,
                    target_time: t,
                }
            })
            .collect();
        Dataset { instances, interval_min: 4, provenance: "toy".into() }
    }

    #[test]
    fn kinematic_is_header_only() {
        let bytes = save_model(&PositionPredictor::kinematic(20));
        let meta = read_metadata(&bytes).unwrap();
        assert_eq!(meta.kind, PredictorKind::Kinematic);
        assert_eq!(meta.interval_min, 20);
        let body_len_at = MAGIC.len() + 2 + 4 + serde_json::to_vec(&meta).unwrap().len();
        assert_eq!(&bytes[body_len_at..body_len_at + 4], &[0, 0, 0, 0]);
        assert_eq!(load_model(&bytes).unwrap(), PositionPredictor::kinematic(20));
    }

    #[test]
    fn round_trips_every_point_kind() {
        let ds = toy_dataset();
        for spec in [
            ModelSpec::Linear,
            ModelSpec::Mlp(MlpConfig { epochs: 3, ..MlpConfig::default() }),
            ModelSpec::Forest(ForestConfig { n_trees: 4, ..ForestConfig::default() }),
        ] {
            let p = fit_point_predictor(&spec, &ds, Execution::Sequential).unwrap();
            let q = load_model(&save_model(&p)).unwrap();
            assert_eq!(p, q);
        }
    }

    #[test]
    fn corruption_is_a_load_error() {
        let ds = toy_dataset();
        let p = fit_point_predictor(&ModelSpec::Linear, &ds, Execution::Sequential).unwrap();
        let bytes = save_model(&p);
        for cut in [0, 10, 17, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(load_model(&bytes[..cut]), Err(ModelError::Load(_))), "cut at {cut}");
        }
        let mut flipped = bytes.clone();
        let mid = flipped.len() - 40;
        flipped[mid] ^= 0x01;
        match load_model(&flipped) {
            Err(ModelError::Load(m)) => assert!(m.contains("checksum"), "{m}"),
            other => panic!("{other:?}"),
        }
        let mut versioned = bytes.clone();
        versioned[MAGIC.len()] = 2;
        match load_model(&versioned) {
            Err(ModelError::Load(m)) => assert!(m.contains("version"), "{m}"),
            other => panic!("{other:?}"),
        }
        let mut extra = bytes;
        extra.push(0);
        assert!(load_model(&extra).is_err());
    }
}
