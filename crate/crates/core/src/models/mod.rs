//! Regression families and the paired position predictor built on them.

pub mod codec;
pub mod forest;
pub mod linear;
pub mod mlp;
pub mod predictor;
pub mod scaler;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{FeatureMatrix, Instance, PointDataset, Target, WindowDataset};
use crate::exec::Execution;
use crate::geo::GeoError;

pub use codec::{load_model, save_model, MODEL_EXTENSION};
pub use forest::{fit_forest_matrix, ForestConfig, ForestModel};
pub use linear::{fit_linear_matrix, LinearModel};
pub use mlp::{fit_mlp_matrix, mlp_gradient, MlpConfig, MlpModel};
pub use predictor::{PositionPredictor, PredictorKind, PredictorModel, TrainingInfo};
pub use scaler::FeatureScaler;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("need at least {needed} training instances, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("singular fit: {0}")]
    SingularFit(String),
    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("cannot load model: {0}")]
    Load(String),
}

/// One trained single-coordinate model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Regressor {
    Linear(LinearModel),
    Mlp(MlpModel),
    Forest(ForestModel),
}

impl Regressor {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Regressor::Linear(m) => m.predict(x),
            Regressor::Mlp(m) => m.predict(x),
            Regressor::Forest(m) => m.predict(x),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Regressor::Linear(m) => m.input_dim(),
            Regressor::Mlp(m) => m.input_dim(),
            Regressor::Forest(m) => m.input_dim,
        }
    }

    pub fn target(&self) -> Target {
        match self {
            Regressor::Linear(m) => m.target,
            Regressor::Mlp(m) => m.target,
            Regressor::Forest(m) => m.target,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            Regressor::Linear(m) => {
                if m.coefficients.len() < 2 || m.coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(ModelError::Contract("malformed linear model".into()));
                }
                Ok(())
            }
            Regressor::Mlp(m) => m.validate(),
            Regressor::Forest(m) => m.validate(),
        }
    }
}

/// What to train. Serialized as a tagged table, e.g. `{ kind = "mlp", hidden = [10] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    Kinematic,
    Linear,
    Mlp(MlpConfig),
    Forest(ForestConfig),
    WindowMlp(MlpConfig),
}

impl ModelSpec {
    /// Short stable name used in reports and file names.
    pub fn label(&self) -> String {
        match self {
            ModelSpec::Kinematic => "kinematic".into(),
            ModelSpec::Linear => "linear".into(),
            ModelSpec::Mlp(c) => format!("mlp-{}", c.shape_label()),
            ModelSpec::Forest(c) => format!("forest-{}", c.n_trees),
            ModelSpec::WindowMlp(c) => format!("window-mlp-{}", c.shape_label()),
        }
    }

    pub fn is_window(&self) -> bool {
        matches!(self, ModelSpec::WindowMlp(_))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("model spec serializes");
        hex::encode(Sha256::digest(&json))
    }
}

/// Fits one single-coordinate model described by `spec`.
pub fn fit_regressor(
    spec: &ModelSpec,
    x: &FeatureMatrix,
    y: &[f64],
    target: Target,
    exec: Execution,
) -> Result<Regressor, ModelError> {
    match spec {
        ModelSpec::Linear => fit_linear_matrix(x, y, target).map(Regressor::Linear),
        ModelSpec::Mlp(c) | ModelSpec::WindowMlp(c) => fit_mlp_matrix(x, y, target, c).map(Regressor::Mlp),
        ModelSpec::Forest(c) => fit_forest_matrix(x, y, target, c, exec).map(Regressor::Forest),
        ModelSpec::Kinematic => Err(ModelError::Contract("the kinematic predictor has no regressor".into())),
    }
}

/// Fits the longitude and latitude models of one spec on any dataset.
fn fit_pair<I: Instance>(
    spec: &ModelSpec,
    train: &crate::dataset::Dataset<I>,
    exec: Execution,
) -> Result<(Regressor, Regressor), ModelError> {
    let x = train.features();
    let lon_y = train.targets(Target::Lon);
    let lat_y = train.targets(Target::Lat);
    let (lon, lat) = exec.join(
        || fit_regressor(spec, &x, &lon_y, Target::Lon, exec),
        || fit_regressor(spec, &x, &lat_y, Target::Lat, exec),
    );
    Ok((lon?, lat?))
}

/// Trains a point predictor (or returns the kinematic one) for the
/// dataset's interval.
pub fn fit_point_predictor(
    spec: &ModelSpec,
    train: &PointDataset,
    exec: Execution,
) -> Result<PositionPredictor, ModelError> {
    let training = TrainingInfo { n_train: train.len(), config_digest: spec.digest() };
    let model = match spec {
        ModelSpec::Kinematic => PredictorModel::Kinematic,
        ModelSpec::WindowMlp(_) => {
            return Err(ModelError::Contract("window models train on window datasets".into()));
        }
        _ => {
            let (lon, lat) = fit_pair(spec, train, exec)?;
            PredictorModel::Point { lon, lat }
        }
    };
    PositionPredictor::new(train.interval_min, spec.label(), model, training)
}

pub fn fit_window_predictor(
    spec: &ModelSpec,
    train: &WindowDataset,
    exec: Execution,
) -> Result<PositionPredictor, ModelError> {
    let ModelSpec::WindowMlp(_) = spec else {
        return Err(ModelError::Contract(format!("{} is not a window model", spec.label())));
    };
    let window_len = train.instances.first().map_or(0, |w| w.window.len());
    let (lon, lat) = fit_pair(spec, train, exec)?;
    let (Regressor::Mlp(lon), Regressor::Mlp(lat)) = (lon, lat) else {
        unreachable!("window specs always fit networks")
    };
    let training = TrainingInfo { n_train: train.len(), config_digest: spec.digest() };
    PositionPredictor::new(train.interval_min, spec.label(), PredictorModel::Window { window_len, lon, lat }, training)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        assert_eq!(ModelSpec::Linear.label(), "linear");
        assert_eq!(ModelSpec::Mlp(MlpConfig::with_hidden(&[10])).label(), "mlp-10");
        assert_eq!(ModelSpec::Mlp(MlpConfig::with_hidden(&[10, 10])).label(), "mlp-10-10");
        assert_eq!(ModelSpec::Forest(ForestConfig::default()).label(), "forest-100");
        assert_eq!(ModelSpec::WindowMlp(MlpConfig::default()).label(), "window-mlp-10");
        assert_eq!(ModelSpec::Kinematic.label(), "kinematic");
    }

    #[test]
    fn specs_read_from_toml() {
        #[derive(Deserialize)]
        struct Wrap {
            models: Vec<ModelSpec>,
        }
        let w: Wrap = toml::from_str(
            r#"
            models = [
              { kind = "linear" },
              { kind = "mlp", hidden = [10, 10], epochs = 20 },
              { kind = "forest", n_trees = 5 },
            ]
            "#,
        )
        .unwrap();
        assert_eq!(w.models[0], ModelSpec::Linear);
        assert_eq!(
            w.models[1],
            ModelSpec::Mlp(MlpConfig { hidden: vec![10, 10], epochs: 20, ..MlpConfig::default() })
        );
        assert_eq!(w.models[2].label(), "forest-5");
    }

    #[test]
    fn digest_tracks_config() {
        let a = ModelSpec::Mlp(MlpConfig::default());
        let b = ModelSpec::Mlp(MlpConfig { seed: 2, ..MlpConfig::default() });
        assert_eq!(a.digest(), a.clone().digest());
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
