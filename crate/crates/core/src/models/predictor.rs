//! Paired longitude/latitude prediction behind one contract.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{MlpModel, ModelError, Regressor};
use crate::dataset::{FeatureTuple, TrainingInstance, WindowInstance};
use crate::geo::{dead_reckon, EarthModel, GeoPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorKind {
    Linear,
    Mlp,
    Forest,
    Kinematic,
    WindowMlp,
}

impl PredictorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PredictorKind::Linear => "linear",
            PredictorKind::Mlp => "mlp",
            PredictorKind::Forest => "forest",
            PredictorKind::Kinematic => "kinematic",
            PredictorKind::WindowMlp => "window-mlp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Linear, Self::Mlp, Self::Forest, Self::Kinematic, Self::WindowMlp].into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PredictorModel {
    Kinematic,
    Point { lon: Regressor, lat: Regressor },
    Window { window_len: usize, lon: MlpModel, lat: MlpModel },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub n_train: usize,
    pub config_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionPredictor {
    pub interval_min: u32,
    pub label: String,
    pub model: PredictorModel,
    pub training: TrainingInfo,
}

fn check_features(values: &[f64]) -> Result<(), ModelError> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(ModelError::Contract(format!("non-finite feature {v}"))),
        None => Ok(()),
    }
}

/// Regression outputs are not constrained to the sphere; pin latitude to
/// the poles and wrap longitude.
fn to_point(lat: f64, lon: f64) -> Result<GeoPoint, ModelError> {
    if !lat.is_finite() || !lon.is_finite() {
        return Err(ModelError::Contract(format!("model produced non-finite position ({lat}, {lon})")));
    }
    Ok(GeoPoint::wrapped(lat.clamp(-90.0, 90.0), lon)?)
}

impl PositionPredictor {
    pub fn new(
        interval_min: u32,
        label: String,
        model: PredictorModel,
        training: TrainingInfo,
    ) -> Result<Self, ModelError> {
        let p = PositionPredictor { interval_min, label, model, training };
        p.validate()?;
        Ok(p)
    }

    pub fn kinematic(interval_min: u32) -> Self {
        PositionPredictor {
            interval_min,
            label: "kinematic".into(),
            model: PredictorModel::Kinematic,
            training: TrainingInfo { n_train: 0, config_digest: super::ModelSpec::Kinematic.digest() },
        }
    }

    pub fn kind(&self) -> PredictorKind {
        match &self.model {
            PredictorModel::Kinematic => PredictorKind::Kinematic,
            PredictorModel::Point { lon: Regressor::Linear(_), .. } => PredictorKind::Linear,
            PredictorModel::Point { lon: Regressor::Mlp(_), .. } => PredictorKind::Mlp,
            PredictorModel::Point { lon: Regressor::Forest(_), .. } => PredictorKind::Forest,
            PredictorModel::Window { .. } => PredictorKind::WindowMlp,
        }
    }

    pub fn is_window(&self) -> bool {
        matches!(self.model, PredictorModel::Window { .. })
    }

    /// Shapes, targets and finiteness of the underlying models.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.interval_min == 0 {
            return Err(ModelError::Contract("interval_min must be positive".into()));
        }
        match &self.model {
            PredictorModel::Kinematic => Ok(()),
            PredictorModel::Point { lon, lat } => {
                lon.validate()?;
                lat.validate()?;
                let same_family = std::mem::discriminant(lon) == std::mem::discriminant(lat);
                if !same_family || lon.target() != crate::dataset::Target::Lon || lat.target() != crate::dataset::Target::Lat {
                    return Err(ModelError::Contract("lon/lat models are mismatched".into()));
                }
                if lon.input_dim() != FeatureTuple::DIM || lat.input_dim() != FeatureTuple::DIM {
                    return Err(ModelError::Contract(format!("point models take {} features", FeatureTuple::DIM)));
                }
                Ok(())
            }
            PredictorModel::Window { window_len, lon, lat } => {
                lon.validate()?;
                lat.validate()?;
                let dim = window_len * FeatureTuple::DIM;
                if *window_len == 0 || lon.input_dim() != dim || lat.input_dim() != dim {
                    return Err(ModelError::Contract("window model shape does not match its window length".into()));
                }
                Ok(())
            }
        }
    }

    /// Position one interval ahead of a single report.
    pub fn predict_position(&self, speed: f64, lon: f64, lat: f64, course: f64) -> Result<GeoPoint, ModelError> {
        check_features(&[speed, lon, lat, course])?;
        match &self.model {
            PredictorModel::Kinematic => {
                if self.interval_min == 0 {
                    return Err(ModelError::Contract("kinematic predictor needs an interval".into()));
                }
                let start = GeoPoint::new(lat, lon)?;
                Ok(dead_reckon(start, speed, course, f64::from(self.interval_min), EarthModel::default())?)
            }
            PredictorModel::Point { lon: lon_model, lat: lat_model } => {
                let x = [speed, lon, lat, course];
                to_point(lat_model.predict(&x), lon_model.predict(&x))
            }
            PredictorModel::Window { .. } => {
                Err(ModelError::Contract("window predictors need a window of reports".into()))
            }
        }
    }

    pub fn predict_features(&self, f: &FeatureTuple) -> Result<GeoPoint, ModelError> {
        self.predict_position(f.speed, f.lon, f.lat, f.course)
    }

    /// Position one interval ahead of the last report of a window, oldest first.
    pub fn predict_window(&self, window: &[FeatureTuple]) -> Result<GeoPoint, ModelError> {
        let PredictorModel::Window { window_len, lon, lat } = &self.model else {
            return Err(ModelError::Contract(format!("{} is not a window predictor", self.label)));
        };
        if window.len() != *window_len {
            return Err(ModelError::Contract(format!(
                "window predictor expects {} reports, got {}",
                window_len,
                window.len()
            )));
        }
        let x: Vec<f64> = window.iter().flat_map(|f| f.to_array()).collect();
        check_features(&x)?;
        to_point(lat.predict(&x), lon.predict(&x))
    }

    pub fn predict_point_instance(&self, inst: &TrainingInstance) -> Result<GeoPoint, ModelError> {
        self.predict_features(&inst.features)
    }

    pub fn predict_window_instance(&self, inst: &WindowInstance) -> Result<GeoPoint, ModelError> {
        self.predict_window(&inst.window)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_instances, build_window_instances};
    use crate::exec::Execution;
    use crate::geo::haversine_km;
    use crate::ingest::group_sort;
    use crate::models::{fit_point_predictor, fit_window_predictor, MlpConfig, ModelSpec};
    use crate::synth::{generate_fleet, FleetConfig, Motion, Regime};

    fn cv_fleet(seed: u64) -> FleetConfig {
        FleetConfig {
            n_vessels: 6,
            duration_min: 240,
            seed,
            regimes: vec![Regime { weight: 1.0, motion: Motion::ConstantVelocity, speed_knots: [8.0, 16.0] }],
            ..FleetConfig::default()
        }
    }

    #[test]
    fn kinematic_at_rest_returns_input() {
        let p = PositionPredictor::kinematic(10);
        let out = p.predict_position(0.0, 25.5, 37.25, 45.0).unwrap();
        assert_eq!((out.lat_deg, out.lon_deg), (37.25, 25.5));
        assert_eq!(p.kind(), PredictorKind::Kinematic);
        assert!(p.predict_position(f64::NAN, 25.5, 37.25, 45.0).is_err());
    }

    #[test]
    fn linear_pair_tracks_dead_reckoning() {
        let records = generate_fleet(&cv_fleet(11), Execution::Sequential).unwrap();
        let streams = group_sort(&records);
        let ds = build_instances(&streams, 10, 30, Execution::Sequential).unwrap();
        let n_train = ds.len() * 3 / 4;
        let train = ds.subset(&(0..n_train).collect::<Vec<_>>());
        let p = fit_point_predictor(&ModelSpec::Linear, &train, Execution::Sequential).unwrap();
        assert_eq!(p.kind(), PredictorKind::Linear);

        // training residual bounds the disagreement on held-out points
        let residual = |inst: &TrainingInstance| {
            let got = p.predict_point_instance(inst).unwrap();
            haversine_km(got, GeoPoint::new(inst.next_lat, inst.next_lon).unwrap(), EarthModel::default()).unwrap()
        };
        let worst_train = train.instances.iter().map(residual).fold(0.0, f64::max);
        for inst in &ds.instances[n_train..] {
            let f = inst.features;
            let got = p.predict_point_instance(inst).unwrap();
            let dr = dead_reckon(GeoPoint::new(f.lat, f.lon).unwrap(), f.speed, f.course, 10.0, EarthModel::default()).unwrap();
            let gap = haversine_km(got, dr, EarthModel::default()).unwrap();
            assert!(gap <= 2.0 * worst_train + 0.05, "gap {gap} vs train residual {worst_train}");
        }
    }

    #[test]
    fn mlp_pair_stays_in_head_range() {
        let records = generate_fleet(&cv_fleet(12), Execution::Sequential).unwrap();
        let ds = build_instances(&group_sort(&records), 4, 30, Execution::Sequential).unwrap();
        let spec = ModelSpec::Mlp(MlpConfig { epochs: 5, ..MlpConfig::default() });
        let p = fit_point_predictor(&spec, &ds, Execution::Sequential).unwrap();
        let PredictorModel::Point { lon: Regressor::Mlp(lon), lat: Regressor::Mlp(lat) } = &p.model else {
            panic!("expected an mlp pair")
        };
        let ((lon_lo, lon_hi), (lat_lo, lat_hi)) = (lon.output_bounds(), lat.output_bounds());
        for probe in [[0.0, 0.0, 0.0, 0.0], [500.0, -170.0, 80.0, 359.0], [12.0, 25.0, 38.0, 90.0]] {
            let out = p.predict_position(probe[0], probe[1], probe[2], probe[3]).unwrap();
            assert!(out.lon_deg >= lon_lo && out.lon_deg <= lon_hi);
            assert!(out.lat_deg >= lat_lo && out.lat_deg <= lat_hi);
        }
    }

    #[test]
    fn stationary_window_model_predicts_the_common_position() {
        let cfg = FleetConfig {
            n_vessels: 3,
            duration_min: 120,
            regimes: vec![Regime { weight: 1.0, motion: Motion::ConstantVelocity, speed_knots: [0.0, 0.0] }],
            ..FleetConfig::default()
        };
        let records = generate_fleet(&cfg, Execution::Sequential).unwrap();
        let ds = build_window_instances(&group_sort(&records), 10, 4, 30, 180, Execution::Sequential).unwrap();
        assert!(!ds.is_empty());
        let spec = ModelSpec::WindowMlp(MlpConfig { epochs: 200, ..MlpConfig::default() });
        let p = fit_window_predictor(&spec, &ds, Execution::Sequential).unwrap();
        assert_eq!(p.kind(), PredictorKind::WindowMlp);

        let residual = |w: &WindowInstance| {
            let got = p.predict_window_instance(w).unwrap();
            haversine_km(got, GeoPoint::new(w.next_lat, w.next_lon).unwrap(), EarthModel::default()).unwrap()
        };
        let eps = ds.instances.iter().map(residual).fold(0.0, f64::max);
        let w = &ds.instances[0];
        let stationary = vec![w.window[9]; 10];
        let got = p.predict_window(&stationary).unwrap();
        let here = GeoPoint::new(w.window[9].lat, w.window[9].lon).unwrap();
        assert!(haversine_km(got, here, EarthModel::default()).unwrap() <= eps + 1e-9);
        assert_eq!(p.predict_window(&stationary).unwrap(), got);

        assert!(matches!(p.predict_window(&stationary[..9]), Err(ModelError::Contract(_))));
        assert!(matches!(p.predict_position(1.0, 25.0, 37.0, 10.0), Err(ModelError::Contract(_))));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [PredictorKind::Linear, PredictorKind::Mlp, PredictorKind::Forest, PredictorKind::Kinematic, PredictorKind::WindowMlp] {
            assert_eq!(PredictorKind::parse(k.as_str()), Some(k));
        }
    }
}
