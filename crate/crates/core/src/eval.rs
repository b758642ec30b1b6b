//! Accuracy metrics, k-fold cross-validation and predictor comparison.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{kfold_assign, Dataset, DatasetError, Instance, PointDataset, Target, WindowDataset};
use crate::exec::Execution;
use crate::geo::{haversine_km, EarthModel, GeoError, GeoPoint};
use crate::models::{fit_regressor, ModelError, ModelSpec, PositionPredictor, PredictorKind};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{predicted} predictions for {actual} actual values")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("fold {fold}: {source}")]
    Fold { fold: usize, source: ModelError },
    #[error("{predictor}: {source}")]
    Predict { predictor: String, source: ModelError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("{0}")]
    Contract(String),
}

/// Per-coordinate regression accuracy. Correlation is undefined when either
/// sequence is constant; the relative errors when `actual` is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub correlation: Option<f64>,
    pub mae: f64,
    pub rmse: f64,
    pub rae_pct: Option<f64>,
    pub rrse_pct: Option<f64>,
    pub n: usize,
}

fn check_lengths(predicted: usize, actual: usize) -> Result<(), EvalError> {
    if predicted != actual {
        return Err(EvalError::LengthMismatch { predicted, actual });
    }
    if actual == 0 {
        return Err(EvalError::Empty);
    }
    Ok(())
}

pub fn regression_metrics(predicted: &[f64], actual: &[f64]) -> Result<RegressionMetrics, EvalError> {
    check_lengths(predicted.len(), actual.len())?;
    let n = actual.len() as f64;
    let mean_a = actual.iter().sum::<f64>() / n;
    let mean_p = predicted.iter().sum::<f64>() / n;
    let (mut abs, mut sq, mut abs_dev, mut sq_dev) = (0.0, 0.0, 0.0, 0.0);
    let (mut cov, mut var_p) = (0.0, 0.0);
    for (&p, &a) in predicted.iter().zip(actual) {
        let e = p - a;
        abs += e.abs();
        sq += e * e;
        abs_dev += (a - mean_a).abs();
        sq_dev += (a - mean_a) * (a - mean_a);
        cov += (p - mean_p) * (a - mean_a);
        var_p += (p - mean_p) * (p - mean_p);
    }
    let correlation = (sq_dev > 0.0 && var_p > 0.0).then(|| (cov / (var_p * sq_dev).sqrt()).clamp(-1.0, 1.0));
    Ok(RegressionMetrics {
        correlation,
        mae: abs / n,
        rmse: (sq / n).sqrt(),
        rae_pct: (abs_dev > 0.0).then(|| 100.0 * abs / abs_dev),
        rrse_pct: (sq_dev > 0.0).then(|| 100.0 * (sq / sq_dev).sqrt()),
        n: actual.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaversineReport {
    pub mean_km: f64,
    pub median_km: f64,
    pub p95_km: f64,
    pub n_predictions: usize,
}

/// Nearest-rank percentile of an ascending slice.
fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Summary of per-prediction distances. The mean is summed in input order.
pub fn summarize_distances(distances: &[f64]) -> Result<HaversineReport, EvalError> {
    if distances.is_empty() {
        return Err(EvalError::Empty);
    }
    let mean_km = distances.iter().sum::<f64>() / distances.len() as f64;
    let mut sorted = distances.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(HaversineReport {
        mean_km,
        median_km: nearest_rank(&sorted, 50.0),
        p95_km: nearest_rank(&sorted, 95.0),
        n_predictions: distances.len(),
    })
}

pub fn haversine_report(predicted: &[GeoPoint], actual: &[GeoPoint], earth: EarthModel) -> Result<HaversineReport, EvalError> {
    check_lengths(predicted.len(), actual.len())?;
    let d = predicted.iter().zip(actual).map(|(&p, &a)| haversine_km(p, a, earth)).collect::<Result<Vec<_>, _>>()?;
    summarize_distances(&d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub label: String,
    pub interval_min: u32,
    pub k: usize,
    pub lon: RegressionMetrics,
    pub lat: RegressionMetrics,
    /// Mean wall-clock seconds to fit both coordinates on one fold.
    pub mean_train_seconds: f64,
}

impl CvResult {
    pub fn metrics(&self, target: Target) -> &RegressionMetrics {
        match target {
            Target::Lon => &self.lon,
            Target::Lat => &self.lat,
        }
    }
}

/// Held-out indices, their lon and lat predictions, and the fit time.
type FoldOutcome = (Vec<usize>, Vec<f64>, Vec<f64>, f64);

/// k-fold cross-validation of one model family. Each fold trains on the
/// other k-1 folds; metrics are computed over the concatenated held-out
/// predictions, placed back in instance order.
pub fn cross_validate<I: Instance>(
    d: &Dataset<I>,
    spec: &ModelSpec,
    k: usize,
    seed: u64,
    exec: Execution,
) -> Result<CvResult, EvalError> {
    if matches!(spec, ModelSpec::Kinematic) {
        return Err(EvalError::Contract("the kinematic predictor is not trained, so it has nothing to cross-validate".into()));
    }
    let folds = kfold_assign(d.len(), k, seed)?;
    let x = d.features();
    let lon_y = d.targets(Target::Lon);
    let lat_y = d.targets(Target::Lat);

    let outcomes = exec.map_range(k, |fold| -> Result<FoldOutcome, EvalError> {
        let train_idx: Vec<usize> = (0..d.len()).filter(|&i| folds[i] != fold).collect();
        let test_idx: Vec<usize> = (0..d.len()).filter(|&i| folds[i] == fold).collect();
        let sub = |idx: &[usize], y: &[f64]| -> (crate::dataset::FeatureMatrix, Vec<f64>) {
            let mut values = Vec::with_capacity(idx.len() * x.dim);
            for &i in idx {
                values.extend_from_slice(x.row(i));
            }
            (crate::dataset::FeatureMatrix { rows: idx.len(), dim: x.dim, values }, idx.iter().map(|&i| y[i]).collect())
        };
        let (x_train, lon_train) = sub(&train_idx, &lon_y);
        let lat_train: Vec<f64> = train_idx.iter().map(|&i| lat_y[i]).collect();
        let started = Instant::now();
        let lon = fit_regressor(spec, &x_train, &lon_train, Target::Lon, exec).map_err(|source| EvalError::Fold { fold, source })?;
        let lat = fit_regressor(spec, &x_train, &lat_train, Target::Lat, exec).map_err(|source| EvalError::Fold { fold, source })?;
        let seconds = started.elapsed().as_secs_f64();
        let p_lon = test_idx.iter().map(|&i| lon.predict(x.row(i))).collect();
        let p_lat = test_idx.iter().map(|&i| lat.predict(x.row(i))).collect();
        Ok((test_idx, p_lon, p_lat, seconds))
    });

    let mut pred_lon = vec![f64::NAN; d.len()];
    let mut pred_lat = vec![f64::NAN; d.len()];
    let mut total_seconds = 0.0;
    for outcome in outcomes {
        let (idx, p_lon, p_lat, seconds) = outcome?;
        for (j, &i) in idx.iter().enumerate() {
            pred_lon[i] = p_lon[j];
            pred_lat[i] = p_lat[j];
        }
        total_seconds += seconds;
    }
    Ok(CvResult {
        label: spec.label(),
        interval_min: d.interval_min,
        k,
        lon: regression_metrics(&pred_lon, &lon_y)?,
        lat: regression_metrics(&pred_lat, &lat_y)?,
        mean_train_seconds: total_seconds / k as f64,
    })
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.digits$}"))
}

/// Renders rows as left-aligned, space-padded columns.
fn align(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(header.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

/// Cross-validation results for several models and intervals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CvTable {
    pub rows: Vec<CvResult>,
}

impl CvTable {
    pub const HEADER: [&'static str; 9] =
        ["predictor", "interval_min", "target", "n", "correlation", "mae_deg", "rmse_deg", "rae_pct", "rrse_pct"];

    fn cells(&self) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        for r in &self.rows {
            for t in Target::BOTH {
                let m = r.metrics(t);
                out.push(vec![
                    r.label.clone(),
                    r.interval_min.to_string(),
                    t.name().to_string(),
                    m.n.to_string(),
                    fmt_opt(m.correlation, 4),
                    format!("{:.6}", m.mae),
                    format!("{:.6}", m.rmse),
                    fmt_opt(m.rae_pct, 4),
                    fmt_opt(m.rrse_pct, 4),
                ]);
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        to_csv(&Self::HEADER, &self.cells())
    }

    pub fn to_text(&self) -> String {
        align(&Self::HEADER, &self.cells())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub predictor: String,
    pub interval_min: u32,
    pub n_train: usize,
    pub report: HaversineReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub const HEADER: [&'static str; 7] = ["predictor", "interval_min", "n_train", "n_test", "mean_km", "median_km", "p95_km"];

    pub fn extend(&mut self, other: ComparisonTable) {
        self.rows.extend(other.rows);
    }

    pub fn row(&self, predictor: &str, interval_min: u32) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.predictor == predictor && r.interval_min == interval_min)
    }

    fn cells(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.predictor.clone(),
                    r.interval_min.to_string(),
                    r.n_train.to_string(),
                    r.report.n_predictions.to_string(),
                    format!("{:.6}", r.report.mean_km),
                    format!("{:.6}", r.report.median_km),
                    format!("{:.6}", r.report.p95_km),
                ]
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        to_csv(&Self::HEADER, &self.cells())
    }

    pub fn to_text(&self) -> String {
        align(&Self::HEADER, &self.cells())
    }
}

fn distances<I: Sync>(
    instances: &[I],
    p: &PositionPredictor,
    predict: impl Fn(&PositionPredictor, &I) -> Result<(GeoPoint, GeoPoint), ModelError> + Sync,
    earth: EarthModel,
    exec: Execution,
) -> Result<Vec<f64>, EvalError> {
    let pairs = exec.map(instances, |inst| predict(p, inst));
    pairs
        .into_iter()
        .map(|r| {
            let (got, want) = r.map_err(|source| EvalError::Predict { predictor: p.label.clone(), source })?;
            Ok(haversine_km(got, want, earth)?)
        })
        .collect()
}

/// Mean/median/p95 haversine error of each predictor on the same test set.
/// Point predictors score on `test`; window predictors on `window_test`,
/// each row carrying its own instance count. A kinematic predictor is
/// evaluated at the test set's interval.
pub fn compare_predictors(
    test: &PointDataset,
    window_test: Option<&WindowDataset>,
    predictors: &[PositionPredictor],
    earth: EarthModel,
    exec: Execution,
) -> Result<ComparisonTable, EvalError> {
    if test.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut rows = Vec::with_capacity(predictors.len());
    for p in predictors {
        let d = match p.kind() {
            PredictorKind::Kinematic => {
                let k = PositionPredictor::kinematic(test.interval_min);
                distances(&test.instances, &k, |p, i| Ok((p.predict_point_instance(i)?, GeoPoint::new(i.next_lat, i.next_lon)?)), earth, exec)?
            }
            kind => {
                if p.interval_min != test.interval_min {
                    return Err(EvalError::Contract(format!(
                        "{} predicts {} min ahead but the test set is for {} min",
                        p.label, p.interval_min, test.interval_min
                    )));
                }
                if kind == PredictorKind::WindowMlp {
                    let w = window_test
                        .filter(|w| !w.is_empty())
                        .ok_or_else(|| EvalError::Contract(format!("{} needs a window test set", p.label)))?;
                    if w.interval_min != p.interval_min {
                        return Err(EvalError::Contract(format!("window test set is for {} min", w.interval_min)));
                    }
                    distances(&w.instances, p, |p, i| Ok((p.predict_window_instance(i)?, GeoPoint::new(i.next_lat, i.next_lon)?)), earth, exec)?
                } else {
                    distances(&test.instances, p, |p, i| Ok((p.predict_point_instance(i)?, GeoPoint::new(i.next_lat, i.next_lon)?)), earth, exec)?
                }
            }
        };
        rows.push(ComparisonRow {
            predictor: p.label.clone(),
            interval_min: test.interval_min,
            n_train: p.training.n_train,
            report: summarize_distances(&d)?,
        });
    }
    Ok(ComparisonTable { rows })
}
