//! End-to-end experiment: data source, per-interval datasets, chronological
//! split, model grid training, cross-validation, comparison and a manifest
//! of every artifact written.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataset::{
    build_instances, build_window_instances, chronological_split, PointDataset, WindowDataset, DEFAULT_INTERVALS,
    DEFAULT_MAX_GAP_S, DEFAULT_TOLERANCE_S, WINDOW_LEN,
};
use crate::eval::{compare_predictors, cross_validate, ComparisonTable, CvTable};
use crate::exec::Execution;
use crate::geo::EarthModel;
use crate::ingest::{filter_records, group_sort, ingest_files, write_ais_csv, AisRecord, DropReason, FilterRules};
use crate::models::codec::{load_model_file, save_model_file};
use crate::models::{
    fit_point_predictor, fit_window_predictor, ForestConfig, MlpConfig, ModelSpec, PositionPredictor, MODEL_EXTENSION,
};
use crate::synth::{generate_fleet, FleetConfig};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: &'static str, message: String },
}

fn stage_err(stage: &'static str) -> impl Fn(String) -> ExperimentError {
    move |message| ExperimentError::Stage { stage, message }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceConfig {
    Synth {
        #[serde(default)]
        fleet: FleetConfig,
    },
    Csv {
        paths: Vec<PathBuf>,
    },
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig::Synth { fleet: FleetConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: SourceConfig,
    pub filter: FilterRules,
    pub intervals: Vec<u32>,
    pub tolerance_s: u32,
    pub max_gap_s: u32,
    pub window_len: usize,
    /// Share of instances (by time) used for training.
    pub train_fraction: f64,
    /// Cross-validation folds; 0 skips cross-validation.
    pub folds: usize,
    pub cv_seed: u64,
    pub models: Vec<ModelSpec>,
    pub output_dir: PathBuf,
    pub execution: Execution,
    /// Also write the cleaned report stream to `data/reports.csv`.
    pub write_data: bool,
}

/// The model grid: linear, three network shapes, a 100-tree forest and the
/// windowed network.
pub fn default_model_grid() -> Vec<ModelSpec> {
    vec![
        ModelSpec::Linear,
        ModelSpec::Mlp(MlpConfig::with_hidden(&[10])),
        ModelSpec::Mlp(MlpConfig::with_hidden(&[3])),
        ModelSpec::Mlp(MlpConfig::with_hidden(&[10, 10])),
        ModelSpec::Forest(ForestConfig::default()),
        ModelSpec::WindowMlp(MlpConfig::with_hidden(&[10])),
    ]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            source: SourceConfig::default(),
            filter: FilterRules::default(),
            intervals: DEFAULT_INTERVALS.to_vec(),
            tolerance_s: DEFAULT_TOLERANCE_S,
            max_gap_s: DEFAULT_MAX_GAP_S,
            window_len: WINDOW_LEN,
            train_fraction: 0.75,
            folds: 10,
            cv_seed: 20141101,
            models: default_model_grid(),
            output_dir: PathBuf::from("driftcast-out"),
            execution: Execution::default(),
            write_data: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.intervals.is_empty() || self.intervals.contains(&0) {
            return bad("intervals must be a non-empty list of positive minutes".into());
        }
        if self.intervals.iter().collect::<BTreeSet<_>>().len() != self.intervals.len() {
            return bad("intervals must not repeat".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction {} must lie in (0, 1)", self.train_fraction));
        }
        if self.folds == 1 {
            return bad("folds must be 0 (skip) or at least 2".into());
        }
        if self.window_len == 0 {
            return bad("window_len must be at least 1".into());
        }
        if self.models.is_empty() {
            return bad("the model grid is empty".into());
        }
        let mut labels = BTreeSet::new();
        for m in &self.models {
            if !labels.insert(m.label()) {
                return bad(format!("two models share the label {}", m.label()));
            }
        }
        match &self.source {
            SourceConfig::Synth { fleet } => fleet.validate().map_err(|e| ExperimentError::Config(e.to_string()))?,
            SourceConfig::Csv { paths } if paths.is_empty() => return bad("csv source lists no files".into()),
            SourceConfig::Csv { .. } => {}
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }

    pub fn wants_windows(&self) -> bool {
        self.models.iter().any(ModelSpec::is_window)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceSummary {
    pub records_in: usize,
    pub records_kept: usize,
    pub parse_errors: usize,
    pub dropped: BTreeMap<String, usize>,
}

/// Reads or generates the report stream and applies the filter rules.
pub fn load_source(cfg: &ExperimentConfig, exec: Execution) -> Result<(Vec<AisRecord>, SourceSummary), ExperimentError> {
    match &cfg.source {
        SourceConfig::Synth { fleet } => {
            let raw = generate_fleet(fleet, exec).map_err(|e| stage_err("synth")(e.to_string()))?;
            let outcome = filter_records(&raw, &cfg.filter);
            let summary = SourceSummary {
                records_in: raw.len(),
                records_kept: outcome.kept.len(),
                parse_errors: 0,
                dropped: dropped_names(&outcome.dropped),
            };
            Ok((outcome.kept, summary))
        }
        SourceConfig::Csv { paths } => {
            let outcome = ingest_files(paths, &cfg.filter, exec).map_err(|e| stage_err("ingest")(e.to_string()))?;
            let dropped: usize = outcome.dropped.values().sum();
            let summary = SourceSummary {
                records_in: outcome.records.len() + dropped,
                records_kept: outcome.records.len(),
                parse_errors: outcome.parse_errors.len(),
                dropped: dropped_names(&outcome.dropped),
            };
            Ok((outcome.records, summary))
        }
    }
}

fn dropped_names(d: &BTreeMap<DropReason, usize>) -> BTreeMap<String, usize> {
    d.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Datasets for one prediction interval, already split by time.
#[derive(Debug, Clone)]
pub struct IntervalData {
    pub interval_min: u32,
    pub point: PointDataset,
    pub train: PointDataset,
    pub test: PointDataset,
    pub window: Option<WindowSplit>,
}

#[derive(Debug, Clone)]
pub struct WindowSplit {
    pub all: WindowDataset,
    pub train: WindowDataset,
    pub test: WindowDataset,
}

pub fn build_interval_data(
    cfg: &ExperimentConfig,
    records: &[AisRecord],
    exec: Execution,
) -> Result<Vec<IntervalData>, ExperimentError> {
    let streams = group_sort(records);
    let err = stage_err("dataset");
    let mut out = Vec::with_capacity(cfg.intervals.len());
    for &interval in &cfg.intervals {
        let point = build_instances(&streams, interval, cfg.tolerance_s, exec).map_err(|e| err(e.to_string()))?;
        if point.is_empty() {
            return Err(err(format!("no point instances at interval {interval} min")));
        }
        let (train, test) = chronological_split(&point, cfg.train_fraction)
            .map_err(|e| stage_err("split")(format!("interval {interval} min: {e}")))?;
        let window = if cfg.wants_windows() {
            let all = build_window_instances(&streams, cfg.window_len, interval, cfg.tolerance_s, cfg.max_gap_s, exec)
                .map_err(|e| err(e.to_string()))?;
            let (train, test) = chronological_split(&all, cfg.train_fraction)
                .map_err(|e| stage_err("split")(format!("window set at interval {interval} min: {e}")))?;
            Some(WindowSplit { all, train, test })
        } else {
            None
        };
        out.push(IntervalData { interval_min: interval, point, train, test, window });
    }
    Ok(out)
}

/// Trains every (model, interval) pair on the training split.
pub fn train_grid(cfg: &ExperimentConfig, data: &[IntervalData], exec: Execution) -> Result<Vec<PositionPredictor>, ExperimentError> {
    let jobs: Vec<(&ModelSpec, &IntervalData)> = cfg.models.iter().flat_map(|m| data.iter().map(move |d| (m, d))).collect();
    let fitted = exec.map(&jobs, |(spec, d)| match spec {
        ModelSpec::WindowMlp(_) => {
            let w = d.window.as_ref().expect("window data built when window models are configured");
            fit_window_predictor(spec, &w.train, exec)
        }
        _ => fit_point_predictor(spec, &d.train, exec),
    });
    jobs.iter()
        .zip(fitted)
        .map(|((spec, d), r)| {
            r.map_err(|e| stage_err("train")(format!("{} at {} min: {e}", spec.label(), d.interval_min)))
        })
        .collect()
}

/// Cross-validates every trained family at every interval on the full
/// (unsplit) dataset of that interval.
pub fn cross_validation_table(cfg: &ExperimentConfig, data: &[IntervalData], exec: Execution) -> Result<CvTable, ExperimentError> {
    let jobs: Vec<(&ModelSpec, &IntervalData)> = cfg
        .models
        .iter()
        .filter(|m| !matches!(m, ModelSpec::Kinematic))
        .flat_map(|m| data.iter().map(move |d| (m, d)))
        .collect();
    let results = exec.map(&jobs, |(spec, d)| match spec {
        ModelSpec::WindowMlp(_) => {
            let w = d.window.as_ref().expect("window data built when window models are configured");
            cross_validate(&w.all, spec, cfg.folds, cfg.cv_seed, exec)
        }
        _ => cross_validate(&d.point, spec, cfg.folds, cfg.cv_seed, exec),
    });
    let rows = jobs
        .iter()
        .zip(results)
        .map(|((spec, d), r)| r.map_err(|e| stage_err("cv")(format!("{} at {} min: {e}", spec.label(), d.interval_min))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CvTable { rows })
}

/// Scores the trained predictors, plus the kinematic baseline when the grid
/// does not already hold it, on each interval's test split.
pub fn comparison_table(
    data: &[IntervalData],
    predictors: &[PositionPredictor],
    exec: Execution,
) -> Result<ComparisonTable, ExperimentError> {
    let mut table = ComparisonTable::default();
    for d in data {
        let mut set: Vec<PositionPredictor> = predictors.iter().filter(|p| p.interval_min == d.interval_min).cloned().collect();
        if !set.iter().any(|p| p.label == "kinematic") {
            set.push(PositionPredictor::kinematic(d.interval_min));
        }
        let window_test = d.window.as_ref().map(|w| &w.test);
        let rows = compare_predictors(&d.test, window_test, &set, EarthModel::default(), exec)
            .map_err(|e| stage_err("compare")(format!("interval {} min: {e}", d.interval_min)))?;
        table.extend(rows);
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory, with `/` separators.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub predictor: String,
    pub kind: String,
    pub interval_min: u32,
    pub n_train: usize,
    /// One per predicted coordinate; zero for the kinematic baseline.
    pub coordinate_models: usize,
    pub file: Artifact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportArtifact {
    pub name: String,
    pub csv: Artifact,
    pub text: Artifact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCounts {
    pub interval_min: u32,
    pub point_instances: usize,
    pub train: usize,
    pub test: usize,
    pub window_instances: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub complete: bool,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub config_digest: String,
    pub source: Option<SourceSummary>,
    pub counts: Vec<IntervalCounts>,
    pub data: Vec<Artifact>,
    pub models: Vec<ModelArtifact>,
    pub reports: Vec<ReportArtifact>,
    /// Wall-clock seconds per stage. Kept apart from everything else so the
    /// rest of the manifest is reproducible.
    pub timings: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn load(output_dir: &Path) -> Result<Self, ExperimentError> {
        let path = output_dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))
    }

    pub fn model_paths(&self, output_dir: &Path) -> Vec<PathBuf> {
        self.models.iter().map(|m| output_dir.join(&m.file.path)).collect()
    }
}

/// Writes `bytes` under `root` and returns its manifest entry.
pub fn write_artifact(root: &Path, rel: &str, bytes: &[u8]) -> Result<Artifact, String> {
    let path = root.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
    }
    fs::write(&path, bytes).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(Artifact { path: rel.to_string(), sha256: hex::encode(Sha256::digest(bytes)) })
}

/// Relative location of a saved model: one directory per model label, one
/// file per interval, so each directory can be served as a registry.
pub fn model_rel_path(label: &str, interval_min: u32) -> String {
    format!("models/{label}/interval-{interval_min:03}.{MODEL_EXTENSION}")
}

pub fn save_predictors(root: &Path, predictors: &[PositionPredictor]) -> Result<Vec<ModelArtifact>, String> {
    predictors
        .iter()
        .map(|p| {
            let rel = model_rel_path(&p.label, p.interval_min);
            let path = root.join(&rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
            }
            save_model_file(p, &path).map_err(|e| e.to_string())?;
            let bytes = fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            Ok(ModelArtifact {
                predictor: p.label.clone(),
                kind: p.kind().to_string(),
                interval_min: p.interval_min,
                n_train: p.training.n_train,
                coordinate_models: if p.kind() == crate::models::PredictorKind::Kinematic { 0 } else { 2 },
                file: Artifact { path: rel, sha256: hex::encode(Sha256::digest(&bytes)) },
            })
        })
        .collect()
}

/// Loads the models `train` saved for this config's grid and intervals.
pub fn load_saved_predictors(cfg: &ExperimentConfig) -> Result<Vec<PositionPredictor>, ExperimentError> {
    let mut out = Vec::new();
    for spec in &cfg.models {
        for &interval in &cfg.intervals {
            let path = cfg.output_dir.join(model_rel_path(&spec.label(), interval));
            let p = load_model_file(&path).map_err(|e| stage_err("load")(format!("{}: {e}", path.display())))?;
            if p.interval_min != interval || p.label != spec.label() {
                return Err(stage_err("load")(format!(
                    "{} holds {} at {} min, expected {} at {interval} min",
                    path.display(),
                    p.label,
                    p.interval_min,
                    spec.label()
                )));
            }
            out.push(p);
        }
    }
    Ok(out)
}

pub fn write_report(root: &Path, name: &str, csv: &str, text: &str) -> Result<ReportArtifact, String> {
    Ok(ReportArtifact {
        name: name.to_string(),
        csv: write_artifact(root, &format!("reports/{name}.csv"), csv.as_bytes())?,
        text: write_artifact(root, &format!("reports/{name}.txt"), text.as_bytes())?,
    })
}

fn write_manifest(root: &Path, manifest: &Manifest) -> Result<(), ExperimentError> {
    let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::create_dir_all(root).map_err(|e| stage_err("manifest")(format!("{}: {e}", root.display())))?;
    fs::write(root.join(MANIFEST_FILE), json + "\n").map_err(|e| stage_err("manifest")(e.to_string()))
}

/// Runs every stage in order. On failure the manifest is still written,
/// marked incomplete with the failing stage, and the error is returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Manifest, ExperimentError> {
    cfg.validate()?;
    let root = cfg.output_dir.clone();
    let mut manifest = Manifest { config_digest: cfg.digest(), ..Manifest::default() };
    let result = run_stages(cfg, &root, &mut manifest);
    match &result {
        Ok(()) => manifest.complete = true,
        Err(e) => {
            manifest.failed_stage = Some(match e {
                ExperimentError::Stage { stage, .. } => stage.to_string(),
                ExperimentError::Config(_) => "config".into(),
            });
            manifest.error = Some(e.to_string());
        }
    }
    write_manifest(&root, &manifest)?;
    result.map(|()| manifest)
}

fn run_stages(cfg: &ExperimentConfig, root: &Path, manifest: &mut Manifest) -> Result<(), ExperimentError> {
    let exec = cfg.execution;
    let mut clock = Instant::now();
    let mut lap = |manifest: &mut Manifest, stage: &str| {
        manifest.timings.insert(stage.to_string(), clock.elapsed().as_secs_f64());
        clock = Instant::now();
    };

    let (records, summary) = load_source(cfg, exec)?;
    manifest.source = Some(summary);
    if cfg.write_data {
        let mut buf = Vec::new();
        write_ais_csv(&mut buf, &records).map_err(|e| stage_err("source")(e.to_string()))?;
        manifest.data.push(write_artifact(root, "data/reports.csv", &buf).map_err(stage_err("source"))?);
    }
    lap(manifest, "source");

    let data = build_interval_data(cfg, &records, exec)?;
    manifest.counts = data
        .iter()
        .map(|d| IntervalCounts {
            interval_min: d.interval_min,
            point_instances: d.point.len(),
            train: d.train.len(),
            test: d.test.len(),
            window_instances: d.window.as_ref().map(|w| w.all.len()),
        })
        .collect();
    lap(manifest, "dataset");

    let predictors = train_grid(cfg, &data, exec)?;
    manifest.models = save_predictors(root, &predictors).map_err(stage_err("train"))?;
    lap(manifest, "train");

    if cfg.folds >= 2 {
        let cv = cross_validation_table(cfg, &data, exec)?;
        manifest.reports.push(write_report(root, "cross_validation", &cv.to_csv(), &cv.to_text()).map_err(stage_err("cv"))?);
        lap(manifest, "cv");
    }

    let comparison = comparison_table(&data, &predictors, exec)?;
    manifest
        .reports
        .push(write_report(root, "comparison", &comparison.to_csv(), &comparison.to_text()).map_err(stage_err("compare"))?);
    lap(manifest, "compare");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::serve::load_registry;

    fn minimal(out: &Path) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!(
            r#"
            intervals = [10]
            models = [{{ kind = "linear" }}]
            output_dir = "{}"
            [source]
            kind = "synth"
            [source.fleet]
            n_vessels = 1
            duration_min = 240
            "#,
            out.display()
        ))
        .unwrap()
    }

    #[test]
    fn minimal_config_writes_one_model_and_two_reports() {
        let dir = tempfile::tempdir().unwrap();
        let m = run_experiment(&minimal(dir.path())).unwrap();
        assert!(m.complete);
        assert_eq!(m.models.len(), 1);
        assert_eq!(m.reports.len(), 2);
        assert_eq!(m.reports.iter().map(|r| r.name.as_str()).collect::<Vec<_>>(), ["cross_validation", "comparison"]);
        assert!(load_registry(&m.model_paths(dir.path())).is_ok());
        let on_disk = Manifest::load(dir.path()).unwrap();
        assert_eq!(on_disk, m);
        let comparison = fs::read_to_string(dir.path().join("reports/comparison.csv")).unwrap();
        assert!(comparison.lines().any(|l| l.starts_with("kinematic,10,")));
    }

    #[test]
    fn reruns_are_byte_identical() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ma = run_experiment(&minimal(a.path())).unwrap();
        let mut cfg = minimal(b.path());
        cfg.execution = Execution::Sequential;
        let mb = run_experiment(&cfg).unwrap();
        let strip = |m: &Manifest| (m.data.clone(), m.models.clone(), m.reports.clone(), m.counts.clone());
        assert_eq!(strip(&ma), strip(&mb));
        for r in &ma.reports {
            assert_eq!(fs::read(a.path().join(&r.csv.path)).unwrap(), fs::read(b.path().join(&r.csv.path)).unwrap());
        }
    }

    #[test]
    fn four_intervals_give_eight_coordinate_models_per_family() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = minimal(dir.path());
        cfg.intervals = vec![4, 10, 20, 30];
        cfg.folds = 0;
        cfg.models = vec![ModelSpec::Linear, ModelSpec::Forest(ForestConfig { n_trees: 3, ..ForestConfig::default() })];
        let m = run_experiment(&cfg).unwrap();
        for label in ["linear", "forest-3"] {
            let n: usize = m.models.iter().filter(|a| a.predictor == label).map(|a| a.coordinate_models).sum();
            assert_eq!(n, 8, "{label}");
        }
        assert_eq!(m.reports.len(), 1);
        let dirs: Vec<PathBuf> = ["linear", "forest-3"].iter().map(|l| dir.path().join("models").join(l)).collect();
        for d in dirs {
            assert_eq!(crate::serve::load_registry_dir(&d).unwrap().intervals(), vec![4, 10, 20, 30]);
        }
    }

    #[test]
    fn failure_marks_the_manifest_incomplete() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = minimal(dir.path());
        // far longer than the simulated day, so no pairs exist
        cfg.intervals = vec![500];
        cfg.models = vec![ModelSpec::Linear];
        let err = run_experiment(&cfg).unwrap_err();
        assert!(matches!(err, ExperimentError::Stage { stage: "dataset", .. }), "{err}");
        let m = Manifest::load(dir.path()).unwrap();
        assert!(!m.complete);
        assert_eq!(m.failed_stage.as_deref(), Some("dataset"));
        assert_eq!(m.data.len(), 1);
    }

    #[test]
    fn saved_models_reload_for_comparison() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = minimal(dir.path());
        cfg.folds = 0;
        let m = run_experiment(&cfg).unwrap();
        let loaded = load_saved_predictors(&cfg).unwrap();
        assert_eq!(loaded.len(), m.models.len());
        cfg.intervals = vec![20];
        assert!(matches!(load_saved_predictors(&cfg), Err(ExperimentError::Stage { stage: "load", .. })));
    }

    #[test]
    fn config_validation() {
        let ok = ExperimentConfig::default();
        assert!(ok.validate().is_ok());
        assert_eq!(ok.models.len(), 6);
        for bad in [
            "intervals = []",
            "intervals = [0]",
            "intervals = [4, 4]",
            "train_fraction = 1.0",
            "folds = 1",
            "models = []",
            r#"models = [{ kind = "linear" }, { kind = "linear" }]"#,
            "unknown_key = 3",
            "[source]\nkind = \"csv\"\npaths = []",
        ] {
            assert!(ExperimentConfig::from_toml(bad).is_err(), "{bad}");
        }
    }
}
