//! File-level pipelines behind the CLI subcommands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::eval::{cross_validate, EvalError, MetricsReport};
use crate::features::{
    extract_features_with, FeatureError, FeatureOptions, FeatureVector, FEATURE_NAMES,
};
use crate::forest::{fit_named, ForestError, ForestModel};
use crate::iq::{parse_raw, write_raw, IqError, IqFrame};
use crate::label::Label;
use crate::manifest::{
    DatasetManifest, ManifestEntry, ManifestError, MANIFEST_FILE, MANIFEST_SCHEMA_VERSION,
};
use crate::range::{trace_recording, PipelineOptions, PipelineTrace, RangeError};
use crate::sim::{generate_dataset, SimError};
use crate::table::{self, FeatureRow, TableError};

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("recording `{id}`: {message}")]
    Recording { id: String, message: String },
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Data(String),
}

impl WorkflowError {
    /// 1 for usage and configuration problems, 2 for data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            WorkflowError::Usage(_) | WorkflowError::Config(_) => 1,
            WorkflowError::Sim(SimError::InvalidConfig(_) | SimError::EmptyDataset) => 1,
            WorkflowError::Forest(ForestError::InvalidParams(_)) => 1,
            WorkflowError::Eval(EvalError::InvalidFolds(_)) => 1,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WorkflowError + '_ {
    move |source| WorkflowError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), WorkflowError> {
    fs::write(path, bytes).map_err(io_err(path))
}

/// Synthesizes `2 × n_per_class` recordings into `out_dir` and writes the manifest.
pub fn simulate(
    config: &RunConfig,
    out_dir: &Path,
    n_per_class: usize,
) -> Result<DatasetManifest, WorkflowError> {
    if n_per_class == 0 {
        return Err(WorkflowError::Usage(
            "n_per_class must be at least 1".into(),
        ));
    }
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let seed = config.simulation.seed;
    let recordings = generate_dataset(n_per_class, &config.radar, &config.scenarios, seed)?;
    let mut entries = Vec::with_capacity(recordings.len());
    for rec in &recordings {
        let file = format!("{}.iq", rec.id());
        let bytes = write_raw(&rec.frame).map_err(|e| WorkflowError::Recording {
            id: rec.id(),
            message: e.to_string(),
        })?;
        write_file(&out_dir.join(&file), bytes)?;
        let layout = rec.frame.layout();
        entries.push(ManifestEntry {
            id: rec.id(),
            file,
            label: rec.label(),
            num_chirps: layout.num_chirps,
            samples_per_chirp: layout.samples_per_chirp,
            num_channels: layout.num_channels,
            selected_channel: layout.selected_channel,
            slow_time_rate: rec.frame.slow_time_rate(),
        });
    }
    let manifest = DatasetManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        master_seed: seed,
        radar: config.radar.clone(),
        entries,
    };
    write_file(&out_dir.join(MANIFEST_FILE), manifest.to_toml())?;
    Ok(manifest)
}

/// Error raised anywhere between reading a recording and its feature vector.
#[derive(Debug, Error)]
pub enum RecordingError {
    #[error(transparent)]
    Iq(#[from] IqError),
    #[error(transparent)]
    Range(#[from] RangeError),
    #[error(transparent)]
    Features(#[from] FeatureError),
}

/// Preprocesses a frame and extracts its features.
pub fn featurize_frame(
    frame: &IqFrame,
    bandwidth: f64,
    pipeline: &PipelineOptions,
    features: &FeatureOptions,
) -> Result<(PipelineTrace, FeatureVector), RecordingError> {
    let trace = trace_recording(frame, bandwidth, pipeline)?;
    let fv = extract_features_with(&trace.diff, features)?;
    Ok((trace, fv))
}

fn dump_trace(dir: &Path, id: &str, trace: &PipelineTrace) -> Result<(), WorkflowError> {
    let mut power = String::from("bin\trange_m\tpower\n");
    for (k, p) in trace.profile.iter() {
        let _ = writeln!(power, "{k}\t{}\t{p}", k as f64 * trace.range_resolution);
    }
    let rate = trace.phase.slow_time_rate;
    let mut phase = String::from("n\tt_s\tphase_rad\n");
    for (n, p) in trace.phase.phase.iter().enumerate() {
        let _ = writeln!(phase, "{n}\t{}\t{p}", n as f64 / rate);
    }
    let mut diff = String::from("n\tt_s\tphase_diff_rad\n");
    for (i, d) in trace.diff.values().iter().enumerate() {
        let _ = writeln!(diff, "{}\t{}\t{d}", i + 1, (i + 1) as f64 / rate);
    }
    write_file(&dir.join(format!("{id}.power.tsv")), power)?;
    write_file(&dir.join(format!("{id}.phase.tsv")), phase)?;
    write_file(&dir.join(format!("{id}.diff.tsv")), diff)
}

/// Featurizes every recording of a manifest. Any failure aborts the whole
/// run and nothing is written.
pub fn featurize(
    manifest_path: &Path,
    config: &RunConfig,
    out_csv: &Path,
    dump_dir: Option<&Path>,
) -> Result<Vec<FeatureRow>, WorkflowError> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let bandwidth = manifest.radar.bandwidth;

    let results: Vec<(FeatureRow, PipelineTrace)> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let fail = |message: String| WorkflowError::Recording {
                id: entry.id.clone(),
                message,
            };
            let path = DatasetManifest::resolve(base, entry);
            let bytes = fs::read(&path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
            let frame = parse_raw(&bytes, entry.layout(), entry.slow_time_rate)
                .map_err(|e| fail(e.to_string()))?;
            let (trace, fv) =
                featurize_frame(&frame, bandwidth, &config.pipeline, &config.features)
                    .map_err(|e| fail(e.to_string()))?;
            Ok((
                FeatureRow::new(entry.id.clone(), Some(entry.label), &fv),
                trace,
            ))
        })
        .collect::<Result<_, WorkflowError>>()?;

    if let Some(dir) = dump_dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        for (row, trace) in &results {
            dump_trace(dir, &row.id, trace)?;
        }
    }
    let rows: Vec<FeatureRow> = results.into_iter().map(|(r, _)| r).collect();
    let mut buf = Vec::new();
    table::write_csv(&rows, &mut buf)?;
    write_file(out_csv, buf)?;
    Ok(rows)
}

pub fn read_features(path: &Path) -> Result<Vec<FeatureRow>, WorkflowError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    Ok(table::read_csv(file)?)
}

fn labeled(rows: &[FeatureRow]) -> Result<(Vec<Vec<f64>>, Vec<Label>), WorkflowError> {
    let mut x = Vec::with_capacity(rows.len());
    let mut y = Vec::with_capacity(rows.len());
    for r in rows {
        let label = r
            .label
            .ok_or_else(|| WorkflowError::Data(format!("row `{}` has no label", r.id)))?;
        x.push(r.values.to_vec());
        y.push(label);
    }
    Ok((x, y))
}

fn feature_names() -> Vec<String> {
    FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

/// Structured evaluation output: the effective configuration and the metrics.
#[derive(Debug, Serialize)]
pub struct EvaluationDocument<'a> {
    pub config: &'a RunConfig,
    pub report: &'a MetricsReport,
}

pub fn evaluate(
    features_csv: &Path,
    config: &RunConfig,
    out_report: &Path,
    importance_csv: Option<&Path>,
) -> Result<MetricsReport, WorkflowError> {
    let rows = read_features(features_csv)?;
    let (x, y) = labeled(&rows)?;
    let report = cross_validate(
        &x,
        &y,
        &feature_names(),
        &config.forest,
        config.evaluation.folds,
        config.evaluation.seed,
    )?;
    let doc = EvaluationDocument {
        config,
        report: &report,
    };
    let mut json = serde_json::to_string_pretty(&doc).expect("report serializes");
    json.push('\n');
    write_file(out_report, json)?;
    if let Some(path) = importance_csv {
        let mut text = String::from("feature,weight\n");
        for f in &report.feature_importance {
            let _ = writeln!(text, "{},{}", f.name, f.weight);
        }
        write_file(path, text)?;
    }
    Ok(report)
}

pub fn train(
    features_csv: &Path,
    config: &RunConfig,
    out_model: &Path,
) -> Result<ForestModel, WorkflowError> {
    let rows = read_features(features_csv)?;
    let (x, y) = labeled(&rows)?;
    let classes: Vec<usize> = y.iter().map(|l| l.index()).collect();
    let model = fit_named(&x, &classes, feature_names(), &config.forest)?;
    write_file(out_model, model.to_text())?;
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<ForestModel, WorkflowError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let model = ForestModel::from_text(&text)?;
    if model.feature_names != feature_names() {
        return Err(WorkflowError::Data(format!(
            "model features {:?} do not match the feature CSV schema",
            model.feature_names
        )));
    }
    Ok(model)
}

/// Predicted label per row, in row order.
pub fn predict(
    model_path: &Path,
    features_csv: &Path,
) -> Result<Vec<(String, Label)>, WorkflowError> {
    let model = load_model(model_path)?;
    let rows = read_features(features_csv)?;
    rows.iter()
        .map(|r| {
            let class = model.predict(&r.values)?;
            let label = Label::from_index(class).ok_or_else(|| {
                WorkflowError::Data(format!("model predicted unknown class {class}"))
            })?;
            Ok((r.id.clone(), label))
        })
        .collect()
}
