//! End-to-end runs over one image or a corpus: load, refine, translate,
//! score, and write reports.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    aggregate, evaluate, AggregateMetrics, AnalysisError, BehaviorThresholds, MetricsReport,
    Provenance,
};
use crate::composer::{ComposeError, FillPolicy, Scene};
use crate::logic::{translate, LogicError, LogicExpr};
use crate::overlay::render_overlay;
use crate::predictor::{
    CachedPredictor, ExecPredictor, HttpPredictor, Label, ModelEndpoint, PredictError,
    PredictionCache, Predictor, RemoteOptions, SyntheticModelFile,
};
use crate::refine::{refine, FinalStateSet, RefineError, RefinementConfig};
use crate::regions::{
    load_label_map, GroundTruthMaskSet, RegionPartition, RegionsError, DEFAULT_IOU_THRESHOLD,
    DEFAULT_MERGE_THRESHOLD,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error(transparent)]
    Regions(#[from] RegionsError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error(transparent)]
    Refine(#[from] RefineError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Broad failure categories, each with its own process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Input,
    Config,
    Predictor,
    Budget,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Input => 1,
            FailureKind::Config => 2,
            FailureKind::Predictor => 3,
            FailureKind::Budget => 4,
        }
    }
}

impl PipelineError {
    pub fn kind(&self) -> FailureKind {
        match self {
            PipelineError::Config(_) => FailureKind::Config,
            PipelineError::Refine(RefineError::Predict(_)) => FailureKind::Predictor,
            PipelineError::Refine(RefineError::BudgetExhausted { .. }) => FailureKind::Budget,
            PipelineError::Refine(RefineError::InvalidConfig(_)) => FailureKind::Config,
            PipelineError::Regions(RegionsError::OutOfRange { .. }) => FailureKind::Config,
            _ => FailureKind::Input,
        }
    }
}

impl From<PredictError> for PipelineError {
    fn from(e: PredictError) -> Self {
        PipelineError::Refine(RefineError::Predict(e))
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Knobs shared by every image of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub fill: FillPolicy,
    pub refine: RefinementConfig,
    pub merge_threshold: f64,
    pub iou_threshold: f64,
    pub thresholds: BehaviorThresholds,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            fill: FillPolicy::default(),
            refine: RefinementConfig::default(),
            merge_threshold: DEFAULT_MERGE_THRESHOLD,
            iou_threshold: DEFAULT_IOU_THRESHOLD,
            thresholds: BehaviorThresholds::default(),
        }
    }
}

/// One corpus entry. Relative paths in a manifest resolve against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub image: PathBuf,
    pub labels: PathBuf,
    #[serde(default)]
    pub gt: Vec<PathBuf>,
}

pub fn load_manifest(path: &Path) -> Result<Vec<ImageEntry>, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    let mut entries: Vec<ImageEntry> = serde_json::from_str(&text)
        .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    for entry in &mut entries {
        entry.image = base.join(&entry.image);
        entry.labels = base.join(&entry.labels);
        for gt in &mut entry.gt {
            *gt = base.join(&*gt);
        }
    }
    Ok(entries)
}

/// Image ids from file stems, suffixed with the entry index on collision.
pub fn image_ids(entries: &[ImageEntry]) -> Vec<String> {
    let mut seen = HashSet::new();
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let stem = e
                .image
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("image{i}"));
            if seen.insert(stem.clone()) {
                stem
            } else {
                let id = format!("{stem}-{i}");
                seen.insert(id.clone());
                id
            }
        })
        .collect()
}

/// Builds the predictor for an endpoint, wrapped in a shared cache.
pub fn connect(
    endpoint: &ModelEndpoint,
    options: RemoteOptions,
    cache: Arc<PredictionCache>,
) -> Result<Box<dyn Predictor>, PipelineError> {
    let inner: Box<dyn Predictor> = match endpoint {
        ModelEndpoint::Exec(argv) => Box::new(ExecPredictor::spawn(argv, options)?),
        ModelEndpoint::Http(url) => Box::new(HttpPredictor::new(url.clone(), options)),
        ModelEndpoint::Synthetic(path) => {
            let text = fs::read_to_string(path).map_err(io_error(path))?;
            let file: SyntheticModelFile = serde_json::from_str(&text)
                .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
            Box::new(
                file.into_model()
                    .map_err(|e| PipelineError::Config(e.to_string()))?,
            )
        }
    };
    Ok(Box::new(CachedPredictor::new(inner, cache)))
}

/// Loaded image plus its merged partition.
pub struct LoadedImage {
    pub id: String,
    pub image: RgbImage,
    pub partition: RegionPartition,
}

pub fn load_image(
    id: &str,
    entry: &ImageEntry,
    settings: &Settings,
) -> Result<LoadedImage, PipelineError> {
    let image = image::open(&entry.image)
        .map_err(|source| PipelineError::Image {
            path: entry.image.display().to_string(),
            source,
        })?
        .to_rgb8();
    let partition = load_label_map(&entry.labels)?.merge_small_regions(settings.merge_threshold)?;
    Ok(LoadedImage {
        id: id.to_string(),
        image,
        partition,
    })
}

/// Result of analyzing one image. Metric fields sit at the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusReport {
    pub image: String,
    pub reference_label: Label,
    pub region_count: usize,
    pub query_count: u64,
    pub states: Vec<Vec<u32>>,
    pub ground_truth: Vec<u32>,
    pub logic: String,
    pub logic_expr: LogicExpr,
    #[serde(flatten)]
    pub metrics: MetricsReport,
}

pub fn refine_loaded(
    loaded: &LoadedImage,
    model: &dyn Predictor,
    settings: &Settings,
) -> Result<FinalStateSet, PipelineError> {
    let scene = Scene::new(&loaded.image, &loaded.partition, settings.fill)?;
    Ok(refine(&scene, &loaded.id, model, &settings.refine)?)
}

pub fn analyze_loaded(
    loaded: &LoadedImage,
    gt: &GroundTruthMaskSet,
    model: &dyn Predictor,
    settings: &Settings,
) -> Result<(FinalStateSet, FocusReport), PipelineError> {
    let finals = refine_loaded(loaded, model, settings)?;
    let gt_state = loaded
        .partition
        .ground_truth_state(gt, settings.iou_threshold)?;
    let expr = translate(finals.states())?;
    let provenance = Provenance {
        fill_mode: settings.fill.to_string(),
        beam_size: settings.refine.beam_size,
        iou_threshold: settings.iou_threshold,
    };
    let metrics = evaluate(
        finals.states(),
        &gt_state,
        &loaded.partition,
        &settings.thresholds,
        &provenance,
    )?;
    let report = FocusReport {
        image: loaded.id.clone(),
        reference_label: finals.reference_label().clone(),
        region_count: loaded.partition.region_count(),
        query_count: finals.query_count(),
        states: finals.region_id_lists(),
        ground_truth: gt_state.region_ids(),
        logic: expr.render(),
        logic_expr: expr,
        metrics,
    };
    Ok((finals, report))
}

/// Per-image failure recorded in a corpus report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageFailure {
    pub image: String,
    pub kind: FailureKind,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub images: Vec<FocusReport>,
    pub failures: Vec<ImageFailure>,
    pub aggregate: Option<AggregateMetrics>,
}

impl CorpusReport {
    /// Exit code of the most severe failure, 0 when every image succeeded.
    pub fn exit_code(&self) -> i32 {
        self.failures
            .iter()
            .map(|f| f.kind)
            .max()
            .map_or(0, FailureKind::exit_code)
    }
}

pub enum Task {
    Refine,
    Analyze,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    fs::write(path, bytes).map_err(io_error(path))
}

fn save_overlay(
    path: &Path,
    loaded: &LoadedImage,
    finals: &FinalStateSet,
) -> Result<(), PipelineError> {
    render_overlay(&loaded.image, &loaded.partition, finals.states())
        .save(path)
        .map_err(|source| PipelineError::Image {
            path: path.display().to_string(),
            source,
        })
}

fn run_one(
    id: &str,
    entry: &ImageEntry,
    task: &Task,
    model: &dyn Predictor,
    settings: &Settings,
    out_dir: &Path,
) -> Result<Option<FocusReport>, PipelineError> {
    let loaded = load_image(id, entry, settings)?;
    let outcome = match task {
        Task::Refine => refine_loaded(&loaded, model, settings).map(|f| (f, None)),
        Task::Analyze => {
            if entry.gt.is_empty() {
                return Err(PipelineError::Config(format!(
                    "{id}: analysis needs ground-truth masks"
                )));
            }
            let gt = GroundTruthMaskSet::load(&entry.gt)?;
            analyze_loaded(&loaded, &gt, model, settings).map(|(f, r)| (f, Some(r)))
        }
    };
    let (finals, report) = match outcome {
        Ok(done) => done,
        Err(PipelineError::Refine(RefineError::BudgetExhausted { limit, partial })) => {
            // keep what was found; the file says partial, the run still fails
            write_file(
                &out_dir.join(format!("{id}.states.json")),
                partial.to_json().as_bytes(),
            )?;
            return Err(RefineError::BudgetExhausted { limit, partial }.into());
        }
        Err(e) => return Err(e),
    };
    write_file(
        &out_dir.join(format!("{id}.states.json")),
        finals.to_json().as_bytes(),
    )?;
    save_overlay(&out_dir.join(format!("{id}.overlay.png")), &loaded, &finals)?;
    if let Some(report) = &report {
        let json = serde_json::to_string_pretty(report).expect("report serializes");
        write_file(&out_dir.join(format!("{id}.report.json")), json.as_bytes())?;
    }
    Ok(report)
}

/// Processes every entry on the rayon pool, writing per-image outputs into
/// `out_dir`. For [`Task::Analyze`] also writes `corpus.json`.
///
/// Images fail independently; failures are collected, not propagated.
pub fn run_corpus(
    entries: &[ImageEntry],
    task: Task,
    model: &dyn Predictor,
    settings: &Settings,
    out_dir: &Path,
) -> Result<CorpusReport, PipelineError> {
    fs::create_dir_all(out_dir).map_err(io_error(out_dir))?;
    let ids = image_ids(entries);
    let outcomes: Vec<_> = entries
        .par_iter()
        .zip(ids.par_iter())
        .map(|(entry, id)| run_one(id, entry, &task, model, settings, out_dir))
        .collect();

    let mut images = Vec::new();
    let mut failures = Vec::new();
    for (id, outcome) in ids.iter().zip(outcomes) {
        match outcome {
            Ok(Some(report)) => images.push(report),
            Ok(None) => {}
            Err(e) => failures.push(ImageFailure {
                image: id.clone(),
                kind: e.kind(),
                error: e.to_string(),
            }),
        }
    }
    let aggregate = aggregate(images.iter().map(|r| &r.metrics), &settings.thresholds);
    let report = CorpusReport {
        images,
        failures,
        aggregate,
    };
    if let Task::Analyze = task {
        let json = serde_json::to_string_pretty(&report).expect("corpus report serializes");
        write_file(&out_dir.join("corpus.json"), json.as_bytes())?;
    }
    Ok(report)
}
