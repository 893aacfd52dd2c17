//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::analysis::BehaviorThresholds;
use crate::composer::FillPolicy;
use crate::logic::translate;
use crate::pipeline::{
    connect, load_manifest, run_corpus, FailureKind, ImageEntry, PipelineError, Settings, Task,
};
use crate::predictor::{ModelEndpoint, PredictionCache, RemoteOptions};
use crate::refine::{
    BeamArg, BeamScope, CandidateOrder, FinalStateSet, RefinementConfig, DEFAULT_MAX_QUERIES,
};

#[derive(Debug, Parser)]
#[command(
    name = "visfocus",
    version,
    about = "Locate, factor and score the visual focus of a black-box classifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Find final states; write `<id>.states.json` and `<id>.overlay.png`.
    Refine(RunArgs),
    /// Refine, factor, score and classify; also writes `<id>.report.json`
    /// and `corpus.json`.
    Analyze(RunArgs),
    /// Print the logic expression for a final-state file.
    Translate {
        states: PathBuf,
        /// Print the expression tree as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
}

impl FromStr for CandidateOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "area" | "largest-area-first" => Ok(CandidateOrder::LargestAreaFirst),
            "index" | "ascending-index" => Ok(CandidateOrder::AscendingIndex),
            _ => Err(format!(
                "unknown candidate order {s:?}: expected area or index"
            )),
        }
    }
}

impl FromStr for BeamScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "round" => Ok(BeamScope::Round),
            "parent" => Ok(BeamScope::Parent),
            _ => Err(format!(
                "unknown beam scope {s:?}: expected round or parent"
            )),
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, requires = "labels", conflicts_with = "corpus")]
    image: Option<PathBuf>,
    /// 16-bit label map for --image.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Ground-truth mask PNG; repeat for several masks.
    #[arg(long)]
    gt: Vec<PathBuf>,
    /// JSON array of {"image", "labels", "gt": [...]} entries.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// exec:<command>, http:<url> or synthetic:<model.json>
    #[arg(long)]
    model: ModelEndpoint,
    /// gray, mean or #RRGGBB
    #[arg(long, default_value = "gray")]
    fill: FillPolicy,
    /// Valid children kept per state, or `none`.
    #[arg(long, default_value = "none")]
    beam: BeamArg,
    /// What the beam limits: `round` (live states per round and children
    /// per state) or `parent` (children per state only).
    #[arg(long, default_value = "round")]
    beam_scope: BeamScope,
    /// Which children the beam keeps: area or index.
    #[arg(long, default_value = "area")]
    order: CandidateOrder,
    #[arg(long, default_value_t = crate::regions::DEFAULT_MERGE_THRESHOLD)]
    merge_threshold: f64,
    #[arg(long, default_value_t = crate::regions::DEFAULT_IOU_THRESHOLD)]
    iou: f64,
    /// High cutoffs for precision, recall, divergence.
    #[arg(long, default_value = "0.5,0.5,0.05")]
    thresholds: BehaviorThresholds,
    #[arg(long, default_value_t = DEFAULT_MAX_QUERIES)]
    max_queries: u64,
    /// Requests a remote model may have outstanding.
    #[arg(long, default_value_t = 16)]
    max_in_flight: usize,
    /// Seconds to wait for any single remote response.
    #[arg(long, default_value_t = 120)]
    timeout: u64,
    /// Worker threads for corpus mode (default: one per core).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

impl RunArgs {
    fn settings(&self) -> Settings {
        Settings {
            fill: self.fill,
            refine: RefinementConfig {
                beam_size: self.beam.0,
                beam_scope: self.beam_scope,
                candidate_order: self.order,
                max_queries: self.max_queries,
            },
            merge_threshold: self.merge_threshold,
            iou_threshold: self.iou,
            thresholds: self.thresholds,
        }
    }

    fn entries(&self) -> Result<Vec<ImageEntry>, PipelineError> {
        match (&self.corpus, &self.image, &self.labels) {
            (Some(manifest), _, _) => load_manifest(manifest),
            (None, Some(image), Some(labels)) => Ok(vec![ImageEntry {
                image: image.clone(),
                labels: labels.clone(),
                gt: self.gt.clone(),
            }]),
            _ => Err(PipelineError::Config(
                "give either --image with --labels, or --corpus".into(),
            )),
        }
    }
}

fn report_error(kind: FailureKind, image: Option<&str>, message: &str) {
    let value = serde_json::json!({
        "error": kind,
        "image": image,
        "message": message,
    });
    eprintln!("{value}");
}

fn run_task(args: RunArgs, task: Task) -> Result<i32, PipelineError> {
    let settings = args.settings();
    if !(settings.iou_threshold > 0.0 && settings.iou_threshold <= 1.0) {
        return Err(PipelineError::Config(format!(
            "--iou must be in (0, 1], got {}",
            settings.iou_threshold
        )));
    }
    if !(0.0..1.0).contains(&settings.merge_threshold) {
        return Err(PipelineError::Config(format!(
            "--merge-threshold must be in [0, 1), got {}",
            settings.merge_threshold
        )));
    }
    let entries = args.entries()?;
    if matches!(task, Task::Analyze) {
        if let Some(entry) = entries.iter().find(|e| e.gt.is_empty()) {
            return Err(PipelineError::Config(format!(
                "{}: analyze needs ground-truth masks (--gt)",
                entry.image.display()
            )));
        }
    }
    let options = RemoteOptions {
        max_in_flight: args.max_in_flight.max(1),
        timeout: Duration::from_secs(args.timeout),
    };
    let model = connect(&args.model, options, Arc::new(PredictionCache::new()))?;

    let run = || run_corpus(&entries, task, model.as_ref(), &settings, &args.out);
    let report = match args.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| PipelineError::Config(e.to_string()))?
            .install(run)?,
        None => run()?,
    };

    for r in &report.images {
        println!(
            "{}: {} [{}] P={:.4} R={:.4} D={:.4} {}",
            r.image,
            r.reference_label,
            r.logic,
            r.metrics.precision,
            r.metrics.recall,
            r.metrics.divergence,
            r.metrics.behavior
        );
    }
    if let Some(agg) = &report.aggregate {
        println!(
            "corpus ({} images): P={:.4} R={:.4} D={:.4} {}",
            agg.images, agg.precision, agg.recall, agg.divergence, agg.behavior
        );
    }
    for failure in &report.failures {
        report_error(failure.kind, Some(&failure.image), &failure.error);
    }
    Ok(report.exit_code())
}

fn run_translate(path: PathBuf, json: bool) -> Result<i32, PipelineError> {
    let text = fs::read_to_string(&path).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let regions = FinalStateSet::max_region_in_json(&text)?;
    let finals = FinalStateSet::from_json(&text, regions)?;
    let expr = translate(finals.states())?;
    if json {
        println!(
            "{}",
            serde_json::to_string(&expr).expect("expression serializes")
        );
    } else {
        println!("{expr}");
    }
    Ok(0)
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                FailureKind::Config.exit_code()
            } else {
                0
            };
        }
    };
    let result = match cli.command {
        Command::Refine(args) => run_task(args, Task::Refine),
        Command::Analyze(args) => run_task(args, Task::Analyze),
        Command::Translate { states, json } => run_translate(states, json),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            report_error(e.kind(), None, &e.to_string());
            e.kind().exit_code()
        }
    }
}
