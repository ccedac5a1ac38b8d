use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "qcurate",
    version,
    about = "Quality curation pipeline for multi-view 3D object corpora"
)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random stream; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus with known ground truth.
    Synth(SynthArgs),
    /// Assign labeled manifest records to train and test.
    Split(SplitArgs),
    /// Fit PCA on raw DINOv2 features.
    PcaFit(PcaFitArgs),
    /// Compress raw DINOv2 features with a fitted PCA.
    PcaApply(PcaApplyArgs),
    /// Train the quality classifier on the manifest's train split.
    Train(TrainArgs),
    /// Predict a quality label for every manifest record with embeddings.
    Classify(ClassifyArgs),
    /// Monte-Carlo dropout uncertainty reports.
    Uncertainty(UncertaintyArgs),
    /// Score captions against the category taxonomy.
    Captions(CaptionsArgs),
    /// List predictions that contradict their captions.
    FlagMismatches(FlagArgs),
    /// Apply one refinement cycle of label events.
    Refine(RefineArgs),
    /// Rebuild a manifest from its initial state and the label log.
    Replay(ReplayArgs),
    /// Select the caption-filtered subset.
    FilterCaptions(FilterArgs),
    /// Estimate vehicle dimensions from orbital renders.
    Metadata(MetadataArgs),
    /// Serve the review API and UI.
    ReviewServe(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub objects: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub raw_width: Option<usize>,
    /// Render 32 orbital views for the first N objects.
    #[arg(long, default_value_t = 0)]
    pub renders: usize,
    #[arg(long, default_value_t = 128)]
    pub render_size: u32,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PcaFitArgs {
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Number of components; defaults to four times the SigLIP width.
    #[arg(long)]
    pub components: Option<usize>,
    /// Fit on every record instead of the train split only.
    #[arg(long)]
    pub whole_set: bool,
}

#[derive(Debug, Args)]
pub struct PcaApplyArgs {
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub pca: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep raw DINOv2 features in the output.
    #[arg(long)]
    pub keep_raw: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Loss curve CSV; defaults to `<out>.curve.csv`.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Held-out report JSON; defaults to `<out>.report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub max_steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct UncertaintyArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Restrict to records of this manifest in the given split.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_parser = ["train", "test", "unlabeled"])]
    pub split: Option<String>,
    #[arg(long)]
    pub passes: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CaptionsArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// JSONL of {"object_id", "scores": {category: score}} from an external model.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FlagArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output of `classify`.
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Label events from a review session (JSONL).
    #[arg(long)]
    pub reviewed: Option<PathBuf>,
    /// Caption-correction label events (JSONL).
    #[arg(long)]
    pub corrections: Option<PathBuf>,
    /// Uncertainty reports used to pick objects for scripted review.
    #[arg(long)]
    pub uncertainty: Option<PathBuf>,
    /// Output of `flag-mismatches`, corrected by the oracle.
    #[arg(long)]
    pub flags: Option<PathBuf>,
    /// Reference labels answering scripted review (JSONL of {"object_id", "quality_label"}).
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    #[arg(long)]
    pub review_budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Required category argmax; repeatable.
    #[arg(long = "require")]
    pub require: Vec<String>,
    #[arg(long)]
    pub min_hq: Option<f64>,
    #[arg(long)]
    pub min_aesthetic: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MetadataArgs {
    /// Directory of `<object_id>/<azimuth:02>.png` renders.
    #[arg(long)]
    pub renders: PathBuf,
    /// Tire detections JSONL.
    #[arg(long)]
    pub tires: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub uncertainty: PathBuf,
    /// Directory of `<object_id>/view_<k>.png` images.
    #[arg(long)]
    pub views: Option<PathBuf>,
    /// Session log receiving label events.
    #[arg(long)]
    pub log: PathBuf,
    /// Static files for the review UI.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    #[arg(long, env = "QCURATE_PORT")]
    pub port: Option<u16>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
}
