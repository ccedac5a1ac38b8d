pub mod curate;
mod data;
mod geometry;
mod model;

use std::path::{Path, PathBuf};

use qcurate_core::curation::Manifest;
use qcurate_core::embedding::{mfeb_read, MultiViewEmbedding};

use crate::args::{Cli, Command};
use crate::config::PipelineConfig;
use crate::error::{Classify, CliError, CliResult};
use crate::files::require_file;

/// Effective configuration shared by all commands.
pub struct Ctx {
    pub cfg: PipelineConfig,
    pub seed: u64,
}

impl Ctx {
    pub fn new(cli: &Cli) -> CliResult<Self> {
        let cfg = PipelineConfig::load(cli.config.as_deref())?;
        let seed = cli.seed.unwrap_or(cfg.seed);
        Ok(Ctx { cfg, seed })
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let ctx = Ctx::new(&cli)?;
    match &cli.command {
        Command::Synth(a) => data::synth(&ctx, a),
        Command::Split(a) => data::split(&ctx, a),
        Command::PcaFit(a) => data::pca_fit(&ctx, a),
        Command::PcaApply(a) => data::pca_apply(&ctx, a),
        Command::Train(a) => model::train(&ctx, a),
        Command::Classify(a) => model::classify(&ctx, a),
        Command::Uncertainty(a) => model::uncertainty(&ctx, a),
        Command::Captions(a) => curate::captions(&ctx, a),
        Command::FlagMismatches(a) => curate::flag_mismatches(&ctx, a),
        Command::Refine(a) => curate::refine(&ctx, a),
        Command::Replay(a) => curate::replay(&ctx, a),
        Command::FilterCaptions(a) => curate::filter_captions(&ctx, a),
        Command::Metadata(a) => geometry::metadata(&ctx, a),
        Command::ReviewServe(a) => crate::server::serve_blocking(&ctx, a),
    }
}

/// Flag value, else the configured path; the file must exist.
pub(crate) fn input_path(
    flag: &Option<PathBuf>,
    configured: &Option<PathBuf>,
    what: &str,
) -> CliResult<PathBuf> {
    let p = flag
        .clone()
        .or_else(|| configured.clone())
        .ok_or_else(|| CliError::input(format!("no {what} given (flag or config [paths])")))?;
    require_file(&p, what)?;
    Ok(p)
}

pub(crate) fn load_manifest(path: &Path) -> CliResult<Manifest> {
    Manifest::read(path).classified(format!("manifest {}", path.display()))
}

pub(crate) fn load_embeddings(path: &Path) -> CliResult<Vec<MultiViewEmbedding>> {
    mfeb_read(path).classified(format!("embeddings {}", path.display()))
}
