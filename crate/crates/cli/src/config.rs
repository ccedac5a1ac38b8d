//! Optional TOML configuration. Command-line flags take precedence.

use std::path::{Path, PathBuf};

use qcurate_core::mixer::{MixerConfig, TrainConfig};
use qcurate_core::synth::SynthConfig;
use qcurate_core::uncertainty::DEFAULT_PASSES;
use serde::{Deserialize, Serialize};

use crate::error::{CliResult, ResultExt};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub manifest: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub pca_model: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UncertaintyConfig {
    pub passes: usize,
}

impl Default for UncertaintyConfig {
    fn default() -> Self {
        UncertaintyConfig {
            passes: DEFAULT_PASSES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub min_hq: f64,
    pub min_aesthetic: Option<f64>,
    pub alpha: u8,
    pub min_tire_confidence: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            min_hq: 0.8,
            min_aesthetic: None,
            alpha: 8,
            min_tire_confidence: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub review_budget: Option<usize>,
    pub port: u16,
    pub paths: Paths,
    pub mixer: MixerConfig,
    pub train: TrainConfig,
    pub uncertainty: UncertaintyConfig,
    pub thresholds: Thresholds,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            review_budget: None,
            port: 8080,
            paths: Paths::default(),
            mixer: MixerConfig::default(),
            train: TrainConfig::default(),
            uncertainty: UncertaintyConfig::default(),
            thresholds: Thresholds::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text =
            std::fs::read_to_string(path).or_input(format!("reading config {}", path.display()))?;
        let cfg: PipelineConfig =
            toml::from_str(&text).or_input(format!("parsing config {}", path.display()))?;
        cfg.mixer.validate().or_input("invalid [mixer] section")?;
        cfg.train.validate().or_input("invalid [train] section")?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_keeps_defaults() {
        let cfg: PipelineConfig = toml::from_str(
            "seed = 9\n[mixer]\nnum_blocks = 2\n[train]\nmax_steps = 50\n[uncertainty]\npasses = 20\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.mixer.num_blocks, 2);
        assert_eq!(cfg.mixer.channel_dim, 768);
        assert_eq!(cfg.train.max_steps, 50);
        assert_eq!(cfg.uncertainty.passes, 20);
        assert_eq!(PipelineConfig::default().uncertainty.passes, 500);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<PipelineConfig>("sede = 1\n").is_err());
    }
}
