use serde::{Deserialize, Serialize};

use super::MixerError;
use crate::embedding::{SEQ_LEN, TOKEN_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MixerConfig {
    pub seq_len: usize,
    pub channel_dim: usize,
    pub num_blocks: usize,
    pub token_hidden: usize,
    pub channel_hidden: usize,
    pub dropout_rate: f64,
    pub head_hidden: usize,
}

impl Default for MixerConfig {
    fn default() -> Self {
        Self {
            seq_len: SEQ_LEN,
            channel_dim: TOKEN_WIDTH,
            num_blocks: 4,
            token_hidden: 256,
            channel_hidden: 1024,
            dropout_rate: 0.1,
            head_hidden: 256,
        }
    }
}

impl MixerConfig {
    /// `num_blocks` may be zero: the model then reduces to norm, mean-pool and head.
    pub fn validate(&self) -> Result<(), MixerError> {
        let counts = [
            ("seq_len", self.seq_len),
            ("channel_dim", self.channel_dim),
            ("token_hidden", self.token_hidden),
            ("channel_hidden", self.channel_hidden),
            ("head_hidden", self.head_hidden),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(MixerError::Config(format!("{name} must be at least 1")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(MixerError::Config(format!(
                "dropout_rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_steps: usize,
    pub split_fraction: f64,
    pub seed: u64,
    /// Defaults to #negatives / #positives of the training split.
    pub positive_class_weight: Option<f64>,
    pub decision_threshold: f64,
    /// Held-out accuracy is recorded every `eval_every` steps (0: only at the end).
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            max_steps: 2000,
            split_fraction: 0.8,
            seed: 0,
            positive_class_weight: None,
            decision_threshold: 0.5,
            eval_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), MixerError> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(MixerError::Config(format!(
                "split_fraction {} outside (0, 1)",
                self.split_fraction
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(MixerError::Config("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(MixerError::Config("batch_size must be at least 1".into()));
        }
        if let Some(w) = self.positive_class_weight {
            if !(w > 0.0 && w.is_finite()) {
                return Err(MixerError::Config(format!(
                    "positive_class_weight {w} must be > 0"
                )));
            }
        }
        Ok(())
    }
}
