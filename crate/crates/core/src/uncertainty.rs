//! Monte-Carlo dropout uncertainty and the entropy-ranked review queue.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::FusedInput;
use crate::math::RngStream;
use crate::mixer::{forward_tokens, input_to_f64, sigmoid, MixerError, MixerParams, Mode};

/// Number of stochastic passes per object used for curation runs.
pub const DEFAULT_PASSES: usize = 500;

#[derive(Debug, Error)]
pub enum UncertaintyError {
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("at least one pass is required")]
    NoPasses,
    #[error(transparent)]
    Mixer(#[from] MixerError),
}

/// Bernoulli entropy in nats, with `0 · ln 0 = 0`.
pub fn bernoulli_entropy(p: f64) -> Result<f64, UncertaintyError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(UncertaintyError::Probability(p));
    }
    let term = |q: f64| if q == 0.0 { 0.0 } else { -q * q.ln() };
    Ok(term(p) + term(1.0 - p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub object_id: String,
    pub num_passes: usize,
    pub mean_probability: f64,
    #[serde(rename = "entropy_nats")]
    pub predictive_entropy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_pass: Option<Vec<f64>>,
}

impl UncertaintyReport {
    /// Sample variance of the per-pass probabilities, when retained.
    pub fn pass_variance(&self) -> Option<f64> {
        self.per_pass.as_deref().map(|ps| welford(ps).1)
    }
}

/// Running mean and population variance in slice order. Identical inputs
/// give exactly that value and exactly zero variance.
pub fn welford(values: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, &x) in values.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
    }
    let var = if values.is_empty() {
        0.0
    } else {
        m2 / values.len() as f64
    };
    (mean, var)
}

/// Runs `passes` dropout-active forward passes. Pass `t` draws its masks from
/// stream `(seed, t)`, so the per-pass values do not depend on scheduling; the
/// mean is accumulated in pass order.
pub fn mc_predict(
    params: &MixerParams,
    input: &FusedInput,
    object_id: &str,
    passes: usize,
    seed: u64,
) -> Result<UncertaintyReport, UncertaintyError> {
    mc_predict_tokens(params, &input_to_f64(input), object_id, passes, seed)
}

pub fn mc_predict_tokens(
    params: &MixerParams,
    tokens: &[f64],
    object_id: &str,
    passes: usize,
    seed: u64,
) -> Result<UncertaintyReport, UncertaintyError> {
    if passes == 0 {
        return Err(UncertaintyError::NoPasses);
    }
    let mut per_pass = Vec::with_capacity(passes);
    for t in 0..passes {
        let mut rng = RngStream::new(seed, t as u64);
        per_pass.push(sigmoid(forward_tokens(params, tokens, Mode::Mc(&mut rng))?));
    }
    let mean = welford(&per_pass).0.clamp(0.0, 1.0);
    Ok(UncertaintyReport {
        object_id: object_id.to_string(),
        num_passes: passes,
        mean_probability: mean,
        predictive_entropy: bernoulli_entropy(mean)?,
        per_pass: Some(per_pass),
    })
}

/// Entropy-descending order with ascending object id as the tie-break.
pub fn review_order(a: &UncertaintyReport, b: &UncertaintyReport) -> Ordering {
    b.predictive_entropy
        .total_cmp(&a.predictive_entropy)
        .then_with(|| a.object_id.cmp(&b.object_id))
}

/// The `k` most uncertain objects, most uncertain first.
pub fn select_for_review(reports: &[UncertaintyReport], k: usize) -> Vec<String> {
    let mut refs: Vec<&UncertaintyReport> = reports.iter().collect();
    if k < refs.len() {
        // Partial selection, then sort only the selected prefix.
        refs.select_nth_unstable_by(k, |a, b| review_order(a, b));
        refs.truncate(k);
    }
    refs.sort_by(|a, b| review_order(a, b));
    refs.into_iter().map(|r| r.object_id.clone()).collect()
}
