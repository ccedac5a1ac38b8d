use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::forward::{
    forward_tokens, input_to_f64, loss_and_grad, sigmoid, weighted_bce, ClassWeights, Mode,
};
use super::{init_params, MixerConfig, MixerError, MixerParams, TrainConfig};
use crate::embedding::FusedInput;
use crate::math::{derive_seed, RngStream};

/// One labeled classifier example.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledInput {
    pub id: String,
    pub tokens: Vec<f64>,
    pub label: u8,
}

impl LabeledInput {
    pub fn from_fused(id: impl Into<String>, input: &FusedInput, label: u8) -> Self {
        Self {
            id: id.into(),
            tokens: input_to_f64(input),
            label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub num_examples: usize,
}

impl EvalReport {
    pub fn from_predictions(pairs: impl IntoIterator<Item = (u8, u8)>) -> Self {
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (truth, pred) in pairs {
            match (truth, pred) {
                (1, 1) => tp += 1,
                (0, 1) => fp += 1,
                (1, _) => fn_ += 1,
                _ => tn += 1,
            }
        }
        let n = tp + fp + tn + fn_;
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            accuracy: ratio(tp + tn, n),
            precision,
            recall,
            f1,
            tp,
            fp,
            tn,
            fn_,
            num_examples: n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Number of optimizer updates applied before this loss was measured.
    pub step: usize,
    pub loss: f64,
    pub eval_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: MixerParams,
    pub report: EvalReport,
    pub curve: Vec<CurvePoint>,
    pub positive_class_weight: f64,
}

/// Stratified, seed-deterministic train/test split of `(id, binary label)` pairs.
///
/// Ids are sorted before shuffling, so the result does not depend on input
/// order. Each class with at least two members lands in both splits.
pub fn split_dataset(
    labels: &[(String, u8)],
    split_fraction: f64,
    seed: u64,
) -> Result<(Vec<String>, Vec<String>), MixerError> {
    if labels.len() < 2 {
        return Err(MixerError::Data(format!(
            "need at least 2 labeled records, got {}",
            labels.len()
        )));
    }
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(MixerError::Config(format!(
            "split_fraction {split_fraction} outside (0, 1)"
        )));
    }
    let mut rng = RngStream::new(derive_seed(seed, "split"), 0);
    let n = labels.len();
    let n_train = ((split_fraction * n as f64).round() as usize).clamp(1, n - 1);

    let mut classes: Vec<Vec<String>> = vec![Vec::new(), Vec::new()];
    for (id, y) in labels {
        if *y > 1 {
            return Err(MixerError::Label(*y));
        }
        classes[usize::from(*y)].push(id.clone());
    }
    for c in &mut classes {
        c.sort();
        rng.shuffle(c);
    }

    // Largest-remainder allocation of the training quota across classes.
    let exact: Vec<f64> = classes
        .iter()
        .map(|c| c.len() as f64 * n_train as f64 / n as f64)
        .collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    let mut left = n_train - quota.iter().sum::<usize>();
    for &c in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if quota[c] < classes[c].len() {
            quota[c] += 1;
            left -= 1;
        }
    }
    // Keep both classes on both sides when a class has two or more members.
    for c in 0..2 {
        let other = 1 - c;
        let len = classes[c].len();
        if len >= 2 && quota[c] == 0 && quota[other] > 1 {
            quota[c] += 1;
            quota[other] -= 1;
        }
        if len >= 2 && quota[c] == len && quota[other] < classes[other].len() {
            quota[c] -= 1;
            quota[other] += 1;
        }
    }

    let mut train = Vec::with_capacity(n_train);
    let mut test = Vec::with_capacity(n - n_train);
    for (c, ids) in classes.into_iter().enumerate() {
        for (i, id) in ids.into_iter().enumerate() {
            if i < quota[c] {
                train.push(id);
            } else {
                test.push(id);
            }
        }
    }
    train.sort();
    test.sort();
    Ok((train, test))
}

/// Eval-mode probability and thresholded label (`probability >= threshold`).
pub fn predict(
    params: &MixerParams,
    input: &FusedInput,
    threshold: f64,
) -> Result<(f64, u8), MixerError> {
    predict_tokens(params, &input_to_f64(input), threshold)
}

pub fn predict_tokens(
    params: &MixerParams,
    tokens: &[f64],
    threshold: f64,
) -> Result<(f64, u8), MixerError> {
    let prob = sigmoid(forward_tokens(params, tokens, Mode::Eval)?);
    Ok((prob, u8::from(prob >= threshold)))
}

pub fn evaluate(
    params: &MixerParams,
    examples: &[LabeledInput],
    threshold: f64,
) -> Result<EvalReport, MixerError> {
    let preds = examples
        .iter()
        .map(|e| predict_tokens(params, &e.tokens, threshold).map(|(_, y)| (e.label, y)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::from_predictions(preds))
}

/// Mean weighted BCE over `examples` in eval mode.
pub fn mean_loss(
    params: &MixerParams,
    examples: &[LabeledInput],
    weights: ClassWeights,
) -> Result<f64, MixerError> {
    let mut total = 0.0;
    for e in examples {
        let z = forward_tokens(params, &e.tokens, Mode::Eval)?;
        total += weighted_bce(z, e.label, weights).0;
    }
    Ok(total / examples.len().max(1) as f64)
}

/// Splits `corpus` with [`split_dataset`] and trains on the training part.
pub fn train(
    corpus: &[LabeledInput],
    mixer: MixerConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome, MixerError> {
    config.validate()?;
    let labels: Vec<(String, u8)> = corpus.iter().map(|e| (e.id.clone(), e.label)).collect();
    let (train_ids, _) = split_dataset(&labels, config.split_fraction, config.seed)?;
    let train_set: std::collections::HashSet<&str> = train_ids.iter().map(String::as_str).collect();
    let (tr, te): (Vec<LabeledInput>, Vec<LabeledInput>) = corpus
        .iter()
        .cloned()
        .partition(|e| train_set.contains(e.id.as_str()));
    train_on_split(&tr, &te, mixer, config)
}

pub fn train_on_split(
    train_set: &[LabeledInput],
    test_set: &[LabeledInput],
    mixer: MixerConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome, MixerError> {
    config.validate()?;
    mixer.validate()?;
    let pos = train_set.iter().filter(|e| e.label == 1).count();
    let neg = train_set.iter().filter(|e| e.label == 0).count();
    if let Some(e) = train_set.iter().find(|e| e.label > 1) {
        return Err(MixerError::Label(e.label));
    }
    for (class, count) in [(0u8, neg), (1u8, pos)] {
        if count < 2 {
            return Err(MixerError::ClassAbsent { class, count });
        }
    }
    let expected = mixer.seq_len * mixer.channel_dim;
    if let Some(e) = train_set
        .iter()
        .chain(test_set)
        .find(|e| e.tokens.len() != expected)
    {
        return Err(MixerError::Shape(format!(
            "example {} has {} values, expected {expected}",
            e.id,
            e.tokens.len()
        )));
    }

    let pos_weight = config
        .positive_class_weight
        .unwrap_or(neg as f64 / pos as f64);
    let weights = ClassWeights::with_positive(pos_weight);
    let mut params = init_params(mixer, derive_seed(config.seed, "init"))?;
    let mut adam = AdamState::new(&params);
    let mut shuffle_rng = RngStream::new(derive_seed(config.seed, "shuffle"), 0);
    let mut dropout_rng = RngStream::new(derive_seed(config.seed, "dropout"), 0);

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    shuffle_rng.shuffle(&mut order);
    let mut cursor = 0;
    let mut curve = Vec::with_capacity(config.max_steps);

    for step in 0..config.max_steps {
        let mut batch = Vec::with_capacity(config.batch_size);
        while batch.len() < config.batch_size.min(train_set.len()) {
            if cursor == order.len() {
                shuffle_rng.shuffle(&mut order);
                cursor = 0;
            }
            let e = &train_set[order[cursor]];
            batch.push((e.tokens.as_slice(), e.label));
            cursor += 1;
        }
        let (loss, grads) = loss_and_grad(&params, &batch, weights, &mut dropout_rng)?;
        adam_step(&mut params, &grads, &mut adam, config, step as u64 + 1);
        if !params.is_finite() {
            return Err(MixerError::NonFinite(format!(
                "parameters after step {}",
                step + 1
            )));
        }
        let done = step + 1;
        let eval_now = !test_set.is_empty()
            && (done == config.max_steps
                || (config.eval_every > 0 && done % config.eval_every == 0));
        let eval_accuracy = if eval_now {
            Some(evaluate(&params, test_set, config.decision_threshold)?.accuracy)
        } else {
            None
        };
        curve.push(CurvePoint {
            step,
            loss,
            eval_accuracy,
        });
    }

    let report = evaluate(&params, test_set, config.decision_threshold)?;
    Ok(TrainOutcome {
        params,
        report,
        curve,
        positive_class_weight: pos_weight,
    })
}
