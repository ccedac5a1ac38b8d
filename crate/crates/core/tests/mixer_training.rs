mod common;

use common::{normal_vec, randomized_params, tiny_config};
use qcurate_core::mixer::{
    evaluate, forward_tokens, predict_tokens, train_on_split, MixerConfig, Mode, TrainConfig,
};
use qcurate_core::synth::gaussian_tokens;
use qcurate_core::uncertainty::mc_predict_tokens;

fn fixture_config(max_steps: usize) -> TrainConfig {
    TrainConfig {
        max_steps,
        eval_every: 0,
        learning_rate: 3e-3,
        seed: 5,
        ..TrainConfig::default()
    }
}

#[test]
fn overfits_separable_fixture() {
    let data = gaussian_tokens(32, 0.5, 16, 3.0, 21);
    let out = train_on_split(&data, &[], tiny_config(0.0), &fixture_config(500)).unwrap();
    let train_report = evaluate(&out.params, &data, 0.5).unwrap();
    let first = out.curve[0].loss;
    let last = out.curve.last().unwrap().loss;
    println!(
        "train accuracy {} loss {first:.4} -> {last:.6}",
        train_report.accuracy
    );
    assert_eq!(train_report.accuracy, 1.0);
    assert!(last < 0.1 * first);
    assert_eq!(out.positive_class_weight, 1.0);
    assert!(
        (first - std::f64::consts::LN_2).abs() < 0.25,
        "initial loss {first}"
    );
}

#[test]
fn training_is_reproducible() {
    let data = gaussian_tokens(40, 0.3, 16, 2.0, 3);
    let (tr, te) = data.split_at(30);
    let cfg = TrainConfig {
        batch_size: 8,
        ..fixture_config(60)
    };
    let a = train_on_split(tr, te, tiny_config(0.1), &cfg).unwrap();
    let b = train_on_split(tr, te, tiny_config(0.1), &cfg).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.curve, b.curve);
    assert_eq!(a.params, b.params);
}

#[test]
fn eval_prediction_agrees_with_mc_mean() {
    let data = gaussian_tokens(64, 0.25, 16, 2.0, 8);
    let out = train_on_split(&data, &[], tiny_config(0.1), &fixture_config(300)).unwrap();
    let mut worst = 0.0f64;
    for e in &data {
        let (p, _) = predict_tokens(&out.params, &e.tokens, 0.5).unwrap();
        let r = mc_predict_tokens(&out.params, &e.tokens, &e.id, 200, 1).unwrap();
        worst = worst.max((p - r.mean_probability).abs());
    }
    println!("max |eval - mc mean| = {worst:.4}");
    assert!(worst < 0.15);
}

fn permute_tokens(x: &[f64], width: usize, perm: &[usize]) -> Vec<f64> {
    perm.iter()
        .flat_map(|&t| x[t * width..(t + 1) * width].iter().copied())
        .collect()
}

#[test]
fn token_order_matters_only_with_blocks() {
    let perm = [3, 0, 7, 1, 6, 2, 5, 4];
    let x = normal_vec(1, 1, 8 * 16, 1.0);
    let px = permute_tokens(&x, 16, &perm);

    let pooled_only = randomized_params(
        MixerConfig {
            num_blocks: 0,
            ..tiny_config(0.0)
        },
        2,
    );
    let a = forward_tokens(&pooled_only, &x, Mode::Eval).unwrap();
    let b = forward_tokens(&pooled_only, &px, Mode::Eval).unwrap();
    assert!((a - b).abs() < 1e-12, "{a} vs {b}");

    let full = randomized_params(tiny_config(0.0), 2);
    let a = forward_tokens(&full, &x, Mode::Eval).unwrap();
    let b = forward_tokens(&full, &px, Mode::Eval).unwrap();
    assert!((a - b).abs() > 1e-6, "{a} vs {b}");
}

#[test]
fn probability_is_monotone_in_logit() {
    let p = randomized_params(tiny_config(0.0), 9);
    let mut pairs: Vec<(f64, f64)> = (0..50)
        .map(|i| {
            let x = normal_vec(9, i, 8 * 16, 1.0);
            let z = forward_tokens(&p, &x, Mode::Eval).unwrap();
            (z, predict_tokens(&p, &x, 0.5).unwrap().0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
}
