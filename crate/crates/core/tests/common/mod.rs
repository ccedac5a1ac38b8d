#![allow(dead_code, clippy::needless_range_loop)]
//! Test-only references and fixtures, written independently of the library's
//! compute paths.

use std::collections::BTreeMap;
use std::path::PathBuf;

use nalgebra::{DMatrix, SymmetricEigen};
use qcurate_core::curation::{CaptionTaxonomy, Manifest, ManifestRecord, Source};
use qcurate_core::embedding::{MultiViewEmbedding, ObjectId, PCA_WIDTH, TOKEN_WIDTH};
use qcurate_core::math::{pca_fit, DenseMatrix, PcaModel, RngStream};
use qcurate_core::metadata::{
    alpha_bbox, render_cuboid, BBox2D, DEFAULT_ALPHA_THRESHOLD, METADATA_VIEWS,
};
use qcurate_core::mixer::{loss_and_grad, sigmoid, ClassWeights, MixerConfig, MixerParams};
use qcurate_core::uncertainty::{mc_predict_tokens, UncertaintyReport};

/// Finite-difference step for gradient checks.
pub const FD_STEP: f64 = 1e-5;
/// Central differences at h = 1e-5 carry ~1e-11 absolute roundoff; gradients
/// smaller than this floor are compared absolutely.
pub const REL_FLOOR: f64 = 1e-4;

/// Analytic cuboid proportions used by the geometry fixtures.
pub const CUBOID_L: f64 = 4.5;
pub const CUBOID_W: f64 = 1.8;
pub const CUBOID_H: f64 = 1.4;

pub const REQUIRED: [&str; 2] = ["realistic car model", "detailed car model"];

pub fn tiny_config(dropout: f64) -> MixerConfig {
    MixerConfig {
        seq_len: 8,
        channel_dim: 16,
        num_blocks: 1,
        token_hidden: 6,
        channel_hidden: 10,
        dropout_rate: dropout,
        head_hidden: 5,
    }
}

pub fn normal_vec(seed: u64, stream: u64, n: usize, scale: f64) -> Vec<f64> {
    let mut r = RngStream::new(seed, stream);
    (0..n).map(|_| scale * r.normal()).collect()
}

/// Randomizes every tensor (including norms and biases) so no gradient is
/// trivially zero.
pub fn randomized_params(config: MixerConfig, seed: u64) -> MixerParams {
    let mut p = MixerParams::zeroed(config);
    let mut r = RngStream::new(seed, 77);
    for t in p.tensors_mut() {
        for v in t.iter_mut() {
            *v = 0.5 * r.normal();
        }
    }
    for b in &mut p.blocks {
        b.ln1_gamma.iter_mut().for_each(|g| *g += 1.0);
        b.ln2_gamma.iter_mut().for_each(|g| *g += 1.0);
    }
    p.final_gamma.iter_mut().for_each(|g| *g += 1.0);
    p
}

fn erf(x: f64) -> f64 {
    // Composite Simpson on [0, |x|].
    let n = 2000;
    let a = x.abs();
    let h = a / n as f64;
    let f = |t: f64| (-t * t).exp();
    let mut s = f(0.0) + f(a);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    let v = s * h / 3.0 * 2.0 / std::f64::consts::PI.sqrt();
    if x < 0.0 {
        -v
    } else {
        v
    }
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + erf(x / 2f64.sqrt()))
}

fn layer_norm_row(row: &[f64], gamma: &[f64], beta: &[f64]) -> Vec<f64> {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    row.iter()
        .enumerate()
        .map(|(j, v)| gamma[j] * (v - mean) / (var + 1e-5).sqrt() + beta[j])
        .collect()
}

/// Straight-line eval-mode forward written with explicit index loops.
/// `head_keep` optionally scales head hidden units (dropout mask values).
pub fn reference_logit(p: &MixerParams, x: &[f64], head_keep: Option<&[f64]>) -> f64 {
    let c = p.config;
    let (s, d) = (c.seq_len, c.channel_dim);
    let mut x: Vec<Vec<f64>> = (0..s).map(|i| x[i * d..(i + 1) * d].to_vec()).collect();
    for b in &p.blocks {
        let y: Vec<Vec<f64>> = x
            .iter()
            .map(|r| layer_norm_row(r, &b.ln1_gamma, &b.ln1_beta))
            .collect();
        for ch in 0..d {
            let mut hidden = vec![0.0; c.token_hidden];
            for (h, hv) in hidden.iter_mut().enumerate() {
                let mut acc = b.token_b1[h];
                for t in 0..s {
                    acc += b.token_w1[h * s + t] * y[t][ch];
                }
                *hv = gelu(acc);
            }
            for t in 0..s {
                let mut acc = b.token_b2[t];
                for (h, hv) in hidden.iter().enumerate() {
                    acc += b.token_w2[t * c.token_hidden + h] * hv;
                }
                x[t][ch] += acc;
            }
        }
        for row in x.iter_mut() {
            let y = layer_norm_row(row, &b.ln2_gamma, &b.ln2_beta);
            let mut hidden = vec![0.0; c.channel_hidden];
            for (h, hv) in hidden.iter_mut().enumerate() {
                let mut acc = b.channel_b1[h];
                for j in 0..d {
                    acc += b.channel_w1[h * d + j] * y[j];
                }
                *hv = gelu(acc);
            }
            for j in 0..d {
                let mut acc = b.channel_b2[j];
                for (h, hv) in hidden.iter().enumerate() {
                    acc += b.channel_w2[j * c.channel_hidden + h] * hv;
                }
                row[j] += acc;
            }
        }
    }
    let mut pooled = vec![0.0; d];
    for row in &x {
        let y = layer_norm_row(row, &p.final_gamma, &p.final_beta);
        for j in 0..d {
            pooled[j] += y[j] / s as f64;
        }
    }
    let mut logit = p.out_b[0];
    for h in 0..c.head_hidden {
        let mut acc = p.head_b[h];
        for j in 0..d {
            acc += p.head_w[h * d + j] * pooled[j];
        }
        let keep = head_keep.map_or(1.0, |k| k[h]);
        logit += p.out_w[h] * gelu(acc) * keep;
    }
    logit
}

/// Largest relative error between analytic and central-difference gradients
/// over every parameter. Relative error is |a − n| / max(|a|, |n|, 1e-4).
pub fn max_gradient_error(seed: u64, dropout: f64) -> (f64, String) {
    let cfg = tiny_config(dropout);
    let params = randomized_params(cfg, seed);
    let x0 = normal_vec(seed, 1, 128, 1.0);
    let x1 = normal_vec(seed, 2, 128, 1.0);
    let batch: Vec<(&[f64], u8)> = vec![(&x0, 1), (&x1, 0)];
    let weights = ClassWeights::with_positive(2.5);
    let mask_seed = 1000 + seed;

    let loss_at = |p: &MixerParams| -> f64 {
        let mut rng = RngStream::new(mask_seed, 0);
        loss_and_grad(p, &batch, weights, &mut rng).unwrap().0
    };
    let mut rng = RngStream::new(mask_seed, 0);
    let (_, grads) = loss_and_grad(&params, &batch, weights, &mut rng).unwrap();

    let names: Vec<String> = qcurate_core::mixer::tensor_shapes(&cfg)
        .into_iter()
        .map(|t| t.0)
        .collect();
    let mut worst = (0.0f64, String::new());
    let n_tensors = params.tensors().len();
    for ti in 0..n_tensors {
        let len = params.tensors()[ti].len();
        for i in 0..len {
            let mut plus = params.clone();
            plus.tensors_mut()[ti][i] += FD_STEP;
            let mut minus = params.clone();
            minus.tensors_mut()[ti][i] -= FD_STEP;
            let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * FD_STEP);
            let analytic = grads.tensors()[ti][i];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR);
            if rel > worst.0 {
                worst = (
                    rel,
                    format!(
                        "{}[{i}] analytic {analytic:e} numeric {numeric:e}",
                        names[ti]
                    ),
                );
            }
        }
    }
    worst
}

pub fn micro_config(dropout: f64) -> MixerConfig {
    MixerConfig {
        num_blocks: 0,
        head_hidden: 6,
        ..tiny_config(dropout)
    }
}

/// With no mixer blocks the only dropout site is the six head units, so the
/// expectation over masks is a finite sum of 64 terms. Returns the mean and
/// standard deviation of the per-pass probability.
pub fn exhaustive_moments(
    p: &qcurate_core::mixer::MixerParams,
    x: &[f64],
    rate: f64,
) -> (f64, f64) {
    let scale = 1.0 / (1.0 - rate);
    let mut expect = 0.0;
    let mut second = 0.0;
    for mask in 0u32..64 {
        let keep: Vec<f64> = (0..6)
            .map(|h| if mask >> h & 1 == 1 { scale } else { 0.0 })
            .collect();
        let kept = mask.count_ones() as i32;
        let weight = (1.0 - rate).powi(kept) * rate.powi(6 - kept);
        let q = sigmoid(reference_logit(p, x, Some(&keep)));
        expect += weight * q;
        second += weight * q * q;
    }
    (expect, (second - expect * expect).sqrt())
}

pub fn mc_z_score(param_seed: u64, mc_seed: u64, t: usize) -> f64 {
    let rate = 0.3;
    let p = randomized_params(micro_config(rate), param_seed);
    let x = normal_vec(param_seed, 2, 8 * 16, 0.5);
    let (expect, sd) = exhaustive_moments(&p, &x, rate);
    assert!(sd > 1e-3, "micro-model has no mask sensitivity");
    let r = mc_predict_tokens(&p, &x, "obj", t, mc_seed).unwrap();
    (r.mean_probability - expect) / (sd / (t as f64).sqrt())
}

pub fn brute_force(reports: &[UncertaintyReport], k: usize) -> Vec<String> {
    let mut all: Vec<(f64, String)> = reports
        .iter()
        .map(|r| (r.predictive_entropy, r.object_id.clone()))
        .collect();
    all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, id)| id).collect()
}

pub fn random_reports(rng: &mut RngStream, n: usize) -> Vec<UncertaintyReport> {
    (0..n)
        .map(|i| {
            // Coarse entropies so ties are common.
            let h = (rng.below(20) as f64) * 0.035;
            UncertaintyReport {
                object_id: format!("obj{:03}", (i * 37) % 1000),
                num_passes: 500,
                mean_probability: 0.5,
                predictive_entropy: h,
                per_pass: None,
            }
        })
        .collect()
}

pub fn random_matrix(n: usize, d: usize, seed: u64) -> DenseMatrix {
    let mut r = RngStream::new(seed, 0);
    DenseMatrix::from_vec(n, d, (0..n * d).map(|_| r.normal() as f32).collect()).unwrap()
}

/// Sample covariance eigendecomposition in f64, eigenpairs sorted descending.
pub fn covariance_oracle(x: &DenseMatrix) -> (Vec<f64>, DMatrix<f64>) {
    let (n, d) = x.shape();
    let m = DMatrix::from_fn(n, d, |i, j| f64::from(x.get(i, j)));
    let mean = m.row_mean();
    let centred = DMatrix::from_fn(n, d, |i, j| m[(i, j)] - mean[j]);
    let cov = centred.transpose() * &centred / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Population EVR of a rank-16 signal with per-direction variance `s2`
/// plus isotropic unit noise in `d` dimensions.
pub fn population_evr(s2: f64, d: usize) -> f64 {
    (16.0 * s2 + 16.0) / (16.0 * s2 + d as f64)
}

/// (detail axis, realism axis, hq) scores; the remaining mass of each axis is
/// split evenly over the other members.
pub fn scores(detail: (usize, f64), realism: (usize, f64), hq: f64) -> BTreeMap<String, f64> {
    let t = CaptionTaxonomy::default();
    let mut s = BTreeMap::new();
    for (axis, (winner, w)) in [(&t.axes[0], detail), (&t.axes[1], realism)] {
        for (i, c) in axis.iter().enumerate() {
            let v = if i == winner {
                w
            } else {
                (1.0 - w) / (axis.len() - 1) as f64
            };
            s.insert(c.clone(), v);
        }
    }
    s.insert("high quality car".into(), hq);
    s.insert("low quality car".into(), 1.0 - hq);
    s.insert("car".into(), 0.9);
    s.insert("not car".into(), 0.1);
    s
}

pub fn record(
    id: &str,
    s: Option<BTreeMap<String, f64>>,
    aesthetic: Option<f64>,
) -> ManifestRecord {
    let mut r = ManifestRecord::new(ObjectId::new(id).unwrap(), Source::Sketchfab, "");
    r.caption_scores = s;
    r.aesthetic_score = aesthetic;
    r
}

pub fn fixture() -> Manifest {
    let mut tie = scores((0, 0.45), (0, 0.8), 0.9);
    tie.insert("simplistic car model".into(), 0.45);
    tie.insert("partial car model".into(), 0.10);
    Manifest::new(vec![
        record("r1", Some(scores((0, 0.7), (0, 0.8), 0.85)), Some(7.0)),
        record("r2", Some(scores((0, 0.6), (0, 0.5), 0.80)), Some(6.0)),
        record("r3", Some(scores((0, 0.7), (0, 0.8), 0.79)), Some(9.0)),
        record("r4", Some(scores((1, 0.7), (0, 0.8), 0.95)), Some(9.0)),
        record("r5", Some(scores((0, 0.7), (1, 0.8), 0.95)), Some(9.0)),
        record("r6", None, Some(9.0)),
        record("r7", Some(scores((0, 0.9), (0, 0.9), 0.99)), None),
        record("r8", Some(scores((0, 0.5), (0, 0.5), 0.81)), Some(6.5)),
        record("r9", Some(tie), Some(8.0)),
    ])
    .unwrap()
}

/// Largest component difference (up to sign) and largest relative singular
/// value difference between `model` and the covariance oracle.
pub fn oracle_errors(x: &DenseMatrix, model: &qcurate_core::math::PcaModel) -> (f64, f64) {
    let (n, d) = x.shape();
    let (vals, vecs) = covariance_oracle(x);
    let mut max_comp = 0.0f64;
    let mut max_sv = 0.0f64;
    for c in 0..model.num_components() {
        let ours = model.components.row(c);
        let dot: f64 = (0..d).map(|j| f64::from(ours[j]) * vecs[(j, c)]).sum();
        let sign = dot.signum();
        for j in 0..d {
            max_comp = max_comp.max((f64::from(ours[j]) - sign * vecs[(j, c)]).abs());
        }
        // Singular values of the centred data matrix.
        let sv = (vals[c] * (n as f64 - 1.0)).sqrt();
        max_sv = max_sv.max((f64::from(model.singular_values[c]) - sv).abs() / sv);
    }
    (max_comp, max_sv)
}

/// Per-direction signal variance giving population EVR `ratio` for a rank-16
/// signal under unit isotropic noise.
pub fn signal_variance_for(ratio: f64, d: usize) -> f64 {
    (ratio * d as f64 - 16.0) / (16.0 * (1.0 - ratio))
}

/// Rank-16 Gaussian signal in a random orthonormal subspace plus unit noise.
pub fn signal_corpus(n: usize, d: usize, s2: f64, seed: u64) -> DenseMatrix {
    let mut r = RngStream::new(seed, 0);
    // Orthonormal signal basis via Gram-Schmidt on Gaussian vectors.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() < 16 {
        let mut v: Vec<f64> = (0..d).map(|_| r.normal()).collect();
        for b in &basis {
            let p: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            v.iter_mut().zip(b).for_each(|(a, c)| *a -= p * c);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        basis.push(v.into_iter().map(|a| a / norm).collect());
    }
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let z: Vec<f64> = (0..16).map(|_| s2.sqrt() * r.normal()).collect();
        for j in 0..d {
            let signal: f64 = (0..16).map(|c| z[c] * basis[c][j]).sum();
            data.push((signal + r.normal()) as f32);
        }
    }
    DenseMatrix::from_vec(n, d, data).unwrap()
}

pub fn golden_path(name: &str) -> PathBuf {
    // Resolved through the workspace so other crates' tests can share it.
    let crates = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("..");
    crates.join("core/tests/golden").join(name)
}

pub fn values(seed: u64, n: usize) -> Vec<f32> {
    let mut r = RngStream::new(seed, 3);
    (0..n).map(|_| r.normal() as f32).collect()
}

pub fn mfeb_fixture() -> Vec<MultiViewEmbedding> {
    vec![
        MultiViewEmbedding {
            object_id: ObjectId::new("golden-prod").unwrap(),
            siglip: DenseMatrix::from_vec(4, TOKEN_WIDTH, values(1, 4 * TOKEN_WIDTH)).unwrap(),
            dinov2_raw: None,
            dinov2_pca: Some(values(2, PCA_WIDTH)),
        },
        MultiViewEmbedding {
            object_id: ObjectId::new("golden_small_01").unwrap(),
            siglip: DenseMatrix::from_vec(4, 3, values(3, 12)).unwrap(),
            dinov2_raw: Some(DenseMatrix::from_vec(4, 5, values(4, 20)).unwrap()),
            dinov2_pca: Some(values(5, 12)),
        },
        MultiViewEmbedding {
            object_id: ObjectId::new("golden-raw-only").unwrap(),
            siglip: DenseMatrix::from_vec(4, 3, values(6, 12)).unwrap(),
            dinov2_raw: Some(DenseMatrix::from_vec(4, 2, values(8, 8)).unwrap()),
            dinov2_pca: None,
        },
    ]
}

pub fn pca_fixture() -> PcaModel {
    pca_fit(&DenseMatrix::from_vec(10, 6, values(7, 60)).unwrap(), 3).unwrap()
}

pub fn cuboid_boxes(offset_deg: f64, scale: f64) -> Vec<BBox2D> {
    (0..METADATA_VIEWS)
        .map(|k| {
            let az = k as f64 * 360.0 / METADATA_VIEWS as f64 - offset_deg;
            alpha_bbox(
                &render_cuboid(CUBOID_L, CUBOID_W, CUBOID_H, az, 500, scale),
                DEFAULT_ALPHA_THRESHOLD,
            )
            .unwrap()
        })
        .collect()
}

/// Worst case for a ratio whose numerator and denominator are each off by
/// at most `px` pixels.
pub fn ratio_bound(num_px: f64, den_px: f64, px: f64) -> f64 {
    let r = num_px / den_px;
    ((num_px + px) / (den_px - px) - r).max(r - (num_px - px) / (den_px + px))
}
