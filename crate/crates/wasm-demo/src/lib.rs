//! JSON-returning entry points for the static demo page. Each `*_json`
//! function is plain Rust; the `#[wasm_bindgen]` wrappers only forward.

use qcurate_core::math::{derive_seed, pca_fit, DenseMatrix, RngStream};
use qcurate_core::metadata::{
    alpha_bbox, estimate_dims, identify_views, render_cuboid, DEFAULT_ALPHA_THRESHOLD,
    METADATA_VIEWS,
};
use qcurate_core::mixer::{forward_tokens, init_params, sigmoid, MixerConfig, Mode};
use qcurate_core::uncertainty::{bernoulli_entropy, mc_predict_tokens};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_PASSES: usize = 5000;

#[derive(Serialize)]
struct McDemo {
    eval_probability: f64,
    eval_entropy: f64,
    mean_probability: f64,
    entropy: f64,
    variance: f64,
    /// Per-pass probabilities bucketed into 20 equal bins on [0, 1].
    histogram: Vec<usize>,
}

fn demo_mixer(dropout: f64) -> MixerConfig {
    MixerConfig {
        channel_dim: 16,
        num_blocks: 1,
        token_hidden: 8,
        channel_hidden: 16,
        head_hidden: 16,
        dropout_rate: dropout,
        ..MixerConfig::default()
    }
}

/// MC-dropout on a randomly initialised small mixer. `shift` moves the
/// input along a fixed direction, sweeping the prediction from confident to
/// uncertain.
pub fn mc_dropout_json(
    dropout: f64,
    passes: usize,
    shift: f64,
    seed: u64,
) -> Result<String, String> {
    if !(0.0..1.0).contains(&dropout) {
        return Err(format!("dropout {dropout} outside [0, 1)"));
    }
    let passes = passes.clamp(1, MAX_PASSES);
    let cfg = demo_mixer(dropout);
    let mut params = init_params(cfg, derive_seed(seed, "init")).map_err(|e| e.to_string())?;
    params.out_w.iter_mut().for_each(|w| *w *= 8.0);
    let mut r = RngStream::new(derive_seed(seed, "object"), 0);
    let n = cfg.seq_len * cfg.channel_dim;
    let x: Vec<f64> = (0..n)
        .map(|i| r.normal() + shift * ((i % 3) as f64 - 1.0))
        .collect();
    let eval = sigmoid(forward_tokens(&params, &x, Mode::Eval).map_err(|e| e.to_string())?);
    let rep = mc_predict_tokens(&params, &x, "demo", passes, seed).map_err(|e| e.to_string())?;
    let mut histogram = vec![0; 20];
    for &q in rep.per_pass.as_deref().unwrap_or_default() {
        histogram[((q * 20.0) as usize).min(19)] += 1;
    }
    let out = McDemo {
        eval_probability: eval,
        eval_entropy: bernoulli_entropy(eval).map_err(|e| e.to_string())?,
        mean_probability: rep.mean_probability,
        entropy: rep.predictive_entropy,
        variance: rep.pass_variance().unwrap_or(0.0),
        histogram,
    };
    Ok(serde_json::to_string(&out).expect("serializable"))
}

#[derive(Serialize)]
struct CuboidDemo {
    widths: Vec<u32>,
    side: [usize; 2],
    front: usize,
    back: usize,
    warning: bool,
    length: f64,
    width: f64,
    height: f64,
}

/// Orbital silhouette widths of a cuboid, the identified views and the
/// height-relative dimensions.
pub fn cuboid_json(
    length: f64,
    width: f64,
    height: f64,
    offset_deg: f64,
    size: u32,
) -> Result<String, String> {
    let (scale, size) = cuboid_scale(length, width, height, size)?;
    let boxes = (0..METADATA_VIEWS)
        .map(|k| {
            let az = k as f64 * 360.0 / METADATA_VIEWS as f64 - offset_deg;
            alpha_bbox(
                &render_cuboid(length, width, height, az, size, scale),
                DEFAULT_ALPHA_THRESHOLD,
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let v = identify_views(&boxes).map_err(|e| e.to_string())?;
    let side = if boxes[v.side[1]].width() > boxes[v.side[0]].width() {
        v.side[1]
    } else {
        v.side[0]
    };
    let front = if boxes[v.back].width() > boxes[v.front].width() {
        v.back
    } else {
        v.front
    };
    let d = estimate_dims(&boxes[side], &boxes[front]);
    let out = CuboidDemo {
        widths: boxes.iter().map(|b| b.width()).collect(),
        side: v.side,
        front: v.front,
        back: v.back,
        warning: v.warning,
        length: d.length,
        width: d.width,
        height: d.height,
    };
    Ok(serde_json::to_string(&out).expect("serializable"))
}

fn cuboid_scale(length: f64, width: f64, height: f64, size: u32) -> Result<(f64, u32), String> {
    if [length, width, height]
        .iter()
        .any(|v| !(v.is_finite() && *v > 0.0))
    {
        return Err("dimensions must be positive".into());
    }
    let size = size.clamp(32, 512);
    let extent = (length * length + width * width).sqrt().max(height);
    Ok((0.85 * size as f64 / extent, size))
}

/// RGBA pixels of one cuboid view, for drawing on a canvas.
pub fn cuboid_view_rgba(
    length: f64,
    width: f64,
    height: f64,
    azimuth_deg: f64,
    size: u32,
) -> Result<Vec<u8>, String> {
    let (scale, size) = cuboid_scale(length, width, height, size)?;
    Ok(
        render_cuboid(length, width, height, azimuth_deg, size, scale)
            .as_raw()
            .to_vec(),
    )
}

#[derive(Serialize)]
struct PcaDemo {
    evr: Vec<f64>,
    cumulative: Vec<f64>,
    analytic_total: f64,
}

/// Explained variance of a rank-`rank` Gaussian signal with per-direction
/// variance `signal` under unit noise in `dim` dimensions.
pub fn pca_evr_json(
    samples: usize,
    dim: usize,
    rank: usize,
    signal: f64,
    components: usize,
    seed: u64,
) -> Result<String, String> {
    if rank == 0
        || rank > dim
        || components == 0
        || components > dim.min(samples.saturating_sub(1))
        || dim > 512
        || samples > 2000
    {
        return Err("need 1 <= rank <= dim <= 512, 1 <= components < samples <= 2000".into());
    }
    let mut r = RngStream::new(derive_seed(seed, "means"), 0);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(rank);
    while basis.len() < rank {
        let mut v: Vec<f64> = (0..dim).map(|_| r.normal()).collect();
        for b in &basis {
            let p: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            v.iter_mut().zip(b).for_each(|(a, c)| *a -= p * c);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        basis.push(v.into_iter().map(|a| a / norm).collect());
    }
    let mut noise = RngStream::new(derive_seed(seed, "noise"), 0);
    let mut data = Vec::with_capacity(samples * dim);
    for _ in 0..samples {
        let z: Vec<f64> = (0..rank).map(|_| signal.sqrt() * noise.normal()).collect();
        for j in 0..dim {
            let s: f64 = z.iter().zip(&basis).map(|(zc, b)| zc * b[j]).sum();
            data.push((s + noise.normal()) as f32);
        }
    }
    let x = DenseMatrix::from_vec(samples, dim, data).map_err(|e| e.to_string())?;
    let model = pca_fit(&x, components).map_err(|e| e.to_string())?;
    let evr: Vec<f64> = model
        .explained_variance_ratio
        .iter()
        .map(|&v| f64::from(v))
        .collect();
    let cumulative = evr
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect();
    let k = components.min(rank) as f64;
    let analytic_total = (k * signal + components as f64) / (rank as f64 * signal + dim as f64);
    Ok(serde_json::to_string(&PcaDemo {
        evr,
        cumulative,
        analytic_total,
    })
    .expect("serializable"))
}

#[wasm_bindgen]
pub fn mc_dropout(dropout: f64, passes: usize, shift: f64, seed: u32) -> Result<String, JsError> {
    mc_dropout_json(dropout, passes, shift, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn cuboid(
    length: f64,
    width: f64,
    height: f64,
    offset_deg: f64,
    size: u32,
) -> Result<String, JsError> {
    cuboid_json(length, width, height, offset_deg, size).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn cuboid_view(
    length: f64,
    width: f64,
    height: f64,
    azimuth_deg: f64,
    size: u32,
) -> Result<Vec<u8>, JsError> {
    cuboid_view_rgba(length, width, height, azimuth_deg, size).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn pca_evr(
    samples: usize,
    dim: usize,
    rank: usize,
    signal: f64,
    components: usize,
    seed: u32,
) -> Result<String, JsError> {
    pca_evr_json(samples, dim, rank, signal, components, u64::from(seed))
        .map_err(|e| JsError::new(&e))
}
