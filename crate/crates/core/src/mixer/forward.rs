//! Forward pass, cached activations and the hand-derived backward pass.
//!
//! Per block, with `x` the S×C token matrix:
//!   x += W2 · drop(gelu(W1 · LN(x) + b1)) + b2          (token mixing)
//!   x += drop(gelu(LN(x) · W1ᵀ + b1)) · W2ᵀ + b2        (channel mixing)
//! then LN, mean over tokens, `gelu(Wh·p + bh)`, dropout, and a scalar logit.
//! All arithmetic is f64.

use super::{MixerError, MixerParams};
use crate::embedding::FusedInput;
use crate::math::matrix::{dot, matmul, matmul_a_bt_acc, matmul_acc, matmul_at_b_acc};
use crate::math::RngStream;

const LN_EPS: f64 = 1e-5;
const INV_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub enum Mode<'a> {
    /// Dropout active, masks drawn from the stream.
    Train(&'a mut RngStream),
    /// No dropout.
    Eval,
    /// Dropout active at inference time (Monte-Carlo dropout).
    Mc(&'a mut RngStream),
}

impl Mode<'_> {
    fn rng(&mut self) -> Option<&mut RngStream> {
        match self {
            Mode::Train(r) | Mode::Mc(r) => Some(r),
            Mode::Eval => None,
        }
    }
}

#[inline]
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x * INV_SQRT_2))
}

#[inline]
pub fn gelu_grad(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x * INV_SQRT_2)) + x * INV_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Inverted-dropout mask: each entry is 0 or 1/(1−p). `None` when dropout is
/// inactive, which keeps p = 0 bit-identical to eval mode.
fn draw_mask(n: usize, p: f64, mode: &mut Mode) -> Option<Vec<f64>> {
    if p == 0.0 {
        return None;
    }
    let rng = mode.rng()?;
    let keep = 1.0 / (1.0 - p);
    Some(
        (0..n)
            .map(|_| if rng.uniform() >= p { keep } else { 0.0 })
            .collect(),
    )
}

fn apply_mask(a: &[f64], mask: &Option<Vec<f64>>) -> Vec<f64> {
    match mask {
        Some(m) => a.iter().zip(m).map(|(x, k)| x * k).collect(),
        None => a.to_vec(),
    }
}

struct LnCache {
    xhat: Vec<f64>,
    rstd: Vec<f64>,
}

/// Row-wise LayerNorm of an r×c matrix.
fn layer_norm(x: &[f64], r: usize, c: usize, gamma: &[f64], beta: &[f64]) -> (Vec<f64>, LnCache) {
    let mut y = vec![0.0; r * c];
    let mut xhat = vec![0.0; r * c];
    let mut rstd = vec![0.0; r];
    for i in 0..r {
        let row = &x[i * c..(i + 1) * c];
        let mean = row.iter().sum::<f64>() / c as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
        let rs = 1.0 / (var + LN_EPS).sqrt();
        rstd[i] = rs;
        for j in 0..c {
            let h = (row[j] - mean) * rs;
            xhat[i * c + j] = h;
            y[i * c + j] = gamma[j] * h + beta[j];
        }
    }
    (y, LnCache { xhat, rstd })
}

/// Accumulates γ/β gradients and returns dL/dx.
fn layer_norm_backward(
    dy: &[f64],
    cache: &LnCache,
    r: usize,
    c: usize,
    gamma: &[f64],
    dgamma: &mut [f64],
    dbeta: &mut [f64],
) -> Vec<f64> {
    let mut dx = vec![0.0; r * c];
    let mut dxhat = vec![0.0; c];
    for i in 0..r {
        let dyr = &dy[i * c..(i + 1) * c];
        let xh = &cache.xhat[i * c..(i + 1) * c];
        for j in 0..c {
            dgamma[j] += dyr[j] * xh[j];
            dbeta[j] += dyr[j];
            dxhat[j] = dyr[j] * gamma[j];
        }
        let mean_d = dxhat.iter().sum::<f64>() / c as f64;
        let mean_dx = dot(&dxhat, xh) / c as f64;
        let rs = cache.rstd[i];
        for j in 0..c {
            dx[i * c + j] = rs * (dxhat[j] - mean_d - xh[j] * mean_dx);
        }
    }
    dx
}

struct BlockCache {
    ln1: LnCache,
    y1: Vec<f64>,
    tok_pre: Vec<f64>,
    tok_act: Vec<f64>,
    tok_mask: Option<Vec<f64>>,
    ln2: LnCache,
    y2: Vec<f64>,
    ch_pre: Vec<f64>,
    ch_act: Vec<f64>,
    ch_mask: Option<Vec<f64>>,
}

/// Activations retained for the backward pass.
pub struct ForwardCache {
    blocks: Vec<BlockCache>,
    final_ln: LnCache,
    pooled: Vec<f64>,
    head_pre: Vec<f64>,
    head_act: Vec<f64>,
    head_mask: Option<Vec<f64>>,
}

fn check_finite(v: &[f64], what: &str) -> Result<(), MixerError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(MixerError::NonFinite(what.into()))
    }
}

/// Runs the model on an S×C token matrix and returns `(logit, cache)`.
pub fn forward_cached(
    params: &MixerParams,
    tokens: &[f64],
    mut mode: Mode,
) -> Result<(f64, ForwardCache), MixerError> {
    let cfg = &params.config;
    let (s, c, ht, hc, hh) = (
        cfg.seq_len,
        cfg.channel_dim,
        cfg.token_hidden,
        cfg.channel_hidden,
        cfg.head_hidden,
    );
    if tokens.len() != s * c {
        return Err(MixerError::Shape(format!(
            "input has {} values, model expects {s}×{c}",
            tokens.len()
        )));
    }
    let p = cfg.dropout_rate;
    let mut x = tokens.to_vec();
    let mut blocks = Vec::with_capacity(params.blocks.len());

    for (bi, b) in params.blocks.iter().enumerate() {
        // token mixing: H = W1 (ht×s) · Y (s×c)
        let (y1, ln1) = layer_norm(&x, s, c, &b.ln1_gamma, &b.ln1_beta);
        let mut tok_pre = vec![0.0; ht * c];
        matmul(&b.token_w1, &y1, ht, s, c, &mut tok_pre);
        for h in 0..ht {
            let bias = b.token_b1[h];
            tok_pre[h * c..(h + 1) * c]
                .iter_mut()
                .for_each(|v| *v += bias);
        }
        let tok_act: Vec<f64> = tok_pre.iter().map(|&v| gelu(v)).collect();
        let tok_mask = draw_mask(ht * c, p, &mut mode);
        let dropped = apply_mask(&tok_act, &tok_mask);
        let mut z = vec![0.0; s * c];
        matmul(&b.token_w2, &dropped, s, ht, c, &mut z);
        for i in 0..s {
            let bias = b.token_b2[i];
            for (xv, zv) in x[i * c..(i + 1) * c].iter_mut().zip(&z[i * c..(i + 1) * c]) {
                *xv += zv + bias;
            }
        }

        // channel mixing: H = Y (s×c) · W1ᵀ (W1: hc×c)
        let (y2, ln2) = layer_norm(&x, s, c, &b.ln2_gamma, &b.ln2_beta);
        let mut ch_pre = vec![0.0; s * hc];
        matmul_a_bt_acc(&y2, &b.channel_w1, s, c, hc, &mut ch_pre);
        for row in ch_pre.chunks_exact_mut(hc) {
            row.iter_mut()
                .zip(&b.channel_b1)
                .for_each(|(v, bb)| *v += bb);
        }
        let ch_act: Vec<f64> = ch_pre.iter().map(|&v| gelu(v)).collect();
        let ch_mask = draw_mask(s * hc, p, &mut mode);
        let dropped = apply_mask(&ch_act, &ch_mask);
        let mut z2 = vec![0.0; s * c];
        matmul_a_bt_acc(&dropped, &b.channel_w2, s, hc, c, &mut z2);
        for (i, (xv, zv)) in x.iter_mut().zip(&z2).enumerate() {
            *xv += zv + b.channel_b2[i % c];
        }
        check_finite(&x, &format!("block {bi} output"))?;

        blocks.push(BlockCache {
            ln1,
            y1,
            tok_pre,
            tok_act,
            tok_mask,
            ln2,
            y2,
            ch_pre,
            ch_act,
            ch_mask,
        });
    }

    let (yf, final_ln) = layer_norm(&x, s, c, &params.final_gamma, &params.final_beta);
    let mut pooled = vec![0.0; c];
    for row in yf.chunks_exact(c) {
        pooled.iter_mut().zip(row).for_each(|(p, v)| *p += v);
    }
    pooled.iter_mut().for_each(|v| *v /= s as f64);

    let mut head_pre = params.head_b.clone();
    for (h, hp) in head_pre.iter_mut().enumerate() {
        *hp += dot(&params.head_w[h * c..(h + 1) * c], &pooled);
    }
    let head_act: Vec<f64> = head_pre.iter().map(|&v| gelu(v)).collect();
    let head_mask = draw_mask(hh, p, &mut mode);
    let dropped = apply_mask(&head_act, &head_mask);
    let logit = dot(&params.out_w, &dropped) + params.out_b[0];
    if !logit.is_finite() {
        return Err(MixerError::NonFinite("logit".into()));
    }
    Ok((
        logit,
        ForwardCache {
            blocks,
            final_ln,
            pooled,
            head_pre,
            head_act,
            head_mask,
        },
    ))
}

pub fn forward_tokens(params: &MixerParams, tokens: &[f64], mode: Mode) -> Result<f64, MixerError> {
    forward_cached(params, tokens, mode).map(|(z, _)| z)
}

/// Logit for a fused input.
pub fn forward(params: &MixerParams, input: &FusedInput, mode: Mode) -> Result<f64, MixerError> {
    forward_tokens(params, &input_to_f64(input), mode)
}

pub fn input_to_f64(input: &FusedInput) -> Vec<f64> {
    input.tokens().to_f64()
}

/// Back-propagates `dlogit` through the cached pass, accumulating into `grads`.
pub fn backward(
    params: &MixerParams,
    tokens_len: usize,
    cache: &ForwardCache,
    dlogit: f64,
    grads: &mut MixerParams,
) {
    let cfg = &params.config;
    let (s, c, ht, hc, hh) = (
        cfg.seq_len,
        cfg.channel_dim,
        cfg.token_hidden,
        cfg.channel_hidden,
        cfg.head_hidden,
    );
    debug_assert_eq!(tokens_len, s * c);

    // head
    let dropped = apply_mask(&cache.head_act, &cache.head_mask);
    grads.out_b[0] += dlogit;
    for (g, d) in grads.out_w.iter_mut().zip(&dropped) {
        *g += dlogit * d;
    }
    let mut dhead = vec![0.0; hh];
    for h in 0..hh {
        let mut d = dlogit * params.out_w[h];
        if let Some(m) = &cache.head_mask {
            d *= m[h];
        }
        dhead[h] = d * gelu_grad(cache.head_pre[h]);
    }
    let mut dpooled = vec![0.0; c];
    for (h, &dh) in dhead.iter().enumerate() {
        grads.head_b[h] += dh;
        let row = &params.head_w[h * c..(h + 1) * c];
        let grow = &mut grads.head_w[h * c..(h + 1) * c];
        for j in 0..c {
            grow[j] += dh * cache.pooled[j];
            dpooled[j] += dh * row[j];
        }
    }

    // mean-pool and final norm
    let inv_s = 1.0 / s as f64;
    let mut dyf = vec![0.0; s * c];
    for row in dyf.chunks_exact_mut(c) {
        row.iter_mut()
            .zip(&dpooled)
            .for_each(|(d, p)| *d = p * inv_s);
    }
    let mut dx = layer_norm_backward(
        &dyf,
        &cache.final_ln,
        s,
        c,
        &params.final_gamma,
        &mut grads.final_gamma,
        &mut grads.final_beta,
    );

    for (bi, (b, bc)) in params.blocks.iter().zip(&cache.blocks).enumerate().rev() {
        let gb = &mut grads.blocks[bi];

        // channel mixing; dx is dZ2 through the residual
        for (i, d) in dx.iter().enumerate() {
            gb.channel_b2[i % c] += d;
        }
        let dropped = apply_mask(&bc.ch_act, &bc.ch_mask);
        matmul_at_b_acc(&dx, &dropped, s, c, hc, &mut gb.channel_w2);
        let mut dh = vec![0.0; s * hc];
        matmul_acc(&dx, &b.channel_w2, s, c, hc, &mut dh);
        for (i, d) in dh.iter_mut().enumerate() {
            if let Some(m) = &bc.ch_mask {
                *d *= m[i];
            }
            *d *= gelu_grad(bc.ch_pre[i]);
        }
        for row in dh.chunks_exact(hc) {
            gb.channel_b1.iter_mut().zip(row).for_each(|(g, d)| *g += d);
        }
        matmul_at_b_acc(&dh, &bc.y2, s, hc, c, &mut gb.channel_w1);
        let mut dy2 = vec![0.0; s * c];
        matmul_acc(&dh, &b.channel_w1, s, hc, c, &mut dy2);
        let dln2 = layer_norm_backward(
            &dy2,
            &bc.ln2,
            s,
            c,
            &b.ln2_gamma,
            &mut gb.ln2_gamma,
            &mut gb.ln2_beta,
        );
        dx.iter_mut().zip(&dln2).for_each(|(a, b)| *a += b);

        // token mixing
        for i in 0..s {
            gb.token_b2[i] += dx[i * c..(i + 1) * c].iter().sum::<f64>();
        }
        let dropped = apply_mask(&bc.tok_act, &bc.tok_mask);
        matmul_a_bt_acc(&dx, &dropped, s, c, ht, &mut gb.token_w2);
        let mut dh = vec![0.0; ht * c];
        matmul_at_b_acc(&b.token_w2, &dx, s, ht, c, &mut dh);
        for (i, d) in dh.iter_mut().enumerate() {
            if let Some(m) = &bc.tok_mask {
                *d *= m[i];
            }
            *d *= gelu_grad(bc.tok_pre[i]);
        }
        for h in 0..ht {
            gb.token_b1[h] += dh[h * c..(h + 1) * c].iter().sum::<f64>();
        }
        matmul_a_bt_acc(&dh, &bc.y1, ht, c, s, &mut gb.token_w1);
        let mut dy1 = vec![0.0; s * c];
        matmul_at_b_acc(&b.token_w1, &dh, ht, s, c, &mut dy1);
        let dln1 = layer_norm_backward(
            &dy1,
            &bc.ln1,
            s,
            c,
            &b.ln1_gamma,
            &mut gb.ln1_gamma,
            &mut gb.ln1_beta,
        );
        dx.iter_mut().zip(&dln1).for_each(|(a, b)| *a += b);
    }
}

/// Per-class loss weights: `negative` applies to label 0, `positive` to label 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassWeights {
    pub negative: f64,
    pub positive: f64,
}

impl ClassWeights {
    pub fn balanced() -> Self {
        Self {
            negative: 1.0,
            positive: 1.0,
        }
    }

    pub fn with_positive(positive: f64) -> Self {
        Self {
            negative: 1.0,
            positive,
        }
    }

    fn for_label(&self, y: u8) -> f64 {
        if y == 1 {
            self.positive
        } else {
            self.negative
        }
    }
}

/// Weighted binary cross-entropy of a logit against `y`, and its derivative.
pub fn weighted_bce(logit: f64, y: u8, weights: ClassWeights) -> (f64, f64) {
    let w = weights.for_label(y);
    let yf = f64::from(y);
    (
        w * (softplus(logit) - yf * logit),
        w * (sigmoid(logit) - yf),
    )
}

/// Mean weighted BCE over the batch and its exact gradient under the dropout
/// masks drawn from `rng` (examples in batch order).
pub fn loss_and_grad(
    params: &MixerParams,
    batch: &[(&[f64], u8)],
    weights: ClassWeights,
    rng: &mut RngStream,
) -> Result<(f64, MixerParams), MixerError> {
    if batch.is_empty() {
        return Err(MixerError::EmptyBatch);
    }
    let mut grads = params.zeros_like();
    let mut total = 0.0;
    let inv_b = 1.0 / batch.len() as f64;
    for &(tokens, y) in batch {
        if y > 1 {
            return Err(MixerError::Label(y));
        }
        let (logit, cache) = forward_cached(params, tokens, Mode::Train(rng))?;
        let (loss, dlogit) = weighted_bce(logit, y, weights);
        total += loss;
        backward(params, tokens.len(), &cache, dlogit * inv_b, &mut grads);
    }
    if !grads.is_finite() {
        return Err(MixerError::NonFinite("gradients".into()));
    }
    Ok((total * inv_b, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixer::{init_params, MixerConfig};

    fn tiny(dropout: f64, blocks: usize) -> MixerConfig {
        MixerConfig {
            seq_len: 8,
            channel_dim: 16,
            num_blocks: blocks,
            token_hidden: 6,
            channel_hidden: 10,
            dropout_rate: dropout,
            head_hidden: 5,
        }
    }

    fn tokens(seed: u64, n: usize) -> Vec<f64> {
        let mut r = RngStream::new(seed, 1);
        (0..n).map(|_| r.normal()).collect()
    }

    #[test]
    fn zero_dropout_modes_agree_bitwise() {
        let p = init_params(tiny(0.0, 2), 1).unwrap();
        let x = tokens(2, 128);
        let mut r1 = RngStream::new(3, 0);
        let mut r2 = RngStream::new(4, 0);
        let a = forward_tokens(&p, &x, Mode::Train(&mut r1)).unwrap();
        let b = forward_tokens(&p, &x, Mode::Eval).unwrap();
        let c = forward_tokens(&p, &x, Mode::Mc(&mut r2)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(b.to_bits(), c.to_bits());
    }

    #[test]
    fn zeroed_params_give_zero_logit() {
        let p = MixerParams::zeroed(tiny(0.1, 1));
        let z = forward_tokens(&p, &vec![0.0; 128], Mode::Eval).unwrap();
        assert_eq!(z, 0.0);
        assert_eq!(sigmoid(z), 0.5);
        let mut rng = RngStream::new(0, 0);
        let (loss, _) = loss_and_grad(
            &p,
            &[(&vec![0.0; 128], 1)],
            ClassWeights::balanced(),
            &mut rng,
        )
        .unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn dropout_changes_train_but_not_eval() {
        let p = init_params(tiny(0.5, 1), 1).unwrap();
        let x = tokens(2, 128);
        let e1 = forward_tokens(&p, &x, Mode::Eval).unwrap();
        let e2 = forward_tokens(&p, &x, Mode::Eval).unwrap();
        assert_eq!(e1, e2);
        let mut r = RngStream::new(9, 0);
        let outs: Vec<f64> = (0..5)
            .map(|_| forward_tokens(&p, &x, Mode::Mc(&mut r)).unwrap())
            .collect();
        assert!(outs.iter().any(|&o| o != e1));
    }

    #[test]
    fn shape_and_label_errors() {
        let p = init_params(tiny(0.0, 1), 1).unwrap();
        assert!(matches!(
            forward_tokens(&p, &[0.0; 5], Mode::Eval),
            Err(MixerError::Shape(_))
        ));
        let x = vec![0.0; 128];
        let mut r = RngStream::new(0, 0);
        assert!(matches!(
            loss_and_grad(&p, &[(&x, 2)], ClassWeights::balanced(), &mut r),
            Err(MixerError::Label(2))
        ));
        assert!(matches!(
            loss_and_grad(&p, &[], ClassWeights::balanced(), &mut r),
            Err(MixerError::EmptyBatch)
        ));
    }

    #[test]
    fn positive_weight_scales_positive_gradient_exactly() {
        let p = init_params(tiny(0.0, 1), 7).unwrap();
        let x = tokens(5, 128);
        let mut r = RngStream::new(0, 0);
        let (l1, g1) =
            loss_and_grad(&p, &[(&x, 1)], ClassWeights::with_positive(1.5), &mut r).unwrap();
        let (l2, g2) =
            loss_and_grad(&p, &[(&x, 1)], ClassWeights::with_positive(3.0), &mut r).unwrap();
        assert_eq!(l2, 2.0 * l1);
        for (a, b) in g1.tensors().iter().zip(g2.tensors()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(2.0 * x, *y);
            }
        }
    }

    #[test]
    fn gelu_derivative_matches_difference_quotient() {
        for &x in &[-3.0, -0.7, 0.0, 0.4, 2.5] {
            let h = 1e-6;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn bce_is_stable_for_large_logits() {
        let (l, d) = weighted_bce(800.0, 0, ClassWeights::balanced());
        assert!((l - 800.0).abs() < 1e-9 && (d - 1.0).abs() < 1e-12);
        let (l, d) = weighted_bce(-800.0, 0, ClassWeights::balanced());
        assert!(l.abs() < 1e-12 && d.abs() < 1e-12);
    }
}
