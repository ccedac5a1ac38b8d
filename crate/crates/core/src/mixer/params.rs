use super::{MixerConfig, MixerError};
use crate::math::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub ln1_gamma: Vec<f64>,
    pub ln1_beta: Vec<f64>,
    /// token_hidden × seq_len
    pub token_w1: Vec<f64>,
    pub token_b1: Vec<f64>,
    /// seq_len × token_hidden
    pub token_w2: Vec<f64>,
    pub token_b2: Vec<f64>,
    pub ln2_gamma: Vec<f64>,
    pub ln2_beta: Vec<f64>,
    /// channel_hidden × channel_dim
    pub channel_w1: Vec<f64>,
    pub channel_b1: Vec<f64>,
    /// channel_dim × channel_hidden
    pub channel_w2: Vec<f64>,
    pub channel_b2: Vec<f64>,
}

/// All trainable tensors. Also used as the gradient and Adam-moment container.
#[derive(Debug, Clone, PartialEq)]
pub struct MixerParams {
    pub config: MixerConfig,
    pub blocks: Vec<BlockParams>,
    pub final_gamma: Vec<f64>,
    pub final_beta: Vec<f64>,
    /// head_hidden × channel_dim
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
    pub out_w: Vec<f64>,
    /// single element
    pub out_b: Vec<f64>,
}

/// `(rows, cols)` of every tensor in declaration order. Vectors are `(1, n)`.
pub fn tensor_shapes(c: &MixerConfig) -> Vec<(String, usize, usize)> {
    let (s, d, ht, hc, hh) = (
        c.seq_len,
        c.channel_dim,
        c.token_hidden,
        c.channel_hidden,
        c.head_hidden,
    );
    let mut out = Vec::with_capacity(12 * c.num_blocks + 6);
    for b in 0..c.num_blocks {
        let p = |n: &str| format!("block{b}.{n}");
        out.extend([
            (p("ln1_gamma"), 1, d),
            (p("ln1_beta"), 1, d),
            (p("token_w1"), ht, s),
            (p("token_b1"), 1, ht),
            (p("token_w2"), s, ht),
            (p("token_b2"), 1, s),
            (p("ln2_gamma"), 1, d),
            (p("ln2_beta"), 1, d),
            (p("channel_w1"), hc, d),
            (p("channel_b1"), 1, hc),
            (p("channel_w2"), d, hc),
            (p("channel_b2"), 1, d),
        ]);
    }
    out.extend([
        ("final_gamma".to_string(), 1, d),
        ("final_beta".to_string(), 1, d),
        ("head_w".to_string(), hh, d),
        ("head_b".to_string(), 1, hh),
        ("out_w".to_string(), 1, hh),
        ("out_b".to_string(), 1, 1),
    ]);
    out
}

impl MixerParams {
    /// Every tensor zero, including LayerNorm scales.
    pub fn zeroed(config: MixerConfig) -> Self {
        let (s, d, ht, hc, hh) = (
            config.seq_len,
            config.channel_dim,
            config.token_hidden,
            config.channel_hidden,
            config.head_hidden,
        );
        let block = BlockParams {
            ln1_gamma: vec![0.0; d],
            ln1_beta: vec![0.0; d],
            token_w1: vec![0.0; ht * s],
            token_b1: vec![0.0; ht],
            token_w2: vec![0.0; s * ht],
            token_b2: vec![0.0; s],
            ln2_gamma: vec![0.0; d],
            ln2_beta: vec![0.0; d],
            channel_w1: vec![0.0; hc * d],
            channel_b1: vec![0.0; hc],
            channel_w2: vec![0.0; d * hc],
            channel_b2: vec![0.0; d],
        };
        Self {
            config,
            blocks: vec![block; config.num_blocks],
            final_gamma: vec![0.0; d],
            final_beta: vec![0.0; d],
            head_w: vec![0.0; hh * d],
            head_b: vec![0.0; hh],
            out_w: vec![0.0; hh],
            out_b: vec![0.0],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeroed(self.config)
    }

    pub fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut out = Vec::with_capacity(12 * self.blocks.len() + 6);
        for b in &self.blocks {
            out.extend([
                &b.ln1_gamma,
                &b.ln1_beta,
                &b.token_w1,
                &b.token_b1,
                &b.token_w2,
                &b.token_b2,
                &b.ln2_gamma,
                &b.ln2_beta,
                &b.channel_w1,
                &b.channel_b1,
                &b.channel_w2,
                &b.channel_b2,
            ]);
        }
        out.extend([
            &self.final_gamma,
            &self.final_beta,
            &self.head_w,
            &self.head_b,
            &self.out_w,
            &self.out_b,
        ]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::with_capacity(12 * self.blocks.len() + 6);
        for b in &mut self.blocks {
            out.extend([
                &mut b.ln1_gamma,
                &mut b.ln1_beta,
                &mut b.token_w1,
                &mut b.token_b1,
                &mut b.token_w2,
                &mut b.token_b2,
                &mut b.ln2_gamma,
                &mut b.ln2_beta,
                &mut b.channel_w1,
                &mut b.channel_b1,
                &mut b.channel_w2,
                &mut b.channel_b2,
            ]);
        }
        out.extend([
            &mut self.final_gamma,
            &mut self.final_beta,
            &mut self.head_w,
            &mut self.head_b,
            &mut self.out_w,
            &mut self.out_b,
        ]);
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Checks every tensor length against the configuration.
    pub fn validate(&self) -> Result<(), MixerError> {
        self.config.validate()?;
        let shapes = tensor_shapes(&self.config);
        let tensors = self.tensors();
        if shapes.len() != tensors.len() {
            return Err(MixerError::Shape(format!(
                "{} tensors, expected {}",
                tensors.len(),
                shapes.len()
            )));
        }
        for ((name, r, c), t) in shapes.iter().zip(tensors) {
            if t.len() != r * c {
                return Err(MixerError::Shape(format!(
                    "{name} has {} values, expected {}",
                    t.len(),
                    r * c
                )));
            }
        }
        if !self.is_finite() {
            return Err(MixerError::NonFinite("parameters".into()));
        }
        Ok(())
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &MixerParams) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            crate::math::matrix::axpy(alpha, b, a);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= alpha);
        }
    }
}

/// Glorot-uniform weights, zero biases, unit LayerNorm scales.
pub fn init_params(config: MixerConfig, seed: u64) -> Result<MixerParams, MixerError> {
    config.validate()?;
    let mut params = MixerParams::zeroed(config);
    let mut rng = RngStream::new(seed, 0);
    let shapes = tensor_shapes(&config);
    for ((name, rows, cols), t) in shapes.into_iter().zip(params.tensors_mut()) {
        let leaf = name.rsplit('.').next().unwrap_or(&name);
        if leaf.ends_with("gamma") {
            t.fill(1.0);
        } else if leaf.ends_with("_w1")
            || leaf.ends_with("_w2")
            || leaf == "head_w"
            || leaf == "out_w"
        {
            // fan_in = cols, fan_out = rows (out_w maps head_hidden -> 1)
            let (fan_in, fan_out) = if leaf == "out_w" {
                (cols, 1)
            } else {
                (cols, rows)
            };
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in t.iter_mut() {
                *v = (2.0 * rng.uniform() - 1.0) * limit;
            }
        }
    }
    Ok(params)
}
