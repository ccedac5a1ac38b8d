use super::{MixerParams, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl From<&TrainConfig> for AdamHyper {
    fn from(c: &TrainConfig) -> Self {
        Self {
            learning_rate: c.learning_rate,
            beta1: c.beta1,
            beta2: c.beta2,
            epsilon: c.epsilon,
        }
    }
}

/// Bias-corrected Adam update of one tensor. `step` starts at 1.
pub fn adam_update(
    param: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    hp: AdamHyper,
    step: u64,
) {
    debug_assert!(step >= 1);
    let bc1 = 1.0 - hp.beta1.powf(step as f64);
    let bc2 = 1.0 - hp.beta2.powf(step as f64);
    for i in 0..param.len() {
        let g = grad[i];
        m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g;
        v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        param[i] -= hp.learning_rate * m_hat / (v_hat.sqrt() + hp.epsilon);
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: MixerParams,
    pub v: MixerParams,
}

impl AdamState {
    pub fn new(params: &MixerParams) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }
}

pub fn adam_step(
    params: &mut MixerParams,
    grads: &MixerParams,
    state: &mut AdamState,
    config: &TrainConfig,
    step: u64,
) {
    let hp = AdamHyper::from(config);
    let tensors = params.tensors_mut();
    let ms = state.m.tensors_mut();
    let vs = state.v.tensors_mut();
    for (((p, g), m), v) in tensors.into_iter().zip(grads.tensors()).zip(ms).zip(vs) {
        adam_update(p, g, m, v, hp, step);
    }
}
