use crate::distributions::ParamVec;

use super::config::OptimizerKind;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerState {
    Sgd,
    Adam {
        step: u64,
        m: Vec<ParamVec>,
        v: Vec<ParamVec>,
    },
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, k: usize, dim: usize) -> Self {
        match kind {
            OptimizerKind::Sgd => OptimizerState::Sgd,
            OptimizerKind::Adam => OptimizerState::Adam {
                step: 0,
                m: vec![ParamVec::zeros(dim); k],
                v: vec![ParamVec::zeros(dim); k],
            },
        }
    }

    /// Ascent step on `means` along `grad - l2_coef * mean`.
    pub fn step(&mut self, means: &mut [ParamVec], grad: &[ParamVec], lr: f64, l2_coef: f64) {
        match self {
            OptimizerState::Sgd => {
                for (mean, g) in means.iter_mut().zip(grad) {
                    for (mu, gv) in mean.iter_mut().zip(g.iter()) {
                        *mu += lr * (gv - l2_coef * *mu);
                    }
                }
            }
            OptimizerState::Adam { step, m, v } => {
                *step += 1;
                let t = *step as i32;
                let bc1 = 1.0 - ADAM_BETA1.powi(t);
                let bc2 = 1.0 - ADAM_BETA2.powi(t);
                for (((mean, g), mk), vk) in means.iter_mut().zip(grad).zip(m).zip(v) {
                    for i in 0..mean.dim() {
                        let d = g[i] - l2_coef * mean[i];
                        mk[i] = ADAM_BETA1 * mk[i] + (1.0 - ADAM_BETA1) * d;
                        vk[i] = ADAM_BETA2 * vk[i] + (1.0 - ADAM_BETA2) * d * d;
                        let mhat = mk[i] / bc1;
                        let vhat = vk[i] / bc2;
                        mean[i] += lr * mhat / (vhat.sqrt() + ADAM_EPS);
                    }
                }
            }
        }
    }
}
