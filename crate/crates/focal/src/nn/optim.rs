//! SGDM and Adam parameter updates with a stepped learning-rate schedule.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerKind {
    Sgdm,
    Adam,
}

/// Everything the training loop needs to know.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    /// Multiplied into the rate every `lr_drop_period` epochs; 1.0 disables.
    pub lr_drop_factor: f64,
    pub lr_drop_period: usize,
    pub batch_size: usize,
    pub epochs: usize,
    /// SGDM momentum.
    pub momentum: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// SGDM recipe: rate 5e-3 halved every 5 epochs, batch 256.
    pub fn sgdm_recipe() -> Self {
        TrainConfig {
            optimizer: OptimizerKind::Sgdm,
            learning_rate: 5e-3,
            lr_drop_factor: 0.5,
            lr_drop_period: 5,
            batch_size: 256,
            epochs: 50,
            momentum: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }

    /// Adam with standard parameters.
    pub fn adam_recipe() -> Self {
        TrainConfig {
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            lr_drop_factor: 1.0,
            lr_drop_period: 1,
            batch_size: 256,
            epochs: 50,
            momentum: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(self.lr_drop_factor > 0.0 && self.lr_drop_factor <= 1.0) {
            return Err(Error::invalid("learning-rate drop factor must be in (0, 1]"));
        }
        if self.batch_size < 1 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if self.lr_drop_period < 1 {
            return Err(Error::invalid("drop period must be at least 1 epoch"));
        }
        Ok(())
    }

    /// Learning rate in force during a 0-based epoch: the initial rate has
    /// been multiplied by the drop factor once per completed period.
    pub fn effective_lr(&self, epoch: usize) -> f64 {
        self.learning_rate * self.lr_drop_factor.powi((epoch / self.lr_drop_period) as i32)
    }
}

/// Per-tensor optimizer state.
#[derive(Debug, Clone)]
pub enum OptState {
    Sgdm { velocity: Vec<f32> },
    Adam { m: Vec<f32>, v: Vec<f32>, t: u64 },
}

impl OptState {
    pub fn new(kind: OptimizerKind, len: usize) -> Self {
        match kind {
            OptimizerKind::Sgdm => OptState::Sgdm {
                velocity: vec![0.0; len],
            },
            OptimizerKind::Adam => OptState::Adam {
                m: vec![0.0; len],
                v: vec![0.0; len],
                t: 0,
            },
        }
    }
}

/// One update over a parameter tensor: SGDM is `v <- mu v - lr g; p <- p + v`;
/// Adam is the standard bias-corrected moment update.
pub fn optimizer_step(
    params: &mut [f32],
    grads: &[f32],
    state: &mut OptState,
    lr: f64,
    cfg: &TrainConfig,
) {
    debug_assert_eq!(params.len(), grads.len());
    match state {
        OptState::Sgdm { velocity } => {
            let mu = cfg.momentum as f32;
            let lr = lr as f32;
            for ((p, &g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
                *v = mu * *v - lr * g;
                *p += *v;
            }
        }
        OptState::Adam { m, v, t } => {
            *t += 1;
            let b1 = cfg.beta1;
            let b2 = cfg.beta2;
            let bc1 = 1.0 - b1.powi(*t as i32);
            let bc2 = 1.0 - b2.powi(*t as i32);
            for ((p, &g), (mi, vi)) in params
                .iter_mut()
                .zip(grads)
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                let g = g as f64;
                let m_new = b1 * *mi as f64 + (1.0 - b1) * g;
                let v_new = b2 * *vi as f64 + (1.0 - b2) * g * g;
                *mi = m_new as f32;
                *vi = v_new as f32;
                let mhat = m_new / bc1;
                let vhat = v_new / bc2;
                *p -= (lr * mhat / (vhat.sqrt() + cfg.eps)) as f32;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        for kind in [OptimizerKind::Sgdm, OptimizerKind::Adam] {
            let cfg = match kind {
                OptimizerKind::Sgdm => TrainConfig::sgdm_recipe(),
                OptimizerKind::Adam => TrainConfig::adam_recipe(),
            };
            let mut p = vec![1.0f32, -2.0, 3.0];
            let mut st = OptState::new(kind, 3);
            optimizer_step(&mut p, &[0.0; 3], &mut st, cfg.learning_rate, &cfg);
            assert_eq!(p, vec![1.0, -2.0, 3.0]);
        }
    }

    #[test]
    fn sgdm_single_step_pinned() {
        let cfg = TrainConfig {
            momentum: 0.9,
            learning_rate: 0.005,
            ..TrainConfig::sgdm_recipe()
        };
        let mut p = vec![0.0f32];
        let mut st = OptState::new(OptimizerKind::Sgdm, 1);
        optimizer_step(&mut p, &[1.0], &mut st, 0.005, &cfg);
        assert!((p[0] + 0.005).abs() < 1e-9);
    }

    #[test]
    fn sgdm_momentum_accumulates() {
        let cfg = TrainConfig::sgdm_recipe();
        let mut p = vec![0.0f32];
        let mut st = OptState::new(OptimizerKind::Sgdm, 1);
        optimizer_step(&mut p, &[1.0], &mut st, 0.005, &cfg);
        optimizer_step(&mut p, &[1.0], &mut st, 0.005, &cfg);
        // v1 = -0.005; v2 = 0.9 * v1 - 0.005 = -0.0095; p = v1 + v2
        assert!((p[0] + 0.0145).abs() < 1e-7);
    }

    #[test]
    fn lr_schedule_drop_pinned() {
        let cfg = TrainConfig {
            learning_rate: 5e-3,
            lr_drop_factor: 0.5,
            lr_drop_period: 5,
            ..TrainConfig::sgdm_recipe()
        };
        assert_eq!(cfg.effective_lr(0), 5e-3);
        assert_eq!(cfg.effective_lr(4), 5e-3);
        assert_eq!(cfg.effective_lr(5), 2.5e-3);
        assert_eq!(cfg.effective_lr(9), 2.5e-3);
        assert_eq!(cfg.effective_lr(10), 1.25e-3);
    }

    #[test]
    fn adam_first_step_is_lr_sized() {
        let cfg = TrainConfig::adam_recipe();
        let mut p = vec![0.0f32];
        let mut st = OptState::new(OptimizerKind::Adam, 1);
        optimizer_step(&mut p, &[0.3], &mut st, 1e-3, &cfg);
        // bias correction makes the first step ~lr * sign(g)
        assert!((p[0] + 1e-3).abs() < 1e-6, "{}", p[0]);
    }

    #[test]
    fn config_validation() {
        let mut cfg = TrainConfig::sgdm_recipe();
        assert!(cfg.validate().is_ok());
        cfg.learning_rate = 0.0;
        assert!(cfg.validate().is_err());
        cfg = TrainConfig::sgdm_recipe();
        cfg.lr_drop_factor = 1.5;
        assert!(cfg.validate().is_err());
        cfg = TrainConfig::sgdm_recipe();
        cfg.batch_size = 0;
        assert!(cfg.validate().is_err());
    }
}
