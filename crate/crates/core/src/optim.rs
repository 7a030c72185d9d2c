//! AdamW with decoupled weight decay and linear learning-rate warmup.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub warmup_steps: u64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            learning_rate: 2e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.01,
            warmup_steps: 100,
        }
    }
}

/// Learning rate for the update with 0-based index `step`.
pub fn warmup_lr(base: f64, step: u64, warmup_steps: u64) -> f64 {
    if step < warmup_steps {
        base * step as f64 / warmup_steps as f64
    } else {
        base
    }
}

/// A parameter slice with its gradient. Entries flagged in `frozen` are
/// neither decayed nor updated.
pub struct ParamBlock<'a> {
    pub params: &'a mut [f64],
    pub grads: &'a [f64],
    pub frozen: Option<&'a [bool]>,
}

#[derive(Debug, Clone)]
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AdamW {
    config: AdamWConfig,
    step: u64,
    moments: Vec<Moments>,
}

impl AdamW {
    pub fn new(config: AdamWConfig, block_sizes: &[usize]) -> Self {
        AdamW {
            config,
            step: 0,
            moments: block_sizes
                .iter()
                .map(|&n| Moments {
                    m: vec![0.0; n],
                    v: vec![0.0; n],
                })
                .collect(),
        }
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Learning rate the next call to [`AdamW::step`] will use.
    pub fn current_lr(&self) -> f64 {
        warmup_lr(
            self.config.learning_rate,
            self.step,
            self.config.warmup_steps,
        )
    }

    /// Applies one update to every block. Blocks must be passed in the same
    /// order and with the same sizes as given to [`AdamW::new`].
    pub fn step(&mut self, blocks: &mut [ParamBlock<'_>]) {
        assert_eq!(
            blocks.len(),
            self.moments.len(),
            "parameter block count changed"
        );
        let c = self.config;
        let lr = self.current_lr();
        let t = (self.step + 1) as f64;
        let bc1 = 1.0 - libm::pow(c.beta1, t);
        let bc2 = 1.0 - libm::pow(c.beta2, t);
        for (block, mom) in blocks.iter_mut().zip(self.moments.iter_mut()) {
            assert_eq!(
                block.params.len(),
                mom.m.len(),
                "parameter block size changed"
            );
            for i in 0..block.params.len() {
                if block.frozen.is_some_and(|f| f[i]) {
                    continue;
                }
                let g = block.grads[i];
                mom.m[i] = c.beta1 * mom.m[i] + (1.0 - c.beta1) * g;
                mom.v[i] = c.beta2 * mom.v[i] + (1.0 - c.beta2) * g * g;
                let m_hat = mom.m[i] / bc1;
                let v_hat = mom.v[i] / bc2;
                let p = &mut block.params[i];
                *p *= 1.0 - lr * c.weight_decay;
                *p -= lr * m_hat / (libm::sqrt(v_hat) + c.epsilon);
            }
        }
        self.step += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warmup_is_linear_then_flat() {
        assert_eq!(warmup_lr(1.0, 0, 100), 0.0);
        assert_eq!(warmup_lr(1.0, 25, 100), 0.25);
        assert_eq!(warmup_lr(1.0, 100, 100), 1.0);
        assert_eq!(warmup_lr(1.0, 5000, 100), 1.0);
        assert_eq!(warmup_lr(0.5, 0, 0), 0.5);
    }

    #[test]
    fn first_update_moves_by_lr() {
        // With bias correction the first step is lr * sign(g) (up to epsilon).
        let cfg = AdamWConfig {
            learning_rate: 0.1,
            weight_decay: 0.0,
            warmup_steps: 0,
            ..AdamWConfig::default()
        };
        let mut opt = AdamW::new(cfg, &[2]);
        let mut p = [1.0, 1.0];
        opt.step(&mut [ParamBlock {
            params: &mut p,
            grads: &[3.0, -0.5],
            frozen: None,
        }]);
        assert!((p[0] - 0.9).abs() < 1e-6);
        assert!((p[1] - 1.1).abs() < 1e-6);
    }

    #[test]
    fn frozen_entries_untouched() {
        let cfg = AdamWConfig {
            learning_rate: 0.1,
            warmup_steps: 0,
            ..AdamWConfig::default()
        };
        let mut opt = AdamW::new(cfg, &[2]);
        let mut p = [-1e9, 1.0];
        for _ in 0..10 {
            opt.step(&mut [ParamBlock {
                params: &mut p,
                grads: &[1.0, 1.0],
                frozen: Some(&[true, false]),
            }]);
        }
        assert_eq!(p[0], -1e9);
        assert!(p[1] < 1.0);
    }

    #[test]
    fn decoupled_decay_shrinks_with_zero_gradient() {
        let cfg = AdamWConfig {
            learning_rate: 0.1,
            weight_decay: 0.5,
            warmup_steps: 0,
            ..AdamWConfig::default()
        };
        let mut opt = AdamW::new(cfg, &[1]);
        let mut p = [2.0];
        opt.step(&mut [ParamBlock {
            params: &mut p,
            grads: &[0.0],
            frozen: None,
        }]);
        assert!((p[0] - 2.0 * 0.95).abs() < 1e-12);
    }
}
