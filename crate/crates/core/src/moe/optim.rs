//! Adam, the exponential-decay learning-rate schedule and the shared
//! mini-batch loop.

use std::fmt;
use std::str::FromStr;

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{Rng, Stream};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;
pub const DEFAULT_BATCH_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    Adam,
    Sgd,
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Optimizer::Adam => "adam",
            Optimizer::Sgd => "sgd",
        })
    }
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(Optimizer::Adam),
            "sgd" => Ok(Optimizer::Sgd),
            other => Err(Error::Config(format!("unknown optimizer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    /// Initial learning rate η₀ (or the fixed rate).
    pub lr0: f64,
    /// Per-epoch decay γ in `η₀·exp(−γ·epoch)`.
    pub decay: f64,
    pub fixed_lr: bool,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Sample gating noise during training.
    pub noise: bool,
}

impl TrainConfig {
    /// Regression MoE: Adam, η₀ = 0.2 decayed with γ = 0.75, 30 epochs.
    pub fn regression(seed: u64) -> Self {
        TrainConfig {
            optimizer: Optimizer::Adam,
            lr0: 0.2,
            decay: 0.75,
            fixed_lr: false,
            epochs: 30,
            batch_size: DEFAULT_BATCH_SIZE,
            seed,
            noise: true,
        }
    }

    /// Classification MoE: Adam at a fixed 0.001 for 100 epochs, the same
    /// budget the sampling baselines get.
    pub fn classification(seed: u64) -> Self {
        TrainConfig {
            optimizer: Optimizer::Adam,
            lr0: 0.001,
            decay: 0.0,
            fixed_lr: true,
            epochs: 100,
            batch_size: DEFAULT_BATCH_SIZE,
            seed,
            noise: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr0 > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr0)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if !self.decay.is_finite() {
            return Err(Error::Config("decay must be finite".into()));
        }
        Ok(())
    }
}

/// Learning rate for a zero-based epoch index.
pub fn lr_schedule(cfg: &TrainConfig, epoch: usize) -> f64 {
    if cfg.fixed_lr {
        cfg.lr0
    } else {
        cfg.lr0 * (-cfg.decay * epoch as f64).exp()
    }
}

/// Bias-corrected Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }
}

pub fn adam_step(state: &mut AdamState, params: &mut [f64], grad: &[f64], lr: f64) {
    debug_assert_eq!(params.len(), grad.len());
    state.t += 1;
    let bc1 = 1.0 - ADAM_BETA1.powi(state.t as i32);
    let bc2 = 1.0 - ADAM_BETA2.powi(state.t as i32);
    for i in 0..params.len() {
        state.m[i] = ADAM_BETA1 * state.m[i] + (1.0 - ADAM_BETA1) * grad[i];
        state.v[i] = ADAM_BETA2 * state.v[i] + (1.0 - ADAM_BETA2) * grad[i] * grad[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
}

pub fn sgd_step(params: &mut [f64], grad: &[f64], lr: f64) {
    for (p, g) in params.iter_mut().zip(grad) {
        *p -= lr * g;
    }
}

/// Shuffled mini-batch descent over a flat parameter vector.
///
/// Batches are drawn from the `Shuffle` substream of `cfg.seed`. Returns the
/// per-epoch mean training loss.
pub(crate) fn run_minibatch<F>(params: &mut [f64], data: &Dataset, cfg: &TrainConfig, mut loss_grad: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &Dataset) -> Result<(f64, Vec<f64>)>,
{
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let mut shuffle = Rng::new(cfg.seed).substream(Stream::Shuffle);
    let mut adam = AdamState::new(params.len());
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = lr_schedule(cfg, epoch);
        shuffle.shuffle(&mut order);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = data.subset(chunk);
            let (loss, grad) = loss_grad(params, &batch)?;
            total += loss * chunk.len() as f64;
            match cfg.optimizer {
                Optimizer::Adam => adam_step(&mut adam, params, &grad, lr),
                Optimizer::Sgd => sgd_step(params, &grad, lr),
            }
        }
        let epoch_loss = total / data.len() as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Config(format!("training diverged at epoch {epoch}")));
        }
        history.push(epoch_loss);
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_examples() {
        let cfg = TrainConfig::regression(0);
        assert_eq!(lr_schedule(&cfg, 0), 0.2);
        assert!((lr_schedule(&cfg, 1) - 0.2 * (-0.75f64).exp()).abs() < 1e-16);
        assert!((lr_schedule(&cfg, 1) - 0.09447).abs() < 1e-5);
        let fixed = TrainConfig::classification(0);
        assert_eq!(lr_schedule(&fixed, 17), 0.001);
    }

    #[test]
    fn adam_with_zero_gradient_is_a_no_op() {
        let mut p = vec![0.3, -1.2, 4.0];
        let before = p.clone();
        let mut st = AdamState::new(3);
        for _ in 0..100 {
            adam_step(&mut st, &mut p, &[0.0; 3], 0.1);
        }
        assert_eq!(p, before);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        // bias correction makes the first step ±lr per coordinate
        let mut p = vec![0.0, 0.0];
        adam_step(&mut AdamState::new(2), &mut p, &[3.0, -0.01], 0.05);
        assert!((p[0] + 0.05).abs() < 1e-9 && (p[1] - 0.05).abs() < 1e-6);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = TrainConfig::regression(0);
        cfg.epochs = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::regression(0);
        cfg.lr0 = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::regression(0);
        cfg.batch_size = 0;
        assert!(cfg.validate().is_err());
    }
}
