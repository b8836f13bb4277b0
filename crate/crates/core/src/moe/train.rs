use crate::datagen::Dataset;
use crate::error::{check_dim, Result};
use crate::models::{linreg_mse_and_grad, logreg_ce_and_grad, GlmParams, Link};
use crate::numerics::{Rng, Stream};

use super::model::{moe_loss_and_grad, MoeModel};
use super::optim::{run_minibatch, TrainConfig};

/// Trains gate and experts jointly. Regression minimizes the MSE of the
/// gated mean; classification the cross-entropy of the gated probability.
///
/// Gate noise (when enabled) comes from the `GateNoise` substream of
/// `cfg.seed`. Returns the trained model and per-epoch mean loss.
pub fn train_moe(model: &MoeModel, train: &Dataset, cfg: &TrainConfig) -> Result<(MoeModel, Vec<f64>)> {
    check_dim(model.dim(), train.dim())?;
    let mut noise_rng = Rng::new(cfg.seed).substream(Stream::GateNoise);
    let mut work = model.clone();
    let mut params = model.params_flat();
    let history = run_minibatch(&mut params, train, cfg, |p, batch| {
        work.set_params_flat(p)?;
        let noise = if cfg.noise { Some(&mut noise_rng) } else { None };
        let (loss, grad) = moe_loss_and_grad(&work, batch, noise)?;
        Ok((loss, grad.flatten()))
    })?;
    work.set_params_flat(&params)?;
    Ok((work, history))
}

/// Trains a single GLM with the same loop, batches and optimizer as
/// [`train_moe`].
pub fn train_glm(init: &GlmParams, train: &Dataset, cfg: &TrainConfig) -> Result<(GlmParams, Vec<f64>)> {
    check_dim(init.dim(), train.dim())?;
    let mut theta = init.theta.clone();
    let history = run_minibatch(&mut theta, train, cfg, |p, batch| match init.link {
        Link::Identity => linreg_mse_and_grad(p, batch),
        Link::Logistic => logreg_ce_and_grad(&GlmParams::logistic(p.to_vec()), batch),
    })?;
    Ok((GlmParams { theta, ..init.clone() }, history))
}

/// Mean training loss of a model under the deterministic gate.
pub fn moe_eval_loss(model: &MoeModel, data: &Dataset) -> Result<f64> {
    Ok(moe_loss_and_grad(model, data, None)?.0)
}
