use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::models::Link;
use crate::moe::{adam_step, AdamState, INIT_STD};
use crate::numerics::{sample_standard_normal, sigmoid, softplus, softplus_inv, Rng, Stream};

use super::{energy_grad, epoch_batches, Likelihood, PosteriorSamples, Provenance};

/// Mean-field Gaussian variational inference trained with Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct ViConfig {
    /// Weight on `E_q[log q]`.
    pub temperature: f64,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Reparameterized draws averaged per gradient step.
    pub mc_samples: usize,
    /// Draws taken from the fitted posterior for prediction.
    pub n_samples: usize,
    pub seed: u64,
}

impl ViConfig {
    pub fn new(seed: u64) -> Self {
        ViConfig { temperature: 0.1, epochs: 100, lr: 0.01, batch_size: 64, mc_samples: 1, n_samples: 16, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(Error::Config(format!("temperature must be positive, got {}", self.temperature)));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.mc_samples == 0 || self.n_samples == 0 {
            return Err(Error::Config("epochs, batch size and sample counts must be at least 1".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Diagonal Gaussian `q(θ) = N(mean, diag(std²))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViFit {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ViFit {
    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        self.mean.iter().zip(&self.std).map(|(m, s)| m + s * rng.standard_normal()).collect()
    }

    pub fn log_density(&self, theta: &[f64]) -> f64 {
        theta
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(t, (m, s))| crate::models::gaussian_log_density(*t, *m, *s))
            .sum()
    }

    fn from_unconstrained(p: &[f64]) -> ViFit {
        let d = p.len() / 2;
        ViFit { mean: p[..d].to_vec(), std: p[d..].iter().map(|&r| softplus(r)).collect() }
    }
}

/// Monte-Carlo estimate of `E_q[log p(D, θ)] − T · E_q[log q(θ)]` under the
/// `N(0, I)` prior.
pub fn elbo_estimate(lik: &Likelihood, ds: &Dataset, q: &ViFit, temperature: f64, n_mc: usize, rng: &mut Rng) -> Result<f64> {
    let mut total = 0.0;
    for _ in 0..n_mc {
        let theta = q.sample(rng);
        let log_prior: f64 = theta.iter().map(|t| crate::models::gaussian_log_density(*t, 0.0, 1.0)).sum();
        total += lik.log_likelihood(&theta, ds)? + log_prior - temperature * q.log_density(&theta);
    }
    Ok(total / n_mc as f64)
}

/// Initial variational parameters `[μ; ρ]` with `σ = softplus(ρ)`.
fn initial_params(d: usize, seed: u64) -> Vec<f64> {
    let mut init = Rng::new(seed).substream(Stream::Init);
    let mut p: Vec<f64> = (0..d).map(|_| init.normal(0.0, INIT_STD)).collect();
    p.extend(std::iter::repeat_n(softplus_inv(INIT_STD), d));
    p
}

/// Fits `q` by minimizing `−E_q[log p(D, θ)] + T · E_q[log q(θ)]` with
/// reparameterized gradients `θ = μ + softplus(ρ) ⊙ ε`.
///
/// The entropy part is differentiated in closed form, which is exact for
/// the diagonal family: `∂/∂σ E_q[log q] = −1/σ`.
pub fn vi_fit(lik: &Likelihood, ds: &Dataset, cfg: &ViConfig) -> Result<ViFit> {
    Ok(fit_inner(lik, ds, cfg)?.0)
}

fn fit_inner(lik: &Likelihood, ds: &Dataset, cfg: &ViConfig) -> Result<(ViFit, Rng)> {
    cfg.validate()?;
    if lik.link != Link::for_task(ds.kind()) {
        return Err(Error::Config(format!("{} likelihood does not match a {} dataset", lik.link, ds.kind())));
    }
    let d = ds.dim();
    let root = Rng::new(cfg.seed);
    let mut shuffle = root.substream(Stream::Shuffle);
    let mut eps_rng = root.substream(Stream::Sampler);
    let mut params = initial_params(d, cfg.seed);
    let mut adam = AdamState::new(2 * d);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let batches = epoch_batches(ds.len(), cfg.batch_size);
    let mut grad = vec![0.0; 2 * d];

    for epoch in 0..cfg.epochs {
        shuffle.shuffle(&mut order);
        for range in &batches {
            let batch = ds.subset(&order[range.clone()]);
            let scale = if batch.is_empty() { 0.0 } else { ds.len() as f64 / batch.len() as f64 };
            grad.iter_mut().for_each(|g| *g = 0.0);
            for _ in 0..cfg.mc_samples {
                let eps = sample_standard_normal(&mut eps_rng, d);
                let theta: Vec<f64> = (0..d).map(|i| params[i] + softplus(params[d + i]) * eps[i]).collect();
                let g = energy_grad(lik, &theta, &batch, scale);
                for i in 0..d {
                    let sigma = softplus(params[d + i]);
                    grad[i] += g[i];
                    grad[d + i] += (g[i] * eps[i] - cfg.temperature / sigma) * sigmoid(params[d + i]);
                }
            }
            let inv = 1.0 / cfg.mc_samples as f64;
            grad.iter_mut().for_each(|g| *g *= inv);
            adam_step(&mut adam, &mut params, &grad, cfg.lr);
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config(format!("variational fit diverged at epoch {epoch}")));
        }
    }
    Ok((ViFit::from_unconstrained(&params), eps_rng))
}

/// Fits `q` and draws `cfg.n_samples` coefficient vectors from it.
///
/// The draws continue the `Sampler` substream used during fitting, so a
/// fixed seed pins both the fit and the inference samples.
pub fn vi_fit_and_sample(lik: &Likelihood, ds: &Dataset, cfg: &ViConfig) -> Result<(ViFit, PosteriorSamples)> {
    let (fit, mut rng) = fit_inner(lik, ds, cfg)?;
    let samples = (0..cfg.n_samples).map(|_| fit.sample(&mut rng)).collect();
    Ok((fit, PosteriorSamples::new(samples, Provenance::Vi, cfg.seed)?))
}
