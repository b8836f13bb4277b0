use crate::datagen::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::moe::INIT_STD;
use crate::numerics::{Rng, Stream};

use super::{energy_grad, epoch_batches, Likelihood, PosteriorSamples, Provenance};

/// Stochastic-gradient Hamiltonian Monte Carlo settings.
///
/// The step size at epoch `e` is `lr0 · exp(−decay · e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SghmcConfig {
    /// Friction η.
    pub friction: f64,
    /// Estimate γ̂ of the gradient-noise friction, `0 < γ̂ < η`.
    pub noise_estimate: f64,
    pub lr0: f64,
    pub decay: f64,
    /// Epochs run without injected noise before collecting.
    pub burn_in: usize,
    /// Samples collected, one per epoch after burn-in.
    pub n_samples: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub temperature: f64,
}

impl SghmcConfig {
    pub fn new(seed: u64) -> Self {
        SghmcConfig {
            friction: 0.9,
            noise_estimate: 1e-4,
            lr0: 0.01,
            decay: 0.05,
            burn_in: 84,
            n_samples: 16,
            batch_size: 64,
            seed,
            temperature: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_estimate > 0.0 && self.noise_estimate < self.friction) {
            return Err(Error::Config(format!(
                "need 0 < noise estimate < friction, got {} and {}",
                self.noise_estimate, self.friction
            )));
        }
        if !(self.lr0 > 0.0) || !self.decay.is_finite() {
            return Err(Error::Config("step size must be positive with a finite decay".into()));
        }
        if self.n_samples == 0 || self.batch_size == 0 {
            return Err(Error::Config("samples and batch size must be at least 1".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::Config("temperature must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn step_size(&self, epoch: usize) -> f64 {
        self.lr0 * (-self.decay * epoch as f64).exp()
    }
}

/// One SGHMC update: `θ ← θ + v`, then
/// `v ← v − α∇Ũ(θ) − ηv + noise` where `noise` is already scaled.
pub(crate) fn sghmc_step(theta: &mut [f64], v: &mut [f64], grad_at: impl FnOnce(&[f64]) -> Vec<f64>, lr: f64, friction: f64, noise: Option<&[f64]>) {
    for (t, vi) in theta.iter_mut().zip(v.iter()) {
        *t += vi;
    }
    let g = grad_at(theta);
    for i in 0..v.len() {
        v[i] -= lr * g[i] + friction * v[i];
        if let Some(n) = noise {
            v[i] += n[i];
        }
    }
}

/// Draws posterior samples of GLM coefficients under a `N(0, I)` prior.
///
/// Mini-batch likelihood gradients are scaled by `n / n′` to full-data
/// size. Initialization uses the `Init` substream, batch order the `Shuffle`
/// substream and injected noise the `Sampler` substream of `cfg.seed`.
pub fn sghmc_sample(lik: &Likelihood, ds: &Dataset, cfg: &SghmcConfig) -> Result<PosteriorSamples> {
    cfg.validate()?;
    if lik.link != crate::models::Link::for_task(ds.kind()) {
        return Err(Error::Config(format!("{} likelihood does not match a {} dataset", lik.link, ds.kind())));
    }
    let d = ds.dim();
    let root = Rng::new(cfg.seed);
    let mut init = root.substream(Stream::Init);
    let mut shuffle = root.substream(Stream::Shuffle);
    let mut noise_rng = root.substream(Stream::Sampler);

    let mut theta: Vec<f64> = (0..d).map(|_| init.normal(0.0, INIT_STD)).collect();
    let mut v = vec![0.0; d];
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let batches = epoch_batches(ds.len(), cfg.batch_size);
    let mut out = Vec::with_capacity(cfg.n_samples);

    for epoch in 0..cfg.burn_in + cfg.n_samples {
        let lr = cfg.step_size(epoch);
        let noisy = epoch >= cfg.burn_in;
        let noise_scale = (2.0 * (cfg.friction - cfg.noise_estimate) * lr * cfg.temperature).sqrt();
        shuffle.shuffle(&mut order);
        for range in &batches {
            let batch = ds.subset(&order[range.clone()]);
            let scale = if batch.is_empty() { 0.0 } else { ds.len() as f64 / batch.len() as f64 };
            let noise: Option<Vec<f64>> =
                noisy.then(|| (0..d).map(|_| noise_scale * noise_rng.standard_normal()).collect());
            sghmc_step(&mut theta, &mut v, |t| energy_grad(lik, t, &batch, scale), lr, cfg.friction, noise.as_deref());
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config(format!("SGHMC diverged at epoch {epoch}; lower the step size")));
        }
        if noisy {
            out.push(theta.clone());
        }
    }
    check_dim(cfg.n_samples, out.len())?;
    PosteriorSamples::new(out, Provenance::Sghmc, cfg.seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::{blr_posterior, GaussianPosterior};
    use crate::datagen::TaskKind;
    use crate::numerics::{mean, Matrix};

    fn one_point() -> Dataset {
        Dataset::new(Matrix::from_vec(1, 1, vec![1.0]).unwrap(), vec![1.0], TaskKind::Regression).unwrap()
    }

    #[test]
    fn zero_temperature_reduces_to_heavy_ball_momentum() {
        let ds = one_point();
        let lik = Likelihood::gaussian(1.0).unwrap();
        let cfg = SghmcConfig { burn_in: 0, n_samples: 10, batch_size: 1, temperature: 0.0, decay: 0.0, lr0: 0.1, ..SghmcConfig::new(3) };
        let got = sghmc_sample(&lik, &ds, &cfg).unwrap();

        // U(θ) = θ²/2 + (1 − θ)²/2, so ∇U = 2θ − 1
        let theta0 = Rng::new(3).substream(Stream::Init).normal(0.0, INIT_STD);
        let (mut prev, mut cur) = (theta0, theta0);
        let mut expected = Vec::new();
        for _ in 0..10 {
            let next = cur + (1.0 - cfg.friction) * (cur - prev) - cfg.lr0 * (2.0 * cur - 1.0);
            expected.push(cur);
            prev = cur;
            cur = next;
        }
        let got: Vec<f64> = got.samples().iter().map(|s| s[0]).collect();
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-14, "{got:?} vs {expected:?}");
        }
    }

    #[test]
    fn invalid_friction_rejected() {
        let cfg = SghmcConfig { noise_estimate: 0.9, ..SghmcConfig::new(0) };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = SghmcConfig { n_samples: 0, ..SghmcConfig::new(0) };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let (train, _, _) = crate::datagen::gen_classification(2, 300, 10, 5).unwrap();
        let cfg = SghmcConfig { burn_in: 5, n_samples: 4, ..SghmcConfig::new(9) };
        let a = sghmc_sample(&Likelihood::logistic(), &train, &cfg).unwrap();
        let b = sghmc_sample(&Likelihood::logistic(), &train, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
    }

    #[test]
    fn link_must_match_dataset() {
        let cfg = SghmcConfig::new(0);
        assert!(sghmc_sample(&Likelihood::logistic(), &one_point(), &cfg).is_err());
    }

    /// Sample mean with a batch-means standard error, robust to chain
    /// autocorrelation.
    fn batch_means(x: &[f64], batches: usize) -> (f64, f64) {
        let size = x.len() / batches;
        let means: Vec<f64> = x.chunks(size).take(batches).map(mean).collect();
        crate::numerics::mean_and_stderr(&means)
    }

    #[test]
    fn conjugate_target_mean_within_three_standard_errors() {
        let ds = one_point();
        let lik = Likelihood::gaussian(1.0).unwrap();
        let truth = blr_posterior(&GaussianPosterior::standard_prior(1, 1.0).unwrap(), &ds).unwrap();
        let cfg = SghmcConfig { burn_in: 200, n_samples: 40_000, batch_size: 1, decay: 0.0, lr0: 0.05, ..SghmcConfig::new(17) };
        let s = sghmc_sample(&lik, &ds, &cfg).unwrap();
        let xs: Vec<f64> = s.samples().iter().map(|t| t[0]).collect();
        let (m, se) = batch_means(&xs, 40);
        assert!((m - truth.mean[0]).abs() < 3.0 * se, "mean {m} ± {se} vs {}", truth.mean[0]);
    }

    #[test]
    fn covariance_calibrated_within_factor_two() {
        // two correlated coordinates through a 2-D Gaussian likelihood
        let x = Matrix::from_rows(&[vec![1.0, 0.5], vec![1.0, -1.0], vec![1.0, 2.0]]).unwrap();
        let ds = Dataset::new(x, vec![0.3, -0.2, 1.1], TaskKind::Regression).unwrap();
        let lik = Likelihood::gaussian(1.0).unwrap();
        let truth = blr_posterior(&GaussianPosterior::standard_prior(2, 1.0).unwrap(), &ds).unwrap();
        let cfg = SghmcConfig { burn_in: 50, n_samples: 20_000, batch_size: 3, decay: 0.0, lr0: 0.02, ..SghmcConfig::new(23) };
        let s = sghmc_sample(&lik, &ds, &cfg).unwrap();
        let m = s.mean();
        for (i, j) in [(0, 0), (1, 1), (0, 1)] {
            let c = s.samples().iter().map(|t| (t[i] - m[i]) * (t[j] - m[j])).sum::<f64>() / s.len() as f64;
            let ratio = c / truth.cov[(i, j)];
            assert!((0.5..=2.0).contains(&ratio), "cov[{i},{j}] = {c} vs {}", truth.cov[(i, j)]);
        }
    }
}
