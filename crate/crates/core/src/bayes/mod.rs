//! Bayesian model averaging over GLM coefficients: exact conjugate linear
//! regression, SGHMC and mean-field variational inference.

mod blr;
mod sghmc;
mod vi;

use std::fmt;
use std::str::FromStr;

pub use blr::{blr_posterior, blr_predictive, GaussianPosterior};
pub use sghmc::{sghmc_sample, SghmcConfig};
pub use vi::{elbo_estimate, vi_fit, vi_fit_and_sample, ViConfig, ViFit};

use crate::datagen::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::models::{add_log_likelihood_grad, clamp_prob, GlmParams, Link};
use crate::numerics::{dot, sigmoid};

/// Observation model for the samplers. The prior is always `N(0, I)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Likelihood {
    pub link: Link,
    /// Gaussian noise std; ignored for the logistic link.
    pub noise_std: f64,
}

impl Likelihood {
    pub fn logistic() -> Self {
        Likelihood { link: Link::Logistic, noise_std: 1.0 }
    }

    pub fn gaussian(noise_std: f64) -> Result<Self> {
        if !(noise_std > 0.0) {
            return Err(Error::Config(format!("noise std must be positive, got {noise_std}")));
        }
        Ok(Likelihood { link: Link::Identity, noise_std })
    }

    /// `log p(D | θ)` summed over the dataset.
    pub fn log_likelihood(&self, theta: &[f64], ds: &Dataset) -> Result<f64> {
        let p = GlmParams { theta: theta.to_vec(), link: self.link, noise_std: self.noise_std };
        ds.iter().map(|(x, y)| p.log_likelihood(x, y)).sum()
    }
}

/// Gradient of the stochastic energy
/// `Ũ(θ) = −scale · Σ_batch log p(yᵢ | xᵢ, θ) − log N(θ; 0, I)`.
pub(crate) fn energy_grad(lik: &Likelihood, theta: &[f64], batch: &Dataset, scale: f64) -> Vec<f64> {
    let mut g: Vec<f64> = theta.to_vec();
    for (x, y) in batch.iter() {
        add_log_likelihood_grad(theta, lik.link, lik.noise_std, x, y, -scale, &mut g);
    }
    g
}

/// Index ranges of the mini-batches of one epoch. An empty dataset still
/// yields one (empty) batch so the prior term keeps acting.
pub(crate) fn epoch_batches(n: usize, batch_size: usize) -> Vec<std::ops::Range<usize>> {
    if n == 0 {
        return vec![0..0];
    }
    (0..n).step_by(batch_size).map(|s| s..(s + batch_size).min(n)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Sghmc,
    Vi,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Sghmc => "sghmc",
            Provenance::Vi => "vi",
        })
    }
}

impl FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sghmc" => Ok(Provenance::Sghmc),
            "vi" => Ok(Provenance::Vi),
            other => Err(Error::Config(format!("unknown provenance `{other}`"))),
        }
    }
}

/// A finite bag of coefficient vectors for Monte-Carlo model averaging.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    samples: Vec<Vec<f64>>,
    pub provenance: Provenance,
    pub seed: u64,
}

impl PosteriorSamples {
    pub fn new(samples: Vec<Vec<f64>>, provenance: Provenance, seed: u64) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyInput("posterior samples"))?;
        for s in &samples {
            check_dim(first.len(), s.len())?;
        }
        Ok(PosteriorSamples { samples, provenance, seed })
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    /// Componentwise sample mean.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.len() as f64;
        (0..self.dim()).map(|j| self.samples.iter().map(|s| s[j]).sum::<f64>() / n).collect()
    }
}

/// Model-averaged probability of label 1: the mean of `σ(xᵀθ)` over the
/// samples, clamped away from {0, 1}.
pub fn bma_predict(samples: &PosteriorSamples, x: &[f64]) -> Result<f64> {
    check_dim(samples.dim(), x.len())?;
    let total: f64 = samples.samples.iter().map(|t| sigmoid(dot(x, t))).sum();
    Ok(clamp_prob(total / samples.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::logreg_prob;
    use proptest::prelude::*;

    #[test]
    fn identical_samples_equal_single_model() {
        let t = vec![0.3, -1.1, 0.5];
        let s = PosteriorSamples::new(vec![t.clone(); 16], Provenance::Vi, 1).unwrap();
        let x = [1.0, 0.2, -0.7];
        assert!((bma_predict(&s, &x).unwrap() - logreg_prob(&GlmParams::logistic(t), &x).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn opposite_samples_average_to_half() {
        let s = PosteriorSamples::new(vec![vec![2.0, -3.0], vec![-2.0, 3.0]], Provenance::Sghmc, 0).unwrap();
        for x in [[1.0, 0.0], [1.0, 5.0], [1.0, -0.3]] {
            // σ(a) + σ(−a) = 1 up to rounding
            assert!((bma_predict(&s, &x).unwrap() - 0.5).abs() <= f64::EPSILON);
        }
    }

    #[test]
    fn empty_or_ragged_samples_rejected() {
        assert!(PosteriorSamples::new(vec![], Provenance::Vi, 0).is_err());
        assert!(PosteriorSamples::new(vec![vec![1.0], vec![1.0, 2.0]], Provenance::Vi, 0).is_err());
    }

    #[test]
    fn batches_cover_every_index_once() {
        let b = epoch_batches(130, 64);
        assert_eq!(b, vec![0..64, 64..128, 128..130]);
        assert_eq!(epoch_batches(0, 64), vec![0..0]);
    }

    proptest! {
        #[test]
        fn bma_output_in_open_unit_interval(thetas in proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 2), 1..20), x in -10.0f64..10.0) {
            let s = PosteriorSamples::new(thetas, Provenance::Sghmc, 0).unwrap();
            let p = bma_predict(&s, &[1.0, x]).unwrap();
            prop_assert!(p > 0.0 && p < 1.0);
        }
    }
}
