use crate::datagen::{GeneratorSpec, TaskKind};
use crate::numerics::{mean_and_stderr, Rng, Stream};

use super::point_cross_entropy;

pub const DEFAULT_RISK_SAMPLES: usize = 100_000;

/// Monte-Carlo estimate of an expected loss with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate {
    pub risk: f64,
    pub std_err: f64,
}

/// Frequentist risk of `predictor` under the true generator.
///
/// Draws `n_mc` fresh samples from the `RiskMc` substream of `seed`.
/// Regression loss is the squared error of the point prediction;
/// classification loss is clamped cross-entropy of the predicted
/// probability.
pub fn frequentist_risk(predictor: impl Fn(&[f64]) -> f64, spec: &GeneratorSpec, n_mc: usize, seed: u64) -> RiskEstimate {
    let mut rng = Rng::new(seed).substream(Stream::RiskMc);
    let losses: Vec<f64> = (0..n_mc)
        .map(|_| {
            let draw = spec.draw(&mut rng);
            let pred = predictor(&draw.features);
            match spec.kind {
                TaskKind::Regression => (pred - draw.target).powi(2),
                TaskKind::Classification => point_cross_entropy(pred, draw.target),
            }
        })
        .collect();
    let (risk, std_err) = mean_and_stderr(&losses);
    RiskEstimate { risk, std_err }
}
