//! Linear and logistic regression experts, their losses and gradients, and
//! evaluation metrics.

mod metrics;
mod risk;

pub use metrics::{read_metrics_csv, write_metrics_csv, MetricsRecord, METRICS_HEADER};
pub use risk::{frequentist_risk, RiskEstimate, DEFAULT_RISK_SAMPLES};

use std::fmt;
use std::str::FromStr;

use crate::datagen::{Dataset, TaskKind};
use crate::error::{check_dim, Error, Result};
use crate::numerics::{dot, sigmoid};

/// Probability clamp used by cross-entropy.
pub const PROB_CLAMP: f64 = 1e-12;

/// Known noise std assumed by regression experts (matches the generator).
pub const DEFAULT_NOISE_STD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    Identity,
    Logistic,
}

impl Link {
    pub fn for_task(kind: TaskKind) -> Link {
        match kind {
            TaskKind::Regression => Link::Identity,
            TaskKind::Classification => Link::Logistic,
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Link::Identity => "identity",
            Link::Logistic => "logistic",
        })
    }
}

impl FromStr for Link {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Link::Identity),
            "logistic" => Ok(Link::Logistic),
            other => Err(Error::Config(format!("unknown link `{other}`"))),
        }
    }
}

/// Parameters of one generalized linear expert. `theta[0]` pairs with the
/// identity feature.
#[derive(Debug, Clone, PartialEq)]
pub struct GlmParams {
    pub theta: Vec<f64>,
    pub link: Link,
    /// Known likelihood std; only meaningful for the identity link.
    pub noise_std: f64,
}

impl GlmParams {
    pub fn linear(theta: Vec<f64>, noise_std: f64) -> Result<Self> {
        if !(noise_std > 0.0) {
            return Err(Error::Config(format!("noise std must be positive, got {noise_std}")));
        }
        Ok(GlmParams { theta, link: Link::Identity, noise_std })
    }

    pub fn logistic(theta: Vec<f64>) -> Self {
        GlmParams { theta, link: Link::Logistic, noise_std: 1.0 }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Linear predictor `xᵀθ`.
    pub fn eta(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.theta.len(), x.len())?;
        Ok(dot(x, &self.theta))
    }

    /// Mean (identity link) or probability of label 1 (logistic link).
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let eta = self.eta(x)?;
        Ok(match self.link {
            Link::Identity => eta,
            Link::Logistic => sigmoid(eta),
        })
    }

    /// `log p(y | x, θ)`.
    pub fn log_likelihood(&self, x: &[f64], y: f64) -> Result<f64> {
        let eta = self.eta(x)?;
        Ok(match self.link {
            Link::Identity => gaussian_log_density(y, eta, self.noise_std),
            Link::Logistic => y * crate::numerics::log_sigmoid(eta) + (1.0 - y) * crate::numerics::log_sigmoid(-eta),
        })
    }

    fn require(&self, link: Link) -> Result<()> {
        if self.link == link {
            Ok(())
        } else {
            Err(Error::Config(format!("expected a {link} expert, got {}", self.link)))
        }
    }
}

/// Adds `scale · ∇_θ log p(y | x, θ)` into `out`.
pub fn add_log_likelihood_grad(theta: &[f64], link: Link, noise_std: f64, x: &[f64], y: f64, scale: f64, out: &mut [f64]) {
    let eta = dot(x, theta);
    let r = match link {
        Link::Identity => (y - eta) / (noise_std * noise_std),
        Link::Logistic => y - sigmoid(eta),
    };
    for (o, xi) in out.iter_mut().zip(x) {
        *o += scale * r * xi;
    }
}

pub fn gaussian_log_density(y: f64, mean: f64, std: f64) -> f64 {
    let z = (y - mean) / std;
    -0.5 * z * z - std.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

pub fn linreg_mean(p: &GlmParams, x: &[f64]) -> Result<f64> {
    p.require(Link::Identity)?;
    p.eta(x)
}

/// Negative log-likelihood `−Σ log N(y | xᵀθ, σ²)`.
pub fn linreg_nll(p: &GlmParams, ds: &Dataset) -> Result<f64> {
    let n = ds.len() as f64;
    let constant = n * (p.noise_std * (2.0 * std::f64::consts::PI).sqrt()).ln();
    Ok(squared_error_part(p, ds)? + constant)
}

/// `(1 / 2σ²) Σ (y − xᵀθ)²`: the θ-dependent part of [`linreg_nll`].
pub fn squared_error_part(p: &GlmParams, ds: &Dataset) -> Result<f64> {
    p.require(Link::Identity)?;
    check_dim(p.dim(), ds.dim())?;
    let sse: f64 = ds.iter().map(|(x, y)| (y - dot(x, &p.theta)).powi(2)).sum();
    Ok(sse / (2.0 * p.noise_std * p.noise_std))
}

/// Gradient of [`linreg_nll`] with respect to θ.
pub fn linreg_nll_grad(p: &GlmParams, ds: &Dataset) -> Result<Vec<f64>> {
    p.require(Link::Identity)?;
    check_dim(p.dim(), ds.dim())?;
    let mut g = vec![0.0; p.dim()];
    for (x, y) in ds.iter() {
        add_log_likelihood_grad(&p.theta, Link::Identity, p.noise_std, x, y, -1.0, &mut g);
    }
    Ok(g)
}

/// Mean squared error of the linear mean and its gradient.
pub fn linreg_mse_and_grad(theta: &[f64], ds: &Dataset) -> Result<(f64, Vec<f64>)> {
    check_dim(theta.len(), ds.dim())?;
    let n = ds.len() as f64;
    let mut g = vec![0.0; theta.len()];
    let mut loss = 0.0;
    for (x, y) in ds.iter() {
        let r = dot(x, theta) - y;
        loss += r * r / n;
        let c = 2.0 * r / n;
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += c * xi;
        }
    }
    Ok((loss, g))
}

pub fn logreg_prob(p: &GlmParams, x: &[f64]) -> Result<f64> {
    p.require(Link::Logistic)?;
    Ok(sigmoid(p.eta(x)?))
}

/// Mean cross-entropy of a logistic expert on a dataset and its gradient
/// `mean((σ(xᵀθ) − y)·x)`.
pub fn logreg_ce_and_grad(p: &GlmParams, ds: &Dataset) -> Result<(f64, Vec<f64>)> {
    p.require(Link::Logistic)?;
    check_dim(p.dim(), ds.dim())?;
    let n = ds.len() as f64;
    let mut g = vec![0.0; p.dim()];
    let mut loss = 0.0;
    for (x, y) in ds.iter() {
        let prob = sigmoid(dot(x, &p.theta));
        loss += point_cross_entropy(prob, y) / n;
        let c = (prob - y) / n;
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += c * xi;
        }
    }
    Ok((loss, g))
}

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

pub(crate) fn point_cross_entropy(p: f64, y: f64) -> f64 {
    let p = clamp_prob(p);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Mean binary cross-entropy with probabilities clamped to `[1e-12, 1 − 1e-12]`.
pub fn cross_entropy(probs: &[f64], labels: &[f64]) -> Result<f64> {
    check_dim(probs.len(), labels.len())?;
    if probs.is_empty() {
        return Err(Error::EmptyInput("cross-entropy"));
    }
    let total: f64 = probs.iter().zip(labels).map(|(&p, &y)| point_cross_entropy(p, y)).sum();
    Ok(total / probs.len() as f64)
}

pub fn mse(preds: &[f64], targets: &[f64]) -> Result<f64> {
    check_dim(preds.len(), targets.len())?;
    if preds.is_empty() {
        return Err(Error::EmptyInput("mse"));
    }
    Ok(preds.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / preds.len() as f64)
}

/// Fraction of correct hard predictions; `p ≥ 0.5` predicts label 1.
pub fn accuracy(probs: &[f64], labels: &[f64]) -> Result<f64> {
    check_dim(probs.len(), labels.len())?;
    if probs.is_empty() {
        return Err(Error::EmptyInput("accuracy"));
    }
    let hits = probs.iter().zip(labels).filter(|(&p, &y)| (p >= 0.5) == (y == 1.0)).count();
    Ok(hits as f64 / probs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_grad, rel_err, Matrix, Rng};
    use proptest::prelude::*;

    fn regression_set(rng: &mut Rng, n: usize, d: usize) -> Dataset {
        let mut rows = Vec::new();
        for _ in 0..n {
            let mut r = vec![1.0];
            r.extend((1..d).map(|_| rng.standard_normal()));
            rows.push(r);
        }
        let y = (0..n).map(|_| rng.standard_normal()).collect();
        Dataset::new(Matrix::from_rows(&rows).unwrap(), y, TaskKind::Regression).unwrap()
    }

    fn classification_set(rng: &mut Rng, n: usize, d: usize) -> Dataset {
        let ds = regression_set(rng, n, d);
        let y = (0..n).map(|_| if rng.uniform(0.0, 1.0) < 0.5 { 1.0 } else { 0.0 }).collect();
        Dataset::new(ds.features().clone(), y, TaskKind::Classification).unwrap()
    }

    #[test]
    fn linreg_mean_examples() {
        let zero = GlmParams::linear(vec![0.0; 3], 0.1).unwrap();
        assert_eq!(linreg_mean(&zero, &[1.0, -4.0, 2.5]).unwrap(), 0.0);
        let p = GlmParams::linear(vec![3.0, 2.0], 0.1).unwrap();
        assert_eq!(linreg_mean(&p, &[1.0, 1.0]).unwrap(), 5.0);
        assert!(matches!(linreg_mean(&p, &[1.0]), Err(Error::DimensionMismatch { .. })));
        // linearity in the non-intercept feature
        let m = |x1: f64| linreg_mean(&p, &[1.0, x1]).unwrap();
        assert!(((m(1.4) - m(0.7)) - (m(0.7) - m(0.0))).abs() < 1e-12);
    }

    #[test]
    fn nll_of_perfect_fit_is_the_constant() {
        let theta = vec![0.5, -1.0];
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64 * 0.3]).collect();
        let y = rows.iter().map(|r| dot(r, &theta)).collect();
        let ds = Dataset::new(Matrix::from_rows(&rows).unwrap(), y, TaskKind::Regression).unwrap();
        let p = GlmParams::linear(theta, 0.1).unwrap();
        let expected = -10.0 * (0.1 * (2.0 * std::f64::consts::PI).sqrt()).ln();
        assert!((linreg_nll(&p, &ds).unwrap() - (-expected)).abs() < 1e-12);
        assert_eq!(squared_error_part(&p, &ds).unwrap(), 0.0);
    }

    #[test]
    fn doubling_residuals_quadruples_squared_error() {
        let mut rng = Rng::new(3);
        let ds = regression_set(&mut rng, 8, 2);
        let p = GlmParams::linear(vec![0.2, 0.4], 0.5).unwrap();
        let fitted: Vec<f64> = ds.iter().map(|(x, _)| dot(x, &p.theta)).collect();
        let doubled: Vec<f64> = ds.iter().zip(&fitted).map(|((_, y), f)| f + 2.0 * (y - f)).collect();
        let ds2 = Dataset::new(ds.features().clone(), doubled, TaskKind::Regression).unwrap();
        let (a, b) = (squared_error_part(&p, &ds).unwrap(), squared_error_part(&p, &ds2).unwrap());
        assert!((b - 4.0 * a).abs() < 1e-10 * b);
    }

    #[test]
    fn nll_minus_squared_error_is_constant_in_theta() {
        let mut rng = Rng::new(12);
        let ds = regression_set(&mut rng, 20, 3);
        let gaps: Vec<f64> = (0..10)
            .map(|_| {
                let p = GlmParams::linear((0..3).map(|_| rng.normal(0.0, 2.0)).collect(), 0.3).unwrap();
                linreg_nll(&p, &ds).unwrap() - squared_error_part(&p, &ds).unwrap()
            })
            .collect();
        let spread = gaps.iter().cloned().fold(f64::MIN, f64::max) - gaps.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-9, "spread {spread}");
    }

    #[test]
    fn logreg_examples() {
        let zero = GlmParams::logistic(vec![0.0, 0.0]);
        assert_eq!(logreg_prob(&zero, &[1.0, 3.0]).unwrap(), 0.5);
        let p = GlmParams::logistic(vec![0.0, 5.0]);
        assert!((logreg_prob(&p, &[1.0, 2.0]).unwrap() - 0.9999546021312976).abs() < 1e-15);
        let neg = GlmParams::logistic(vec![-0.3, -1.2]);
        let pos = GlmParams::logistic(vec![0.3, 1.2]);
        let x = [1.0, 0.7];
        assert!((logreg_prob(&neg, &x).unwrap() - (1.0 - logreg_prob(&pos, &x).unwrap())).abs() < 1e-15);
        assert!(logreg_prob(&GlmParams::linear(vec![0.0], 1.0).unwrap(), &[1.0]).is_err());
    }

    #[test]
    fn cross_entropy_examples() {
        let labels = [1.0, 0.0, 1.0, 0.0];
        assert!(cross_entropy(&labels, &labels).unwrap() <= 1e-11);
        assert!((cross_entropy(&[0.5; 4], &labels).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(cross_entropy(&[0.5], &labels).is_err());
    }

    #[test]
    fn mse_and_accuracy_examples() {
        let v = [0.2, 0.9, 0.4];
        assert_eq!(mse(&v, &v).unwrap(), 0.0);
        assert_eq!(mse(&[0.0; 4], &[1.0; 4]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0.5; 4], &[1.0, 1.0, 0.0, 0.0]).unwrap(), 0.5);
        assert!(mse(&[], &[]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn logreg_gradient_five_points() {
        let mut rng = Rng::new(5);
        let ds = classification_set(&mut rng, 5, 3);
        let p = GlmParams::logistic(vec![0.3, -0.7, 1.1]);
        let (_, g) = logreg_ce_and_grad(&p, &ds).unwrap();
        let fd = finite_diff_grad(|t| logreg_ce_and_grad(&GlmParams::logistic(t.to_vec()), &ds).unwrap().0, &p.theta, 1e-5);
        assert!(rel_err(&g, &fd, 1e-8) < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn linreg_nll_gradient_matches_finite_differences(seed in any::<u64>(), n in 1usize..12, d in 1usize..5) {
            let mut rng = Rng::new(seed);
            let ds = regression_set(&mut rng, n, d);
            let sigma = rng.uniform(0.3, 2.0);
            let theta: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
            let g = linreg_nll_grad(&GlmParams::linear(theta.clone(), sigma).unwrap(), &ds).unwrap();
            let fd = finite_diff_grad(|t| linreg_nll(&GlmParams::linear(t.to_vec(), sigma).unwrap(), &ds).unwrap(), &theta, 1e-5);
            prop_assert!(rel_err(&g, &fd, 1e-6) < 1e-5);
        }

        #[test]
        fn cross_entropy_is_nonnegative(probs in prop::collection::vec(0.0..=1.0f64, 1..20), seed in any::<u64>()) {
            let mut rng = Rng::new(seed);
            let labels: Vec<f64> = probs.iter().map(|_| if rng.below(2) == 1 { 1.0 } else { 0.0 }).collect();
            prop_assert!(cross_entropy(&probs, &labels).unwrap() >= 0.0);
        }
    }
}
