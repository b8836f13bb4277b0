//! Synthetic polynomial benchmarks.
//!
//! Two families:
//!
//! * **Regression**: `x ~ U[-2, 1]`, target `p(x)` with the leading `m + 1`
//!   coefficients of `[2, 3, -1, -1, 1, 1]` (highest degree first). Feature
//!   and target are standardized with train statistics, then `N(0, 0.1²)`
//!   noise is added to the standardized target.
//! * **Classification**: `x₁ ~ U[-3, 3]`, `x₂ = p(x₁) + N(0, σ̂²)` where `σ̂`
//!   is the (train) standard deviation of the noiseless `p(x₁)` and the
//!   coefficients are drawn from `N(0, 10²)`. The label is `x₂ > p(x₁)`,
//!   decided on raw coordinates; both features are standardized afterwards.
//!
//! Every dataset carries an identity feature in column 0.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::numerics::{Matrix, Rng, Stream};

pub const REGRESSION_COEFFS: [f64; 6] = [2.0, 3.0, -1.0, -1.0, 1.0, 1.0];
pub const REGRESSION_RANGE: (f64, f64) = (-2.0, 1.0);
pub const REGRESSION_NOISE_STD: f64 = 0.1;
pub const REGRESSION_DEGREES: std::ops::RangeInclusive<usize> = 1..=5;

pub const CLASSIFICATION_RANGE: (f64, f64) = (-3.0, 3.0);
pub const CLASSIFICATION_COEFF_STD: f64 = 10.0;
pub const CLASSIFICATION_DEGREES: std::ops::RangeInclusive<usize> = 1..=8;

pub const DEFAULT_N_TRAIN: usize = 10_000;
pub const DEFAULT_N_TEST: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Regression,
    Classification,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Regression => "regression",
            TaskKind::Classification => "classification",
        })
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(TaskKind::Regression),
            "classification" => Ok(TaskKind::Classification),
            other => Err(Error::Config(format!("unknown task kind `{other}`"))),
        }
    }
}

/// Describes the true data-generating process of a dataset pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub kind: TaskKind,
    pub degree: usize,
    /// Polynomial coefficients, highest degree first.
    pub coeffs: Vec<f64>,
    pub x_range: (f64, f64),
    /// Regression: std of the noise added to standardized targets.
    /// Classification: std of the raw `x₂` noise (σ̂).
    pub noise_std: f64,
    /// Per-column train means: `[x, y]` (regression) or `[x₁, x₂]` (classification).
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    targets: Vec<f64>,
    kind: TaskKind,
}

impl Dataset {
    pub fn new(features: Matrix, targets: Vec<f64>, kind: TaskKind) -> Result<Self> {
        check_dim(features.rows(), targets.len())?;
        if features.rows() > 0 && features.cols() == 0 {
            return Err(Error::Config("dataset needs an identity column".into()));
        }
        if features.row_iter().any(|r| r[0] != 1.0) {
            return Err(Error::Config("column 0 must be the identity feature (all ones)".into()));
        }
        if !features.is_finite() || targets.iter().any(|y| !y.is_finite()) {
            return Err(Error::Config("dataset contains non-finite values".into()));
        }
        if kind == TaskKind::Classification && targets.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::Config("classification targets must be 0 or 1".into()));
        }
        Ok(Dataset { features, targets, kind })
    }

    /// Dataset with no rows and `dim` feature columns.
    pub fn empty(dim: usize, kind: TaskKind) -> Self {
        Dataset { features: Matrix::zeros(0, dim), targets: Vec::new(), kind }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn kind(&self) -> TaskKind {
        self.kind
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn x(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn y(&self, i: usize) -> f64 {
        self.targets[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.features.row_iter().zip(self.targets.iter().copied())
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let d = self.dim();
        let mut data = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            data.extend_from_slice(self.x(i));
        }
        Dataset {
            features: Matrix::from_vec(idx.len(), d, data).expect("subset shape"),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
            kind: self.kind,
        }
    }
}

/// Horner evaluation, highest-degree coefficient first.
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    debug_assert!(!coeffs.is_empty());
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

/// Standardizes a column. Without `stats`, the population mean/std are
/// computed from the column itself and returned.
pub fn standardize(column: &[f64], stats: Option<(f64, f64)>) -> Result<(Vec<f64>, (f64, f64))> {
    let (mean, std) = match stats {
        Some(s) => s,
        None => {
            if column.is_empty() {
                return Err(Error::EmptyInput("column to standardize"));
            }
            let m = crate::numerics::mean(column);
            (m, crate::numerics::variance(column).sqrt())
        }
    };
    if !(std > 0.0) || !std.is_finite() {
        return Err(Error::DegenerateColumn(std));
    }
    Ok((column.iter().map(|x| (x - mean) / std).collect(), (mean, std)))
}

/// VC dimension `C(2 + m, 2)` of degree-`m` polynomial classifiers on ℝ².
pub fn correlated_vc_dimension(degree: usize) -> usize {
    (degree + 2) * (degree + 1) / 2
}

fn check_degree(degree: usize, range: &std::ops::RangeInclusive<usize>) -> Result<()> {
    if range.contains(&degree) {
        Ok(())
    } else {
        Err(Error::InvalidDegree { degree, min: *range.start(), max: *range.end() })
    }
}

fn with_identity(cols: &[&[f64]]) -> Matrix {
    let n = cols.first().map_or(0, |c| c.len());
    let d = cols.len() + 1;
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        data.push(1.0);
        data.extend(cols.iter().map(|c| c[i]));
    }
    Matrix::from_vec(n, d, data).expect("feature matrix shape")
}

pub fn gen_regression(
    degree: usize,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(Dataset, Dataset, GeneratorSpec)> {
    check_degree(degree, &REGRESSION_DEGREES)?;
    let coeffs = REGRESSION_COEFFS[..=degree].to_vec();
    let (lo, hi) = REGRESSION_RANGE;
    let mut rng = Rng::new(seed).substream(Stream::Data);

    let x_train: Vec<f64> = (0..n_train).map(|_| rng.uniform(lo, hi)).collect();
    let x_test: Vec<f64> = (0..n_test).map(|_| rng.uniform(lo, hi)).collect();
    let eps_train: Vec<f64> = (0..n_train).map(|_| rng.standard_normal()).collect();
    let eps_test: Vec<f64> = (0..n_test).map(|_| rng.standard_normal()).collect();

    let y_raw = |xs: &[f64]| xs.iter().map(|&x| poly_eval(&coeffs, x)).collect::<Vec<_>>();
    let (y_train_raw, y_test_raw) = (y_raw(&x_train), y_raw(&x_test));

    let (z_train, x_stats) = standardize(&x_train, None)?;
    let (z_test, _) = standardize(&x_test, Some(x_stats))?;
    let (t_train, y_stats) = standardize(&y_train_raw, None)?;
    let (t_test, _) = standardize(&y_test_raw, Some(y_stats))?;

    let noisy = |t: Vec<f64>, eps: &[f64]| -> Vec<f64> {
        t.into_iter().zip(eps).map(|(t, e)| t + REGRESSION_NOISE_STD * e).collect()
    };

    let train = Dataset::new(with_identity(&[&z_train]), noisy(t_train, &eps_train), TaskKind::Regression)?;
    let test = Dataset::new(with_identity(&[&z_test]), noisy(t_test, &eps_test), TaskKind::Regression)?;
    let spec = GeneratorSpec {
        kind: TaskKind::Regression,
        degree,
        coeffs,
        x_range: REGRESSION_RANGE,
        noise_std: REGRESSION_NOISE_STD,
        means: vec![x_stats.0, y_stats.0],
        stds: vec![x_stats.1, y_stats.1],
        n_train,
        n_test,
        seed,
    };
    Ok((train, test, spec))
}

pub fn gen_classification(
    degree: usize,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(Dataset, Dataset, GeneratorSpec)> {
    check_degree(degree, &CLASSIFICATION_DEGREES)?;
    let (lo, hi) = CLASSIFICATION_RANGE;
    let mut rng = Rng::new(seed).substream(Stream::Data);

    let coeffs: Vec<f64> = (0..=degree).map(|_| rng.normal(0.0, CLASSIFICATION_COEFF_STD)).collect();
    let x1_train: Vec<f64> = (0..n_train).map(|_| rng.uniform(lo, hi)).collect();
    let x1_test: Vec<f64> = (0..n_test).map(|_| rng.uniform(lo, hi)).collect();
    let curve = |xs: &[f64]| xs.iter().map(|&x| poly_eval(&coeffs, x)).collect::<Vec<_>>();
    let (p_train, p_test) = (curve(&x1_train), curve(&x1_test));

    if p_train.is_empty() {
        return Err(Error::EmptyInput("training split"));
    }
    let noise_std = crate::numerics::variance(&p_train).sqrt();
    if !(noise_std > 0.0) {
        return Err(Error::DegenerateColumn(noise_std));
    }

    let mut split = |p: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let x2: Vec<f64> = p.iter().map(|&pv| pv + noise_std * rng.standard_normal()).collect();
        // ties label 0
        let labels = x2.iter().zip(p).map(|(&a, &b)| if a > b { 1.0 } else { 0.0 }).collect();
        (x2, labels)
    };
    let (x2_train, y_train) = split(&p_train);
    let (x2_test, y_test) = split(&p_test);

    let (z1_train, s1) = standardize(&x1_train, None)?;
    let (z1_test, _) = standardize(&x1_test, Some(s1))?;
    let (z2_train, s2) = standardize(&x2_train, None)?;
    let (z2_test, _) = standardize(&x2_test, Some(s2))?;

    let train = Dataset::new(with_identity(&[&z1_train, &z2_train]), y_train, TaskKind::Classification)?;
    let test = Dataset::new(with_identity(&[&z1_test, &z2_test]), y_test, TaskKind::Classification)?;
    let spec = GeneratorSpec {
        kind: TaskKind::Classification,
        degree,
        coeffs,
        x_range: CLASSIFICATION_RANGE,
        noise_std,
        means: vec![s1.0, s2.0],
        stds: vec![s1.1, s2.1],
        n_train,
        n_test,
        seed,
    };
    Ok((train, test, spec))
}

pub fn generate(kind: TaskKind, degree: usize, n_train: usize, n_test: usize, seed: u64) -> Result<(Dataset, Dataset, GeneratorSpec)> {
    match kind {
        TaskKind::Regression => gen_regression(degree, n_train, n_test, seed),
        TaskKind::Classification => gen_classification(degree, n_train, n_test, seed),
    }
}

/// One fresh draw from the true process, in model coordinates.
#[derive(Debug, Clone)]
pub struct Draw {
    pub features: Vec<f64>,
    pub target: f64,
    /// Bayes-optimal prediction: conditional mean (regression) or
    /// conditional probability of label 1 (classification).
    pub optimal: f64,
}

impl GeneratorSpec {
    /// Regenerates the train/test pair this spec was produced with.
    pub fn regenerate(&self) -> Result<(Dataset, Dataset)> {
        let (train, test, _) = generate(self.kind, self.degree, self.n_train, self.n_test, self.seed)?;
        Ok((train, test))
    }

    /// True conditional mean of the standardized regression target at a
    /// standardized feature row `[1, z]`.
    pub fn regression_mean(&self, features: &[f64]) -> f64 {
        let x = features[1] * self.stds[0] + self.means[0];
        (poly_eval(&self.coeffs, x) - self.means[1]) / self.stds[1]
    }

    /// Label the generator assigns to a standardized feature row `[1, z₁, z₂]`.
    pub fn classification_label(&self, features: &[f64]) -> f64 {
        let x1 = features[1] * self.stds[0] + self.means[0];
        let x2 = features[2] * self.stds[1] + self.means[1];
        if x2 > poly_eval(&self.coeffs, x1) {
            1.0
        } else {
            0.0
        }
    }

    /// Draws a fresh `(x, y)` pair from the generating process.
    pub fn draw(&self, rng: &mut Rng) -> Draw {
        let (lo, hi) = self.x_range;
        let x = rng.uniform(lo, hi);
        let p = poly_eval(&self.coeffs, x);
        match self.kind {
            TaskKind::Regression => {
                let mean = (p - self.means[1]) / self.stds[1];
                let z = (x - self.means[0]) / self.stds[0];
                Draw {
                    features: vec![1.0, z],
                    target: mean + self.noise_std * rng.standard_normal(),
                    optimal: mean,
                }
            }
            TaskKind::Classification => {
                let x2 = p + self.noise_std * rng.standard_normal();
                let label = if x2 > p { 1.0 } else { 0.0 };
                Draw {
                    features: vec![1.0, (x - self.means[0]) / self.stds[0], (x2 - self.means[1]) / self.stds[1]],
                    target: label,
                    optimal: label,
                }
            }
        }
    }
}
