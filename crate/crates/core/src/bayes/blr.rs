use crate::datagen::{Dataset, TaskKind};
use crate::error::{check_dim, Error, Result};
use crate::numerics::{dot, solve_spd, Cholesky, Matrix, Rng};

/// Gaussian over θ, used both as the conjugate prior and the posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub mean: Vec<f64>,
    /// Covariance Σ (not the precision).
    pub cov: Matrix,
    /// Known likelihood noise std σ.
    pub noise_std: f64,
}

impl GaussianPosterior {
    pub fn new(mean: Vec<f64>, cov: Matrix, noise_std: f64) -> Result<Self> {
        check_dim(mean.len(), cov.rows())?;
        if !(noise_std > 0.0) {
            return Err(Error::Config(format!("noise std must be positive, got {noise_std}")));
        }
        Cholesky::factor(&cov)?;
        Ok(GaussianPosterior { mean, cov, noise_std })
    }

    /// `N(0, I)` prior over `dim` coefficients.
    pub fn standard_prior(dim: usize, noise_std: f64) -> Result<Self> {
        GaussianPosterior::new(vec![0.0; dim], Matrix::identity(dim), noise_std)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Precision Λ = Σ⁻¹.
    pub fn precision(&self) -> Result<Matrix> {
        symmetrized(solve_spd(&self.cov, &Matrix::identity(self.dim()))?)
    }

    /// Draws `θ ~ N(μ, Σ)`.
    pub fn sample(&self, rng: &mut Rng) -> Result<Vec<f64>> {
        let chol = Cholesky::factor(&self.cov)?;
        let z = crate::numerics::sample_standard_normal(rng, self.dim());
        let lz = chol.lower_mul(&z)?;
        Ok(self.mean.iter().zip(lz).map(|(m, e)| m + e).collect())
    }
}

fn symmetrized(a: Matrix) -> Result<Matrix> {
    let at = a.transpose();
    Ok(a.add(&at)?.scale(0.5))
}

/// Conjugate update of a Gaussian prior with a Gaussian likelihood.
///
/// Λ = Σ₀⁻¹ + σ⁻²XᵀX, Σ = Λ⁻¹, μ = Σ(Σ₀⁻¹μ₀ + σ⁻²Xᵀy).
pub fn blr_posterior(prior: &GaussianPosterior, ds: &Dataset) -> Result<GaussianPosterior> {
    if ds.kind() != TaskKind::Regression {
        return Err(Error::Config("conjugate regression needs a regression dataset".into()));
    }
    check_dim(prior.dim(), ds.dim())?;
    if ds.is_empty() {
        return Ok(prior.clone());
    }
    let d = prior.dim();
    let s2 = prior.noise_std * prior.noise_std;
    let prior_prec = prior.precision()?;
    let precision = symmetrized(prior_prec.add(&ds.features().gram().scale(1.0 / s2))?)?;
    let cov = symmetrized(solve_spd(&precision, &Matrix::identity(d))?)?;

    let xty = ds.features().tr_mat_vec(ds.targets())?;
    let p0m0 = prior_prec.mat_vec(&prior.mean)?;
    let rhs: Vec<f64> = p0m0.iter().zip(&xty).map(|(a, b)| a + b / s2).collect();
    let mean = Cholesky::factor(&precision)?.solve_vec(&rhs)?;
    Ok(GaussianPosterior { mean, cov, noise_std: prior.noise_std })
}

/// Posterior predictive `N(xᵀμ, xᵀΣx + σ²)`, returned as (mean, variance).
pub fn blr_predictive(post: &GaussianPosterior, x: &[f64]) -> Result<(f64, f64)> {
    check_dim(post.dim(), x.len())?;
    let mean = dot(x, &post.mean);
    let var = post.cov.quad_form(x)?.max(0.0) + post.noise_std * post.noise_std;
    Ok((mean, var))
}
