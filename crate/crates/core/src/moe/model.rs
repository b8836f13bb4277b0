use crate::datagen::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::models::{clamp_prob, gaussian_log_density, point_cross_entropy, GlmParams, Link};
use crate::numerics::{dot, sample_standard_normal, sigmoid, Matrix, Rng};

use super::gating::{gate_trace, GateMode, GateTrace, GatingParams};

/// Std of the Gaussian used to initialize gate and expert weights.
pub const INIT_STD: f64 = 0.1;

/// A gated mixture of homogeneous GLM experts.
#[derive(Debug, Clone, PartialEq)]
pub struct MoeModel {
    pub gating: GatingParams,
    pub experts: Vec<GlmParams>,
}

/// Mixture output at one input.
#[derive(Debug, Clone, PartialEq)]
pub struct MoePrediction {
    /// Gated mean (identity link) or gated probability of label 1.
    pub value: f64,
    pub weights: Vec<f64>,
}

/// Gradients of a batch loss, laid out like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct MoeGrad {
    pub w_gate: Matrix,
    pub w_noise: Matrix,
    pub experts: Vec<Vec<f64>>,
}

impl MoeGrad {
    fn zeros(m: &MoeModel) -> Self {
        let (e, d) = (m.n_experts(), m.dim());
        MoeGrad { w_gate: Matrix::zeros(e, d), w_noise: Matrix::zeros(e, d), experts: vec![vec![0.0; d]; e] }
    }

    /// Same ordering as [`MoeModel::params_flat`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.w_gate.as_slice().to_vec();
        v.extend_from_slice(self.w_noise.as_slice());
        for t in &self.experts {
            v.extend_from_slice(t);
        }
        v
    }
}

impl MoeModel {
    pub fn new(gating: GatingParams, experts: Vec<GlmParams>) -> Result<Self> {
        check_dim(gating.n_experts(), experts.len())?;
        let first = experts.first().ok_or(Error::EmptyInput("experts"))?;
        for e in &experts {
            check_dim(gating.dim(), e.dim())?;
            if e.link != first.link || e.noise_std != first.noise_std {
                return Err(Error::Config("experts must be homogeneous".into()));
            }
        }
        Ok(MoeModel { gating, experts })
    }

    /// Gate and expert weights drawn i.i.d. from `N(0, 0.1²)`.
    pub fn init(n_experts: usize, dim: usize, k: usize, link: Link, noise_std: f64, rng: &mut Rng) -> Result<Self> {
        let mut draw = |rows: usize| -> Result<Matrix> {
            Matrix::from_vec(rows, dim, (0..rows * dim).map(|_| rng.normal(0.0, INIT_STD)).collect())
        };
        let gating = GatingParams::new(draw(n_experts)?, draw(n_experts)?, k)?;
        let experts = (0..n_experts)
            .map(|_| {
                let theta = draw(1)?.into_vec();
                match link {
                    Link::Identity => GlmParams::linear(theta, noise_std),
                    Link::Logistic => Ok(GlmParams::logistic(theta)),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        MoeModel::new(gating, experts)
    }

    pub fn n_experts(&self) -> usize {
        self.experts.len()
    }

    pub fn dim(&self) -> usize {
        self.gating.dim()
    }

    pub fn link(&self) -> Link {
        self.experts[0].link
    }

    pub fn noise_std(&self) -> f64 {
        self.experts[0].noise_std
    }

    pub fn num_params(&self) -> usize {
        (2 + 1) * self.n_experts() * self.dim()
    }

    /// `[W_g (row-major), W_noise (row-major), θ₀, θ₁, …]`.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut v = self.gating.w_gate.as_slice().to_vec();
        v.extend_from_slice(self.gating.w_noise.as_slice());
        for e in &self.experts {
            v.extend_from_slice(&e.theta);
        }
        v
    }

    pub fn set_params_flat(&mut self, p: &[f64]) -> Result<()> {
        check_dim(self.num_params(), p.len())?;
        let block = self.n_experts() * self.dim();
        self.gating.w_gate.as_mut_slice().copy_from_slice(&p[..block]);
        self.gating.w_noise.as_mut_slice().copy_from_slice(&p[block..2 * block]);
        let d = self.dim();
        for (i, e) in self.experts.iter_mut().enumerate() {
            e.theta.copy_from_slice(&p[2 * block + i * d..2 * block + (i + 1) * d]);
        }
        Ok(())
    }

    fn expert_outputs(&self, x: &[f64], selected: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_experts()];
        for &i in selected {
            let eta = dot(x, &self.experts[i].theta);
            out[i] = match self.link() {
                Link::Identity => eta,
                Link::Logistic => sigmoid(eta),
            };
        }
        out
    }

    /// Log of the mixture likelihood `Σ Gᵢ(x) fᵢ(y | x, θᵢ)` under the
    /// deterministic (eval) gate.
    pub fn mixture_log_density(&self, x: &[f64], y: f64) -> Result<f64> {
        let trace = gate_trace(&self.gating, x, None, None)?;
        match self.link() {
            Link::Identity => {
                let sigma = self.noise_std();
                let logs: Vec<f64> = trace
                    .selected
                    .iter()
                    .map(|&i| trace.weights[i].ln() + gaussian_log_density(y, dot(x, &self.experts[i].theta), sigma))
                    .collect();
                let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Ok(max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln())
            }
            Link::Logistic => {
                let outs = self.expert_outputs(x, &trace.selected);
                let p = clamp_prob(dot(&trace.weights, &outs));
                Ok(if y == 1.0 { p.ln() } else { (1.0 - p).ln() })
            }
        }
    }
}

pub fn moe_predict(m: &MoeModel, x: &[f64], mode: GateMode<'_>) -> Result<MoePrediction> {
    check_dim(m.dim(), x.len())?;
    let eps = match mode {
        GateMode::Eval => None,
        GateMode::Train(rng) => Some(sample_standard_normal(rng, m.n_experts())),
    };
    let trace = gate_trace(&m.gating, x, eps.as_deref(), None)?;
    let outs = m.expert_outputs(x, &trace.selected);
    let value = trace.selected.iter().map(|&i| trace.weights[i] * outs[i]).sum();
    Ok(MoePrediction { value, weights: trace.weights })
}

/// Batch loss and gradients with explicit per-sample gate noise.
///
/// `eps[n]` is the noise vector for row `n` (`None` = noise off). When
/// `selections` is given, the surviving experts of each row are frozen to
/// it; otherwise they are recomputed and returned. Selection is treated as
/// constant: gradients flow through the surviving logits only.
pub fn moe_loss_and_grad_with(
    m: &MoeModel,
    batch: &Dataset,
    eps: Option<&[Vec<f64>]>,
    selections: Option<&[Vec<usize>]>,
) -> Result<(f64, MoeGrad, Vec<Vec<usize>>)> {
    check_dim(m.dim(), batch.dim())?;
    if batch.is_empty() {
        return Err(Error::EmptyInput("batch"));
    }
    let n = batch.len() as f64;
    let mut grad = MoeGrad::zeros(m);
    let mut loss = 0.0;
    let mut chosen = Vec::with_capacity(batch.len());

    for (row, (x, y)) in batch.iter().enumerate() {
        let trace: GateTrace = gate_trace(
            &m.gating,
            x,
            eps.map(|e| e[row].as_slice()),
            selections.map(|s| s[row].as_slice()),
        )?;
        let outs = m.expert_outputs(x, &trace.selected);
        let pred: f64 = trace.selected.iter().map(|&i| trace.weights[i] * outs[i]).sum();

        // dL/dpred for this row, and the per-expert output derivative d(out)/d(eta)
        let dl_dpred = match m.link() {
            Link::Identity => {
                let r = pred - y;
                loss += r * r / n;
                2.0 * r / n
            }
            Link::Logistic => {
                loss += point_cross_entropy(pred, y) / n;
                let p = clamp_prob(pred);
                (p - y) / (p * (1.0 - p)) / n
            }
        };

        for &i in &trace.selected {
            let g = trace.weights[i];
            let dout_deta = match m.link() {
                Link::Identity => 1.0,
                Link::Logistic => outs[i] * (1.0 - outs[i]),
            };
            let w = dl_dpred * g * dout_deta;
            for (gj, xj) in grad.experts[i].iter_mut().zip(x) {
                *gj += w * xj;
            }

            // through the softmax over surviving logits
            let dl_dh = dl_dpred * g * (outs[i] - pred);
            let noise_scale = trace.eps[i] * sigmoid(trace.noise_pre[i]);
            for (j, xj) in x.iter().enumerate() {
                grad.w_gate[(i, j)] += dl_dh * xj;
                grad.w_noise[(i, j)] += dl_dh * noise_scale * xj;
            }
        }
        chosen.push(trace.selected);
    }
    Ok((loss, grad, chosen))
}

/// Batch loss and gradients; draws fresh gate noise from `noise` when given.
pub fn moe_loss_and_grad(m: &MoeModel, batch: &Dataset, noise: Option<&mut Rng>) -> Result<(f64, MoeGrad)> {
    let eps: Option<Vec<Vec<f64>>> =
        noise.map(|rng| (0..batch.len()).map(|_| sample_standard_normal(rng, m.n_experts())).collect());
    let (loss, grad, _) = moe_loss_and_grad_with(m, batch, eps.as_deref(), None)?;
    Ok((loss, grad))
}
