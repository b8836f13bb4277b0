//! Sparse noisy top-k gating: `G(x) = softmax(keep_top_k(H(x), k))` with
//! `H(x)ᵢ = (W_g x)ᵢ + εᵢ · softplus((W_noise x)ᵢ)`.

use crate::error::{check_dim, Error, Result};
use crate::numerics::{softmax, softplus, Matrix, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct GatingParams {
    /// Clean gate weights, one row per expert.
    pub w_gate: Matrix,
    /// Noise-scale weights, one row per expert.
    pub w_noise: Matrix,
    pub k: usize,
}

impl GatingParams {
    pub fn new(w_gate: Matrix, w_noise: Matrix, k: usize) -> Result<Self> {
        check_dim(w_gate.rows(), w_noise.rows())?;
        check_dim(w_gate.cols(), w_noise.cols())?;
        if k == 0 || k > w_gate.rows() {
            return Err(Error::TopKOutOfRange { k, n: w_gate.rows() });
        }
        Ok(GatingParams { w_gate, w_noise, k })
    }

    pub fn zeros(n_experts: usize, dim: usize, k: usize) -> Result<Self> {
        GatingParams::new(Matrix::zeros(n_experts, dim), Matrix::zeros(n_experts, dim), k)
    }

    pub fn n_experts(&self) -> usize {
        self.w_gate.rows()
    }

    pub fn dim(&self) -> usize {
        self.w_gate.cols()
    }
}

/// Whether the gate samples training noise.
pub enum GateMode<'a> {
    /// Deterministic: ε ≡ 0.
    Eval,
    /// Independent `εᵢ ~ N(0, 1)` per expert, drawn from `rng`.
    Train(&'a mut Rng),
}

/// Indices of the `k` largest entries, ties broken by lowest index.
/// Returned in ascending index order.
pub(crate) fn top_k_indices(v: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].partial_cmp(&v[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut top = order[..k].to_vec();
    top.sort_unstable();
    top
}

/// Keeps the top `k` entries and replaces the rest with `-inf`.
pub fn keep_top_k(v: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > v.len() {
        return Err(Error::TopKOutOfRange { k, n: v.len() });
    }
    let mut out = vec![f64::NEG_INFINITY; v.len()];
    for i in top_k_indices(v, k) {
        out[i] = v[i];
    }
    Ok(out)
}

/// Intermediate values of one gate evaluation, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct GateTrace {
    /// `W_noise x`, pre-softplus.
    pub noise_pre: Vec<f64>,
    pub eps: Vec<f64>,
    /// `H(x)`.
    pub logits: Vec<f64>,
    /// Surviving expert indices, ascending.
    pub selected: Vec<usize>,
    /// Gate probabilities over all experts (zero off `selected`).
    pub weights: Vec<f64>,
}

/// Gate evaluation with explicit noise and, optionally, a frozen selection.
///
/// `eps = None` means ε ≡ 0. With `selection = Some(s)` the surviving
/// experts are `s` instead of the top-k of `H(x)`.
pub fn gate_trace(g: &GatingParams, x: &[f64], eps: Option<&[f64]>, selection: Option<&[usize]>) -> Result<GateTrace> {
    check_dim(g.dim(), x.len())?;
    let n = g.n_experts();
    let clean = g.w_gate.mat_vec(x)?;
    let noise_pre = g.w_noise.mat_vec(x)?;
    let eps = match eps {
        Some(e) => {
            check_dim(n, e.len())?;
            e.to_vec()
        }
        None => vec![0.0; n],
    };
    let logits: Vec<f64> = (0..n).map(|i| clean[i] + eps[i] * softplus(noise_pre[i])).collect();
    let selected = match selection {
        Some(s) => s.to_vec(),
        None => top_k_indices(&logits, g.k),
    };
    let mut masked = vec![f64::NEG_INFINITY; n];
    for &i in &selected {
        masked[i] = logits[i];
    }
    let weights = softmax(&masked)?;
    Ok(GateTrace { noise_pre, eps, logits, selected, weights })
}

/// Gate probabilities: nonnegative, summing to one, at most `k` nonzero.
pub fn gate_forward(g: &GatingParams, x: &[f64], mode: GateMode<'_>) -> Result<Vec<f64>> {
    let eps = match mode {
        GateMode::Eval => None,
        GateMode::Train(rng) => Some(crate::numerics::sample_standard_normal(rng, g.n_experts())),
    };
    Ok(gate_trace(g, x, eps.as_deref(), None)?.weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::numerics::Rng;

    const NEG_INF: f64 = f64::NEG_INFINITY;

    #[test]
    fn keep_top_k_examples() {
        assert_eq!(keep_top_k(&[3.0, 1.0, 2.0], 2).unwrap(), vec![3.0, NEG_INF, 2.0]);
        assert_eq!(keep_top_k(&[5.0], 1).unwrap(), vec![5.0]);
        assert_eq!(keep_top_k(&[1.0, 1.0, 0.0], 1).unwrap(), vec![1.0, NEG_INF, NEG_INF]);
        assert!(matches!(keep_top_k(&[1.0], 0), Err(Error::TopKOutOfRange { .. })));
        assert!(keep_top_k(&[1.0, 2.0], 3).is_err());
    }

    #[test]
    fn zero_gate_splits_between_first_k() {
        let g = GatingParams::zeros(4, 3, 2).unwrap();
        assert_eq!(gate_forward(&g, &[1.0, 0.3, -2.0], GateMode::Eval).unwrap(), vec![0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn closed_form_two_of_three() {
        // W_g rows chosen so W_g·[1, 0] = [2, 1, 0]
        let w = Matrix::from_rows(&[vec![2.0, 0.0], vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let g = GatingParams::new(w, Matrix::zeros(3, 2), 2).unwrap();
        let p = gate_forward(&g, &[1.0, 0.0], GateMode::Eval).unwrap();
        let e = std::f64::consts::E;
        assert!((p[0] - e * e / (e * e + e)).abs() < 1e-15);
        assert!((p[1] - e / (e * e + e)).abs() < 1e-15);
        assert_eq!(p[2], 0.0);
        assert!((p[0] - 0.7311).abs() < 1e-4 && (p[1] - 0.2689).abs() < 1e-4);
    }

    #[test]
    fn train_mode_is_seed_deterministic() {
        let mut rng = Rng::new(1);
        let w = Matrix::from_vec(3, 2, (0..6).map(|_| rng.standard_normal()).collect()).unwrap();
        let n = Matrix::from_vec(3, 2, (0..6).map(|_| rng.standard_normal()).collect()).unwrap();
        let g = GatingParams::new(w, n, 2).unwrap();
        let a = gate_forward(&g, &[1.0, 0.4], GateMode::Train(&mut Rng::new(8))).unwrap();
        let b = gate_forward(&g, &[1.0, 0.4], GateMode::Train(&mut Rng::new(8))).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch() {
        let g = GatingParams::zeros(2, 3, 1).unwrap();
        assert!(matches!(gate_forward(&g, &[1.0], GateMode::Eval), Err(Error::DimensionMismatch { .. })));
        assert!(GatingParams::new(Matrix::zeros(2, 3), Matrix::zeros(3, 3), 1).is_err());
        assert!(GatingParams::zeros(2, 3, 3).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn gate_output_is_sparse_probability_vector(seed in any::<u64>(), n in 1usize..7, d in 1usize..5, train in any::<bool>()) {
            let mut rng = Rng::new(seed);
            let k = 1 + rng.below(n);
            let w = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.normal(0.0, 3.0)).collect()).unwrap();
            let wn = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.normal(0.0, 3.0)).collect()).unwrap();
            let g = GatingParams::new(w, wn, k).unwrap();
            let x: Vec<f64> = (0..d).map(|_| rng.normal(0.0, 2.0)).collect();
            let mode = if train { GateMode::Train(&mut rng) } else { GateMode::Eval };
            let p = gate_forward(&g, &x, mode).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&v| v >= 0.0));
            prop_assert!(p.iter().filter(|&&v| v > 0.0).count() <= k);
        }
    }
}
