//! Dense linear algebra, seeded randomness and elementary probability
//! functions shared by every model.

mod linalg;
mod rng;

pub use linalg::{checked_dot, dot, solve_spd, Cholesky, Matrix};
pub use rng::{derive_seed, sample_standard_normal, Rng, Stream};

use crate::error::{Error, Result};

/// Softmax over a logit vector where `-inf` marks a masked entry.
///
/// Masked entries map to exactly zero. The maximum is taken over finite
/// entries only.
pub fn softmax(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::EmptyInput("softmax logits"));
    }
    let max = v.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::NoFiniteLogit);
    }
    let mut out: Vec<f64> = v
        .iter()
        .map(|&x| if x == f64::NEG_INFINITY { 0.0 } else { (x - max).exp() })
        .collect();
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p /= total;
    }
    Ok(out)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Inverse of [`softplus`] for `y > 0`.
pub fn softplus_inv(y: f64) -> f64 {
    // y + ln(1 - e^{-y})
    y + (-(-y).exp()).ln_1p()
}

/// `ln σ(x)` without underflow for large negative `x`.
pub fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population (1/n) variance.
pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

/// Mean and standard error of the mean (sample std / √n).
pub fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = mean(v);
    if v.len() < 2 {
        return (m, 0.0);
    }
    let s2 = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (s2 / n).sqrt())
}

/// Central finite-difference gradient with step `h`.
pub fn finite_diff_grad(f: impl Fn(&[f64]) -> f64, theta: &[f64], h: f64) -> Vec<f64> {
    let mut probe = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative error `‖a − b‖∞ / max(‖b‖∞, floor)`.
pub fn rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = b.iter().fold(floor, |m, y| m.max(y.abs()));
    diff / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const NEG_INF: f64 = f64::NEG_INFINITY;

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        let p = softmax(&[2f64.ln(), 0.0]).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(softmax(&[NEG_INF, 0.0, NEG_INF]).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn softmax_all_masked_is_error() {
        assert!(matches!(softmax(&[NEG_INF, NEG_INF]), Err(Error::NoFiniteLogit)));
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(-3.7) - (1.0 - sigmoid(3.7))).abs() < 1e-15);
        let hi = sigmoid(40.0);
        assert!(hi.is_finite() && hi <= 1.0 && hi > 1.0 - 1e-15);
        // the complement carries the 4.2e-18 tail exactly
        assert!((sigmoid(-40.0) - 4.248354255291589e-18).abs() < 1e-30);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) == 1.0);
    }

    #[test]
    fn softplus_is_stable_and_invertible() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
        for y in [1e-3, 0.1, 1.0, 7.5] {
            assert!((softplus(softplus_inv(y)) - y).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_difference_examples() {
        let g = finite_diff_grad(|t| t.iter().map(|x| x * x).sum(), &[1.0, 2.0], 1e-5);
        assert!((g[0] - 2.0).abs() < 1e-6 && (g[1] - 4.0).abs() < 1e-6);
        assert_eq!(finite_diff_grad(|_| 3.0, &[1.0, -2.0, 0.5], 1e-4), vec![0.0; 3]);
        let g = finite_diff_grad(|t| t[0].sin(), &[0.0], 1e-5);
        assert!((g[0] - 1.0).abs() < 1e-6);
    }

    fn logits() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(prop_oneof![4 => -30.0..30.0f64, 1 => Just(NEG_INF)], 1..12)
            .prop_filter("one finite entry", |v| v.iter().any(|x| x.is_finite()))
    }

    proptest! {
        #[test]
        fn softmax_is_probability_vector(v in logits()) {
            let p = softmax(&v).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (pi, vi) in p.iter().zip(&v) {
                prop_assert!(*pi >= 0.0);
                if *vi == NEG_INF { prop_assert_eq!(*pi, 0.0); }
            }
        }

        #[test]
        fn softmax_shift_invariant(v in logits(), c in -50.0..50.0f64) {
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let (a, b) = (softmax(&v).unwrap(), softmax(&shifted).unwrap());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
