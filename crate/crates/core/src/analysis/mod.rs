//! Theoretical error bounds, Monte Carlo validators, adversarial instances and
//! alphabet sizing.

mod adversarial;
mod checks;
mod experiments;
mod table;

pub use adversarial::{
    adversarial_instance, measure_adversarial, AdversarialInstance, AdversarialMeasurement,
};
pub use checks::{
    covariance_recursion_check, relu_expectation_check, stability_bound_check, tail_check,
    tail_outcome, tail_threshold, ReluCheck, SigmaSpec,
};
pub use experiments::{
    bit_sizing_experiment, fit_slope, projection_decay_experiment, relative_error_sweep,
    BitSizingRow, DecayRow, DecayTable, SweepRow, SweepTable,
};
pub use table::{fmt_f64, fmt_opt, ResultTable};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpfqError};
use crate::linalg::DenseMatrix;

/// Count of Monte Carlo violations against the number a claim allows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOutcome {
    pub trials: usize,
    pub violations: usize,
    pub allowed: f64,
}

impl McOutcome {
    /// Budget `T·q + 3√(T·q(1−q))` for a claim failing with probability at most `q`.
    pub fn with_failure_probability(trials: usize, violations: usize, q: f64) -> Self {
        let q = q.clamp(0.0, 1.0);
        let t = trials as f64;
        Self {
            trials,
            violations,
            allowed: t * q + 3.0 * (t * q * (1.0 - q)).sqrt(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations as f64 <= self.allowed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub delta: f64,
    pub p: u32,
    pub m: usize,
    pub n: usize,
    pub max_column_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEvaluation {
    pub bound_value: f64,
    /// One minus the failure probability, clipped to `[0, 1]`.
    pub confidence: f64,
    pub inputs: BoundInputs,
}

/// `δ √(2π p m ln N) · c` where `c` is the largest column norm of `X̃`.
pub fn quantization_bound_value(
    delta: f64,
    p: u32,
    m: usize,
    n: usize,
    max_column_norm: f64,
) -> f64 {
    delta
        * (2.0 * std::f64::consts::PI * f64::from(p) * m as f64 * (n as f64).ln()).sqrt()
        * max_column_norm
}

/// `1 − √2 · count · m / N^p`, clipped to `[0, 1]`; `count` neurons share a union bound.
pub fn quantization_confidence(m: usize, n: usize, p: u32, count: usize) -> f64 {
    let fail = std::f64::consts::SQRT_2 * count as f64 * m as f64 / (n as f64).powi(p as i32);
    (1.0 - fail).clamp(0.0, 1.0)
}

/// High-probability bound on the Phase II error `‖X̃(w̃ − q̃)‖₂` of one neuron.
pub fn quantization_bound(
    delta: f64,
    p: u32,
    m: usize,
    xt: &DenseMatrix,
) -> Result<BoundEvaluation> {
    let n = xt.cols();
    if n < 2 {
        return Err(SpfqError::InvalidArgument(format!(
            "the quantization bound needs N >= 2, got {n}"
        )));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(SpfqError::InvalidStep(delta));
    }
    if p == 0 {
        return Err(SpfqError::InvalidArgument("p must be positive".into()));
    }
    let max_column_norm = xt.max_column_norm();
    Ok(BoundEvaluation {
        bound_value: quantization_bound_value(delta, p, m, n, max_column_norm),
        confidence: quantization_confidence(m, n, p, 1),
        inputs: BoundInputs {
            delta,
            p,
            m,
            n,
            max_column_norm,
        },
    })
}

/// Bound on `max_j ‖Φ(X)_j − Φ̃(X)_j‖₂` for an `L`-layer network quantized with
/// perfect alignment and an infinite alphabet:
/// `Σ_{i<L} (2π p m δ²)^{(L−i)/2} (Π_{k=i}^{L−1} ln N_k)^{1/2} max_j ‖X⁽ⁱ⁾_j‖₂`.
///
/// `widths` holds `N_0, …, N_{L−1}` (layer input widths) and `max_column_norms`
/// the matching `max_j ‖X⁽ⁱ⁾_j‖₂`.
pub fn network_error_bound(
    delta: f64,
    p: u32,
    m: usize,
    widths: &[usize],
    max_column_norms: &[f64],
) -> Result<f64> {
    if widths.len() != max_column_norms.len() || widths.is_empty() {
        return Err(SpfqError::Shape(
            "need one column norm per layer input width".into(),
        ));
    }
    if widths.iter().any(|&n| n < 2) {
        return Err(SpfqError::InvalidArgument(
            "every width must be at least 2".into(),
        ));
    }
    let l = widths.len();
    let base = 2.0 * std::f64::consts::PI * f64::from(p) * m as f64 * delta * delta;
    let total = (0..l)
        .map(|i| {
            let logs: f64 = widths[i..].iter().map(|&n| (n as f64).ln()).product();
            base.powf((l - i) as f64 / 2.0) * logs.sqrt() * max_column_norms[i]
        })
        .sum();
    Ok(total)
}

/// Budget for the relative squared output error of a Gaussian-weight network:
/// `L (2π)^L (Π_{k=0}^{L} ln N_k) Σ_{i<L} (2π p m δ²)^{L−i} (4p)^i / Π_{k=i}^{L−1} N_k`.
///
/// `widths` holds `N_0, …, N_L`.
pub fn relative_error_budget(delta: f64, p: u32, m: usize, widths: &[usize]) -> Result<f64> {
    if widths.len() < 2 {
        return Err(SpfqError::InvalidArgument(
            "need the input width and at least one layer width".into(),
        ));
    }
    if widths.iter().any(|&n| n < 2) {
        return Err(SpfqError::InvalidArgument(
            "every width must be at least 2".into(),
        ));
    }
    let l = widths.len() - 1;
    let two_pi = 2.0 * std::f64::consts::PI;
    let logs: f64 = widths.iter().map(|&n| (n as f64).ln()).product();
    let base = two_pi * f64::from(p) * m as f64 * delta * delta;
    let sum: f64 = (0..l)
        .map(|i| {
            let denom: f64 = widths[i..l].iter().map(|&n| n as f64).product();
            base.powi((l - i) as i32) * (4.0 * f64::from(p)).powi(i as i32) / denom
        })
        .sum();
    Ok(l as f64 * two_pi.powi(l as i32) * logs * sum)
}

/// Level count and bit width for a finite alphabet that avoids clamping with
/// high probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphabetSize {
    pub levels: u32,
    pub bits: u32,
    /// `η = σ₁ / (σ_m − ε σ₁)`.
    pub eta: f64,
}

/// `K = ⌈2η √(2p ln N) / δ⌉` and `b = ⌈log₂ K⌉ + 1`, where `N` is the column
/// count of `X̃`, `sv = (σ₁, σ_m)` and `ε` bounds the previous layer's relative
/// perturbation.
pub fn finite_alphabet_size(
    xt: &DenseMatrix,
    delta: f64,
    p: u32,
    epsilon_prev: f64,
    sv: (f64, f64),
) -> Result<AlphabetSize> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(SpfqError::InvalidStep(delta));
    }
    let (s_max, s_min) = sv;
    let gap = s_min - epsilon_prev * s_max;
    if gap.is_nan() || gap <= 0.0 || epsilon_prev.is_nan() || epsilon_prev < 0.0 {
        return Err(SpfqError::Hypothesis(
            "sigma_m - epsilon*sigma_1 > 0".into(),
        ));
    }
    let n = xt.cols();
    if n < 2 {
        return Err(SpfqError::InvalidArgument(format!("need N >= 2, got {n}")));
    }
    let eta = s_max / gap;
    let k = (2.0 * eta * (2.0 * f64::from(p) * (n as f64).ln()).sqrt() / delta).ceil();
    if !(k >= 1.0 && k <= f64::from(u32::MAX)) {
        return Err(SpfqError::InvalidArgument(format!(
            "level count {k} out of range"
        )));
    }
    let levels = k as u32;
    let bits = levels.next_power_of_two().trailing_zeros() + 1;
    Ok(AlphabetSize { levels, bits, eta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma_bound_example() {
        let xt = DenseMatrix::from_fn(16, 256, |i, j| if i == j % 16 { 1.0 } else { 0.0 });
        let b = quantization_bound(0.1, 2, 16, &xt).unwrap();
        assert!((b.bound_value - 3.339).abs() < 1e-3);
        assert!((b.confidence - 0.99965).abs() < 1e-5);
        assert_eq!(
            quantization_bound(0.0, 2, 16, &xt).unwrap().bound_value,
            0.0
        );
        assert!(quantization_bound(0.1, 2, 1, &DenseMatrix::zeros(1, 1)).is_err());
    }

    #[test]
    fn confidence_is_clipped() {
        assert_eq!(quantization_confidence(64, 4, 2, 1), 0.0);
        assert!(quantization_confidence(1, 1000, 2, 1) <= 1.0);
    }

    #[test]
    fn alphabet_size_example() {
        let xt = DenseMatrix::zeros(16, 256);
        let s = finite_alphabet_size(&xt, 0.5, 2, 0.0, (2.0, 1.0)).unwrap();
        assert_eq!(s.levels, 38);
        assert_eq!(s.bits, 7);
        assert!((s.eta - 2.0).abs() < 1e-15);
        assert!(finite_alphabet_size(&xt, 0.5, 2, 1.0, (2.0, 1.0)).is_err());
    }

    #[test]
    fn bits_cover_levels() {
        let xt = DenseMatrix::zeros(2, 64);
        for delta in [0.01, 0.1, 0.7, 3.0, 40.0] {
            let s = finite_alphabet_size(&xt, delta, 2, 0.0, (1.0, 1.0)).unwrap();
            assert!(1u64 << (s.bits - 1) >= u64::from(s.levels));
            assert!(s.bits == 1 || 1u64 << (s.bits - 2) < u64::from(s.levels));
        }
    }

    #[test]
    fn mc_budget() {
        let o = McOutcome::with_failure_probability(200, 13, 2.0 / 64.0);
        assert!((o.allowed - (6.25 + 3.0 * (6.25f64 * (1.0 - 1.0 / 32.0)).sqrt())).abs() < 1e-12);
        assert!(o.passed());
    }

    #[test]
    fn budgets_are_positive_and_shrink_with_width() {
        let a = relative_error_budget(0.1, 2, 16, &[256, 256, 256]).unwrap();
        let b = relative_error_budget(0.1, 2, 16, &[512, 512, 512]).unwrap();
        assert!(a > 0.0 && b < a);
        let n = network_error_bound(0.1, 2, 16, &[256, 256], &[1.0, 2.0]).unwrap();
        assert!(n > 0.0);
    }
}
