use serde::{Deserialize, Serialize};

use crate::align::solve_min_inf;
use crate::error::{Result, SpfqError};
use crate::linalg::{hadamard, orthonormal_columns, singular_extremes, DenseMatrix};
use crate::rng::RandomStream;

/// A pair `(X, X̃)` with small relative perturbation for which the minimum-ℓ∞
/// alignment weights grow by the factor `1/γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarialInstance {
    pub x: DenseMatrix,
    pub xt: DenseMatrix,
    pub w: Vec<f64>,
    pub gamma: f64,
    pub epsilon: f64,
    pub expected_ratio: f64,
}

/// `X = U S Vᵀ` with `U` a seeded random orthogonal matrix, `V` the first `m`
/// columns of the normalised Hadamard matrix of order `N` and
/// `S = diag(1, …, 1, ε)`; `X̃ = X + ε(γ−1) U_m V_mᵀ`; `w = ε V S⁻¹ e_m`.
pub fn adversarial_instance(
    m: usize,
    n: usize,
    gamma: f64,
    epsilon: f64,
    seed: u64,
) -> Result<AdversarialInstance> {
    if !(gamma > 0.0 && gamma < 1.0 && epsilon > 0.0 && epsilon < 1.0) {
        return Err(SpfqError::InvalidArgument(format!(
            "gamma and epsilon must lie in (0, 1), got {gamma} and {epsilon}"
        )));
    }
    if m == 0 || m > n {
        return Err(SpfqError::InvalidArgument(format!(
            "need 1 <= m <= N, got m={m}, N={n}"
        )));
    }
    let h = hadamard(n)?;
    let u = orthonormal_columns(&RandomStream::for_trial(seed, 0).gaussian_matrix(m, m))?;
    let s = |k: usize| if k + 1 == m { epsilon } else { 1.0 };
    // X_{ij} = Σ_k U_{ik} s_k V_{jk}
    let x = DenseMatrix::from_fn(m, n, |i, j| {
        (0..m).map(|k| u[(i, k)] * s(k) * h[(j, k)]).sum()
    });
    let e = DenseMatrix::from_fn(m, n, |i, j| {
        epsilon * (gamma - 1.0) * u[(i, m - 1)] * h[(j, m - 1)]
    });
    let xt = x.add(&e)?;
    // ε V S⁻¹ e_m = V e_m
    let w = (0..n).map(|j| h[(j, m - 1)]).collect();

    let (x_norm, _) = singular_extremes(&x);
    let (e_norm, _) = singular_extremes(&e);
    let expected = epsilon * (1.0 - gamma) * x_norm;
    if (e_norm - expected).abs() > 1e-9 * x_norm {
        return Err(SpfqError::InvalidArgument(format!(
            "perturbation norm {e_norm} differs from {expected}"
        )));
    }
    Ok(AdversarialInstance {
        x,
        xt,
        w,
        gamma,
        epsilon,
        expected_ratio: 1.0 / gamma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdversarialMeasurement {
    /// Optimal `‖ŵ‖_∞` for `Xŵ = Xw`.
    pub unperturbed_objective: f64,
    /// Optimal `‖w̃‖_∞` for `X̃w̃ = Xw`.
    pub perturbed_objective: f64,
    pub ratio: f64,
    /// `‖X̃ − X‖₂ / ‖X‖₂`.
    pub relative_perturbation: f64,
}

/// Solves both minimum-ℓ∞ problems of an instance.
pub fn measure_adversarial(inst: &AdversarialInstance) -> Result<AdversarialMeasurement> {
    let b = inst.x.matvec(&inst.w)?;
    let hat = solve_min_inf(&inst.x, &b, None)?;
    let tilde = solve_min_inf(&inst.xt, &b, None)?;
    let (x_norm, _) = singular_extremes(&inst.x);
    let (e_norm, _) = singular_extremes(&inst.xt.sub(&inst.x)?);
    Ok(AdversarialMeasurement {
        unperturbed_objective: hat.objective,
        perturbed_objective: tilde.objective,
        ratio: tilde.objective / hat.objective,
        relative_perturbation: e_norm / x_norm,
    })
}
