use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::McOutcome;
use crate::align::solve_min_inf;
use crate::error::{Result, SpfqError};
use crate::linalg::{dot, norm_inf, singular_extremes, symmetric_eigenvalues, DenseMatrix};
use crate::rng::RandomStream;

const STABILITY_RETRIES: usize = 100;

/// Threshold `α = 2σ √(ln(√2 n / γ))` at which a vector whose law is dominated in
/// convex order by `N(0, σ²I_n)` exceeds `‖·‖_∞ > α` with probability at most `γ`.
pub fn tail_threshold(sigma: f64, n: usize, gamma: f64) -> f64 {
    2.0 * sigma * (std::f64::consts::SQRT_2 * n as f64 / gamma).ln().sqrt()
}

/// Exceedance count of `‖x‖_∞ > α` with budget `Tγ + 3√(Tγ(1−γ))`.
pub fn tail_outcome(samples: &[Vec<f64>], sigma: f64, gamma: f64) -> McOutcome {
    let n = samples.first().map_or(1, Vec::len).max(1);
    let alpha = tail_threshold(sigma, n, gamma);
    let violations = samples.iter().filter(|x| norm_inf(x) > alpha).count();
    McOutcome::with_failure_probability(samples.len(), violations, gamma)
}

/// Whether the empirical fraction of samples with `‖x‖_∞ > α` is at most
/// `γ + 3√(γ(1−γ)/T)`.
pub fn tail_check(samples: &[Vec<f64>], sigma: f64, gamma: f64) -> bool {
    tail_outcome(samples, sigma, gamma).passed()
}

/// Builds `M_t = P_{z_t⊥} M_{t−1} P_{z_t⊥} + α z_t z_tᵀ` and checks
/// `λ_max(M_t) ≤ α max_{j≤t} ‖z_j‖² + 1e−8` for every `t`.
pub fn covariance_recursion_check(columns: &[Vec<f64>], alpha: f64) -> Result<bool> {
    let Some(first) = columns.first() else {
        return Ok(true);
    };
    let m = first.len();
    let mut mt = DenseMatrix::zeros(m, m);
    let mut beta: f64 = 0.0;
    for z in columns {
        if z.len() != m {
            return Err(SpfqError::Shape("columns must share one length".into()));
        }
        let nz = dot(z, z);
        if nz == 0.0 {
            return Err(SpfqError::ZeroVector("covariance recursion column"));
        }
        // P = I − z zᵀ/‖z‖²; M ← P M P + α z zᵀ
        let proj = DenseMatrix::from_fn(m, m, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - z[i] * z[j] / nz
        });
        mt = proj.matmul(&mt)?.matmul(&proj)?;
        for i in 0..m {
            for j in 0..m {
                mt[(i, j)] += alpha * z[i] * z[j];
            }
        }
        beta = beta.max(alpha * nz);
        let lmax = symmetric_eigenvalues(&mt)?[0];
        if lmax > beta + 1e-8 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaSpec {
    Identity,
    /// `Σ = AAᵀ/n` for a Gaussian `A`, drawn from the seed.
    RandomPsd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReluCheck {
    pub mean: f64,
    pub std: f64,
    /// `√(tr Σ / 2π)`.
    pub lower_bound: f64,
    pub passed: bool,
}

/// Draws `X ~ N(0, Σ)` and compares the sample mean of `‖ρ(X)‖₂` with
/// `√(tr Σ / 2π)`, allowing three standard errors.
pub fn relu_expectation_check(
    spec: SigmaSpec,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<ReluCheck> {
    if n == 0 || trials < 2 {
        return Err(SpfqError::InvalidArgument(
            "need n >= 1 and at least two trials".into(),
        ));
    }
    let factor = match spec {
        SigmaSpec::Identity => None,
        SigmaSpec::RandomPsd => Some(
            RandomStream::for_cell(seed, 0, 0)
                .gaussian_matrix(n, n)
                .scale(1.0 / (n as f64).sqrt()),
        ),
    };
    let trace = factor
        .as_ref()
        .map_or(n as f64, |a| a.frobenius_norm().powi(2));
    let norms: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let g = RandomStream::for_cell(seed, 1, t).gaussian_vec(n);
            let x = match &factor {
                None => g,
                Some(a) => a.matvec(&g).expect("square factor"),
            };
            x.iter().map(|v| v.max(0.0).powi(2)).sum::<f64>().sqrt()
        })
        .collect();
    let t = trials as f64;
    let mean = norms.iter().sum::<f64>() / t;
    let var = norms.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0);
    let std = var.sqrt();
    let lower_bound = (trace / (2.0 * std::f64::consts::PI)).sqrt();
    Ok(ReluCheck {
        mean,
        std,
        lower_bound,
        passed: mean >= lower_bound - 3.0 * std / t.sqrt(),
    })
}

/// Monte Carlo check of the ℓ∞ stability of minimum-ℓ∞ alignment under a
/// perturbation `‖E‖₂ ≤ εσ₁`.
///
/// Each trial draws Gaussian `X` (m×N), a Gaussian `E` rescaled to `‖E‖₂ = εσ₁`
/// and `w ~ N(0, I)`, solves `min ‖w̃‖_∞ s.t. (X+E)w̃ = Xw`, and counts
/// `‖w̃‖_∞ > σ₁/(σ_m − εσ₁) · √(2p ln N)`. The allowance is
/// `T·q + 3√(T·q)` with `q = 2/N^{p−1}`.
pub fn stability_bound_check(
    m: usize,
    n: usize,
    p: u32,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<McOutcome> {
    if trials == 0 || m == 0 || n < 2 || m > n || p < 1 {
        return Err(SpfqError::InvalidArgument(format!(
            "invalid stability setup m={m}, N={n}, p={p}, trials={trials}"
        )));
    }
    if !(epsilon.is_finite() && (0.0..1.0).contains(&epsilon)) {
        return Err(SpfqError::InvalidArgument(format!(
            "epsilon must lie in [0, 1), got {epsilon}"
        )));
    }
    let log_term = (2.0 * f64::from(p) * (n as f64).ln()).sqrt();
    let flags: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| stability_trial(m, n, epsilon, log_term, RandomStream::for_trial(seed, t)))
        .collect::<Result<_>>()?;
    let violations = flags.iter().filter(|&&v| v).count();
    let q = 2.0 / (n as f64).powi(p as i32 - 1);
    let tq = trials as f64 * q;
    Ok(McOutcome {
        trials,
        violations,
        allowed: tq + 3.0 * tq.sqrt(),
    })
}

fn stability_trial(
    m: usize,
    n: usize,
    epsilon: f64,
    log_term: f64,
    mut rng: RandomStream,
) -> Result<bool> {
    for _ in 0..STABILITY_RETRIES {
        let x = rng.gaussian_matrix(m, n);
        let (s1, sm) = singular_extremes(&x);
        let g = rng.gaussian_matrix(m, n);
        let w = rng.gaussian_vec(n);
        if epsilon * s1 >= sm || sm.is_nan() {
            continue;
        }
        let xt = if epsilon == 0.0 {
            x.clone()
        } else {
            let (g1, _) = singular_extremes(&g);
            x.add(&g.scale(epsilon * s1 / g1))?
        };
        let b = x.matvec(&w)?;
        let sol = solve_min_inf(&xt, &b, None)?;
        let bound = s1 / (sm - epsilon * s1) * log_term;
        return Ok(sol.objective > bound);
    }
    Err(SpfqError::Hypothesis("epsilon*sigma_1 < sigma_m".into()))
}

/// Sample standard deviation helper shared by the experiment tables.
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
