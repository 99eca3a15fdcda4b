use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checks::mean_std;
use super::{finite_alphabet_size, quantization_bound_value, relative_error_budget};
use crate::alphabet::Alphabet;
use crate::error::{Result, SpfqError};
use crate::linalg::{
    norm2, singular_extremes, ProjectionProduct, DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL,
};
use crate::network::{quantize_network, MlpNetwork};
use crate::rng::RandomStream;
use crate::spfq::{quantize_neuron_fused, AlignMode, QuantConfig, Resolution};

/// Least-squares slope of `ys` against `xs`; `None` with fewer than two distinct `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub n: usize,
    pub mean_log_norm_sq: f64,
    pub std_log_norm_sq: f64,
    pub max_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub m: usize,
    pub rows: Vec<DecayRow>,
    /// Slope of the mean `ln ‖P‖₂²` against `N`.
    pub slope: Option<f64>,
}

/// For each `N`, the distribution of `ln ‖P‖₂²` where `P` is the product of the
/// complement projections of `N` i.i.d. Gaussian vectors in `ℝ^m`.
pub fn projection_decay_experiment(
    m: usize,
    ns: &[usize],
    trials: usize,
    seed: u64,
) -> Result<DecayTable> {
    if m == 0 || trials == 0 || ns.is_empty() {
        return Err(SpfqError::InvalidArgument(
            "need m >= 1, trials >= 1 and at least one N".into(),
        ));
    }
    if let Some(&n) = ns.iter().find(|&&n| n < 10) {
        return Err(SpfqError::InvalidArgument(format!(
            "every N must be at least 10, got {n}"
        )));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for (cell, &n) in ns.iter().enumerate() {
        let norms: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let x = RandomStream::for_cell(seed, cell, t).gaussian_matrix(m, n);
                let pp = ProjectionProduct::from_matrix_columns(&x)?;
                Ok(pp.operator_norm(DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL))
            })
            .collect::<Result<_>>()?;
        let logs: Vec<f64> = norms
            .iter()
            .map(|v| (v * v).max(f64::MIN_POSITIVE).ln())
            .collect();
        let (mean, std) = mean_std(&logs);
        rows.push(DecayRow {
            n,
            mean_log_norm_sq: mean,
            std_log_norm_sq: std,
            max_norm: norms.iter().cloned().fold(0.0, f64::max),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean_log_norm_sq).collect();
    Ok(DecayTable {
        m,
        slope: fit_slope(&xs, &ys),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    /// Mean of the per-trial high-probability bound on the same ratio.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub m: usize,
    pub layers: usize,
    pub delta: f64,
    pub rows: Vec<SweepRow>,
    /// Slope of `ln mean` against `ln N`.
    pub log_log_slope: Option<f64>,
}

/// Relative squared error of SPFQ on Gaussian data and weights as the width
/// `N` grows at fixed `m`, with a fixed infinite-alphabet step `delta`.
///
/// For `layers = 1` each trial quantizes one Gaussian neuron against Gaussian
/// `X` (m×N) and records `‖Xw − Xq‖²/‖Xw‖²`. For deeper networks every layer is
/// N×N Gaussian and the ratio is `‖Φ(X) − Φ̃(X)‖_F² / ‖Φ(X)‖_F²`.
#[allow(clippy::too_many_arguments)]
pub fn relative_error_sweep(
    m: usize,
    ns: &[usize],
    layers: usize,
    p: u32,
    trials: usize,
    seed: u64,
    delta: f64,
) -> Result<SweepTable> {
    if m == 0 || layers == 0 || trials == 0 || ns.is_empty() {
        return Err(SpfqError::InvalidArgument(
            "need m, L, trials >= 1 and at least one N".into(),
        ));
    }
    if let Some(&n) = ns.iter().find(|&&n| n < 2 * m) {
        return Err(SpfqError::InvalidArgument(format!(
            "every N must be at least 2m, got {n}"
        )));
    }
    let alphabet = Alphabet::infinite(delta)?;
    let mut rows = Vec::with_capacity(ns.len());
    for (cell, &n) in ns.iter().enumerate() {
        let results: Vec<(f64, Option<f64>)> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = RandomStream::for_cell(seed, cell, t);
                if layers == 1 {
                    let x = rng.gaussian_matrix(m, n);
                    let w = rng.gaussian_vec(n);
                    let res = quantize_neuron_fused(&x, &x, &w, &alphabet, &mut rng)?;
                    let signal = norm2(&x.matvec(&w)?).powi(2);
                    let bound =
                        quantization_bound_value(delta, p, m, n, x.max_column_norm()).powi(2);
                    Ok((
                        norm2(&res.final_error).powi(2) / signal,
                        Some(bound / signal),
                    ))
                } else {
                    let x = rng.gaussian_matrix(m, n);
                    let weights = (0..layers).map(|_| rng.gaussian_matrix(n, n)).collect();
                    let net = MlpNetwork::new(weights)?;
                    let cfg = QuantConfig {
                        resolution: Resolution::Infinite,
                        explicit_delta: Some(delta),
                        mode: AlignMode::Fused,
                        prob_exponent: p,
                        seed: seed ^ ((cell as u64) << 32 | t as u64),
                        ..QuantConfig::default()
                    };
                    let (_, report) = quantize_network(&net, &x, &cfg)?;
                    let rel = report.network_level.relative_error;
                    let budget = relative_error_budget(delta, p, m, &vec![n; layers + 1])?;
                    Ok((rel * rel, Some(budget)))
                }
            })
            .collect::<Result<_>>()?;
        let ratios: Vec<f64> = results.iter().map(|r| r.0).collect();
        let bounds: Vec<f64> = results.iter().filter_map(|r| r.1).collect();
        let (mean, std) = mean_std(&ratios);
        rows.push(SweepRow {
            n,
            mean,
            std,
            bound: (!bounds.is_empty()).then(|| mean_std(&bounds).0),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.mean.ln()).collect();
    Ok(SweepTable {
        m,
        layers,
        delta,
        log_log_slope: fit_slope(&xs, &ys),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitSizingRow {
    pub n: usize,
    pub mean_eta: f64,
    pub mean_levels: f64,
    pub mean_bits: f64,
    pub max_bits: u32,
}

/// Alphabet sizes needed by Gaussian layer inputs `X̃` (m×N) across widths.
#[allow(clippy::too_many_arguments)]
pub fn bit_sizing_experiment(
    m: usize,
    ns: &[usize],
    p: u32,
    delta: f64,
    epsilon: f64,
    trials: usize,
    seed: u64,
) -> Result<Vec<BitSizingRow>> {
    if m == 0 || trials == 0 || ns.is_empty() {
        return Err(SpfqError::InvalidArgument(
            "need m >= 1, trials >= 1 and at least one N".into(),
        ));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for (cell, &n) in ns.iter().enumerate() {
        if n < m.max(2) {
            return Err(SpfqError::InvalidArgument(format!(
                "every N must be at least max(m, 2), got {n}"
            )));
        }
        let sizes: Vec<_> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let xt = RandomStream::for_cell(seed, cell, t).gaussian_matrix(m, n);
                let sv = singular_extremes(&xt);
                finite_alphabet_size(&xt, delta, p, epsilon, sv)
            })
            .collect::<Result<_>>()?;
        let k = trials as f64;
        rows.push(BitSizingRow {
            n,
            mean_eta: sizes.iter().map(|s| s.eta).sum::<f64>() / k,
            mean_levels: sizes.iter().map(|s| f64::from(s.levels)).sum::<f64>() / k,
            mean_bits: sizes.iter().map(|s| f64::from(s.bits)).sum::<f64>() / k,
            max_bits: sizes.iter().map(|s| s.bits).max().unwrap_or(0),
        });
    }
    Ok(rows)
}
