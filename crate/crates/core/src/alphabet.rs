//! Mid-tread quantization grids and the scalar quantizers that map onto them.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpfqError};
use crate::linalg::DenseMatrix;
use crate::rng::RandomStream;

/// The grid `{±kδ}`, either unbounded or truncated at `±Kδ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alphabet {
    step: f64,
    levels: Option<u32>,
}

/// Outcome of one stochastic rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantDraw {
    pub value: f64,
    /// The input lay outside `[-Kδ, Kδ]` and was clamped to the nearest end.
    pub clamped: bool,
}

impl Alphabet {
    pub fn infinite(step: f64) -> Result<Self> {
        Self::validate_step(step)?;
        Ok(Self { step, levels: None })
    }

    pub fn finite(step: f64, levels: u32) -> Result<Self> {
        Self::validate_step(step)?;
        if levels == 0 {
            return Err(SpfqError::InvalidArgument(
                "finite alphabet needs at least one level".into(),
            ));
        }
        Ok(Self {
            step,
            levels: Some(levels),
        })
    }

    fn validate_step(step: f64) -> Result<()> {
        if step.is_finite() && step > 0.0 {
            Ok(())
        } else {
            Err(SpfqError::InvalidStep(step))
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn levels(&self) -> Option<u32> {
        self.levels
    }

    pub fn is_finite(&self) -> bool {
        self.levels.is_some()
    }

    /// Largest representable magnitude, `Kδ` (infinite for unbounded grids).
    pub fn max_magnitude(&self) -> f64 {
        match self.levels {
            Some(k) => f64::from(k) * self.step,
            None => f64::INFINITY,
        }
    }

    /// Whether `v` is (to rounding) a grid element.
    pub fn contains(&self, v: f64) -> bool {
        if !v.is_finite() {
            return false;
        }
        let k = (v / self.step).round();
        if let Some(levels) = self.levels {
            if k.abs() > f64::from(levels) {
                return false;
            }
        }
        (v - k * self.step).abs() <= 1e-9 * self.step.max(v.abs())
    }

    fn clamp_index(&self, k: f64) -> f64 {
        match self.levels {
            Some(levels) => k.clamp(-f64::from(levels), f64::from(levels)),
            None => k,
        }
    }

    /// Unbiased stochastic rounding to one of the two grid points around `z`.
    ///
    /// Exactly one uniform is consumed per call, including calls that are
    /// deterministic (grid points, clamped inputs), so streams stay aligned
    /// between runs that use different alphabets.
    pub fn stoc_quantize(&self, z: f64, rng: &mut RandomStream) -> Result<QuantDraw> {
        if !z.is_finite() {
            return Err(SpfqError::NonFinite("quantizer argument"));
        }
        let u = rng.uniform();
        let bound = self.max_magnitude();
        if z > bound {
            return Ok(QuantDraw {
                value: bound,
                clamped: true,
            });
        }
        if z < -bound {
            return Ok(QuantDraw {
                value: -bound,
                clamped: true,
            });
        }
        let ratio = z / self.step;
        let floor = ratio.floor();
        let p_low = 1.0 - ratio + floor;
        let k = if u < p_low { floor } else { floor + 1.0 };
        Ok(QuantDraw {
            value: self.clamp_index(k) * self.step,
            clamped: false,
        })
    }

    /// Nearest grid point; exact midpoints go to the point of larger magnitude.
    pub fn det_quantize(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(SpfqError::NonFinite("quantizer argument"));
        }
        // f64::round breaks ties away from zero.
        let k = self.clamp_index((z / self.step).round());
        Ok(k * self.step)
    }
}

/// Level count and step for a `bits`-bit alphabet: `K = 2^(bits-1)` and
/// `δ = C / (K·N) · Σ_j ‖W_j‖_∞` over the `N` columns of `weights`.
pub fn step_from_weights(weights: &DenseMatrix, bits: u32, constant: f64) -> Result<(u32, f64)> {
    if !(2..=31).contains(&bits) {
        return Err(SpfqError::InvalidArgument(format!(
            "bits must lie in 2..=31, got {bits}"
        )));
    }
    let levels = 1u32 << (bits - 1);
    let delta = step_from_levels(weights, levels, constant)?;
    Ok((levels, delta))
}

/// The same rule with an explicit level count `K` in place of `2^(bits-1)`.
pub fn step_from_levels(weights: &DenseMatrix, levels: u32, constant: f64) -> Result<f64> {
    if !(constant.is_finite() && constant > 0.0) {
        return Err(SpfqError::InvalidArgument(format!(
            "step constant must be positive, got {constant}"
        )));
    }
    if levels == 0 {
        return Err(SpfqError::InvalidArgument("levels must be positive".into()));
    }
    let n = weights.cols();
    let sum_sup: f64 = (0..n).map(|j| weights.column_max_abs(j)).sum();
    if sum_sup == 0.0 {
        return Err(SpfqError::InvalidStep(0.0));
    }
    Ok(constant / (f64::from(levels) * n as f64) * sum_sup)
}
