//! Phase II quantization, the fused single-pass algorithm, the greedy
//! deterministic baseline, and per-layer orchestration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::{align_first_pass, align_order_r, solve_min_inf};
use crate::alphabet::{step_from_levels, Alphabet, QuantDraw};
use crate::error::{Result, SpfqError};
use crate::linalg::{axpy, dot, has_full_rank, norm2, ColumnMajor, DenseMatrix};
use crate::rng::RandomStream;

/// How the number of alphabet levels is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resolution {
    /// Unbounded grid; requires an explicit step.
    Infinite,
    /// `K = 2^(bits−1)` levels on each side of zero.
    Bits(u32),
    /// An explicit level count `K`.
    Levels(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignMode {
    /// Alignment and quantization interleaved in a single pass.
    Fused,
    /// Minimum-ℓ∞ alignment followed by Phase II.
    Perfect,
    /// Order-`r` sequential alignment followed by Phase II.
    OrderR,
}

impl AlignMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AlignMode::Fused => "fused",
            AlignMode::Perfect => "perfect",
            AlignMode::OrderR => "order-r",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantConfig {
    pub resolution: Resolution,
    /// `C` in the step rule `δ = C/(K·N) Σ_j ‖W_j‖_∞`.
    pub step_constant: f64,
    /// Overrides the step rule when present.
    pub explicit_delta: Option<f64>,
    pub mode: AlignMode,
    /// Alignment order `r`, used by [`AlignMode::OrderR`].
    pub order: usize,
    /// Probability exponent `p` of the error bounds.
    pub prob_exponent: u32,
    pub seed: u64,
}

impl Default for QuantConfig {
    fn default() -> Self {
        Self {
            resolution: Resolution::Bits(4),
            step_constant: 1.0,
            explicit_delta: None,
            mode: AlignMode::Fused,
            order: 1,
            prob_exponent: 2,
            seed: 0,
        }
    }
}

impl QuantConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mode == AlignMode::OrderR && self.order == 0 {
            return Err(SpfqError::InvalidArgument(
                "order-r alignment needs order >= 1".into(),
            ));
        }
        if self.prob_exponent < 2 {
            return Err(SpfqError::InvalidArgument(format!(
                "probability exponent must be at least 2, got {}",
                self.prob_exponent
            )));
        }
        if let Some(d) = self.explicit_delta {
            if !(d.is_finite() && d > 0.0) {
                return Err(SpfqError::InvalidStep(d));
            }
        }
        match self.resolution {
            Resolution::Infinite if self.explicit_delta.is_none() => Err(
                SpfqError::InvalidArgument("an infinite alphabet needs an explicit delta".into()),
            ),
            Resolution::Bits(b) if !(2..=31).contains(&b) => Err(SpfqError::InvalidArgument(
                format!("bits must lie in 2..=31, got {b}"),
            )),
            Resolution::Levels(0) => {
                Err(SpfqError::InvalidArgument("levels must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// The alphabet used for a layer with weight matrix `weights`.
    pub fn alphabet_for(&self, weights: &DenseMatrix) -> Result<Alphabet> {
        self.validate()?;
        let levels = match self.resolution {
            Resolution::Infinite => None,
            Resolution::Bits(b) => Some(1u32 << (b - 1)),
            Resolution::Levels(k) => Some(k),
        };
        let delta = match (self.explicit_delta, levels) {
            (Some(d), _) => d,
            (None, Some(k)) => step_from_levels(weights, k, self.step_constant)?,
            (None, None) => unreachable!("validated above"),
        };
        match levels {
            Some(k) => Alphabet::finite(delta, k),
            None => Alphabet::infinite(delta),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronQuantResult {
    /// Quantized weights, all on the alphabet grid.
    pub q: Vec<f64>,
    /// `u_N = Xw − X̃q` for the fused and greedy runs, `ũ_N = X̃(w̃ − q̃)` for Phase II.
    pub final_error: Vec<f64>,
    pub overflow_count: usize,
    /// Largest `|argument|` handed to the scalar quantizer.
    pub max_argument: f64,
    /// `(layer, neuron)` of the random stream, when run inside a layer.
    pub rng_label: Option<(usize, usize)>,
}

struct Columns {
    x: ColumnMajor,
    xt: ColumnMajor,
    norms_sq: Vec<f64>,
}

impl Columns {
    fn new(x: &DenseMatrix, xt: &DenseMatrix) -> Self {
        let xt = xt.to_column_major();
        let norms_sq = (0..xt.cols()).map(|j| dot(xt.col(j), xt.col(j))).collect();
        Self {
            x: x.to_column_major(),
            xt,
            norms_sq,
        }
    }
}

fn check_shapes(x: &DenseMatrix, xt: &DenseMatrix, n: usize) -> Result<()> {
    if x.shape() != xt.shape() {
        return Err(SpfqError::Shape(format!(
            "X is {}x{} but X~ is {}x{}",
            x.rows(),
            x.cols(),
            xt.rows(),
            xt.cols()
        )));
    }
    if n != x.cols() {
        return Err(SpfqError::Shape(format!(
            "weight vector has length {n} but data has {} columns",
            x.cols()
        )));
    }
    Ok(())
}

#[derive(Default)]
struct Tally {
    overflow: usize,
    max_arg: f64,
}

impl Tally {
    fn record(&mut self, arg: f64, draw: QuantDraw) -> f64 {
        self.max_arg = self.max_arg.max(arg.abs());
        if draw.clamped {
            self.overflow += 1;
        }
        draw.value
    }
}

/// Path-following loop shared by the fused and greedy variants:
/// `q_t = Q(⟨X̃_t, u_{t−1} + w_t X_t⟩ / ‖X̃_t‖²)`, `u_t = u_{t−1} + w_t X_t − q_t X̃_t`.
fn path_following(
    cols: &Columns,
    w: &[f64],
    mut quantize: impl FnMut(f64) -> Result<QuantDraw>,
) -> Result<NeuronQuantResult> {
    let mut u = vec![0.0; cols.x.rows()];
    let mut q = vec![0.0; w.len()];
    let mut tally = Tally::default();
    for t in 0..w.len() {
        if !w[t].is_finite() {
            return Err(SpfqError::NonFinite("weights"));
        }
        axpy(w[t], cols.x.col(t), &mut u);
        let arg = if cols.norms_sq[t] == 0.0 {
            w[t]
        } else {
            dot(cols.xt.col(t), &u) / cols.norms_sq[t]
        };
        q[t] = tally.record(arg, quantize(arg)?);
        if cols.norms_sq[t] != 0.0 {
            axpy(-q[t], cols.xt.col(t), &mut u);
        }
    }
    Ok(NeuronQuantResult {
        q,
        final_error: u,
        overflow_count: tally.overflow,
        max_argument: tally.max_arg,
        rng_label: None,
    })
}

fn phase2(
    cols: &Columns,
    w_tilde: &[f64],
    a: &Alphabet,
    rng: &mut RandomStream,
) -> Result<NeuronQuantResult> {
    let mut u = vec![0.0; cols.xt.rows()];
    let mut q = vec![0.0; w_tilde.len()];
    let mut tally = Tally::default();
    for t in 0..w_tilde.len() {
        if !w_tilde[t].is_finite() {
            return Err(SpfqError::NonFinite("aligned weights"));
        }
        let arg = if cols.norms_sq[t] == 0.0 {
            w_tilde[t]
        } else {
            w_tilde[t] + dot(cols.xt.col(t), &u) / cols.norms_sq[t]
        };
        q[t] = tally.record(arg, a.stoc_quantize(arg, rng)?);
        axpy(w_tilde[t] - q[t], cols.xt.col(t), &mut u);
    }
    Ok(NeuronQuantResult {
        q,
        final_error: u,
        overflow_count: tally.overflow,
        max_argument: tally.max_arg,
        rng_label: rng.label(),
    })
}

/// Fused single-pass SPFQ for one neuron. A zero column `X̃_t` quantizes `w_t` directly.
pub fn quantize_neuron_fused(
    x: &DenseMatrix,
    xt: &DenseMatrix,
    w: &[f64],
    a: &Alphabet,
    rng: &mut RandomStream,
) -> Result<NeuronQuantResult> {
    check_shapes(x, xt, w.len())?;
    let label = rng.label();
    let mut res = path_following(&Columns::new(x, xt), w, |z| a.stoc_quantize(z, rng))?;
    res.rng_label = label;
    Ok(res)
}

/// Phase II: quantize already-aligned weights `w̃` against `X̃`.
pub fn quantize_neuron_phase2(
    xt: &DenseMatrix,
    w_tilde: &[f64],
    a: &Alphabet,
    rng: &mut RandomStream,
) -> Result<NeuronQuantResult> {
    check_shapes(xt, xt, w_tilde.len())?;
    phase2(&Columns::new(xt, xt), w_tilde, a, rng)
}

/// Greedy path following with round-to-nearest in place of stochastic rounding.
pub fn quantize_neuron_gpfq(
    x: &DenseMatrix,
    xt: &DenseMatrix,
    w: &[f64],
    a: &Alphabet,
) -> Result<NeuronQuantResult> {
    check_shapes(x, xt, w.len())?;
    let bound = a.max_magnitude();
    path_following(&Columns::new(x, xt), w, |z| {
        Ok(QuantDraw {
            value: a.det_quantize(z)?,
            clamped: z.abs() > bound,
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub layer: usize,
    pub mode: AlignMode,
    pub delta: f64,
    pub levels: Option<u32>,
    /// `‖X W_j − X̃ Q_j‖₂` per neuron.
    pub column_errors: Vec<f64>,
    pub max_col_error: f64,
    /// Largest `‖Xw − X̃w̃‖₂` left by Phase I (for the fused mode, by a first pass).
    pub max_alignment_residual: f64,
    /// Largest norm of the quantizer's final error vector (for the fused mode, the full error).
    pub max_quantization_error: f64,
    pub max_argument: f64,
    pub overflow_count: usize,
    /// Number of all-zero columns of `X̃`.
    pub zero_column_count: usize,
}

struct ColumnOutcome {
    q: Vec<f64>,
    error: f64,
    align_residual: f64,
    quant_error: f64,
    max_argument: f64,
    overflow: usize,
}

/// Quantizes every neuron (column) of `w`. Column `j` draws from the stream
/// `(cfg.seed, layer, j)`, so the output does not depend on thread scheduling.
pub fn quantize_layer(
    x: &DenseMatrix,
    xt: &DenseMatrix,
    w: &DenseMatrix,
    cfg: &QuantConfig,
    layer: usize,
) -> Result<(DenseMatrix, LayerReport)> {
    check_shapes(x, xt, w.rows())?;
    let alphabet = cfg.alphabet_for(w)?;
    if cfg.mode == AlignMode::Perfect && (xt.rows() > xt.cols() || !has_full_rank(xt)) {
        return Err(SpfqError::RankDeficient(format!(
            "quantized-path data of layer {layer} does not have rank {}",
            xt.rows()
        )));
    }
    let cols = Columns::new(x, xt);
    let weights = w.to_column_major();
    let outcomes: Vec<ColumnOutcome> = (0..w.cols())
        .into_par_iter()
        .map(|j| {
            quantize_column(x, xt, &cols, weights.col(j), &alphabet, cfg, layer, j)
                .map_err(|e| e.at_column(j))
        })
        .collect::<Result<_>>()?;

    let mut q = DenseMatrix::zeros(w.rows(), w.cols());
    let mut report = LayerReport {
        layer,
        mode: cfg.mode,
        delta: alphabet.step(),
        levels: alphabet.levels(),
        column_errors: Vec::with_capacity(w.cols()),
        max_col_error: 0.0,
        max_alignment_residual: 0.0,
        max_quantization_error: 0.0,
        max_argument: 0.0,
        overflow_count: 0,
        zero_column_count: cols.norms_sq.iter().filter(|&&n| n == 0.0).count(),
    };
    for (j, o) in outcomes.into_iter().enumerate() {
        q.set_column(j, &o.q);
        report.column_errors.push(o.error);
        report.max_col_error = report.max_col_error.max(o.error);
        report.max_alignment_residual = report.max_alignment_residual.max(o.align_residual);
        report.max_quantization_error = report.max_quantization_error.max(o.quant_error);
        report.max_argument = report.max_argument.max(o.max_argument);
        report.overflow_count += o.overflow;
    }
    Ok((q, report))
}

#[allow(clippy::too_many_arguments)]
fn quantize_column(
    x: &DenseMatrix,
    xt: &DenseMatrix,
    cols: &Columns,
    w: &[f64],
    alphabet: &Alphabet,
    cfg: &QuantConfig,
    layer: usize,
    j: usize,
) -> Result<ColumnOutcome> {
    let mut rng = RandomStream::for_neuron(cfg.seed, layer, j);
    let (res, align_residual) = match cfg.mode {
        AlignMode::Fused => {
            // The fused error splits into this first-pass alignment residual plus
            // the Phase II error of the coupled two-phase run.
            let aligned = align_first_pass(x, xt, w)?;
            (
                path_following(cols, w, |z| alphabet.stoc_quantize(z, &mut rng))?,
                norm2(&aligned.residual),
            )
        }
        AlignMode::OrderR => {
            let aligned = align_order_r(x, xt, w, cfg.order)?;
            let r = norm2(&aligned.residual);
            (phase2(cols, &aligned.w_tilde, alphabet, &mut rng)?, r)
        }
        AlignMode::Perfect => {
            let b = cols.x.matvec(w);
            let sol = solve_min_inf(xt, &b, None)?;
            (
                phase2(cols, &sol.w_tilde, alphabet, &mut rng)?,
                sol.feasibility_residual,
            )
        }
    };
    let quant_error = norm2(&res.final_error);
    let error = match cfg.mode {
        AlignMode::Fused => quant_error,
        _ => {
            let xw = cols.x.matvec(w);
            let xq = cols.xt.matvec(&res.q);
            norm2(&xw.iter().zip(&xq).map(|(a, b)| a - b).collect::<Vec<_>>())
        }
    };
    Ok(ColumnOutcome {
        q: res.q,
        error,
        align_residual,
        quant_error,
        max_argument: res.max_argument,
        overflow: res.overflow_count,
    })
}
