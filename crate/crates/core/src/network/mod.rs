//! Multi-layer perceptrons, forward passes, and whole-network quantization.

mod io;

pub use io::{parse_data_csv, read_data_csv, NetworkFile, RawLayer};

use std::time::Instant;

use crate::analysis::{network_error_bound, quantization_bound_value, quantization_confidence};
use crate::error::{Result, SpfqError};
use crate::linalg::{norm2, DenseMatrix};
use crate::report::{LayerSummary, NetworkSummary, RunReport};
use crate::spfq::{quantize_layer, AlignMode, QuantConfig, Resolution};

/// Activation applied after every layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
}

impl Activation {
    pub fn apply(self, x: &DenseMatrix) -> DenseMatrix {
        match self {
            Activation::Relu => x.map(|v| v.max(0.0)),
        }
    }
}

/// One affine layer. A bias is stored as the last row of `weights` and met by
/// a column of ones appended to the layer input.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    weights: DenseMatrix,
    has_bias: bool,
}

impl Layer {
    pub fn new(weights: DenseMatrix) -> Self {
        Self {
            weights,
            has_bias: false,
        }
    }

    pub fn with_bias(weights: &DenseMatrix, bias: &[f64]) -> Result<Self> {
        if bias.len() != weights.cols() {
            return Err(SpfqError::Shape(format!(
                "bias has length {} but the layer has {} outputs",
                bias.len(),
                weights.cols()
            )));
        }
        let mut rows: Vec<Vec<f64>> = (0..weights.rows())
            .map(|i| weights.row(i).to_vec())
            .collect();
        rows.push(bias.to_vec());
        Ok(Self {
            weights: DenseMatrix::from_rows(&rows)?,
            has_bias: true,
        })
    }

    /// Weights with the bias row folded in.
    pub fn weights(&self) -> &DenseMatrix {
        &self.weights
    }

    pub fn has_bias(&self) -> bool {
        self.has_bias
    }

    pub fn input_dim(&self) -> usize {
        self.weights.rows() - usize::from(self.has_bias)
    }

    pub fn output_dim(&self) -> usize {
        self.weights.cols()
    }

    /// The weights without the bias row, and the bias.
    pub fn split(&self) -> (DenseMatrix, Option<Vec<f64>>) {
        if !self.has_bias {
            return (self.weights.clone(), None);
        }
        let n = self.input_dim();
        let w = DenseMatrix::from_fn(n, self.output_dim(), |i, j| self.weights[(i, j)]);
        (w, Some(self.weights.row(n).to_vec()))
    }

    /// Same layout with different (e.g. quantized) folded weights.
    fn replaced(&self, weights: DenseMatrix) -> Self {
        Self {
            weights,
            has_bias: self.has_bias,
        }
    }

    /// The layer input as seen by the folded weights.
    pub fn prepare_input(&self, x: &DenseMatrix) -> DenseMatrix {
        if self.has_bias {
            x.append_ones_column()
        } else {
            x.clone()
        }
    }

    pub fn pre_activation(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.cols() != self.input_dim() {
            return Err(SpfqError::Shape(format!(
                "layer expects {} input columns, got {}",
                self.input_dim(),
                x.cols()
            )));
        }
        self.prepare_input(x).matmul(&self.weights)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    layers: Vec<Layer>,
    activation: Activation,
}

impl MlpNetwork {
    /// Network without biases from weight matrices `W⁽¹⁾, …, W⁽ᴸ⁾` (each `N_{i−1}×N_i`).
    pub fn new(weights: Vec<DenseMatrix>) -> Result<Self> {
        Self::from_layers(weights.into_iter().map(Layer::new).collect())
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(SpfqError::InvalidArgument(
                "a network needs at least one layer".into(),
            ));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(SpfqError::Shape(format!(
                    "layer {i} has {} outputs but layer {} expects {} inputs",
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                )));
            }
        }
        Ok(Self {
            layers,
            activation: Activation::Relu,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }
}

/// `Φ⁽ᵘᵖᵗᵒ⁾(X)`: the first `upto` layers, each followed by the activation.
pub fn forward(net: &MlpNetwork, x: &DenseMatrix, upto: usize) -> Result<DenseMatrix> {
    if upto > net.depth() {
        return Err(SpfqError::InvalidArgument(format!(
            "network has {} layers, asked for {upto}",
            net.depth()
        )));
    }
    if x.cols() != net.input_dim() {
        return Err(SpfqError::Shape(format!(
            "data has {} columns but the network expects {}",
            x.cols(),
            net.input_dim()
        )));
    }
    let mut h = x.clone();
    for layer in &net.layers[..upto] {
        h = net.activation.apply(&layer.pre_activation(&h)?);
    }
    Ok(h)
}

fn column_error_norms(a: &DenseMatrix, b: &DenseMatrix) -> Vec<f64> {
    (0..a.cols())
        .map(|j| {
            let d: Vec<f64> = (0..a.rows()).map(|i| a[(i, j)] - b[(i, j)]).collect();
            norm2(&d)
        })
        .collect()
}

/// Quantizes the layers in order. Layer `i` sees the true activations
/// `X⁽ⁱ⁻¹⁾ = Φ⁽ⁱ⁻¹⁾(X)` and those of the partially quantized network,
/// `X̃⁽ⁱ⁻¹⁾ = Φ̃⁽ⁱ⁻¹⁾(X)`.
pub fn quantize_network(
    net: &MlpNetwork,
    x: &DenseMatrix,
    cfg: &QuantConfig,
) -> Result<(MlpNetwork, RunReport)> {
    cfg.validate()?;
    if x.cols() != net.input_dim() {
        return Err(SpfqError::Shape(format!(
            "data has {} columns but the network expects {}",
            x.cols(),
            net.input_dim()
        )));
    }
    let m = x.rows();
    let p = cfg.prob_exponent;
    let mut h_true = x.clone();
    let mut h_quant = x.clone();
    let mut qlayers = Vec::with_capacity(net.depth());
    let mut summaries = Vec::with_capacity(net.depth());
    let mut widths = Vec::with_capacity(net.depth());
    let mut true_col_norms = Vec::with_capacity(net.depth());
    let mut max_delta: f64 = 0.0;

    for (i, layer) in net.layers.iter().enumerate() {
        let start = Instant::now();
        let xi = layer.prepare_input(&h_true);
        let xti = layer.prepare_input(&h_quant);
        let (q, rep) =
            quantize_layer(&xi, &xti, layer.weights(), cfg, i).map_err(|e| e.at_layer(i))?;
        let next_true = net.activation.apply(&xi.matmul(layer.weights())?);
        let next_quant = net.activation.apply(&xti.matmul(&q)?);
        let elapsed = start.elapsed().as_secs_f64() * 1e3;

        let n_in = xi.cols();
        let (bound, confidence) = if n_in >= 2 {
            let b = quantization_bound_value(rep.delta, p, m, n_in, xti.max_column_norm());
            (
                Some(b + rep.max_alignment_residual),
                Some(quantization_confidence(m, n_in, p, layer.output_dim())),
            )
        } else {
            (None, None)
        };
        let max_activation_error = column_error_norms(&next_true, &next_quant)
            .into_iter()
            .fold(0.0, f64::max);
        summaries.push(LayerSummary {
            layer: i,
            mode: cfg.mode,
            order: (cfg.mode == AlignMode::OrderR).then_some(cfg.order),
            delta: rep.delta,
            levels: rep.levels,
            max_col_error: rep.max_col_error,
            bound,
            confidence,
            max_alignment_residual: rep.max_alignment_residual,
            max_argument: rep.max_argument,
            max_activation_error,
            overflow_count: rep.overflow_count,
            zero_column_count: rep.zero_column_count,
            wall_time_ms: Some(elapsed),
        });
        widths.push(n_in);
        true_col_norms.push(xi.max_column_norm());
        max_delta = max_delta.max(rep.delta);
        qlayers.push(layer.replaced(q));
        h_true = next_true;
        h_quant = next_quant;
    }

    let output_column_errors = column_error_norms(&h_true, &h_quant);
    let frobenius_error = output_column_errors
        .iter()
        .map(|e| e * e)
        .sum::<f64>()
        .sqrt();
    let reference = h_true.frobenius_norm();
    let output_error_bound = if cfg.mode == AlignMode::Perfect
        && cfg.resolution == Resolution::Infinite
        && widths.iter().all(|&n| n >= 2)
    {
        Some(network_error_bound(
            max_delta,
            p,
            m,
            &widths,
            &true_col_norms,
        )?)
    } else {
        None
    };
    let report = RunReport {
        per_layer: summaries,
        network_level: NetworkSummary {
            frobenius_error,
            relative_error: if reference > 0.0 {
                frobenius_error / reference
            } else {
                0.0
            },
            seed: cfg.seed,
            max_output_column_error: output_column_errors.iter().cloned().fold(0.0, f64::max),
            output_column_errors,
            output_error_bound,
        },
    };
    let qnet = MlpNetwork {
        layers: qlayers,
        activation: net.activation,
    };
    Ok((qnet, report))
}
