//! Serializable run report shared by the library and the CLI.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::spfq::AlignMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub layer: usize,
    pub mode: AlignMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    pub delta: f64,
    /// Alphabet levels `K`; absent for the infinite alphabet.
    #[serde(rename = "K")]
    pub levels: Option<u32>,
    /// `max_j ‖X W_j − X̃ Q_j‖₂`.
    pub max_col_error: f64,
    /// Quantization bound plus the largest alignment residual; absent when the
    /// layer input has fewer than two columns.
    pub bound: Option<f64>,
    pub confidence: Option<f64>,
    pub max_alignment_residual: f64,
    pub max_argument: f64,
    /// `max_j ‖X⁽ⁱ⁾_j − X̃⁽ⁱ⁾_j‖₂` after the activation.
    pub max_activation_error: f64,
    pub overflow_count: usize,
    pub zero_column_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSummary {
    /// `‖Φ(X) − Φ̃(X)‖_F`.
    pub frobenius_error: f64,
    /// `‖Φ(X) − Φ̃(X)‖_F / ‖Φ(X)‖_F` (zero when `Φ(X) = 0`).
    pub relative_error: f64,
    pub seed: u64,
    /// `‖Φ(X)_j − Φ̃(X)_j‖₂` per output neuron.
    pub output_column_errors: Vec<f64>,
    pub max_output_column_error: f64,
    /// Whole-network bound on the largest output column error; present for
    /// perfect alignment with an infinite alphabet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_error_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub per_layer: Vec<LayerSummary>,
    pub network_level: NetworkSummary,
}

impl RunReport {
    /// Drops wall-clock timings so that reports of identical runs are identical.
    pub fn clear_timing(&mut self) {
        for l in &mut self.per_layer {
            l.wall_time_ms = None;
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
