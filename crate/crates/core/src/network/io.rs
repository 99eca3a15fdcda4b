//! Network JSON manifests and data CSV files.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Layer, MlpNetwork};
use crate::error::{Result, SpfqError};
use crate::linalg::DenseMatrix;

/// On-disk network: `{"layers":[{"rows":R,"cols":C,"weights":[…],"bias":[…]}]}`
/// with row-major weights and an optional length-`C` bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub layers: Vec<RawLayer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawLayer {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<Vec<f64>>,
}

impl NetworkFile {
    pub fn into_network(self) -> Result<MlpNetwork> {
        if self.layers.is_empty() {
            return Err(SpfqError::format(
                "layers",
                "at least one layer is required",
            ));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, raw) in self.layers.into_iter().enumerate() {
            if raw.rows == 0 || raw.cols == 0 {
                return Err(SpfqError::format(
                    format!("layers[{i}].rows"),
                    format!("layer shape {}x{} must be positive", raw.rows, raw.cols),
                ));
            }
            if raw.weights.len() != raw.rows * raw.cols {
                return Err(SpfqError::format(
                    format!("layers[{i}].weights"),
                    format!(
                        "expected {} = {}x{} values, found {}",
                        raw.rows * raw.cols,
                        raw.rows,
                        raw.cols,
                        raw.weights.len()
                    ),
                ));
            }
            let w = DenseMatrix::new(raw.rows, raw.cols, raw.weights)
                .map_err(|e| SpfqError::format(format!("layers[{i}].weights"), e.to_string()))?;
            let layer = match raw.bias {
                None => Layer::new(w),
                Some(b) => {
                    if b.len() != raw.cols {
                        return Err(SpfqError::format(
                            format!("layers[{i}].bias"),
                            format!("expected {} values, found {}", raw.cols, b.len()),
                        ));
                    }
                    Layer::with_bias(&w, &b).map_err(|e| {
                        SpfqError::format(format!("layers[{i}].bias"), e.to_string())
                    })?
                }
            };
            if let Some(prev) = layers.last().map(|l: &Layer| l.output_dim()) {
                if prev != layer.input_dim() {
                    return Err(SpfqError::format(
                        format!("layers[{i}].rows"),
                        format!(
                            "expected {prev} rows to match the previous layer, found {}",
                            layer.input_dim()
                        ),
                    ));
                }
            }
            layers.push(layer);
        }
        MlpNetwork::from_layers(layers)
    }

    pub fn from_network(net: &MlpNetwork) -> Self {
        let layers = net
            .layers()
            .iter()
            .map(|l| {
                let (w, bias) = l.split();
                RawLayer {
                    rows: w.rows(),
                    cols: w.cols(),
                    weights: w.into_data(),
                    bias,
                }
            })
            .collect();
        Self { layers }
    }
}

impl MlpNetwork {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: NetworkFile =
            serde_json::from_str(s).map_err(|e| SpfqError::format("network", e.to_string()))?;
        file.into_network()
    }

    /// Compact JSON; floats are written as shortest round-trip decimals.
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(&NetworkFile::from_network(self))?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = self.to_json_string()?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }
}

/// Reads an m×N data matrix: one sample per line, comma-separated. A first line
/// that does not parse as numbers is taken to be a header.
pub fn parse_data_csv<R: Read>(input: R) -> Result<DenseMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| SpfqError::format(format!("data row {}", r + 1), e.to_string()))?;
        let parsed: std::result::Result<Vec<f64>, (usize, String)> = record
            .iter()
            .enumerate()
            .map(|(c, f)| f.parse::<f64>().map_err(|e| (c, format!("`{f}`: {e}"))))
            .collect();
        match parsed {
            Ok(v) => {
                if let Some(c) = v.iter().position(|x| !x.is_finite()) {
                    return Err(SpfqError::format(
                        format!("data row {}, column {}", r + 1, c + 1),
                        "value is not finite",
                    ));
                }
                rows.push(v);
            }
            Err(_) if r == 0 => continue,
            Err((c, msg)) => {
                return Err(SpfqError::format(
                    format!("data row {}, column {}", r + 1, c + 1),
                    msg,
                ));
            }
        }
    }
    if rows.is_empty() {
        return Err(SpfqError::format("data", "no numeric rows"));
    }
    DenseMatrix::from_rows(&rows).map_err(|e| SpfqError::format("data", e.to_string()))
}

pub fn read_data_csv(path: &Path) -> Result<DenseMatrix> {
    parse_data_csv(std::fs::File::open(path)?)
}
