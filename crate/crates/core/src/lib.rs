//! Stochastic path-following quantization of multi-layer perceptrons.
//!
//! Each neuron `w` of a layer is mapped to `q` on a mid-tread grid so that the
//! quantized network's activations `X̃q` follow the original `Xw`. The crate
//! provides the fused single-pass algorithm, the two-phase pipeline (data
//! alignment, then quantization) with perfect or order-`r` alignment, a greedy
//! deterministic baseline, and evaluators for the associated error bounds.

pub mod align;
pub mod alphabet;
pub mod analysis;
pub mod error;
pub mod linalg;
pub mod network;
pub mod report;
pub mod rng;
pub mod spfq;

pub use align::{
    align_closed_form, align_first_pass, align_order_r, solve_min_inf, AlignResult, MinInfSolution,
};
pub use alphabet::{step_from_weights, Alphabet, QuantDraw};
pub use error::{Result, SpfqError};
pub use linalg::{DenseMatrix, ProjectionProduct};
pub use network::{forward, quantize_network, Activation, Layer, MlpNetwork};
pub use report::{LayerSummary, NetworkSummary, RunReport};
pub use rng::RandomStream;
pub use spfq::{
    quantize_layer, quantize_neuron_fused, quantize_neuron_gpfq, quantize_neuron_phase2, AlignMode,
    LayerReport, NeuronQuantResult, QuantConfig, Resolution,
};
