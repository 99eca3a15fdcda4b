//! Seeded random streams.
//!
//! Every stream is a ChaCha8 keystream selected by `(seed, stream id)`. Because the
//! stream id is derived from the position of the work item (layer and neuron, or
//! trial index), results never depend on scheduling order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::DenseMatrix;

const TRIAL_DOMAIN: u64 = 0x5eed_7a1a_0000_0001;

#[derive(Debug, Clone)]
pub struct RandomStream {
    inner: ChaCha8Rng,
    label: Option<(usize, usize)>,
}

impl RandomStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner, label: None }
    }

    /// Stream used to quantize one neuron (column) of one layer.
    pub fn for_neuron(seed: u64, layer: usize, neuron: usize) -> Self {
        let mut s = Self::new(seed, ((layer as u64) << 32) | (neuron as u64 & 0xffff_ffff));
        s.label = Some((layer, neuron));
        s
    }

    /// `(layer, neuron)` for streams made by [`RandomStream::for_neuron`].
    pub fn label(&self) -> Option<(usize, usize)> {
        self.label
    }

    /// Stream owned by one Monte Carlo trial. Disjoint from the neuron streams.
    pub fn for_trial(seed: u64, trial: usize) -> Self {
        Self::for_cell(seed, 0, trial)
    }

    /// Stream of trial `trial` within configuration `cell` of a sweep.
    /// `for_cell(seed, 0, t)` is `for_trial(seed, t)`.
    pub fn for_cell(seed: u64, cell: usize, trial: usize) -> Self {
        Self::new(
            seed ^ TRIAL_DOMAIN,
            ((cell as u64) << 32) | (trial as u64 & 0xffff_ffff),
        )
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn gaussian_vec(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.standard_normal()).collect()
    }

    /// Matrix with i.i.d. N(0,1) entries, filled row by row.
    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        let data = self.gaussian_vec(rows * cols);
        DenseMatrix::new(rows, cols, data).expect("gaussian entries are finite")
    }
}
