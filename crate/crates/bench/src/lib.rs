//! Seeded fixtures shared by the benchmarks.

use spfq_core::linalg::DenseMatrix;
use spfq_core::rng::RandomStream;

/// Gaussian data `X`, a perturbed copy `X̃ = X + noise·G`, and a Gaussian neuron.
pub fn neuron_instance(
    m: usize,
    n: usize,
    noise: f64,
    seed: u64,
) -> (DenseMatrix, DenseMatrix, Vec<f64>) {
    let mut rng = RandomStream::for_trial(seed, 0);
    let x = rng.gaussian_matrix(m, n);
    let xt = x
        .add(&rng.gaussian_matrix(m, n).scale(noise))
        .expect("same shape");
    let w = rng.gaussian_vec(n);
    (x, xt, w)
}

/// Gaussian weight matrix with `rows` inputs and `cols` neurons.
pub fn weights(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    RandomStream::for_trial(seed, 1).gaussian_matrix(rows, cols)
}
