use super::matrix::DenseMatrix;
use crate::error::{Result, SpfqError};

/// Normalised Sylvester–Hadamard matrix of a power-of-two order: entries
/// `±1/√N`, orthogonal.
pub fn hadamard(order: usize) -> Result<DenseMatrix> {
    if order == 0 || !order.is_power_of_two() {
        return Err(SpfqError::UnsupportedOrder(order));
    }
    let scale = 1.0 / (order as f64).sqrt();
    // Sylvester doubling: H_{ij} = (-1)^{popcount(i & j)}.
    Ok(DenseMatrix::from_fn(order, order, |i, j| {
        if (i & j).count_ones() % 2 == 0 {
            scale
        } else {
            -scale
        }
    }))
}
