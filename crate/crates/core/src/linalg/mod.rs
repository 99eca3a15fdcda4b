//! Dense kernels: matrices, rank-one projections and their products, spectral
//! quantities, Hadamard matrices.

mod hadamard;
mod matrix;
mod projection;
mod solve;
mod spectral;

pub use hadamard::hadamard;
pub(crate) use matrix::ColumnMajor;
pub use matrix::{axpy, dot, norm2, norm_inf, sub_vec, DenseMatrix};
pub use projection::{
    project_complement, project_onto, projection_product_norm, ProjectionProduct,
    DEFAULT_POWER_ITERS, DEFAULT_POWER_TOL,
};
pub use solve::solve_dense;
pub use spectral::{
    has_full_rank, orthonormal_columns, singular_extremes, singular_values, spectral_norm_power,
    symmetric_eigenvalues, RANK_TOL,
};
