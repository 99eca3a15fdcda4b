//! Rank-one orthogonal projections and their ordered products.

use super::matrix::{axpy, dot, norm2, DenseMatrix};
use crate::error::{Result, SpfqError};

pub const DEFAULT_POWER_ITERS: usize = 2000;
pub const DEFAULT_POWER_TOL: f64 = 1e-10;

fn check_pair(z: &[f64], x: &[f64]) -> Result<f64> {
    if z.len() != x.len() {
        return Err(SpfqError::Shape(format!(
            "projection direction has length {}, vector has length {}",
            z.len(),
            x.len()
        )));
    }
    let zz = dot(z, z);
    if zz == 0.0 {
        return Err(SpfqError::ZeroVector("projection direction"));
    }
    Ok(zz)
}

/// `P_z x = ⟨z,x⟩ z / ‖z‖²`
pub fn project_onto(z: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let zz = check_pair(z, x)?;
    let c = dot(z, x) / zz;
    Ok(z.iter().map(|&zi| c * zi).collect())
}

/// `P_{z⊥} x = x − P_z x`
pub fn project_complement(z: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let zz = check_pair(z, x)?;
    let mut out = x.to_vec();
    axpy(-dot(z, x) / zz, z, &mut out);
    Ok(out)
}

/// The composition `P_{z_N⊥} ⋯ P_{z_1⊥}`; `z_1` acts first.
#[derive(Debug, Clone)]
pub struct ProjectionProduct {
    dim: usize,
    columns: Vec<Vec<f64>>,
    inv_norm_sq: Vec<f64>,
}

impl ProjectionProduct {
    pub fn new(columns: Vec<Vec<f64>>) -> Result<Self> {
        let dim = columns.first().map(Vec::len).ok_or_else(|| {
            SpfqError::InvalidArgument("projection product needs a column".into())
        })?;
        let mut inv_norm_sq = Vec::with_capacity(columns.len());
        for c in &columns {
            if c.len() != dim {
                return Err(SpfqError::Shape(
                    "projection columns differ in length".into(),
                ));
            }
            let nn = dot(c, c);
            if nn == 0.0 {
                return Err(SpfqError::ZeroVector("projection product column"));
            }
            inv_norm_sq.push(1.0 / nn);
        }
        Ok(Self {
            dim,
            columns,
            inv_norm_sq,
        })
    }

    /// Product over the columns of `x`, treating all-zero columns as identity
    /// factors (the same skip rule the alignment recursion uses).
    pub fn from_matrix_columns(x: &DenseMatrix) -> Result<Self> {
        let columns: Vec<Vec<f64>> = x
            .columns()
            .into_iter()
            .filter(|c| c.iter().any(|&v| v != 0.0))
            .collect();
        if columns.is_empty() {
            return Ok(Self {
                dim: x.rows(),
                columns,
                inv_norm_sq: Vec::new(),
            });
        }
        Self::new(columns)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn push(&mut self, z: Vec<f64>) -> Result<()> {
        if z.len() != self.dim {
            return Err(SpfqError::Shape(
                "projection columns differ in length".into(),
            ));
        }
        let nn = dot(&z, &z);
        if nn == 0.0 {
            return Err(SpfqError::ZeroVector("projection product column"));
        }
        self.columns.push(z);
        self.inv_norm_sq.push(1.0 / nn);
        Ok(())
    }

    fn project_in_place(&self, k: usize, x: &mut [f64]) {
        let c = dot(&self.columns[k], x) * self.inv_norm_sq[k];
        axpy(-c, &self.columns[k], x);
    }

    /// `P x`
    pub fn apply_in_place(&self, x: &mut [f64]) {
        for k in 0..self.columns.len() {
            self.project_in_place(k, x);
        }
    }

    /// `Pᵀ x`
    pub fn apply_transpose_in_place(&self, x: &mut [f64]) {
        for k in (0..self.columns.len()).rev() {
            self.project_in_place(k, x);
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.apply_in_place(&mut out);
        out
    }

    /// Explicit `dim × dim` matrix of the product.
    pub fn to_matrix(&self) -> DenseMatrix {
        let mut columns = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            let mut e = vec![0.0; self.dim];
            e[j] = 1.0;
            self.apply_in_place(&mut e);
            columns.push(e);
        }
        DenseMatrix::from_columns(&columns).expect("square product matrix")
    }

    /// Operator 2-norm by power iteration on `PᵀP`.
    ///
    /// Starts from the normalised all-ones vector and stops once successive
    /// Rayleigh quotients agree to `tol` relative, or after `iters` rounds.
    pub fn operator_norm(&self, iters: usize, tol: f64) -> f64 {
        if self.columns.is_empty() {
            return 1.0;
        }
        let n = self.dim;
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        let mut pv = self.apply(&v);
        // A start vector annihilated by P carries no information; fall back to
        // coordinate directions.
        if norm2(&pv) <= 1e-14 {
            let restart = (0..n).find_map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                let pe = self.apply(&e);
                (norm2(&pe) > 1e-14).then_some((e, pe))
            });
            match restart {
                Some((e, pe)) => {
                    v = e;
                    pv = pe;
                }
                None => return 0.0,
            }
        }
        let mut rayleigh = dot(&pv, &pv);
        for _ in 0..iters {
            let mut w = pv;
            self.apply_transpose_in_place(&mut w);
            let nw = norm2(&w);
            if nw == 0.0 {
                return 0.0;
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / nw;
            }
            pv = self.apply(&v);
            let next = dot(&pv, &pv);
            let converged = (next - rayleigh).abs() <= tol * next.max(f64::MIN_POSITIVE);
            rayleigh = next;
            if converged {
                break;
            }
        }
        rayleigh.sqrt().min(1.0 + 1e-8)
    }
}

/// `‖P_{z_N⊥}⋯P_{z_1⊥}‖₂` with explicit iteration controls.
pub fn projection_product_norm(pp: &ProjectionProduct, iters: usize, tol: f64) -> f64 {
    pp.operator_norm(iters, tol)
}
