//! Phase I data alignment.
//!
//! Given true-path data `X`, quantized-path data `X̃` (both m×N) and a neuron `w`,
//! alignment produces real weights `w̃` with `X̃w̃ ≈ Xw`. The sequential recursion
//! keeps the residual `û_t = P_{X̃_t⊥}(û_{t−1} + w_t X_t)`; perfect alignment solves
//! `X̃w̃ = Xw` exactly with the smallest `‖w̃‖_∞`.

mod min_inf;
mod simplex;

pub use min_inf::{default_tol_feas, solve_min_inf, MinInfSolution};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpfqError};
use crate::linalg::{axpy, dot, ColumnMajor, DenseMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignResult {
    pub w_tilde: Vec<f64>,
    /// `û = Xw − X̃w̃`.
    pub residual: Vec<f64>,
    pub order_used: usize,
    /// Columns of `X̃` that were zero and therefore kept `w̃_t = 0`.
    pub skipped_columns: usize,
}

pub(crate) fn check_pair(x: &DenseMatrix, xt: &DenseMatrix, w: &[f64]) -> Result<()> {
    if x.shape() != xt.shape() {
        return Err(SpfqError::Shape(format!(
            "X is {}x{} but X~ is {}x{}",
            x.rows(),
            x.cols(),
            xt.rows(),
            xt.cols()
        )));
    }
    if w.len() != x.cols() {
        return Err(SpfqError::Shape(format!(
            "weight vector has length {} but data has {} columns",
            w.len(),
            x.cols()
        )));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(SpfqError::NonFinite("weights"));
    }
    Ok(())
}

struct Sweep {
    x: ColumnMajor,
    xt: ColumnMajor,
    norms_sq: Vec<f64>,
}

impl Sweep {
    fn new(x: &DenseMatrix, xt: &DenseMatrix) -> Self {
        let xt = xt.to_column_major();
        let norms_sq = (0..xt.cols()).map(|j| dot(xt.col(j), xt.col(j))).collect();
        Self {
            x: x.to_column_major(),
            xt,
            norms_sq,
        }
    }

    fn skipped(&self) -> usize {
        self.norms_sq.iter().filter(|&&n| n == 0.0).count()
    }
}

/// One pass of the sequential alignment recursion over `t = 1..N`.
pub fn align_first_pass(x: &DenseMatrix, xt: &DenseMatrix, w: &[f64]) -> Result<AlignResult> {
    check_pair(x, xt, w)?;
    let sweep = Sweep::new(x, xt);
    let mut u = vec![0.0; x.rows()];
    let mut w_tilde = vec![0.0; w.len()];
    first_pass(&sweep, w, &mut u, &mut w_tilde);
    Ok(AlignResult {
        w_tilde,
        residual: u,
        order_used: 1,
        skipped_columns: sweep.skipped(),
    })
}

fn first_pass(sweep: &Sweep, w: &[f64], u: &mut [f64], w_tilde: &mut [f64]) {
    for t in 0..w.len() {
        let xt_t = sweep.xt.col(t);
        axpy(w[t], sweep.x.col(t), u);
        if sweep.norms_sq[t] == 0.0 {
            continue;
        }
        w_tilde[t] = dot(xt_t, u) / sweep.norms_sq[t];
        axpy(-w_tilde[t], xt_t, u);
    }
}

/// Order-`r` alignment: after the first pass, `r − 1` further sweeps retract and
/// re-fit each `w̃_t` in turn (indices taken mod N).
pub fn align_order_r(
    x: &DenseMatrix,
    xt: &DenseMatrix,
    w: &[f64],
    r: usize,
) -> Result<AlignResult> {
    if r == 0 {
        return Err(SpfqError::InvalidArgument(
            "alignment order must be at least 1".into(),
        ));
    }
    check_pair(x, xt, w)?;
    let sweep = Sweep::new(x, xt);
    let n = w.len();
    let mut u = vec![0.0; x.rows()];
    let mut w_tilde = vec![0.0; n];
    first_pass(&sweep, w, &mut u, &mut w_tilde);
    let mut v = vec![0.0; u.len()];
    for step in n..r * n {
        let t = step % n;
        if sweep.norms_sq[t] == 0.0 {
            continue;
        }
        let (x_t, xt_t) = (sweep.x.col(t), sweep.xt.col(t));
        // v̂ = û − w_t X_t + w̃_t X̃_t
        v.copy_from_slice(&u);
        axpy(-w[t], x_t, &mut v);
        axpy(w_tilde[t], xt_t, &mut v);
        // w̃_t = ⟨X̃_t, v̂ + w_t X_t⟩ / ‖X̃_t‖², û = v̂ + w_t X_t − w̃_t X̃_t
        axpy(w[t], x_t, &mut v);
        w_tilde[t] = dot(xt_t, &v) / sweep.norms_sq[t];
        axpy(-w_tilde[t], xt_t, &mut v);
        std::mem::swap(&mut u, &mut v);
    }
    Ok(AlignResult {
        w_tilde,
        residual: u,
        order_used: r,
        skipped_columns: sweep.skipped(),
    })
}

/// First-pass residual as the explicit sum `Σ_j P_{X̃_N⊥}⋯P_{X̃_j⊥}(w_j X_j)`.
///
/// Quadratic in N; intended as an independent check on [`align_first_pass`].
pub fn align_closed_form(x: &DenseMatrix, xt: &DenseMatrix, w: &[f64]) -> Result<Vec<f64>> {
    check_pair(x, xt, w)?;
    let sweep = Sweep::new(x, xt);
    let n = w.len();
    let mut total = vec![0.0; x.rows()];
    for (j, &wj) in w.iter().enumerate() {
        let mut term: Vec<f64> = sweep.x.col(j).iter().map(|v| wj * v).collect();
        for k in j..n {
            if sweep.norms_sq[k] == 0.0 {
                continue;
            }
            let c = dot(sweep.xt.col(k), &term) / sweep.norms_sq[k];
            axpy(-c, sweep.xt.col(k), &mut term);
        }
        axpy(1.0, &term, &mut total);
    }
    Ok(total)
}
