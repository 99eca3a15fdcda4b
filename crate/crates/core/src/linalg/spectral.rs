//! Spectral quantities for desk-scale dense matrices.

use super::matrix::{axpy, dot, norm2, DenseMatrix};
use crate::error::{Result, SpfqError};

/// Relative threshold below which the smallest singular value counts as zero.
pub const RANK_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 80;

/// Singular values of `x` in descending order (there are `min(rows, cols)`).
///
/// One-sided Jacobi: plane rotations orthogonalise the shorter side's vectors,
/// whose norms are then the singular values.
pub fn singular_values(x: &DenseMatrix) -> Vec<f64> {
    let mut vecs: Vec<Vec<f64>> = if x.rows() <= x.cols() {
        (0..x.rows()).map(|i| x.row(i).to_vec()).collect()
    } else {
        x.columns()
    };
    let k = vecs.len();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = dot(&vecs[p], &vecs[p]);
                let beta = dot(&vecs[q], &vecs[q]);
                let gamma = dot(&vecs[p], &vecs[q]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (head, tail) = vecs.split_at_mut(q);
                let vp = &mut head[p];
                let vq = &mut tail[0];
                for (a, b) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (ap, bq) = (*a, *b);
                    *a = c * ap - s * bq;
                    *b = s * ap + c * bq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = vecs.iter().map(|v| norm2(v)).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// `(σ₁, σ_min)` of `x`: the largest and the `min(rows, cols)`-th singular value.
pub fn singular_extremes(x: &DenseMatrix) -> (f64, f64) {
    let sv = singular_values(x);
    (sv[0], *sv.last().expect("nonempty matrix"))
}

/// True when `σ_min > RANK_TOL · σ_max`, i.e. full rank `min(rows, cols)`.
pub fn has_full_rank(x: &DenseMatrix) -> bool {
    let (hi, lo) = singular_extremes(x);
    hi > 0.0 && lo > RANK_TOL * hi
}

/// Largest singular value by power iteration on `XᵀX`.
pub fn spectral_norm_power(x: &DenseMatrix, iters: usize, tol: f64) -> f64 {
    let n = x.cols();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for _ in 0..iters {
        let xv = x.matvec(&v).expect("shape");
        let next = dot(&xv, &xv);
        let w = x.matvec_transpose(&xv).expect("shape");
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|wi| wi / nw).collect();
        let done = (next - lambda).abs() <= tol * next;
        lambda = next;
        if done {
            break;
        }
    }
    let xv = x.matvec(&v).expect("shape");
    norm2(&xv).max(lambda.sqrt())
}

/// Eigenvalues of a symmetric matrix in descending order (cyclic Jacobi).
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(SpfqError::Shape("eigenvalues need a square matrix".into()));
    }
    let mut m = a.clone();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].powi(2))
            .sum();
        let scale: f64 = m.data().iter().map(|v| v * v).sum();
        if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// Orthonormal factor `Q` of `a = QR` (columns of `a`, twice-iterated modified
/// Gram–Schmidt). `R` has a positive diagonal, which fixes the column signs.
pub fn orthonormal_columns(a: &DenseMatrix) -> Result<DenseMatrix> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(a.cols());
    for mut v in a.columns() {
        for _ in 0..2 {
            for u in &q {
                let c = dot(u, &v);
                axpy(-c, u, &mut v);
            }
        }
        let nv = norm2(&v);
        if nv <= 1e-12 {
            return Err(SpfqError::RankDeficient(
                "columns are linearly dependent".into(),
            ));
        }
        v.iter_mut().for_each(|x| *x /= nv);
        q.push(v);
    }
    DenseMatrix::from_columns(&q)
}
