use serde::{Deserialize, Serialize};

use super::simplex::{self, StandardLp};
use crate::error::{Result, SpfqError};
use crate::linalg::{norm2, singular_extremes, solve_dense, DenseMatrix, RANK_TOL};

/// A minimum-ℓ∞ solution of `X̃z = b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinInfSolution {
    pub w_tilde: Vec<f64>,
    /// `max_j |w̃_j|`.
    pub objective: f64,
    /// `‖X̃w̃ − b‖₂`.
    pub feasibility_residual: f64,
}

pub fn default_tol_feas(b: &[f64]) -> f64 {
    1e-8 * norm2(b) + 1e-12
}

/// Solves `min ‖z‖_∞  s.t.  X̃z = b` for full-row-rank `X̃` (m ≤ N).
///
/// The LP is posed over `z = a − t·1` with `a ≥ 0`, `t ≥ 0` and `a_j ≤ 2t`,
/// minimising `t`. The optimal vertex is then recomputed from its basis with a
/// fresh LU solve to remove pivoting round-off. `tol_feas` defaults to
/// [`default_tol_feas`].
pub fn solve_min_inf(xt: &DenseMatrix, b: &[f64], tol_feas: Option<f64>) -> Result<MinInfSolution> {
    let (m, n) = xt.shape();
    if b.len() != m {
        return Err(SpfqError::Shape(format!(
            "right-hand side has length {} but X~ has {m} rows",
            b.len()
        )));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(SpfqError::NonFinite("right-hand side"));
    }
    if m > n {
        return Err(SpfqError::RankDeficient(format!(
            "{m} rows exceed {n} columns"
        )));
    }
    let (s_max, s_min) = singular_extremes(xt);
    if !(s_max > 0.0 && s_min > RANK_TOL * s_max) {
        return Err(SpfqError::RankDeficient(format!(
            "sigma_min/sigma_max = {:e}",
            if s_max > 0.0 { s_min / s_max } else { 0.0 }
        )));
    }
    let tol = tol_feas.unwrap_or_else(|| default_tol_feas(b));

    let scale = 1.0 / xt.max_abs();
    let rows = m + n;
    let cols = 2 * n + 1;
    let t_col = n;
    let mut a = vec![0.0; rows * cols];
    let mut rhs = vec![0.0; rows];
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let row = &mut a[i * cols..(i + 1) * cols];
        let mut sum = 0.0;
        for (j, &v) in xt.row(i).iter().enumerate() {
            row[j] = sign * scale * v;
            sum += v;
        }
        row[t_col] = -sign * scale * sum;
        rhs[i] = sign * scale * b[i];
    }
    for j in 0..n {
        let row = &mut a[(m + j) * cols..(m + j + 1) * cols];
        row[j] = 1.0;
        row[t_col] = -2.0;
        row[t_col + 1 + j] = 1.0;
    }
    let mut c = vec![0.0; cols];
    c[t_col] = 1.0;
    let initial_basis = (0..rows)
        .map(|i| (i >= m).then(|| t_col + 1 + (i - m)))
        .collect();
    let lp = StandardLp {
        rows,
        cols,
        a,
        b: rhs,
        c,
        initial_basis,
    };
    let sol = simplex::solve(&lp, 50 * (n + m))?;

    let to_z = |x: &[f64]| -> Vec<f64> { (0..n).map(|j| x[j] - x[t_col]).collect() };
    let residual = |z: &[f64]| -> f64 {
        let xz = xt.matvec(z).expect("shape checked");
        norm2(&xz.iter().zip(b).map(|(p, q)| p - q).collect::<Vec<_>>())
    };
    let mut z = to_z(&sol.x);
    let mut res = residual(&z);
    if let Some(polished) = polish(&lp, &sol.basis) {
        let zp = to_z(&polished);
        let rp = residual(&zp);
        let obj = |v: &[f64]| v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if rp.is_finite() && rp <= res && obj(&zp) <= obj(&z) + 1e-9 * (1.0 + obj(&z)) {
            z = zp;
            res = rp;
        }
    }
    if res > tol {
        return Err(SpfqError::Infeasible);
    }
    let objective = z.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    Ok(MinInfSolution {
        w_tilde: z,
        objective,
        feasibility_residual: res,
    })
}

/// Re-solves `B x_B = b` for the final basis `B`.
fn polish(lp: &StandardLp, basis: &[Option<usize>]) -> Option<Vec<f64>> {
    let cols: Vec<usize> = basis.iter().copied().collect::<Option<Vec<_>>>()?;
    let k = lp.rows;
    let bmat = DenseMatrix::from_fn(k, k, |i, r| lp.a[i * lp.cols + cols[r]]);
    let xb = solve_dense(&bmat, &lp.b).ok()?;
    if xb.iter().any(|v| !v.is_finite() || *v < -1e-9) {
        return None;
    }
    let mut x = vec![0.0; lp.cols];
    for (r, &j) in cols.iter().enumerate() {
        x[j] = xb[r].max(0.0);
    }
    Some(x)
}
