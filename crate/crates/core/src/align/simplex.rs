//! Dense two-phase simplex for `min cᵀx  s.t.  Ax = b, x ≥ 0` with `b ≥ 0`.
//!
//! Entering columns are priced by the most negative reduced cost. After a run of
//! degenerate pivots the solver switches to Bland's rule (smallest eligible
//! index, ties in the ratio test broken by smallest basic index) until the
//! objective moves again, which rules out cycling. Rows may name an initial basic column (an identity
//! column of `A`); every other row receives an artificial variable in phase 1.

use crate::error::{Result, SpfqError};

pub(crate) const PIVOT_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-11;
/// Consecutive degenerate pivots tolerated before Bland's rule takes over.
const DEGENERATE_RUN: usize = 50;

pub(crate) struct StandardLp {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows × cols` constraint matrix.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub initial_basis: Vec<Option<usize>>,
}

pub(crate) struct LpSolution {
    pub x: Vec<f64>,
    /// Basic structural column per row, or `None` where a redundant row kept its
    /// artificial variable.
    pub basis: Vec<Option<usize>>,
}

struct Tableau {
    rows: usize,
    /// Structural columns; artificials follow, then the right-hand side.
    cols: usize,
    width: usize,
    t: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
    cap: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[i * self.width + self.width - 1]
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.t[r * w + c];
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        prow.iter_mut().for_each(|v| *v /= p);
        prow[c] = 1.0;
        let nz: Vec<usize> = (0..w).filter(|&k| prow[k] != 0.0).collect();
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for &k in &nz {
                    row[k] -= f * prow[k];
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for &k in &nz {
                self.obj[k] -= f * prow[k];
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    fn optimize(&mut self, allowed: usize) -> Result<()> {
        let mut degenerate = 0usize;
        loop {
            let entering = if degenerate >= DEGENERATE_RUN {
                (0..allowed).find(|&j| self.obj[j] < -COST_TOL)
            } else {
                (0..allowed)
                    .filter(|&j| self.obj[j] < -COST_TOL)
                    .min_by(|&a, &b| self.obj[a].total_cmp(&self.obj[b]))
            };
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= 1e-14 * br.max(1.0);
                        if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            let Some((r, ratio)) = leave else {
                return Err(SpfqError::InvalidArgument(
                    "linear program is unbounded".into(),
                ));
            };
            if self.pivots >= self.cap {
                return Err(SpfqError::IterationLimit(self.cap));
            }
            if ratio > 0.0 {
                degenerate = 0;
            } else {
                degenerate += 1;
            }
            self.pivot(r, c);
        }
    }
}

pub(crate) fn solve(lp: &StandardLp, cap: usize) -> Result<LpSolution> {
    let (rows, cols) = (lp.rows, lp.cols);
    let art_rows: Vec<usize> = (0..rows)
        .filter(|&i| lp.initial_basis[i].is_none())
        .collect();
    let n_art = art_rows.len();
    let width = cols + n_art + 1;
    let mut t = vec![0.0; rows * width];
    let mut basis = vec![0; rows];
    for i in 0..rows {
        t[i * width..i * width + cols].copy_from_slice(&lp.a[i * cols..(i + 1) * cols]);
        t[i * width + width - 1] = lp.b[i];
        if let Some(j) = lp.initial_basis[i] {
            basis[i] = j;
        }
    }
    for (k, &i) in art_rows.iter().enumerate() {
        t[i * width + cols + k] = 1.0;
        basis[i] = cols + k;
    }
    // Phase 1: minimise the sum of artificials.
    let mut obj = vec![0.0; width];
    for &i in &art_rows {
        for j in 0..cols {
            obj[j] -= t[i * width + j];
        }
        obj[width - 1] -= t[i * width + width - 1];
    }
    let mut tab = Tableau {
        rows,
        cols,
        width,
        t,
        obj,
        basis,
        pivots: 0,
        cap,
    };
    tab.optimize(cols + n_art)?;
    let infeas = -tab.obj[width - 1];
    let b_scale: f64 = lp.b.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
    if infeas > 1e-9 * b_scale {
        return Err(SpfqError::Infeasible);
    }
    // Drive artificials out of the basis where a structural pivot exists.
    for i in 0..rows {
        if tab.basis[i] >= cols {
            if let Some(j) = (0..cols).find(|&j| tab.at(i, j).abs() > PIVOT_TOL) {
                tab.pivot(i, j);
            }
        }
    }
    // Phase 2 reduced costs.
    let mut obj = vec![0.0; width];
    obj[..cols].copy_from_slice(&lp.c);
    for i in 0..rows {
        let cb = if tab.basis[i] < cols {
            lp.c[tab.basis[i]]
        } else {
            0.0
        };
        if cb != 0.0 {
            for (k, o) in obj.iter_mut().enumerate() {
                *o -= cb * tab.t[i * width + k];
            }
        }
    }
    for i in 0..rows {
        obj[tab.basis[i]] = 0.0;
    }
    tab.obj = obj;
    tab.optimize(cols)?;

    let mut x = vec![0.0; cols];
    let mut out_basis = vec![None; rows];
    for i in 0..rows {
        if tab.basis[i] < tab.cols {
            x[tab.basis[i]] = tab.rhs(i).max(0.0);
            out_basis[i] = Some(tab.basis[i]);
        }
    }
    Ok(LpSolution {
        x,
        basis: out_basis,
    })
}
