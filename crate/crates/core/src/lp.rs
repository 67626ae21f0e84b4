//! Minimal dense two-phase simplex for the occupation-measure polytope.
//!
//! Solves `max c x` subject to `A x = b`, `x >= 0`. The problems fed in are
//! tiny (2d variables, d+1 equalities), so a textbook tableau with Bland's
//! rule is plenty.

use crate::error::{Error, Result};

pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

const EPS: f64 = 1e-11;

/// Two-phase primal simplex on equality form.
pub fn solve_max(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let m = a.len();
    let n = c.len();
    // Normalize to b >= 0.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        if b[i] < 0.0 {
            rows.push(a[i].iter().map(|v| -v).collect());
            rhs.push(-b[i]);
        } else {
            rows.push(a[i].clone());
            rhs.push(b[i]);
        }
    }
    // Tableau columns: n structural + m artificial + 1 rhs.
    let width = n + m + 1;
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = vec![0.0; width];
            row[..n].copy_from_slice(&rows[i]);
            row[n + i] = 1.0;
            row[width - 1] = rhs[i];
            row
        })
        .collect();
    let mut basis: Vec<usize> = (0..m).map(|i| n + i).collect();

    // Phase 1: minimize the sum of artificials. Reduced costs of the basic
    // artificial columns are zero; only structural columns may enter.
    let mut obj = vec![0.0; width];
    for i in 0..m {
        for j in 0..n {
            obj[j] -= t[i][j];
        }
        obj[width - 1] -= t[i][width - 1];
    }
    simplex_iterate(&mut t, &mut obj, &mut basis, n)?;
    if obj[width - 1].abs() > 1e-8 {
        return Err(Error::SingularSystem("LP infeasible".into()));
    }
    // Drive remaining artificials out of the basis if possible.
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[i][j].abs() > EPS) {
                pivot(&mut t, &mut obj, &mut basis, i, j);
            }
        }
    }

    // Phase 2: maximize c x (artificial columns frozen).
    let mut obj2 = vec![0.0; width];
    for j in 0..n {
        obj2[j] = -c[j];
    }
    for i in 0..m {
        let bj = basis[i];
        if bj < n {
            let coef = obj2[bj];
            if coef.abs() > 0.0 {
                for j in 0..width {
                    obj2[j] -= coef * t[i][j];
                }
            }
        }
    }
    simplex_iterate(&mut t, &mut obj2, &mut basis, n)?;

    let mut x = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[i][width - 1];
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { value, x })
}

fn simplex_iterate(
    t: &mut [Vec<f64>],
    obj: &mut [f64],
    basis: &mut [usize],
    n_cols: usize,
) -> Result<()> {
    let m = t.len();
    let width = obj.len();
    for _ in 0..10_000 {
        // Bland's rule: smallest-index entering column with negative
        // reduced cost.
        let Some(enter) = (0..n_cols).find(|&j| obj[j] < -EPS) else {
            return Ok(());
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][enter] > EPS {
                let ratio = t[i][width - 1] / t[i][enter];
                match leave {
                    Some((li, lr)) => {
                        if ratio < lr - EPS || (ratio < lr + EPS && basis[i] < basis[li]) {
                            leave = Some((i, ratio));
                        }
                    }
                    None => leave = Some((i, ratio)),
                }
            }
        }
        let Some((row, _)) = leave else {
            return Err(Error::SingularSystem("LP unbounded".into()));
        };
        pivot(t, obj, basis, row, enter);
    }
    Err(Error::NoConvergence(10_000))
}

fn pivot(t: &mut [Vec<f64>], obj: &mut [f64], basis: &mut [usize], row: usize, col: usize) {
    let width = obj.len();
    let p = t[row][col];
    for j in 0..width {
        t[row][j] /= p;
    }
    for i in 0..t.len() {
        if i != row && t[i][col].abs() > 0.0 {
            let f = t[i][col];
            for j in 0..width {
                t[i][j] -= f * t[row][j];
            }
        }
    }
    let f = obj[col];
    if f.abs() > 0.0 {
        for j in 0..width {
            obj[j] -= f * t[row][j];
        }
    }
    basis[row] = col;
}
