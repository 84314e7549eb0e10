//! Dense phase-one simplex for small feasibility problems.
//!
//! Decides whether `{x >= 0 : A_eq x = b_eq, A_le x <= b_le}` is nonempty.
//! Bland's rule keeps the method finite on degenerate vertices.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;
const MAX_PIVOTS: usize = 10_000;

/// Verdict of a feasibility solve.
#[derive(Clone, Debug, PartialEq)]
pub enum Feasibility {
    /// A point satisfying all constraints within tolerance.
    Feasible(Vec<f64>),
    /// The minimal total infeasibility, strictly above tolerance.
    Infeasible(f64),
}

/// Phase-one simplex. Requires `b_le >= 0`; `tol` bounds the accepted
/// total infeasibility of the equality rows.
pub fn feasible(
    a_eq: &[Vec<f64>],
    b_eq: &[f64],
    a_le: &[Vec<f64>],
    b_le: &[f64],
    tol: f64,
) -> Result<Feasibility> {
    let n = a_eq.first().or(a_le.first()).map_or(0, |r| r.len());
    let (m_eq, m_le) = (a_eq.len(), a_le.len());
    if b_le.iter().any(|&b| b < 0.0) {
        return Err(Error::SolverFailure("negative right-hand side on an inequality row".into()));
    }
    let m = m_eq + m_le;
    // columns: x (n), slacks (m_le), artificials (m_eq), rhs
    let width = n + m_le + m_eq + 1;
    let rhs = width - 1;
    let mut t = vec![vec![0.0; width]; m + 1];
    let mut basis = vec![0usize; m];
    for i in 0..m_eq {
        let sign = if b_eq[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * a_eq[i][j];
        }
        t[i][n + m_le + i] = 1.0;
        t[i][rhs] = sign * b_eq[i];
        basis[i] = n + m_le + i;
    }
    for i in 0..m_le {
        let r = m_eq + i;
        t[r][..n].copy_from_slice(&a_le[i][..n]);
        t[r][n + i] = 1.0;
        t[r][rhs] = b_le[i];
        basis[r] = n + i;
    }
    // objective row: minimize the sum of artificials, priced out
    for i in 0..m_eq {
        for j in 0..width {
            if j < n + m_le || j == rhs {
                t[m][j] -= t[i][j];
            }
        }
    }
    let mut pivots = 0;
    // Bland: the lowest-index column with negative reduced cost
    while let Some(col) = (0..rhs).find(|&j| t[m][j] < -PIVOT_TOL) {
        let mut row = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][col] > PIVOT_TOL {
                let ratio = t[i][rhs] / t[i][col];
                let better = match row {
                    None => true,
                    Some(r) => ratio < best - PIVOT_TOL || (ratio <= best + PIVOT_TOL && basis[i] < basis[r]),
                };
                if better {
                    best = ratio;
                    row = Some(i);
                }
            }
        }
        let Some(row) = row else {
            return Err(Error::SolverFailure("phase-one objective unbounded".into()));
        };
        pivot(&mut t, row, col);
        basis[row] = col;
        pivots += 1;
        if pivots > MAX_PIVOTS {
            return Err(Error::SolverFailure(format!("no certificate after {MAX_PIVOTS} pivots")));
        }
    }
    let infeasibility = -t[m][rhs];
    if infeasibility > tol {
        return Ok(Feasibility::Infeasible(infeasibility));
    }
    let mut x = vec![0.0; n];
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = t[i][rhs].max(0.0);
        }
    }
    Ok(Feasibility::Feasible(x))
}

fn pivot(t: &mut [Vec<f64>], row: usize, col: usize) {
    let p = t[row][col];
    for v in t[row].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i != row {
            let f = r[col];
            if f != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                r[col] = 0.0;
            }
        }
    }
}
