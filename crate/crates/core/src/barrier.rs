//! Log-barrier Newton method for `max sum n_k ln p_k(x)` with `p(x) = p0 + J x`
//! affine and the feasible set cut out by linear inequalities or by positivity
//! of a two-qubit density matrix in Pauli coordinates.

use nalgebra::{DMatrix, DVector, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::pauli_basis;

const DECREMENT_TOL: f64 = 1e-10;
const STALL_DECREMENT: f64 = 1e-3;
/// Smallest per-event gap pursued; beyond it the iterates sit at the
/// resolution of double precision near the boundary.
const RELATIVE_GAP_FLOOR: f64 = 1e-12;
const MAX_NEWTON: usize = 100;
const GROWTH: f64 = 8.0;
const STEP_FRACTION: f64 = 0.99;
const ARMIJO: f64 = 0.25;

/// Constraint set handled by the barrier.
#[derive(Clone, Debug)]
pub(crate) enum Barrier {
    /// `A x <= b`.
    Linear { a: DMatrix<f64>, b: DVector<f64> },
    /// `(I + sum x_i E_i) / 4` positive definite, `E_i` the Pauli products.
    PauliLogDet,
}

/// One centering problem along the barrier path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    /// Barrier weight of the likelihood term.
    pub t: f64,
    pub iterations: usize,
    /// `sum n ln p` at the stage's end point.
    pub log_kernel: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct Solution {
    pub x: DVector<f64>,
    pub stages: Vec<Stage>,
    /// Square root of the last Newton decrement.
    pub decrement: f64,
    /// Bound on the distance of `sum n ln p` from its maximum.
    pub gap: f64,
    /// The path ended early at the floor of double precision.
    pub stalled: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct Problem {
    pub p0: DVector<f64>,
    pub jac: DMatrix<f64>,
    pub barrier: Barrier,
}

fn cholesky4(m: &Matrix4<f64>) -> Option<Matrix4<f64>> {
    m.cholesky().map(|c| c.l())
}

fn rho_of(x: &DVector<f64>, e: &[Matrix4<f64>; 9]) -> Matrix4<f64> {
    let mut r = Matrix4::identity();
    for i in 0..9 {
        r += e[i] * x[i];
    }
    r * 0.25
}

impl Problem {
    fn probabilities(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.p0 + &self.jac * x
    }

    /// Barrier parameter: the duality gap of a centered point is `weight / t`.
    fn weight(&self) -> f64 {
        match &self.barrier {
            Barrier::Linear { b, .. } => b.len() as f64,
            Barrier::PauliLogDet => 4.0,
        }
    }

    /// Solves the problem for counts `n` from a strictly feasible `x0`.
    pub fn maximize(&self, n: &[u64; 16], x0: DVector<f64>, gap_target: f64) -> Result<Solution> {
        let total: u64 = n.iter().sum();
        let dim = x0.len();
        let e = pauli_basis();
        let nf = total.max(1) as f64;
        let f = DVector::from_iterator(16, n.iter().map(|&c| c as f64 / nf));
        let mut x = x0;
        self.check_start(&x, &f, &e)?;
        let mut t = 1.0;
        let mut stages = Vec::new();
        let mut decrement;
        let mut centered: Option<Solution> = None;
        loop {
            let mut iterations = 0;
            let mut previous = f64::INFINITY;
            loop {
                let p = self.probabilities(&x);
                let (mut g, mut h) = (DVector::zeros(dim), DMatrix::zeros(dim, dim));
                for k in 0..16 {
                    if f[k] > 0.0 {
                        let row = self.jac.row(k).transpose();
                        let w = f[k] / p[k];
                        g.axpy(t * w, &row, 1.0);
                        h.ger(-t * w / p[k], &row, &row, 1.0);
                    }
                }
                let chol_rho = match &self.barrier {
                    Barrier::Linear { a, b } => {
                        let s = b - a * &x;
                        for i in 0..s.len() {
                            let row = a.row(i).transpose();
                            g.axpy(-1.0 / s[i], &row, 1.0);
                            h.ger(-1.0 / (s[i] * s[i]), &row, &row, 1.0);
                        }
                        None
                    }
                    Barrier::PauliLogDet => {
                        let r = rho_of(&x, &e);
                        let l = cholesky4(&r).ok_or_else(|| Error::SolverFailure("iterate left the state space".into()))?;
                        let ri = r.try_inverse().ok_or_else(|| Error::SolverFailure("singular iterate".into()))?;
                        let re: Vec<Matrix4<f64>> = e.iter().map(|ei| ri * ei).collect();
                        for i in 0..9 {
                            g[i] += 0.25 * re[i].trace();
                            for j in 0..=i {
                                let v = -(re[i].transpose().component_mul(&re[j])).sum() / 16.0;
                                h[(i, j)] += v;
                                if i != j {
                                    h[(j, i)] += v;
                                }
                            }
                        }
                        Some(l)
                    }
                };
                let d = newton_direction(&g, &h)?;
                let dec = g.dot(&d);
                decrement = dec.max(0.0).sqrt();
                // Newton converges quadratically; a small decrement that fails
                // to shrink marks the round-off floor
                if dec < DECREMENT_TOL || (previous < STALL_DECREMENT && dec > 0.1 * previous) {
                    break;
                }
                previous = dec;
                iterations += 1;
                if iterations > MAX_NEWTON {
                    // a stage that cannot be centered is past the precision
                    // floor; the previous centered point is the answer
                    return match centered {
                        Some(sol) => Ok(Solution { stalled: true, ..sol }),
                        None => Err(Error::ConvergenceFailure(format!(
                            "centering at t = {t:e} did not converge in {MAX_NEWTON} Newton steps"
                        ))),
                    };
                }
                let jd = &self.jac * &d;
                let mut step: f64 = 1.0;
                for k in 0..16 {
                    if f[k] > 0.0 && jd[k] < 0.0 {
                        step = step.min(STEP_FRACTION * p[k] / -jd[k]);
                    }
                }
                let lin = match &self.barrier {
                    Barrier::Linear { a, b } => {
                        let s = b - a * &x;
                        let ad = a * &d;
                        for i in 0..s.len() {
                            if ad[i] > 0.0 {
                                step = step.min(STEP_FRACTION * s[i] / ad[i]);
                            }
                        }
                        Some((s, ad))
                    }
                    Barrier::PauliLogDet => None,
                };
                let mut accepted = false;
                while step > 1e-14 {
                    let mut delta = 0.0;
                    for k in 0..16 {
                        if f[k] > 0.0 {
                            delta += t * f[k] * (step * jd[k] / p[k]).ln_1p();
                        }
                    }
                    let barrier_delta = match (&lin, &chol_rho) {
                        (Some((s, ad)), _) => Some((0..s.len()).map(|i| (-step * ad[i] / s[i]).ln_1p()).sum::<f64>()),
                        (None, Some(l)) => {
                            let xn = &x + &d * step;
                            let rn = rho_of(&xn, &e);
                            log_det_ratio(l, &rn)
                        }
                        _ => None,
                    };
                    if let Some(bd) = barrier_delta {
                        if delta.is_finite() && delta + bd >= ARMIJO * step * dec {
                            accepted = true;
                            break;
                        }
                    }
                    step *= 0.5;
                }
                let next = &x + &d * step;
                // at the resolution floor the iterate stops moving
                if !accepted || next == x {
                    break;
                }
                x = next;
            }
            let p = self.probabilities(&x);
            let log_kernel = (0..16).filter(|&k| n[k] > 0).map(|k| n[k] as f64 * p[k].ln()).sum();
            stages.push(Stage { t, iterations, log_kernel });
            let gap = self.weight() * total as f64 / t;
            let sol = Solution { x: x.clone(), stages: stages.clone(), decrement, gap, stalled: false };
            if gap < gap_target.max(RELATIVE_GAP_FLOOR * total as f64) || total == 0 {
                return Ok(sol);
            }
            centered = Some(sol);
            t *= GROWTH;
        }
    }

    fn check_start(&self, x: &DVector<f64>, f: &DVector<f64>, e: &[Matrix4<f64>; 9]) -> Result<()> {
        let p = self.probabilities(x);
        if (0..16).any(|k| f[k] > 0.0 && p[k] <= 0.0) {
            return Err(Error::SolverFailure("start point gives zero probability to observed events".into()));
        }
        let ok = match &self.barrier {
            Barrier::Linear { a, b } => (b - a * x).iter().all(|&s| s > 0.0),
            Barrier::PauliLogDet => cholesky4(&rho_of(x, e)).is_some(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::SolverFailure("start point is not strictly feasible".into()))
        }
    }
}

/// `ln det(rho_new) - ln det(L L^T)`, or `None` if `rho_new` is not positive definite.
fn log_det_ratio(l: &Matrix4<f64>, rho_new: &Matrix4<f64>) -> Option<f64> {
    let li = l.try_inverse()?;
    let m = li * rho_new * li.transpose();
    let m = (m + m.transpose()) * 0.5;
    let ev = m.symmetric_eigenvalues();
    if ev.iter().all(|&v| v > 0.0) {
        Some(ev.iter().map(|v| v.ln()).sum())
    } else {
        None
    }
}

/// Solves `H d = -g` for negative definite `H` after Jacobi scaling.
fn newton_direction(g: &DVector<f64>, h: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = g.len();
    let scale = DVector::from_iterator(n, (0..n).map(|i| 1.0 / h[(i, i)].abs().max(f64::MIN_POSITIVE).sqrt()));
    let mut m = -h.clone();
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] *= scale[i] * scale[j];
        }
    }
    let rhs = g.component_mul(&scale);
    let y = match m.clone().cholesky() {
        Some(c) => c.solve(&rhs),
        None => m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::SolverFailure("singular Newton system".into()))?,
    };
    Ok(y.component_mul(&scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Two-cell toy: maximize 3 ln x + ln(1 - x) over x <= b.
    fn toy(b: f64) -> Problem {
        let mut p0 = DVector::zeros(16);
        let mut jac = DMatrix::zeros(16, 1);
        jac[(0, 0)] = 1.0;
        p0[1] = 1.0;
        jac[(1, 0)] = -1.0;
        Problem {
            p0,
            jac,
            barrier: Barrier::Linear {
                a: DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
                b: DVector::from_vec(vec![b, 0.0]),
            },
        }
    }

    fn counts() -> [u64; 16] {
        let mut n = [0; 16];
        n[0] = 3;
        n[1] = 1;
        n
    }

    #[test]
    fn interior_optimum() {
        let s = toy(1.0).maximize(&counts(), DVector::from_vec(vec![0.5]), 1e-10).unwrap();
        assert_abs_diff_eq!(s.x[0], 0.75, epsilon = 1e-9);
    }

    #[test]
    fn active_bound() {
        let s = toy(0.6).maximize(&counts(), DVector::from_vec(vec![0.3]), 1e-10).unwrap();
        assert_abs_diff_eq!(s.x[0], 0.6, epsilon = 1e-9);
    }

    #[test]
    fn path_is_monotone() {
        let s = toy(0.6).maximize(&counts(), DVector::from_vec(vec![0.01]), 1e-10).unwrap();
        for w in s.stages.windows(2) {
            assert!(w[1].log_kernel >= w[0].log_kernel - 1e-12);
        }
    }

    #[test]
    fn infeasible_start_is_rejected() {
        assert!(toy(0.6).maximize(&counts(), DVector::from_vec(vec![0.7]), 1e-10).is_err());
    }
}
