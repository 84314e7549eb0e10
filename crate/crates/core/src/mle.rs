//! Maximum-likelihood estimation over the QM, LHV and no-signaling sets,
//! self-calibration of γ, and Bhattacharyya angles between outcome tables.

use nalgebra::{DMatrix, DVector, Matrix4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barrier::{Barrier, Problem, Stage};
use crate::bell::bell_violation;
use crate::error::{Error, Result};
use crate::lhv::{probabilities_from_weights, HiddenWeights, NULL_INDEX};
use crate::params::ExperimentParams;
use crate::probability::{log_likelihood, EventCounts, OutcomeTable, ProbabilityVector, ReducedProbabilities, Setting};
use crate::quantum::{probabilities_from_state, target_state, DensityMatrix, QuantumMeasurement, TargetCriterion};

/// Target bound on the distance of the natural-log likelihood from its maximum.
pub const LIKELIHOOD_GAP: f64 = 1e-6;

/// Default number of γ grid points in a scan.
pub const DEFAULT_GRID: usize = 41;

/// Width to which the γ maximum is refined.
pub const GAMMA_TOLERANCE: f64 = 1e-6;

/// The set over which a likelihood is maximized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Quantum,
    LocalHiddenVariable,
    NoSignaling,
}

/// The optimizer's own representation of the maximizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Witness {
    DensityMatrix(DensityMatrix),
    HiddenWeights(HiddenWeights),
    Reduced(ReducedProbabilities),
}

/// Convergence record of a barrier solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Likelihood kernel at the end of each barrier stage; non-decreasing.
    pub stages: Vec<Stage>,
    pub newton_iterations: usize,
    /// Norm of the last Newton step in the local metric.
    pub final_decrement: f64,
    /// Bound on the remaining natural-log likelihood gain.
    pub duality_gap: f64,
    /// `||(G - tr(G rho)) rho|| / N` with `G` the likelihood gradient operator.
    pub kkt_residual: Option<f64>,
    /// The barrier path stopped at the precision floor before reaching the target gap.
    pub stalled: bool,
}

/// A constrained maximum-likelihood estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleResult {
    pub model: Model,
    pub p: ProbabilityVector,
    pub witness: Witness,
    /// Natural log, combinatorial constant included.
    pub log_likelihood: f64,
    pub diagnostics: Diagnostics,
}

impl MleResult {
    pub fn log10_likelihood(&self) -> f64 {
        self.log_likelihood / std::f64::consts::LN_10
    }
}

fn diagnostics(sol: &crate::barrier::Solution, kkt_residual: Option<f64>) -> Diagnostics {
    Diagnostics {
        newton_iterations: sol.stages.iter().map(|s| s.iterations).sum(),
        stages: sol.stages.clone(),
        final_decrement: sol.decrement,
        duality_gap: sol.gap,
        kkt_residual,
        stalled: sol.stalled,
    }
}

/// Gradient operator `G = sum n_k / p_k M_k` of the log-likelihood on states.
fn likelihood_operator(d: &EventCounts, m: &QuantumMeasurement, p: &[f64; 16]) -> Matrix4<f64> {
    let mut g = Matrix4::zeros();
    for k in 0..16 {
        let n = d.counts()[k];
        if n > 0 {
            g += m.operators[k] * (n as f64 / p[k]);
        }
    }
    g
}

/// Maximum of the likelihood over density matrices.
pub fn qm_mle(d: &EventCounts, params: &ExperimentParams) -> Result<MleResult> {
    params.validate()?;
    let m = QuantumMeasurement::new(params);
    let (p0, j) = m.pauli_map();
    let problem = Problem {
        p0: DVector::from_row_slice(&p0),
        jac: DMatrix::from_fn(16, 9, |k, i| j[k][i]),
        barrier: Barrier::PauliLogDet,
    };
    let sol = problem.maximize(d.counts(), DVector::zeros(9), LIKELIHOOD_GAP)?;
    let x: [f64; 9] = std::array::from_fn(|i| sol.x[i]);
    let rho = DensityMatrix::from_pauli(&x)?;
    let p = probabilities_from_state(&rho, params);
    let g = likelihood_operator(d, &m, p.values());
    let lambda = (g * rho.matrix()).trace();
    let kkt = ((g - Matrix4::identity() * lambda) * rho.matrix()).norm() / (d.total().max(1) as f64);
    Ok(MleResult {
        model: Model::Quantum,
        log_likelihood: log_likelihood(d, &p)?,
        p,
        witness: Witness::DensityMatrix(rho),
        diagnostics: diagnostics(&sol, Some(kkt)),
    })
}

/// Feasible interior point shared by the LHV and no-signaling solves.
fn interior_weights(params: &ExperimentParams) -> [f64; 16] {
    let c = 0.5 * f64::min(1.0, (4.0 * params.eta_a * params.eta_b).min(2.0 * params.eta_a.min(params.eta_b)));
    let mut w = [params.gamma * c / 16.0; 16];
    w[NULL_INDEX] = 1.0 - params.gamma + params.gamma * (1.0 - c + c / 16.0);
    w
}

/// Rows for the apparatus bounds on a linear map `p = p0 + J x` whose base
/// point `p0` is the all-null assignment.
fn apparatus_rows(jac: &DMatrix<f64>, params: &ExperimentParams) -> (Vec<DVector<f64>>, Vec<f64>) {
    let (g, ea, eb) = (params.gamma, params.eta_a, params.eta_b);
    let row = |k: usize| jac.row(k).transpose();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for s in Setting::ALL {
        let k = 4 * s.index();
        rows.push(row(k));
        rhs.push(g * ea * eb);
        rows.push(row(k) + row(k + 1) + row(k + 2));
        rhs.push(g);
    }
    for i in 0..2 {
        let k = 4 * Setting::from_parts(i, 0).index();
        rows.push(row(k) + row(k + 1));
        rhs.push(g * ea);
    }
    for j in 0..2 {
        let k = 4 * Setting::from_parts(0, j).index();
        rows.push(row(k) + row(k + 2));
        rhs.push(g * eb);
    }
    (rows, rhs)
}

fn stack(rows: Vec<DVector<f64>>, rhs: Vec<f64>) -> Barrier {
    let dim = rows[0].len();
    let a = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
    Barrier::Linear { a, b: DVector::from_vec(rhs) }
}

/// Maximum of the likelihood over hidden-variable weights obeying the apparatus bounds.
pub fn lhv_mle(d: &EventCounts, params: &ExperimentParams) -> Result<MleResult> {
    params.validate()?;
    let unit = |j: usize| {
        let mut w = [0.0; 16];
        w[j] = 1.0;
        *probabilities_from_weights(&HiddenWeights::new(w).expect("unit weights")).values()
    };
    let base = unit(NULL_INDEX);
    let cols: Vec<[f64; 16]> = (0..NULL_INDEX).map(unit).collect();
    let jac = DMatrix::from_fn(16, NULL_INDEX, |k, j| cols[j][k] - base[k]);
    let (mut rows, mut rhs) = apparatus_rows(&jac, params);
    for j in 0..NULL_INDEX {
        let mut r = DVector::zeros(NULL_INDEX);
        r[j] = -1.0;
        rows.push(r);
        rhs.push(0.0);
    }
    rows.push(DVector::from_element(NULL_INDEX, 1.0));
    rhs.push(1.0);
    let problem = Problem {
        p0: DVector::from_row_slice(&base),
        jac,
        barrier: stack(rows, rhs),
    };
    let start = interior_weights(params);
    let sol = problem.maximize(d.counts(), DVector::from_row_slice(&start[..NULL_INDEX]), LIKELIHOOD_GAP)?;
    let mut w = [0.0; 16];
    for j in 0..NULL_INDEX {
        w[j] = sol.x[j];
    }
    w[NULL_INDEX] = 1.0 - sol.x.sum();
    let weights = HiddenWeights::new(w)?;
    let p = probabilities_from_weights(&weights);
    Ok(MleResult {
        model: Model::LocalHiddenVariable,
        log_likelihood: log_likelihood(d, &p)?,
        p,
        witness: Witness::HiddenWeights(weights),
        diagnostics: diagnostics(&sol, None),
    })
}

/// Click-form coordinates `(p_a, p_a', p_b, p_b', four p++)` of a vector.
fn click_coordinates(p: &ProbabilityVector) -> [f64; 8] {
    let v = p.values();
    [
        v[0] + v[1],
        v[8] + v[9],
        v[0] + v[2],
        v[4] + v[6],
        v[0],
        v[4],
        v[8],
        v[12],
    ]
}

/// Maximum of the likelihood over all no-signaling vectors obeying the apparatus bounds.
pub fn nosignaling_mle(d: &EventCounts, params: &ExperimentParams) -> Result<MleResult> {
    params.validate()?;
    let mut p0 = DVector::zeros(16);
    let mut jac = DMatrix::zeros(16, 8);
    for s in Setting::ALL {
        let k = 4 * s.index();
        let (ia, ib, ip) = (s.alice(), 2 + s.bob(), 4 + s.index());
        jac[(k, ip)] = 1.0;
        jac[(k + 1, ia)] = 1.0;
        jac[(k + 1, ip)] = -1.0;
        jac[(k + 2, ib)] = 1.0;
        jac[(k + 2, ip)] = -1.0;
        p0[k + 3] = 1.0;
        jac[(k + 3, ia)] = -1.0;
        jac[(k + 3, ib)] = -1.0;
        jac[(k + 3, ip)] = 1.0;
    }
    let (mut rows, mut rhs) = apparatus_rows(&jac, params);
    for s in Setting::ALL {
        for o in 0..3 {
            rows.push(-jac.row(4 * s.index() + o).transpose());
            rhs.push(0.0);
        }
    }
    let problem = Problem {
        p0,
        jac,
        barrier: stack(rows, rhs),
    };
    let start = probabilities_from_weights(&HiddenWeights::new(interior_weights(params))?);
    let sol = problem.maximize(d.counts(), DVector::from_row_slice(&click_coordinates(&start)), LIKELIHOOD_GAP)?;
    let x = &sol.x;
    let p = ProbabilityVector::from_clicks([x[0], x[1]], [x[2], x[3]], [x[4], x[5], x[6], x[7]])?;
    Ok(MleResult {
        model: Model::NoSignaling,
        log_likelihood: log_likelihood(d, &p)?,
        witness: Witness::Reduced(p.reduced()),
        p,
        diagnostics: diagnostics(&sol, None),
    })
}

/// Log-likelihood of `rho = A^T A / tr(A^T A)` and its gradient with respect to `A`.
pub fn qm_factor_gradient(d: &EventCounts, params: &ExperimentParams, a: &Matrix4<f64>) -> Result<(f64, Matrix4<f64>)> {
    let m = QuantumMeasurement::new(params);
    let tau = (a.transpose() * a).trace();
    let rho = DensityMatrix::new(a.transpose() * a / tau)?;
    let p = m.probabilities(&rho);
    let pv = ProbabilityVector::new(p)?;
    let g = likelihood_operator(d, &m, &p);
    let lambda = (g * rho.matrix()).trace();
    let grad = a * (g - Matrix4::identity() * lambda) * (2.0 / tau);
    Ok((log_likelihood(d, &pv)?, grad))
}

/// Log-likelihood of hidden-variable weights and its gradient with respect to them.
pub fn lhv_weight_gradient(d: &EventCounts, w: &HiddenWeights) -> Result<(f64, [f64; 16])> {
    let p = probabilities_from_weights(w);
    let mut grad = [0.0; 16];
    for j in 0..16 {
        let mut e = [0.0; 16];
        e[j] = 1.0;
        let col = probabilities_from_weights(&HiddenWeights::new(e)?);
        grad[j] = (0..16)
            .filter(|&k| d.counts()[k] > 0)
            .map(|k| d.counts()[k] as f64 * col.values()[k] / p.values()[k])
            .sum();
    }
    Ok((log_likelihood(d, &p)?, grad))
}

/// The rescaled vector `q`: non-null entries `p / 4γ`, null entries
/// `(p00 - (1 - γ)) / 4γ` evaluated as `(γ - click) / 4γ`.
pub fn rescaled(p: &OutcomeTable, gamma: f64) -> Result<[f64; 16]> {
    let v = p.values();
    let mut q = [0.0; 16];
    for s in Setting::ALL {
        let k = 4 * s.index();
        let click = v[k] + v[k + 1] + v[k + 2];
        for o in 0..3 {
            q[k + o] = v[k + o] / (4.0 * gamma);
        }
        q[k + 3] = (gamma - click) / (4.0 * gamma);
    }
    for (index, x) in q.iter_mut().enumerate() {
        if *x < -1e-12 {
            return Err(Error::NegativeQ { index, value: *x });
        }
        *x = x.max(0.0);
    }
    Ok(q)
}

/// Bhattacharyya angle `arccos sum sqrt(q q')` in radians.
///
/// Evaluated as `2 asin(|sqrt q - sqrt q'| / 2)`, which agrees for unit-sum
/// `q` and keeps full precision at small angles.
pub fn bhattacharyya_angle(p: &OutcomeTable, p_prime: &OutcomeTable, gamma: f64) -> Result<f64> {
    let (q, r) = (rescaled(p, gamma)?, rescaled(p_prime, gamma)?);
    let dist2: f64 = q.iter().zip(&r).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum();
    Ok(2.0 * (0.5 * dist2.sqrt()).min(1.0).asin())
}

/// Pairwise angles between relative frequencies, target probabilities and the QM-MLE.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub gamma: f64,
    pub frequencies_target: f64,
    pub frequencies_qm: f64,
    pub target_qm: f64,
}

impl Triangle {
    pub fn sides(&self) -> [f64; 3] {
        [self.frequencies_target, self.frequencies_qm, self.target_qm]
    }

    /// Each side is at most the sum of the other two.
    pub fn satisfies_triangle_inequality(&self, tol: f64) -> bool {
        let [a, b, c] = self.sides();
        a <= b + c + tol && b <= a + c + tol && c <= a + b + tol
    }
}

/// The triangle of frequencies, target and QM-MLE at `params.gamma`.
pub fn triangle_report(d: &EventCounts, params: &ExperimentParams, target: &TargetCriterion) -> Result<Triangle> {
    let freq = d.relative_frequencies()?;
    let t = probabilities_from_state(&target_state(params, target)?, params);
    let q = qm_mle(d, params)?.p;
    let g = params.gamma;
    Ok(Triangle {
        gamma: g,
        frequencies_target: bhattacharyya_angle(&freq, t.table(), g)?,
        frequencies_qm: bhattacharyya_angle(&freq, q.table(), g)?,
        target_qm: bhattacharyya_angle(t.table(), q.table(), g)?,
    })
}

/// One row of a γ scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaScanPoint {
    pub gamma: f64,
    pub log10_l_qm: f64,
    pub log10_l_lhv: Option<f64>,
    /// The QM-MLE violates the Eberhard-type inequality.
    pub eberhard_violated: bool,
    /// Angle between the target probabilities and the QM-MLE.
    pub phi_b: Option<f64>,
}

/// Settings of a γ scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    pub grid_points: usize,
    pub with_lhv: bool,
    pub target: Option<TargetCriterion>,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { grid_points: DEFAULT_GRID, with_lhv: true, target: None }
    }
}

/// Result of the self-calibration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub gamma_hat: f64,
    pub log10_l_qm: f64,
    pub scan: Vec<GammaScanPoint>,
}

fn scan_point(d: &EventCounts, params: &ExperimentParams, gamma: f64, opts: &ScanOptions) -> Result<GammaScanPoint> {
    let p = params.with_gamma(gamma)?;
    let qm = qm_mle(d, &p)?;
    let log10_l_lhv = if opts.with_lhv { Some(lhv_mle(d, &p)?.log10_likelihood()) } else { None };
    let phi_b = match &opts.target {
        Some(c) => {
            let t = probabilities_from_state(&target_state(&p, c)?, &p);
            Some(bhattacharyya_angle(t.table(), qm.p.table(), gamma)?)
        }
        None => None,
    };
    Ok(GammaScanPoint {
        gamma,
        log10_l_qm: qm.log10_likelihood(),
        log10_l_lhv,
        eberhard_violated: bell_violation(&qm.p) > 0.0,
        phi_b,
    })
}

fn check_range(range: [f64; 2], grid_points: usize) -> Result<()> {
    if !(range[0] > 0.0 && range[0] < range[1] && range[1] <= 1.0) {
        return Err(Error::InvalidArgument(format!("γ range {range:?} must satisfy 0 < lo < hi <= 1")));
    }
    if grid_points < 3 {
        return Err(Error::InvalidArgument("a γ scan needs at least 3 grid points".into()));
    }
    Ok(())
}

/// QM and LHV maxima on an evenly spaced γ grid.
pub fn gamma_scan(d: &EventCounts, params: &ExperimentParams, range: [f64; 2], opts: &ScanOptions) -> Result<Vec<GammaScanPoint>> {
    check_range(range, opts.grid_points)?;
    let step = (range[1] - range[0]) / (opts.grid_points - 1) as f64;
    (0..opts.grid_points)
        .into_par_iter()
        .map(|i| scan_point(d, params, range[0] + step * i as f64, opts))
        .collect()
}

/// γ maximizing the QM likelihood: grid scan, then golden-section refinement.
pub fn estimate_gamma(d: &EventCounts, params: &ExperimentParams, range: [f64; 2], opts: &ScanOptions) -> Result<GammaEstimate> {
    let scan = gamma_scan(d, params, range, opts)?;
    let best = (0..scan.len())
        .max_by(|&i, &j| scan[i].log10_l_qm.total_cmp(&scan[j].log10_l_qm))
        .expect("nonempty grid");
    if best == 0 || best == scan.len() - 1 {
        return Err(Error::RangeMaximumAtBoundary { gamma: scan[best].gamma });
    }
    let value = |g: f64| -> Result<f64> { Ok(qm_mle(d, &params.with_gamma(g)?)?.log_likelihood) };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (scan[best - 1].gamma, scan[best + 1].gamma);
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let (mut fc, mut fe) = (value(c)?, value(e)?);
    while b - a > GAMMA_TOLERANCE {
        if fc >= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = value(c)?;
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = value(e)?;
        }
    }
    let gamma_hat = 0.5 * (a + b);
    let log10_l_qm = value(gamma_hat)? / std::f64::consts::LN_10;
    Ok(GammaEstimate { gamma_hat, log10_l_qm, scan })
}
