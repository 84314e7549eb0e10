//! Real two-qubit states, the Born-rule probability map, QM membership,
//! the QM prior sampler and target states.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bell::BellFunctional;
use crate::error::{Error, Result};
use crate::params::ExperimentParams;
use crate::probability::{ProbabilityVector, Setting};

/// Minimum-eigenvalue tolerance for accepting a state as physical.
pub const PSD_TOL: f64 = 1e-9;

/// Default admixture weight of the three extra pure states.
pub const DEFAULT_EPSILON: f64 = 0.001;

fn kron(a: &Matrix2<f64>, b: &Matrix2<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    m
}

fn sigma_x() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, 1.0, 0.0)
}

fn sigma_z() -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 0.0, -1.0)
}

/// The nine real two-qubit Pauli products, in the order
/// X1, Z1, X2, Z2, XX, XZ, ZX, ZZ, YY (first letter acts on Alice's qubit).
pub fn pauli_basis() -> [Matrix4<f64>; 9] {
    let (i, x, z) = (Matrix2::identity(), sigma_x(), sigma_z());
    // sigma_y (x) sigma_y is real
    let mut yy = Matrix4::zeros();
    yy[(0, 3)] = -1.0;
    yy[(3, 0)] = -1.0;
    yy[(1, 2)] = 1.0;
    yy[(2, 1)] = 1.0;
    [
        kron(&x, &i),
        kron(&z, &i),
        kron(&i, &x),
        kron(&i, &z),
        kron(&x, &x),
        kron(&x, &z),
        kron(&z, &x),
        kron(&z, &z),
        yy,
    ]
}

fn min_eigenvalue(m: &Matrix4<f64>) -> f64 {
    SymmetricEigen::new(*m).eigenvalues.min()
}

/// Real symmetric, unit-trace, positive semidefinite 4x4 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 4]; 4]", into = "[[f64; 4]; 4]")]
pub struct DensityMatrix {
    m: Matrix4<f64>,
}

impl TryFrom<[[f64; 4]; 4]> for DensityMatrix {
    type Error = Error;
    fn try_from(rows: [[f64; 4]; 4]) -> Result<Self> {
        DensityMatrix::new(Matrix4::from_fn(|i, j| rows[i][j]))
    }
}

impl From<DensityMatrix> for [[f64; 4]; 4] {
    fn from(r: DensityMatrix) -> Self {
        std::array::from_fn(|i| std::array::from_fn(|j| r.m[(i, j)]))
    }
}

impl DensityMatrix {
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        let asym = (m - m.transpose()).abs().max();
        if asym > 1e-14 {
            return Err(Error::InvalidDensityMatrix(format!("asymmetry {asym:e}")));
        }
        if (m.trace() - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidDensityMatrix(format!("trace {}", m.trace())));
        }
        let sym = (m + m.transpose()) * 0.5;
        let lmin = min_eigenvalue(&sym);
        if lmin < -1e-12 {
            return Err(Error::InvalidDensityMatrix(format!("minimum eigenvalue {lmin:e}")));
        }
        Ok(Self { m: sym })
    }

    /// Projector onto the normalized direction of `v`.
    pub fn pure(v: &Vector4<f64>) -> Result<Self> {
        let n2 = v.norm_squared();
        if n2 == 0.0 || !n2.is_finite() {
            return Err(Error::InvalidDensityMatrix("zero state vector".into()));
        }
        let u = v / n2.sqrt();
        let mut m = u * u.transpose();
        // remove the last rounding from the trace
        let tr = m.trace();
        m /= tr;
        Self::new(m)
    }

    pub fn maximally_mixed() -> Self {
        Self { m: Matrix4::identity() * 0.25 }
    }

    /// `(I + sum x_i E_i) / 4` in the basis of [`pauli_basis`].
    pub fn from_pauli(x: &[f64; 9]) -> Result<Self> {
        let e = pauli_basis();
        let mut m = Matrix4::identity();
        for (xi, ei) in x.iter().zip(e.iter()) {
            m += ei * *xi;
        }
        Self::new(m * 0.25)
    }

    pub fn pauli_coordinates(&self) -> [f64; 9] {
        let e = pauli_basis();
        std::array::from_fn(|i| self.m.component_mul(&e[i]).sum())
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.m
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.m.component_mul(&self.m).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.m)
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.m).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        [ev[0], ev[1], ev[2], ev[3]]
    }
}

/// Expectation values of the eight operators that determine the probabilities.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Expectations {
    x1: f64,
    z1: f64,
    x2: f64,
    z2: f64,
    xx: f64,
    xz: f64,
    zx: f64,
    zz: f64,
}

impl Expectations {
    fn of(rho: &DensityMatrix) -> Self {
        let c = rho.pauli_coordinates();
        Self { x1: c[0], z1: c[1], x2: c[2], z2: c[3], xx: c[4], xz: c[5], zx: c[6], zz: c[7] }
    }

    fn coordinates(&self, yy: f64) -> [f64; 9] {
        [self.x1, self.z1, self.x2, self.z2, self.xx, self.xz, self.zx, self.zz, yy]
    }
}

/// Detection probabilities of `rho` for the experiment `params`.
pub fn probabilities_from_state(rho: &DensityMatrix, params: &ExperimentParams) -> ProbabilityVector {
    let e = Expectations::of(rho);
    let v = params.setting_vectors();
    let g = params.gamma;
    let local_a = |x: [f64; 2]| x[0] * e.x1 + x[1] * e.z1;
    let local_b = |y: [f64; 2]| y[0] * e.x2 + y[1] * e.z2;
    let alice = [0, 1].map(|i| g * params.eta_a * 0.5 * (1.0 + local_a(v.alice(i))));
    let bob = [0, 1].map(|j| g * params.eta_b * 0.5 * (1.0 + local_b(v.bob(j))));
    let coincidences = Setting::ALL.map(|s| {
        let (x, y) = (v.alice(s.alice()), v.bob(s.bob()));
        let corr = x[0] * y[0] * e.xx + x[0] * y[1] * e.xz + x[1] * y[0] * e.zx + x[1] * y[1] * e.zz;
        g * params.eta_a * params.eta_b * 0.25 * (1.0 + local_a(x) + local_b(y) + corr)
    });
    ProbabilityVector::from_clicks(alice, bob, coincidences)
        .expect("Born-rule probabilities of a valid state are valid")
}

/// The sixteen effect operators and offsets, `p_k = tr(M_k rho) + c_k`.
#[derive(Clone, Debug)]
pub struct QuantumMeasurement {
    pub operators: [Matrix4<f64>; 16],
    pub offsets: [f64; 16],
}

impl QuantumMeasurement {
    pub fn new(params: &ExperimentParams) -> Self {
        let v = params.setting_vectors();
        let (g, ea, eb) = (params.gamma, params.eta_a, params.eta_b);
        let id = Matrix2::identity();
        let proj = |u: [f64; 2]| (id + sigma_x() * u[0] + sigma_z() * u[1]) * 0.5;
        let mut operators = [Matrix4::zeros(); 16];
        let mut offsets = [0.0; 16];
        for s in Setting::ALL {
            let pa = proj(v.alice(s.alice()));
            let pb = proj(v.bob(s.bob()));
            let k = 4 * s.index();
            operators[k] = kron(&pa, &pb) * (g * ea * eb);
            operators[k + 1] = kron(&pa, &(id - pb * eb)) * (g * ea);
            operators[k + 2] = kron(&(id - pa * ea), &pb) * (g * eb);
            operators[k + 3] = kron(&(id - pa * ea), &(id - pb * eb)) * g;
            offsets[k + 3] = 1.0 - g;
        }
        Self { operators, offsets }
    }

    pub fn probabilities(&self, rho: &DensityMatrix) -> [f64; 16] {
        std::array::from_fn(|k| self.operators[k].component_mul(rho.matrix()).sum() + self.offsets[k])
    }

    /// Operator `W` and constant `w0` with `f(p(rho)) = tr(W rho) + w0`.
    pub fn functional_operator(&self, f: &BellFunctional) -> (Matrix4<f64>, f64) {
        let mut w = Matrix4::zeros();
        let mut w0 = 0.0;
        for k in 0..16 {
            w += self.operators[k] * f.coefficients[k];
            w0 += self.offsets[k] * f.coefficients[k];
        }
        (w, w0)
    }

    /// Affine map from the nine Pauli coordinates: `p = p0 + J x`.
    pub fn pauli_map(&self) -> ([f64; 16], [[f64; 9]; 16]) {
        let e = pauli_basis();
        let mut p0 = [0.0; 16];
        let mut j = [[0.0; 9]; 16];
        for k in 0..16 {
            p0[k] = 0.25 * self.operators[k].trace() + self.offsets[k];
            for i in 0..9 {
                j[k][i] = 0.25 * self.operators[k].component_mul(&e[i]).sum();
            }
        }
        (p0, j)
    }
}

/// Outcome of the QM membership test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QmMembership {
    pub member: bool,
    /// Largest achievable minimum eigenvalue over the free coordinate.
    pub slack: f64,
    /// The maximizing value of the sigma_y (x) sigma_y expectation.
    pub yy: f64,
}

/// Recovers the eight fixed expectation values from `p`, or fails when the
/// map from states to probabilities is not injective on them.
fn invert_expectations(p: &ProbabilityVector, params: &ExperimentParams) -> Result<Expectations> {
    let (ha, hb) = (params.theta_a_deg.to_radians() / 2.0, params.theta_b_deg.to_radians() / 2.0);
    let (sa, ca, sb, cb) = (ha.sin(), ha.cos(), hb.sin(), hb.cos());
    let ga = params.gamma * params.eta_a;
    let gb = params.gamma * params.eta_b;
    let tiny = 1e-12;
    if sa.abs() < tiny || ca.abs() < tiny || sb.abs() < tiny || cb.abs() < tiny || ga < tiny || gb < tiny {
        return Err(Error::DegenerateGeometry(format!(
            "theta_A = {}, theta_B = {}, gamma eta = ({ga}, {gb})",
            params.theta_a_deg, params.theta_b_deg
        )));
    }
    // local Bloch components along each setting: A_i = 2 p_i / (gamma eta) - 1
    let la = [0, 1].map(|i| 2.0 * p.alice_single(i) / ga - 1.0);
    let lb = [0, 1].map(|j| 2.0 * p.bob_single(j) / gb - 1.0);
    let x1 = (la[0] - la[1]) / (2.0 * sa);
    let z1 = (la[0] + la[1]) / (2.0 * ca);
    let x2 = (lb[0] - lb[1]) / (2.0 * sb);
    let z2 = (lb[0] + lb[1]) / (2.0 * cb);
    let gab = params.gamma * params.eta_a * params.eta_b;
    let c = Setting::ALL.map(|s| {
        let k = p.get(s, crate::probability::Outcome::PlusPlus) / gab;
        4.0 * k - 1.0 - la[s.alice()] - lb[s.bob()]
    });
    Ok(Expectations {
        x1,
        z1,
        x2,
        z2,
        xx: (c[0] - c[1] - c[2] + c[3]) / (4.0 * sa * sb),
        xz: (c[0] + c[1] - c[2] - c[3]) / (4.0 * sa * cb),
        zx: (c[0] - c[1] + c[2] - c[3]) / (4.0 * ca * sb),
        zz: (c[0] + c[1] + c[2] + c[3]) / (4.0 * ca * cb),
    })
}

/// `rho_0` (all coordinates but YY) and the direction `YY / 4`.
fn pencil(e: &Expectations) -> (Matrix4<f64>, Matrix4<f64>) {
    let basis = pauli_basis();
    let x = e.coordinates(0.0);
    let mut m = Matrix4::identity();
    for i in 0..8 {
        m += basis[i] * x[i];
    }
    (m * 0.25, basis[8] * 0.25)
}

/// Whether a principal submatrix that does not involve the free coordinate
/// already has an eigenvalue below `-PSD_TOL`.
fn fixed_minors_fail(m: &Matrix4<f64>) -> bool {
    if (0..4).any(|i| m[(i, i)] < -PSD_TOL) {
        return true;
    }
    // YY only touches entries (0,3) and (1,2)
    [(0, 1), (0, 2), (1, 3), (2, 3)].into_iter().any(|(i, j)| {
        let (a, b, c) = (m[(i, i)], m[(j, j)], m[(i, j)]);
        0.5 * (a + b) - (0.25 * (a - b) * (a - b) + c * c).sqrt() < -PSD_TOL
    })
}

/// Golden-section maximization of the concave minimum eigenvalue along
/// `rho_0 + t M`, `t` in [-1, 1]. Stops early once `stop(best)` holds.
fn maximize_min_eigenvalue(rho0: &Matrix4<f64>, dir: &Matrix4<f64>, stop: impl Fn(f64) -> bool) -> (f64, f64) {
    let f = |t: f64| min_eigenvalue(&(rho0 + dir * t));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut best = if f1 >= f2 { (f1, x1) } else { (f2, x2) };
    while hi - lo > 1e-12 {
        if stop(best.0) {
            return best;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
        for (fx, x) in [(f1, x1), (f2, x2)] {
            if fx > best.0 {
                best = (fx, x);
            }
        }
    }
    for t in [-1.0, 1.0] {
        let ft = f(t);
        if ft > best.0 {
            best = (ft, t);
        }
    }
    best
}

/// Decides whether some real density matrix reproduces `p`.
pub fn qm_membership(p: &ProbabilityVector, params: &ExperimentParams) -> Result<QmMembership> {
    let e = invert_expectations(p, params)?;
    let (rho0, dir) = pencil(&e);
    let (slack, yy) = maximize_min_eigenvalue(&rho0, &dir, |_| false);
    Ok(QmMembership { member: slack >= -PSD_TOL, slack, yy })
}

/// Membership decision only, with early exits; agrees with [`qm_membership`].
pub fn is_qm_member(p: &ProbabilityVector, params: &ExperimentParams) -> Result<bool> {
    let e = invert_expectations(p, params)?;
    let (rho0, dir) = pencil(&e);
    if fixed_minors_fail(&rho0) {
        return Ok(false);
    }
    let (slack, _) = maximize_min_eigenvalue(&rho0, &dir, |best| best >= -PSD_TOL);
    Ok(slack >= -PSD_TOL)
}

/// Haar-random real pure state from four independent standard normals.
pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    loop {
        let v = Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        if let Ok(rho) = DensityMatrix::pure(&v) {
            return rho;
        }
    }
}

/// `(1 - 3 eps) rho_1 + eps (rho_2 + rho_3 + rho_4)`.
pub fn mix_states(primary: &DensityMatrix, others: [&DensityMatrix; 3], epsilon: f64) -> Result<DensityMatrix> {
    if !(0.0..1.0 / 3.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} not in [0, 1/3)")));
    }
    if epsilon == 0.0 {
        return Ok(*primary);
    }
    let m = primary.matrix() * (1.0 - 3.0 * epsilon)
        + (others[0].matrix() + others[1].matrix() + others[2].matrix()) * epsilon;
    let tr = m.trace();
    DensityMatrix::new(m / tr)
}

/// One draw of the QM prior sampler (before classification).
pub fn qm_prior_draw(rng: &mut ChaCha20Rng, params: &ExperimentParams, epsilon: f64) -> Result<ProbabilityVector> {
    let r1 = random_pure_state(rng);
    let r2 = random_pure_state(rng);
    let r3 = random_pure_state(rng);
    let r4 = random_pure_state(rng);
    let rho = mix_states(&r1, [&r2, &r3, &r4], epsilon)?;
    Ok(probabilities_from_state(&rho, params))
}

/// Explicit pure state `(R(phi_A) (x) R(phi_B)) (c|00> + s|11>)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignState {
    pub c00: f64,
    pub c11: f64,
    pub alice_rotation_deg: f64,
    pub bob_rotation_deg: f64,
}

impl DesignState {
    pub fn state(&self) -> Result<DensityMatrix> {
        let rot = |deg: f64| {
            let (s, c) = deg.to_radians().sin_cos();
            Matrix2::new(c, -s, s, c)
        };
        let u = kron(&rot(self.alice_rotation_deg), &rot(self.bob_rotation_deg));
        DensityMatrix::pure(&(u * Vector4::new(self.c00, 0.0, 0.0, self.c11)))
    }
}

/// How to choose the target state of an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TargetCriterion {
    /// Largest Eberhard-type violation at the apparatus' own efficiencies.
    ThresholdEfficiency,
    /// Largest value of the given Bell functional.
    MaxViolation(BellFunctional),
    /// A fixed, explicitly specified state.
    Design(DesignState),
}

/// Number of random starts for the target-state ascent.
pub const TARGET_STARTS: usize = 20;

/// Pure state maximizing the criterion, found by multistart ascent on the
/// unit sphere of real 4-vectors.
pub fn target_state(params: &ExperimentParams, criterion: &TargetCriterion) -> Result<DensityMatrix> {
    let f = match criterion {
        TargetCriterion::Design(d) => return d.state(),
        TargetCriterion::ThresholdEfficiency => BellFunctional::eberhard(),
        TargetCriterion::MaxViolation(f) => *f,
    };
    let (w, _) = QuantumMeasurement::new(params).functional_operator(&f);
    let (v, _) = sphere_ascent(&w)?;
    DensityMatrix::pure(&v)
}

/// Maximizes `v^T W v` over unit vectors from a fixed set of starts.
fn sphere_ascent(w: &Matrix4<f64>) -> Result<(Vector4<f64>, f64)> {
    use rand::SeedableRng;
    let mut rng = ChaCha20Rng::seed_from_u64(0x7a26e7);
    let scale = w.abs().max().max(f64::MIN_POSITIVE);
    // the shift makes the step a contraction towards the top eigenvector
    let step = 1.0 / (4.0 * scale);
    let mut results: Vec<(Vector4<f64>, f64)> = Vec::with_capacity(TARGET_STARTS);
    for _ in 0..TARGET_STARTS {
        let mut v = Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
        let mut val = v.dot(&(w * v));
        for _ in 0..200_000 {
            let g = w * v - v * val;
            let next = (v + g * step).normalize();
            let next_val = next.dot(&(w * next));
            let moved = (next - v).norm();
            v = next;
            val = next_val;
            if moved < 1e-15 {
                break;
            }
        }
        results.push((v, val));
    }
    results.sort_by(|a, b| b.1.total_cmp(&a.1));
    if (results[0].1 - results[1].1).abs() > 1e-8 * scale {
        return Err(Error::ConvergenceFailure(format!(
            "target-state starts disagree: {} vs {}",
            results[0].1, results[1].1
        )));
    }
    Ok(results[0])
}
