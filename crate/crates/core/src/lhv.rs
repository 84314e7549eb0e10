//! Local hidden-variable model: joint outcome weights, their marginals,
//! the apparatus bounds, LP membership and the LHV prior sampler.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::bell::bell_violation;
use crate::error::{Error, Result};
use crate::lp::{feasible, Feasibility};
use crate::params::ExperimentParams;
use crate::probability::{Outcome, ProbabilityVector, Setting};

/// Slack on the apparatus bounds.
pub const BOUND_TOL: f64 = 1e-12;

/// Residual tolerance for LP feasibility, relative to the largest marginal.
pub const LP_TOL: f64 = 1e-10;

/// Weights `w(alpha alpha' beta beta')` on the 15-simplex.
///
/// Index `j` encodes the four outcomes as bits of `15 - j`, most
/// significant first (a, a', b, b'), so `j = 0` is `++++` and `j = 15` is `0000`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 16]", into = "[f64; 16]")]
pub struct HiddenWeights {
    w: [f64; 16],
}

impl TryFrom<[f64; 16]> for HiddenWeights {
    type Error = Error;
    fn try_from(w: [f64; 16]) -> Result<Self> {
        HiddenWeights::new(w)
    }
}

impl From<HiddenWeights> for [f64; 16] {
    fn from(w: HiddenWeights) -> Self {
        w.w
    }
}

/// Index of the all-null outcome `0000`.
pub const NULL_INDEX: usize = 15;

/// Outcome bits `[alpha, alpha', beta, beta']` of index `j`, 1 meaning "+".
pub fn outcome_bits(j: usize) -> [usize; 4] {
    let c = 15 - j;
    [c >> 3 & 1, c >> 2 & 1, c >> 1 & 1, c & 1]
}

impl HiddenWeights {
    pub fn new(w: [f64; 16]) -> Result<Self> {
        if w.iter().any(|&x| x.is_nan() || x < 0.0) {
            return Err(Error::InvalidWeights("negative weight".into()));
        }
        let s: f64 = w.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(format!("weights sum to {s}")));
        }
        Ok(Self { w })
    }

    pub fn values(&self) -> &[f64; 16] {
        &self.w
    }

    /// Uniform draw from the 15-simplex.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut y: [f64; 16] = std::array::from_fn(|_| -rng.random::<f64>().max(f64::MIN_POSITIVE).ln());
        let s: f64 = y.iter().sum();
        y.iter_mut().for_each(|v| *v /= s);
        let r: f64 = y[..15].iter().sum();
        y[15] = 1.0 - r;
        Self { w: y }
    }

    /// Convex combination `sum lambda_i w_i`.
    pub fn mix(parts: &[(f64, &HiddenWeights)]) -> Result<Self> {
        let mut w = [0.0; 16];
        for (lam, h) in parts {
            for (x, y) in w.iter_mut().zip(h.w) {
                *x += lam * y;
            }
        }
        Self::new(w)
    }
}

/// Marginal probabilities of the weights, completed to sixteen entries.
pub fn probabilities_from_weights(w: &HiddenWeights) -> ProbabilityVector {
    let (alice, bob, pp) = marginals(w.values());
    ProbabilityVector::from_clicks(alice, bob, pp).expect("marginals of simplex weights are valid")
}

/// Singles `(p_a, p_a')`, `(p_b, p_b')` and the four coincidence probabilities.
fn marginals(w: &[f64; 16]) -> ([f64; 2], [f64; 2], [f64; 4]) {
    let mut alice = [0.0; 2];
    let mut bob = [0.0; 2];
    let mut pp = [0.0; 4];
    for (j, &x) in w.iter().enumerate() {
        let b = outcome_bits(j);
        for i in 0..2 {
            alice[i] += x * b[i] as f64;
            bob[i] += x * b[2 + i] as f64;
        }
        for s in Setting::ALL {
            pp[s.index()] += x * (b[s.alice()] * b[2 + s.bob()]) as f64;
        }
    }
    (alice, bob, pp)
}

/// Linear map from the fifteen weights other than `w(0000)` to the eight
/// reduced click quantities `(p_a, p_a', p_b, p_b', click_ab, ..., click_a'b')`,
/// where `click_S = 1 - p_00`.
pub fn click_matrix() -> [[f64; 15]; 8] {
    let mut r = [[0.0; 15]; 8];
    for j in 0..15 {
        let b = outcome_bits(j);
        for i in 0..2 {
            r[i][j] = b[i] as f64;
            r[2 + i][j] = b[2 + i] as f64;
        }
        for s in Setting::ALL {
            r[4 + s.index()][j] = (b[s.alice()] | b[2 + s.bob()]) as f64;
        }
    }
    r
}

/// The apparatus bounds every permissible probability must obey.
pub fn check_bounds(p: &ProbabilityVector, params: &ExperimentParams) -> bool {
    let g = params.gamma;
    let gab = g * params.eta_a * params.eta_b;
    Setting::ALL.iter().all(|&s| {
        p.get(s, Outcome::PlusPlus) <= gab + BOUND_TOL && p.click(s) <= g + BOUND_TOL
    }) && (0..2).all(|i| {
        p.alice_single(i) <= g * params.eta_a + BOUND_TOL && p.bob_single(i) <= g * params.eta_b + BOUND_TOL
    })
}

/// Whether some weights on the 15-simplex reproduce `p`.
fn local_model_exists(p: &ProbabilityVector) -> Result<bool> {
    let target = [
        p.alice_single(0),
        p.alice_single(1),
        p.bob_single(0),
        p.bob_single(1),
        p.click(Setting::AB),
        p.click(Setting::ABPrime),
        p.click(Setting::APrimeB),
        p.click(Setting::APrimeBPrime),
    ];
    let scale = target.iter().copied().fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(true);
    }
    // unknowns are the fifteen non-null weights divided by `scale`
    let a_eq: Vec<Vec<f64>> = click_matrix().iter().map(|r| r.to_vec()).collect();
    let b_eq: Vec<f64> = target.iter().map(|t| t / scale).collect();
    let a_le = vec![vec![1.0; 15]];
    let b_le = vec![1.0 / scale];
    match feasible(&a_eq, &b_eq, &a_le, &b_le, LP_TOL)? {
        Feasibility::Feasible(_) => Ok(true),
        Feasibility::Infeasible(_) => Ok(false),
    }
}

/// LHV membership: apparatus bounds plus existence of a joint distribution.
pub fn lhv_membership(p: &ProbabilityVector, params: &ExperimentParams) -> Result<bool> {
    if !check_bounds(p, params) {
        return Ok(false);
    }
    if bell_violation(p) > 1e-12 {
        return Ok(false);
    }
    local_model_exists(p)
}

/// Why a candidate of the LHV sampler was discarded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionCounters {
    pub draws: u64,
    pub coincidence_bound: u64,
    pub singles_bound: u64,
    pub null_bound: u64,
}

impl RejectionCounters {
    pub fn merge(&mut self, o: &RejectionCounters) {
        self.draws += o.draws;
        self.coincidence_bound += o.coincidence_bound;
        self.singles_bound += o.singles_bound;
        self.null_bound += o.null_bound;
    }
}

/// Weights with `1 - gamma` pinned on `0000` and the rest Gamma(1/8)-distributed.
pub fn gamma_weights<R: Rng + ?Sized>(rng: &mut R, gamma: f64) -> HiddenWeights {
    let dist = Gamma::new(0.125, 1.0).expect("valid shape");
    loop {
        let y: [f64; 16] = std::array::from_fn(|_| dist.sample(rng));
        let total: f64 = y.iter().sum();
        if total > 0.0 && total.is_finite() {
            let mut w = y.map(|v| gamma * v / total);
            w[NULL_INDEX] += 1.0 - gamma;
            let s: f64 = w.iter().sum();
            w[NULL_INDEX] += 1.0 - s;
            if let Ok(h) = HiddenWeights::new(w) {
                return h;
            }
        }
    }
}

/// One accepted draw of the LHV prior sampler.
pub fn lhv_prior_draw<R: Rng + ?Sized>(
    rng: &mut R,
    params: &ExperimentParams,
    epsilon: f64,
    counters: &mut RejectionCounters,
) -> Result<ProbabilityVector> {
    if !(0.0..1.0 / 3.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} not in [0, 1/3)")));
    }
    loop {
        counters.draws += 1;
        let w: Vec<HiddenWeights> = (0..4).map(|_| gamma_weights(rng, params.gamma)).collect();
        let mixed = HiddenWeights::mix(&[
            (1.0 - 3.0 * epsilon, &w[0]),
            (epsilon, &w[1]),
            (epsilon, &w[2]),
            (epsilon, &w[3]),
        ])?;
        let p = probabilities_from_weights(&mixed);
        if check_bounds(&p, params) {
            return Ok(p);
        }
        let g = params.gamma;
        if Setting::ALL.iter().any(|&s| p.click(s) > g + BOUND_TOL) {
            counters.null_bound += 1;
        } else if Setting::ALL
            .iter()
            .any(|&s| p.get(s, Outcome::PlusPlus) > g * params.eta_a * params.eta_b + BOUND_TOL)
        {
            counters.coincidence_bound += 1;
        } else {
            counters.singles_bound += 1;
        }
    }
}
