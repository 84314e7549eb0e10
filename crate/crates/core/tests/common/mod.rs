//! Property checks shared by the property suite and the acceptance sweep.
//!
//! Each check draws its inputs from a seed and returns a description of the
//! first violation found.

#![allow(dead_code)]

use bell_evidence::bell::BellFunctional;
use bell_evidence::evidence::{posterior_contents, EvidenceOptions};
use bell_evidence::lhv::{check_bounds, lhv_membership, lhv_prior_draw, HiddenWeights, RejectionCounters};
use bell_evidence::mle::{bhattacharyya_angle, lhv_weight_gradient, qm_factor_gradient};
use bell_evidence::params::ExperimentParams;
use bell_evidence::prior::build_prior;
use bell_evidence::probability::{reconstruct_full, reduce, EventCounts, ProbabilityVector, ReducedProbabilities};
use bell_evidence::quantum::{pauli_basis, qm_membership, qm_prior_draw, QuantumMeasurement, DEFAULT_EPSILON, PSD_TOL};
use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub type Check = std::result::Result<(), String>;

/// The four apparatus presets, Boulder and Vienna at their estimated γ.
pub fn presets() -> [ExperimentParams; 4] {
    [
        ExperimentParams::delft(),
        ExperimentParams::munich(),
        ExperimentParams::vienna().with_gamma(0.00296).unwrap(),
        ExperimentParams::boulder().with_gamma(0.000722).unwrap(),
    ]
}

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn preset(seed: u64) -> ExperimentParams {
    presets()[(seed % 4) as usize]
}

fn qm_point(r: &mut ChaCha20Rng, params: &ExperimentParams) -> ProbabilityVector {
    qm_prior_draw(r, params, DEFAULT_EPSILON).unwrap()
}

fn lhv_point(r: &mut ChaCha20Rng, params: &ExperimentParams) -> ProbabilityVector {
    lhv_prior_draw(r, params, DEFAULT_EPSILON, &mut RejectionCounters::default()).unwrap()
}

/// Reducing a no-signaling vector and completing it again is the identity.
pub fn ns_round_trip(seed: u64) -> Check {
    let mut r = rng(seed);
    let params = preset(seed);
    for _ in 0..8 {
        let p = if r.random::<bool>() { qm_point(&mut r, &params) } else { lhv_point(&mut r, &params) };
        let back = reconstruct_full(&reduce(p.table()).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        for k in 0..16 {
            if (back.values()[k] - p.values()[k]).abs() > 1e-14 {
                return Err(format!("cell {k}: {} vs {}", back.values()[k], p.values()[k]));
            }
        }
        let reduced = p.reduced().to_array();
        let again = ReducedProbabilities::from_array(reduced).to_array();
        if reduced != again {
            return Err("reduced array round trip changed values".into());
        }
    }
    Ok(())
}

/// A violated Bell inequality excludes LHV membership, and LHV members obey the apparatus bounds.
pub fn classifier_consistency(seed: u64) -> Check {
    let mut r = rng(seed);
    let params = preset(seed);
    for _ in 0..8 {
        let a = qm_point(&mut r, &params);
        let b = lhv_point(&mut r, &params);
        let p = a.mix(&b, r.random_range(0.0..1.0)).map_err(|e| e.to_string())?;
        for q in [a, b, p] {
            let (value, _) = BellFunctional::strongest(q.table());
            let local = lhv_membership(&q, &params).map_err(|e| e.to_string())?;
            if value > 1e-12 && local {
                return Err(format!("Bell value {value:e} on an LHV member"));
            }
            if local && !check_bounds(&q, &params) {
                return Err("LHV member outside the apparatus bounds".into());
            }
        }
    }
    Ok(())
}

/// Grid points over the free coordinate in the brute-force membership test.
pub const GRID: usize = 20_001;

/// Largest minimum eigenvalue over an even grid of the free coordinate,
/// after solving for the eight fixed coordinates by least squares.
pub fn grid_slack(p: &ProbabilityVector, params: &ExperimentParams) -> f64 {
    let (p0, j) = QuantumMeasurement::new(params).pauli_map();
    let a = DMatrix::from_fn(16, 8, |k, i| j[k][i]);
    let b = DVector::from_fn(16, |k, _| p.values()[k] - p0[k]);
    let x = a.svd(true, true).solve(&b, 1e-14).unwrap();
    let e = pauli_basis();
    let mut fixed = Matrix4::identity();
    for i in 0..8 {
        fixed += e[i] * x[i];
    }
    (0..GRID)
        .map(|g| {
            let t = -1.0 + 2.0 * g as f64 / (GRID - 1) as f64;
            SymmetricEigen::new((fixed + e[8] * t) * 0.25).eigenvalues.min()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// The membership decision agrees with a brute-force grid away from the boundary.
pub fn membership_matches_grid(seed: u64) -> Check {
    let mut r = rng(seed);
    let params = preset(seed);
    // min eigenvalue is 1/4-Lipschitz in the free coordinate
    let resolution = 0.25 * 2.0 / (GRID - 1) as f64;
    for _ in 0..4 {
        let a = qm_point(&mut r, &params);
        let b = lhv_point(&mut r, &params);
        let p = a.mix(&b, r.random_range(0.0..1.0)).map_err(|e| e.to_string())?;
        for q in [a, b, p] {
            let m = qm_membership(&q, &params).map_err(|e| e.to_string())?;
            let g = grid_slack(&q, &params);
            if g > m.slack + 1e-9 || m.slack - g > resolution + 1e-9 {
                return Err(format!("slack {} vs grid {g}", m.slack));
            }
            if m.slack.abs() > resolution + PSD_TOL && m.member != (g >= -PSD_TOL) {
                return Err(format!("decision differs: slack {} grid {g}", m.slack));
            }
        }
    }
    Ok(())
}

fn counts(r: &mut ChaCha20Rng, p: &ProbabilityVector, per_setting: u64) -> EventCounts {
    let mut c = [0u64; 16];
    for s in 0..4 {
        for _ in 0..per_setting {
            let u: f64 = r.random();
            let mut acc = 0.0;
            let mut k = 3;
            for o in 0..4 {
                acc += p.values()[4 * s + o];
                if u < acc {
                    k = o;
                    break;
                }
            }
            c[4 * s + k] += 1;
        }
    }
    EventCounts::new(c)
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(1e-300)
}

/// The gradient with respect to the factor `A` matches central differences.
pub fn qm_gradient_matches_fd(seed: u64) -> Check {
    let mut r = rng(seed);
    let params = ExperimentParams::delft();
    let truth = qm_point(&mut r, &params);
    let d = counts(&mut r, &truth, 60);
    let a = Matrix4::from_fn(|_, _| r.random_range(-1.0..1.0)) + Matrix4::identity() * 0.5;
    let (_, g) = qm_factor_gradient(&d, &params, &a).map_err(|e| e.to_string())?;
    let h = 1e-6;
    let mut fd = Vec::with_capacity(16);
    for i in 0..16 {
        let (mut up, mut down) = (a, a);
        up[i] += h;
        down[i] -= h;
        let fu = qm_factor_gradient(&d, &params, &up).map_err(|e| e.to_string())?.0;
        let fl = qm_factor_gradient(&d, &params, &down).map_err(|e| e.to_string())?.0;
        fd.push((fu - fl) / (2.0 * h));
    }
    let err = relative_error(&fd, g.as_slice());
    if err > 1e-6 {
        return Err(format!("relative error {err:e}"));
    }
    Ok(())
}

/// Differences of the weight gradient match directional derivatives inside the simplex.
pub fn lhv_gradient_matches_fd(seed: u64) -> Check {
    let mut r = rng(seed);
    let params = ExperimentParams::delft();
    let truth = lhv_point(&mut r, &params);
    let d = counts(&mut r, &truth, 60);
    let base = HiddenWeights::random(&mut r);
    let uniform = HiddenWeights::new([1.0 / 16.0; 16]).unwrap();
    let w = HiddenWeights::mix(&[(0.5, &base), (0.5, &uniform)]).map_err(|e| e.to_string())?;
    let (_, g) = lhv_weight_gradient(&d, &w).map_err(|e| e.to_string())?;
    let h = 1e-7;
    let (mut analytic, mut fd) = (Vec::new(), Vec::new());
    for i in 0..16 {
        let j = (i + 1 + (r.random::<u64>() % 15) as usize) % 16;
        let shifted = |s: f64| {
            let mut v = *w.values();
            v[i] += s;
            v[j] -= s;
            HiddenWeights::new(v)
        };
        let fu = lhv_weight_gradient(&d, &shifted(h).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?.0;
        let fl = lhv_weight_gradient(&d, &shifted(-h).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?.0;
        fd.push((fu - fl) / (2.0 * h));
        analytic.push(g[i] - g[j]);
    }
    let err = relative_error(&fd, &analytic);
    if err > 1e-6 {
        return Err(format!("relative error {err:e}"));
    }
    Ok(())
}

/// Non-negativity, identity, symmetry and the triangle inequality of the angle.
pub fn angle_metric_axioms(seed: u64) -> Check {
    let mut r = rng(seed);
    let params = preset(seed);
    let g = params.gamma;
    let pts: Vec<ProbabilityVector> =
        (0..3).map(|i| if i % 2 == 0 { qm_point(&mut r, &params) } else { lhv_point(&mut r, &params) }).collect();
    let ang = |a: &ProbabilityVector, b: &ProbabilityVector| bhattacharyya_angle(a.table(), b.table(), g).map_err(|e| e.to_string());
    for a in &pts {
        let self_angle = ang(a, a)?;
        if self_angle.abs() > 1e-7 {
            return Err(format!("self angle {self_angle:e}"));
        }
        for b in &pts {
            let (ab, ba) = (ang(a, b)?, ang(b, a)?);
            if ab < 0.0 || (ab - ba).abs() > 1e-14 {
                return Err(format!("asymmetric or negative: {ab} {ba}"));
            }
            for c in &pts {
                if ang(a, c)? > ab + ang(b, c)? + 1e-12 {
                    return Err("triangle inequality violated".into());
                }
            }
        }
    }
    Ok(())
}

/// Without data the posterior contents equal the prior contents.
pub fn posterior_is_prior_without_data(seed: u64) -> Check {
    let params = preset(seed);
    let s = build_prior(&params, 1000, DEFAULT_EPSILON, seed).map_err(|e| e.to_string())?;
    let report = posterior_contents(&s, &EventCounts::new([0; 16]), "empty", &EvidenceOptions::default()).map_err(|e| e.to_string())?;
    for e in &report.regions {
        if (e.posterior - e.prior).abs() > 1e-12 {
            return Err(format!("{}: posterior {} prior {}", e.region, e.posterior, e.prior));
        }
    }
    Ok(())
}
