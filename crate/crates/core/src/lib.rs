//! Bayesian evidence for quantum-mechanical versus local-hidden-variable
//! descriptions of Bell-test event counts.
//!
//! The prior is a Monte Carlo sample mixing a QM sampler and an LHV sampler;
//! every point is classified into "QM only", "both" or "LHV only". Posterior
//! contents follow by likelihood weighting of the sample. Constrained
//! maximum-likelihood estimators, γ self-calibration, Bhattacharyya angles
//! and a prior-bias check complement the evidence. [`pipeline`] chains the
//! stages for one dataset.

#![allow(clippy::needless_range_loop)]

pub mod barrier;
pub mod bias;
pub mod bell;
pub mod datasets;
pub mod error;
pub mod evidence;
pub mod lhv;
pub mod lp;
pub mod mle;
pub mod params;
pub mod pipeline;
pub mod prior;
pub mod probability;
pub mod quantum;
pub mod rng;
