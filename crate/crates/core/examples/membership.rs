//! Classifying probability vectors as QM-permitted, LHV-permitted, or both.

use bell_evidence::bell::{bell_violation, BellFunctional};
use bell_evidence::lhv::lhv_membership;
use bell_evidence::params::ExperimentParams;
use bell_evidence::quantum::{probabilities_from_state, qm_membership, target_state, DensityMatrix, TargetCriterion};

fn main() -> bell_evidence::error::Result<()> {
    let params = ExperimentParams::delft();
    let target = target_state(&params, &TargetCriterion::ThresholdEfficiency)?;
    let noisy = DensityMatrix::new(target.matrix() * 0.6 + DensityMatrix::maximally_mixed().matrix() * 0.4)?;
    for (name, rho) in [("target", &target), ("60% target", &noisy), ("mixed", &DensityMatrix::maximally_mixed())] {
        let p = probabilities_from_state(rho, &params);
        let q = qm_membership(&p, &params)?;
        let (value, _) = BellFunctional::strongest(p.table());
        println!(
            "{name:<11} QM {} (slack {:+.2e})  LHV {}  strongest Bell value {value:+.4}  Eberhard {:+.4}",
            q.member,
            q.slack,
            lhv_membership(&p, &params)?,
            bell_violation(&p)
        );
    }
    Ok(())
}
