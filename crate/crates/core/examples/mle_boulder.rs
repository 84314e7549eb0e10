//! Constrained maximum-likelihood values for the Boulder five-trigger run.

use bell_evidence::datasets::bundled;
use bell_evidence::mle::{lhv_mle, nosignaling_mle, qm_mle};

fn main() -> bell_evidence::error::Result<()> {
    let b = bundled("boulder-5")?;
    for gamma in [0.0005, 0.000722, 0.0009] {
        let params = b.params.with_gamma(gamma)?;
        let t = std::time::Instant::now();
        let qm = qm_mle(&b.counts, &params)?;
        let lhv = lhv_mle(&b.counts, &params)?;
        let ns = nosignaling_mle(&b.counts, &params)?;
        println!(
            "γ = {gamma}: log10 L  QM {:.3}  LHV {:.3}  no-signaling {:.3}  ({:.2?}; Newton steps {}/{}/{})",
            qm.log10_likelihood(),
            lhv.log10_likelihood(),
            ns.log10_likelihood(),
            t.elapsed(),
            qm.diagnostics.newton_iterations,
            lhv.diagnostics.newton_iterations,
            ns.diagnostics.newton_iterations,
        );
    }
    Ok(())
}
