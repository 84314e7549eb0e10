//! QM and LHV maximum likelihoods for the ideal-γ experiments.

use bell_evidence::datasets::bundled;
use bell_evidence::mle::{lhv_mle, qm_mle};

fn main() -> bell_evidence::error::Result<()> {
    println!("{:<10} {:>12} {:>12} {:>10}", "run", "max L (QM)", "max L (LHV)", "ratio");
    for id in ["delft-1", "delft-2", "delft-1+2", "munich-1", "munich-2"] {
        let b = bundled(id)?;
        let params = b.default_params();
        let qm = qm_mle(&b.counts, &params)?;
        let lhv = lhv_mle(&b.counts, &params)?;
        let ratio = 10f64.powf(qm.log10_likelihood() - lhv.log10_likelihood());
        println!(
            "{id:<10} {:>12.3e} {:>12.3e} {ratio:>10.3e}",
            10f64.powf(qm.log10_likelihood()),
            10f64.powf(lhv.log10_likelihood())
        );
    }
    Ok(())
}
