//! Self-calibration of γ for the Boulder and Vienna runs.

use bell_evidence::datasets::bundled;
use bell_evidence::mle::{estimate_gamma, ScanOptions};

fn main() -> bell_evidence::error::Result<()> {
    for id in ["vienna-7", "vienna-8"] {
        let b = bundled(id)?;
        let range = b.gamma_range().expect("γ < 1 experiment");
        let t = std::time::Instant::now();
        let est = estimate_gamma(&b.counts, &b.params, range, &ScanOptions::default())?;
        let lhv = est.scan.iter().filter_map(|p| p.log10_l_lhv).fold(f64::NEG_INFINITY, f64::max);
        println!(
            "{id}: γ̂ = {:.6}  log10 L_QM = {:.2}  log10 L_LHV = {:.2}  ({:.2?})",
            est.gamma_hat,
            est.log10_l_qm,
            lhv,
            t.elapsed()
        );
    }
    Ok(())
}
