//! Prior contents of the three regions for each experiment.

use bell_evidence::datasets::bundled;
use bell_evidence::prior::build_prior;
use bell_evidence::quantum::DEFAULT_EPSILON;

fn main() -> bell_evidence::error::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    for id in ["boulder-5", "vienna-6", "delft-1", "munich-1"] {
        let params = bundled(id)?.default_params();
        let t = std::time::Instant::now();
        let s = build_prior(&params, n, DEFAULT_EPSILON, 1)?;
        let c = s.contents;
        let se = c.standard_errors();
        println!(
            "{id:<10} γ = {:<9} QM only {:.4} ± {:.4}  both {:.4} ± {:.4}  LHV only {:.4} ± {:.4}  ({:.1?})",
            params.gamma, c.qm_only, se[0], c.both, se[1], c.lhv_only, se[2], t.elapsed()
        );
    }
    Ok(())
}
