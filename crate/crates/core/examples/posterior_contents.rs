//! Posterior contents and evidence verdicts for the bundled datasets.

use bell_evidence::datasets::bundled;
use bell_evidence::evidence::{posterior_contents, EvidenceOptions};
use bell_evidence::prior::build_prior;
use bell_evidence::quantum::DEFAULT_EPSILON;

fn main() -> bell_evidence::error::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let runs: [(&str, Option<f64>); 8] = [
        ("boulder-5", Some(0.000722)),
        ("boulder-5", Some(0.0005)),
        ("vienna-6", None),
        ("vienna-7", None),
        ("vienna-8", None),
        ("delft-1", None),
        ("munich-1", None),
        ("munich-2", None),
    ];
    let only: Vec<String> = std::env::args().skip(2).collect();
    for (id, gamma) in runs {
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let b = bundled(id)?;
        let params = match gamma {
            Some(g) => b.params.with_gamma(g)?,
            None => b.default_params(),
        };
        let t = std::time::Instant::now();
        let prior = build_prior(&params, n, DEFAULT_EPSILON, 1)?;
        eprintln!("prior built in {:.1?}", t.elapsed());
        let report = posterior_contents(&prior, &b.counts, id, &EvidenceOptions::default())?;
        println!("{id} at γ = {}\n{}", params.gamma, report.table());
    }
    Ok(())
}
