//! Prior-bias tallies for Boulder and Delft run 1.
//!
//! Arguments: prior points per component, mocks per region, then dataset ids.

use bell_evidence::bias::{run_bias_check, BiasOptions};
use bell_evidence::datasets::bundled;
use bell_evidence::prior::build_prior;
use bell_evidence::quantum::DEFAULT_EPSILON;

fn main() -> bell_evidence::error::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let mocks: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let ids: Vec<&str> = if args.len() > 2 { args[2..].iter().map(String::as_str).collect() } else { vec!["boulder-5", "delft-1"] };
    for id in ids {
        let b = bundled(id)?;
        let params = b.default_params();
        let prior = build_prior(&params, n, DEFAULT_EPSILON, 1)?;
        let t = std::time::Instant::now();
        let tally = run_bias_check(&params, &prior, mocks, b.counts.total(), 2, &BiasOptions::default())?;
        eprintln!("bias check in {:.1?}", t.elapsed());
        println!("{id} at γ = {}\n{}", params.gamma, tally.table());
    }
    Ok(())
}
