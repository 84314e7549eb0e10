//! Storing a prior sample on disk and loading it back.

use bell_evidence::params::ExperimentParams;
use bell_evidence::prior::cached_prior;
use bell_evidence::quantum::DEFAULT_EPSILON;

fn main() -> bell_evidence::error::Result<()> {
    let dir = std::env::temp_dir().join("bell-evidence-cache-example");
    let params = ExperimentParams::delft();
    for pass in ["build", "load"] {
        let t = std::time::Instant::now();
        let s = cached_prior(&dir, &params, 20_000, DEFAULT_EPSILON, 7)?;
        println!("{pass}: {} points in {:.2?}, QM only {:.4}", s.points.len(), t.elapsed(), s.contents.qm_only);
    }
    println!("cache directory {}", dir.display());
    Ok(())
}
