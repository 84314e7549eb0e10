//! Sampling-error intervals of prior contents from classification counts.
//!
//! Arguments: n1 n2 n3 n4. Defaults are the Boulder counts of a
//! million-point-per-component sample.

use bell_evidence::prior::{content_intervals, PriorContents};

fn main() -> bell_evidence::error::Result<()> {
    let n: Vec<u64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let [n1, n2, n3, n4] = match n[..] {
        [a, b, c, d] => [a, b, c, d],
        _ => [1210, 998_790, 993_805, 6195],
    };
    let s = PriorContents::from_counts(n1, n2, n3, n4)?;
    for (name, x, y, content) in [("QM only", n1, n2, s.qm_only), ("LHV only", n3, n4, s.lhv_only)] {
        let i = content_intervals(x, y)?;
        let h = i.halved();
        println!("{name}: sampler fraction {:.6}", i.mle);
        println!("  one sigma      ({:.6}, {:.6})", i.one_sigma[0], i.one_sigma[1]);
        println!("  plausible      ({:.6}, {:.6})", i.plausible[0], i.plausible[1]);
        println!("  gaussian       ({:.6}, {:.6})", i.gaussian_plausible[0], i.gaussian_plausible[1]);
        println!("  content {content:.6} in ({:.6}, {:.6})", h.plausible[0], h.plausible[1]);
    }
    Ok(())
}
