//! Bhattacharyya angles for Boulder and the probability-space triangles of
//! Delft and Munich.

use bell_evidence::datasets::bundled;
use bell_evidence::mle::triangle_report;
use bell_evidence::pipeline::angle_row;

fn main() -> bell_evidence::error::Result<()> {
    let b = bundled("boulder-5")?;
    println!("{:>10} {:>8} {:>8} {:>8}", "γ", "target", "QM-MLE", "LHV-MLE");
    for gamma in [0.0005, 0.000722] {
        let a = angle_row(&b, &b.params.with_gamma(gamma)?)?;
        println!("{gamma:>10} {:>8.4} {:>8.4} {:>8.4}", a.target, a.qm_mle, a.lhv_mle);
    }
    println!("\n{:<10} {:>12} {:>12} {:>12}  triangle", "run", "freq-target", "freq-QM", "target-QM");
    for id in ["delft-1", "delft-2", "delft-1+2", "munich-1", "munich-2"] {
        let d = bundled(id)?;
        let t = triangle_report(&d.counts, &d.default_params(), &d.target_criterion())?;
        println!(
            "{id:<10} {:>12.4} {:>12.4} {:>12.4}  {}",
            t.frequencies_target,
            t.frequencies_qm,
            t.target_qm,
            if t.satisfies_triangle_inequality(1e-12) { "ok" } else { "violated" }
        );
    }
    Ok(())
}
