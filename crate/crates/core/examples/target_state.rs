//! Target states of the four experiments and their outcome probabilities.

use bell_evidence::datasets::bundled;
use bell_evidence::probability::{Outcome, Setting};
use bell_evidence::quantum::{probabilities_from_state, target_state};

fn main() -> bell_evidence::error::Result<()> {
    for id in ["boulder-5", "vienna-6", "delft-1", "munich-1"] {
        let b = bundled(id)?;
        let params = b.default_params();
        let rho = target_state(&params, &b.target_criterion())?;
        let p = probabilities_from_state(&rho, &params);
        println!("{id}: purity {:.6}", rho.purity());
        for s in Setting::ALL {
            let row: Vec<String> = Outcome::ALL.iter().map(|&o| format!("{:.3e}", p.get(s, o))).collect();
            println!("  {:<6} {}", s.label(), row.join("  "));
        }
    }
    Ok(())
}
