//! Analyzing event counts from a file with a parameter preset.

use bell_evidence::datasets::{bundled, format_counts, load_dataset};
use bell_evidence::params::ExperimentParams;
use bell_evidence::pipeline::mle_row;

fn main() -> bell_evidence::error::Result<()> {
    let path = std::env::temp_dir().join("delft-copy.csv");
    std::fs::write(&path, format_counts(&bundled("delft-1")?.counts))?;
    println!("{}", std::fs::read_to_string(&path)?);
    let b = load_dataset(path.to_str().expect("utf-8 path"), Some(&ExperimentParams::delft()))?;
    let m = mle_row(&b.counts, &b.params)?;
    println!("{}: N = {}, log10 L_QM {:.3}, log10 L_LHV {:.3}", b.id, b.counts.total(), m.log10_l_qm, m.log10_l_lhv);
    Ok(())
}
