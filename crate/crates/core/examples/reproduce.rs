//! Full analysis of one dataset with reports written to a directory.
//!
//! Arguments: dataset id, output directory.

use bell_evidence::datasets::bundled;
use bell_evidence::pipeline::{render_text, reproduce, write_report, RunConfig};

fn main() -> bell_evidence::error::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let id = args.first().map_or("delft-1", String::as_str);
    let out = args.get(1).map_or_else(|| std::env::temp_dir().join("bell-evidence-report"), Into::into);
    let report = reproduce(&bundled(id)?, &RunConfig::default())?;
    print!("{}", render_text(&report));
    for path in write_report(&out, &report)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
