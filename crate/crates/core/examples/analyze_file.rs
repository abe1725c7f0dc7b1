//! The complete analysis workflow on a file, as run by `eggcount analyze`:
//! classical and hierarchical results per flock, a JSON summary and draw
//! traces.
//!
//! cargo run --release --example analyze_file

use eggcount_kit::io::analyze::{render_console, write_outputs};
use eggcount_kit::io::{run_analyze, RunConfig};

fn main() -> eggcount_kit::Result<()> {
    let input = concat!(env!("CARGO_MANIFEST_DIR"), "/data/farms.tsv");
    let out_dir = std::env::temp_dir().join("eggcount-example");
    std::fs::create_dir_all(&out_dir)?;

    let pairs = [
        ("seed", "5"),
        ("policy", "coerce-to-zero"),
        ("output", &*out_dir.join("summary.json").to_string_lossy()),
        ("draws", &*out_dir.join("draws.csv").to_string_lossy()),
    ]
    .map(|(k, v)| (k.to_string(), v.to_string()));
    let cfg = RunConfig::from_pairs(&pairs)?;

    let out = run_analyze(input, &cfg)?;
    print!("{}", render_console(&out.summary));
    for path in write_outputs(&out, &cfg)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
