//! Load a multi-flock TSV file under each validation policy.
//!
//! cargo run --example ingest_validation

use eggcount_kit::io::{load_flocks, LoadOptions, ValidationPolicy};

fn main() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/farms.tsv");
    for policy in [
        ValidationPolicy::Strict,
        ValidationPolicy::CoerceToZero,
        ValidationPolicy::Warn,
    ] {
        println!("policy {policy:?}");
        match load_flocks(
            path,
            LoadOptions {
                policy,
                raw_counts: false,
            },
        ) {
            Ok((flocks, report)) => {
                for f in &flocks {
                    println!("  {}: pre {:?}", f.flock_id, f.data.raw_pre());
                }
                println!("  {} rows read, {} used", report.rows_read, report.rows_used);
                for w in report.warnings() {
                    println!("  warning: {w}");
                }
            }
            Err(e) => println!("  rejected: {e}"),
        }
    }
}
