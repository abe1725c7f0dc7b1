//! Classical faecal egg count reduction test on one paired sample:
//! point estimate, approximate and bootstrap intervals, WAAVP verdicts.
//!
//! cargo run --example classical_fecrt

use eggcount_kit::classical::{classify_waavp, fecr_approx_ci, fecr_bootstrap_ci, fecr_point, PairedEpgSample};
use eggcount_kit::rng::RngStream;

fn main() -> eggcount_kit::Result<()> {
    let pre = vec![850.0, 300.0, 1200.0, 150.0, 450.0, 600.0, 2000.0, 250.0, 350.0, 900.0];
    let post = vec![100.0, 50.0, 300.0, 0.0, 50.0, 150.0, 350.0, 50.0, 0.0, 100.0];
    let sample = PairedEpgSample::new(pre, post)?;

    println!("reduction: {:.2}%", fecr_point(&sample)?);

    let approx = fecr_approx_ci(&sample, 0.95)?;
    let boot = fecr_bootstrap_ci(&sample, 1999, 0.95, &mut RngStream::new(2024))?;
    for r in [&approx, &boot] {
        let v = classify_waavp(r.estimate, r.ci_lower);
        println!(
            "{:?}: [{:.2}, {:.2}] -> {} (a: {}, b: {})",
            r.method,
            r.ci_lower.unwrap_or(f64::NAN),
            r.ci_upper.unwrap_or(f64::NAN),
            v.level.label(),
            v.criterion_a_met,
            v.criterion_b_met
        );
    }

    // no eggs after treatment: estimate 100 with no interval
    let clean = PairedEpgSample::new(vec![400.0, 250.0, 900.0], vec![0.0; 3])?;
    let r = fecr_approx_ci(&clean, 0.95)?;
    println!(
        "all-zero post: {} % interval {:?}, verdict {}",
        r.estimate,
        r.ci_lower,
        classify_waavp(r.estimate, r.ci_lower).level.label()
    );
    Ok(())
}
