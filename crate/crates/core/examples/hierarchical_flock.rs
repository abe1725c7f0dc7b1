//! Fit the hierarchical model to one flock and summarise the posterior of
//! the percent reduction.
//!
//! cargo run --release --example hierarchical_flock

use eggcount_kit::io::{load_flocks, LoadOptions};
use eggcount_kit::mcmc::{run_chain, ChainConfig, PriorConfig};
use eggcount_kit::posterior::{
    classify_denwood, classify_hierarchical, effective_sample_size, prob_reduction_below, summarize,
};

fn main() -> eggcount_kit::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/flock.csv");
    let (flocks, _) = load_flocks(path, LoadOptions::default())?;
    let data = &flocks[0].data;
    println!("{} animals, slide counts pre {:?}", data.len(), data.raw_pre());

    let chain = ChainConfig::default().with_seed(11);
    let draws = run_chain(data, &PriorConfig::default(), &chain)?;
    let s = summarize(&draws, 0.95)?;

    println!("kept draws: {}", draws.len());
    println!(
        "acceptance phi {:.3}  mu {:.3}  delta {:.3}",
        draws.accept_phi, draws.accept_mu, draws.accept_delta
    );
    println!(
        "reduction median {:.2}%  95% HPD [{:.2}, {:.2}]",
        s.reduction.median, s.reduction.hpd_lower, s.reduction.hpd_upper
    );
    println!(
        "mu median {:.1} epg  HPD [{:.1}, {:.1}]",
        s.mu.median, s.mu.hpd_lower, s.mu.hpd_upper
    );
    println!(
        "phi median {:.3}  HPD [{:.3}, {:.3}]",
        s.phi.median, s.phi.hpd_lower, s.phi.hpd_upper
    );
    println!("P(reduction < 95%) = {:.4}", prob_reduction_below(&draws.delta, 95.0));
    println!("WAAVP on posterior: {}", classify_hierarchical(&s).level.label());
    println!("Denwood rule: {}", classify_denwood(&draws).label());
    println!("ESS(delta) = {:.0}", effective_sample_size(&draws.delta)?.value);
    println!("proposal usage: {:?}", draws.diagnostics);
    Ok(())
}
