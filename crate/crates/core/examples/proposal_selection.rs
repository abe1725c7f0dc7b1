//! Independence proposals for the mu and delta updates: the three fitted
//! candidates for mu and their divergence from the target, and the delta
//! proposal in regular and degenerate cases.
//!
//! cargo run --example proposal_selection

use eggcount_kit::mcmc::{
    build_delta_proposal, kl_divergence, kl_select, mu_candidates, DeltaConditional, GridProposal, MuConditional,
};
use eggcount_kit::rng::RngStream;

fn main() -> eggcount_kit::Result<()> {
    // a = n phi - a_mu + 1, b = b_mu, c = phi * sum(mu_i)
    for (a, c) in [(0.5, 250.0), (1.0, 300.0), (5.0, 2500.0), (50.0, 25_000.0)] {
        let cond = MuConditional::new(a, 0.001, c);
        println!("mu conditional a = {a}, c = {c}: mode {:.2}", cond.mode());
        let candidates = mu_candidates(&cond)?;
        for cand in &candidates {
            println!("  {:<14} KL = {:.3e}", cand.name(), kl_divergence(&cond, cand)?);
        }
        println!("  selected: {}", kl_select(&cond, &candidates)?.name());
    }

    // a = sum(y_a) + a_delta - 1, b = b_delta - 1, c = sum(mu_i)
    for (a, b, c) in [(40.0, 0.0, 9000.0), (0.0, 0.0, 9000.0), (-0.5, 0.0, 9000.0)] {
        let cond = DeltaConditional::new(a, b, c);
        match build_delta_proposal(&cond) {
            Ok(prop) => println!(
                "delta conditional ({a}, {b}, {c}): {} proposal, mode {:?}",
                prop.name(),
                cond.mode()
            ),
            Err(e) => {
                // mass piles up at zero; the sampler switches to a tabulated proposal
                let grid = GridProposal::for_delta(&cond)?;
                let x = grid.sample(&mut RngStream::new(1));
                println!("delta conditional ({a}, {b}, {c}): {e}; grid proposal, e.g. draw {x:.3e}");
            }
        }
    }
    Ok(())
}
