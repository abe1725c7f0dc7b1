//! A small version of the classification study: synthetic flocks at a few
//! true efficacies, classified by both FECRT intervals and the hierarchical
//! model.
//!
//! cargo run --release --example simulation_study

use eggcount_kit::io::simulate::{render_console, write_table_csv};
use eggcount_kit::simulation::{run_scenario, ScenarioConfig};

fn main() -> eggcount_kit::Result<()> {
    let cfg = ScenarioConfig {
        efficacies: vec![85.0, 93.0, 99.0],
        replicates: 40,
        seed: 17,
        ..ScenarioConfig::default()
    };
    let result = run_scenario(&cfg)?;
    print!("{}", render_console(&result));
    println!();
    write_table_csv(&result, std::io::stdout())?;
    Ok(())
}
