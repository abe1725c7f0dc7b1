//! The `simulate` workflow and its CSV tables.

use std::io::Write;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::io::config::SimulateConfig;
use crate::simulation::{run_scenario, ScenarioConfig, ScenarioResult};

/// Runs the scenario, generating a seed when none was configured. Returns
/// the result and the seed used.
pub fn run_simulate(cfg: &SimulateConfig) -> Result<(ScenarioResult, u64)> {
    let seed = cfg.seed.unwrap_or_else(rand::random);
    let scenario = ScenarioConfig {
        seed,
        ..cfg.scenario.clone()
    };
    Ok((run_scenario(&scenario)?, seed))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// One row per method and efficacy. The Denwood rule is reported as a
/// fourth method with resistance, inconclusive and susceptibility mapped to
/// present, possible and absent.
pub fn write_table_csv(result: &ScenarioResult, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method",
        "efficacy",
        "fraction_present",
        "fraction_possible",
        "fraction_absent",
        "replicates",
        "failures",
    ])
    .map_err(csv_err)?;
    for e in &result.efficacies {
        for f in &e.fractions {
            w.write_record([
                f.method.label().to_string(),
                e.efficacy.to_string(),
                f.present.to_string(),
                f.suspected.to_string(),
                f.absent.to_string(),
                e.replicates.to_string(),
                e.failures.to_string(),
            ])
            .map_err(csv_err)?;
        }
        let n = e.replicates.max(1) as f64;
        w.write_record([
            "denwood".to_string(),
            e.efficacy.to_string(),
            (e.denwood_resistance as f64 / n).to_string(),
            (e.denwood_inconclusive as f64 / n).to_string(),
            (e.denwood_susceptibility as f64 / n).to_string(),
            e.replicates.to_string(),
            e.failures.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-replicate verdicts and `P(reduction < 95%)`.
pub fn write_replicates_csv(result: &ScenarioResult, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "efficacy",
        "replicate",
        "approximate",
        "bootstrap",
        "hierarchical",
        "reduction_median",
        "hpd_lower",
        "hpd_upper",
        "prob_below_95",
        "denwood",
    ])
    .map_err(csv_err)?;
    for e in &result.efficacies {
        for o in &e.outcomes {
            w.write_record([
                e.efficacy.to_string(),
                o.replicate.to_string(),
                o.approximate.label().to_string(),
                o.bootstrap.label().to_string(),
                o.hierarchical.label().to_string(),
                o.hierarchical_median.to_string(),
                o.hierarchical_hpd_lower.to_string(),
                o.hierarchical_hpd_upper.to_string(),
                o.prob_below_95.to_string(),
                o.denwood.label().to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_outputs(result: &ScenarioResult, cfg: &SimulateConfig) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if let Some(p) = &cfg.table_path {
        write_table_csv(result, std::fs::File::create(p)?)?;
        written.push(p.clone());
    }
    if let Some(p) = &cfg.replicates_path {
        write_replicates_csv(result, std::fs::File::create(p)?)?;
        written.push(p.clone());
    }
    Ok(written)
}

pub fn render_console(result: &ScenarioResult) -> String {
    let mut s = String::new();
    for e in &result.efficacies {
        s.push_str(&format!(
            "efficacy {}% ({} replicates, {} failed)\n",
            e.efficacy, e.replicates, e.failures
        ));
        for f in &e.fractions {
            s.push_str(&format!(
                "  {:<18} present {:.3}  possible {:.3}  absent {:.3}\n",
                f.method.label(),
                f.present,
                f.suspected,
                f.absent
            ));
        }
        s.push_str(&format!(
            "  {:<18} resistance {}  inconclusive {}  susceptibility {}  mean P(<95%) {:.3}\n",
            "denwood", e.denwood_resistance, e.denwood_inconclusive, e.denwood_susceptibility, e.mean_prob_below_95
        ));
    }
    s
}
