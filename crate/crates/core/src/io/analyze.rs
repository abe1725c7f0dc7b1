//! The `analyze` workflow: classical and hierarchical analysis of every
//! flock in an input file.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{
    classify_with, fecr_approx_ci, fecr_bootstrap_ci, FecrResult, ResistanceVerdict, VerdictSource,
};
use crate::error::{Error, Result};
use crate::io::config::RunConfig;
use crate::io::input::{load_flocks, LoadedFlock, ValidationReport};
use crate::mcmc::{run_chain, ChainDiagnostics, PriorConfig};
use crate::posterior::{
    classify_hierarchical_with, denwood_from_probability, effective_sample_size, prob_reduction_below, summarize,
    DenwoodVerdict, PosteriorDraws, PosteriorSummary,
};
use crate::rng::RngStream;

pub const SCHEMA: &str = "eggcount-kit/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRates {
    pub phi: f64,
    pub mu: f64,
    pub delta: f64,
}

/// Hierarchical results under one prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalReport {
    pub prior: PriorConfig,
    pub chain_seed: u64,
    pub draws: usize,
    pub summary: PosteriorSummary,
    pub prob_reduction_below_95: f64,
    pub verdict: ResistanceVerdict,
    pub denwood: DenwoodVerdict,
    pub acceptance: AcceptanceRates,
    pub phi_step: f64,
    pub ess_delta: Option<f64>,
    pub proposals: ChainDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlockReport {
    pub flock_id: String,
    pub n_animals: usize,
    pub fecrt_approximate: FecrResult,
    pub fecrt_bootstrap: FecrResult,
    pub verdict_approximate: ResistanceVerdict,
    pub verdict_bootstrap: ResistanceVerdict,
    pub hierarchical: Vec<HierarchicalReport>,
}

/// The JSON summary document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub schema: String,
    /// Seconds since the Unix epoch; not part of the reproducible content.
    pub timestamp: u64,
    pub seed: u64,
    pub config: RunConfig,
    pub validation: ValidationReport,
    pub flocks: Vec<FlockReport>,
}

impl AnalysisSummary {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    /// JSON with the timestamp zeroed, for reproducibility comparisons.
    pub fn canonical_json(&self) -> Result<String> {
        Self {
            timestamp: 0,
            ..self.clone()
        }
        .to_json()
    }
}

/// Summary plus the draws behind it, indexed like `flocks[i].hierarchical[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOutput {
    pub summary: AnalysisSummary,
    pub draws: Vec<Vec<PosteriorDraws>>,
}

fn priors_for(cfg: &RunConfig) -> Vec<PriorConfig> {
    if cfg.sensitivity_sweep {
        cfg.priors.sensitivity_priors().to_vec()
    } else {
        vec![cfg.priors]
    }
}

/// Analyses one flock. Random streams derive from `seed` and `index`, so
/// results do not depend on how flocks are scheduled.
pub fn analyze_flock(
    flock: &LoadedFlock,
    cfg: &RunConfig,
    seed: u64,
    index: usize,
) -> Result<(FlockReport, Vec<PosteriorDraws>)> {
    let root = RngStream::new(seed).substream(index as u64);
    let sample = flock.data.to_epg_sample()?;
    let approx = fecr_approx_ci(&sample, cfg.level)?;
    let boot = fecr_bootstrap_ci(&sample, cfg.resamples, cfg.level, &mut root.substream(0))?;

    let mut reports = Vec::new();
    let mut all_draws = Vec::new();
    for (k, prior) in priors_for(cfg).into_iter().enumerate() {
        let chain = cfg.chain.with_seed(root.substream(1 + k as u64).seed());
        let draws = run_chain(&flock.data, &prior, &chain)?;
        let summary = summarize(&draws, cfg.level)?;
        let prob = prob_reduction_below(&draws.delta, cfg.waavp.reduction);
        reports.push(HierarchicalReport {
            prior,
            chain_seed: chain.seed,
            draws: draws.len(),
            summary,
            prob_reduction_below_95: prob,
            verdict: classify_hierarchical_with(&summary, cfg.waavp),
            denwood: denwood_from_probability(prob, cfg.denwood),
            acceptance: AcceptanceRates {
                phi: draws.accept_phi,
                mu: draws.accept_mu,
                delta: draws.accept_delta,
            },
            phi_step: draws.phi_step,
            ess_delta: effective_sample_size(&draws.delta).ok().map(|e| e.value),
            proposals: draws.diagnostics,
        });
        all_draws.push(draws);
    }
    let verdict = |r: &FecrResult| classify_with(r.estimate, r.ci_lower, cfg.waavp, VerdictSource::Classical);
    Ok((
        FlockReport {
            flock_id: flock.flock_id.clone(),
            n_animals: flock.data.len(),
            verdict_approximate: verdict(&approx),
            verdict_bootstrap: verdict(&boot),
            fecrt_approximate: approx,
            fecrt_bootstrap: boot,
            hierarchical: reports,
        },
        all_draws,
    ))
}

/// Analyses already-loaded flocks in parallel.
pub fn analyze_flocks(
    flocks: &[LoadedFlock],
    validation: ValidationReport,
    cfg: &RunConfig,
    seed: u64,
) -> Result<AnalysisOutput> {
    cfg.validate()?;
    if flocks.is_empty() {
        return Err(Error::Ingestion {
            row: None,
            message: "no usable rows".into(),
        });
    }
    let results = flocks
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            analyze_flock(f, cfg, seed, i).map_err(|e| match e {
                Error::Ingestion { .. } => e,
                other => Error::InvalidSample(format!("flock {}: {other}", f.flock_id)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (reports, draws): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(AnalysisOutput {
        summary: AnalysisSummary {
            schema: SCHEMA.to_string(),
            timestamp,
            seed,
            config: RunConfig {
                seed: Some(seed),
                ..cfg.clone()
            },
            validation,
            flocks: reports,
        },
        draws,
    })
}

/// Loads `input` and analyses it; the seed comes from the config or is
/// generated.
pub fn run_analyze(input: impl AsRef<Path>, cfg: &RunConfig) -> Result<AnalysisOutput> {
    cfg.validate()?;
    let (flocks, report) = load_flocks(input, cfg.load_options())?;
    let seed = cfg.seed.unwrap_or_else(rand::random);
    analyze_flocks(&flocks, report, cfg, seed)
}

pub fn write_draws_csv(draws: &PosteriorDraws, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["iteration", "phi", "mu", "delta"]).map_err(io)?;
    for i in 0..draws.len() {
        w.write_record([
            draws.iteration[i].to_string(),
            draws.phi[i].to_string(),
            draws.mu[i].to_string(),
            draws.delta[i].to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Trace path for flock `i`, prior `k`. A single flock under a single prior
/// writes to `base` itself; otherwise the flock id and prior index are
/// appended to the file stem.
pub fn draws_path(base: &Path, output: &AnalysisOutput, i: usize, k: usize) -> PathBuf {
    let flocks = &output.summary.flocks;
    if flocks.len() == 1 && flocks[0].hierarchical.len() == 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("draws");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    let mut name = format!("{stem}_{}", sanitize(&flocks[i].flock_id));
    if flocks[i].hierarchical.len() > 1 {
        name.push_str(&format!("_prior{}", k + 1));
    }
    base.with_file_name(format!("{name}.{ext}"))
}

/// Writes the JSON summary and draw traces to the configured paths.
pub fn write_outputs(output: &AnalysisOutput, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if let Some(path) = &cfg.summary_path {
        std::fs::write(path, output.summary.to_json()?)?;
        written.push(path.clone());
    }
    if let Some(base) = &cfg.draws_path {
        for (i, per_prior) in output.draws.iter().enumerate() {
            for (k, d) in per_prior.iter().enumerate() {
                let path = draws_path(base, output, i, k);
                write_draws_csv(d, std::fs::File::create(&path)?)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

fn fmt_ci(r: &FecrResult) -> String {
    match (r.ci_lower, r.ci_upper) {
        (Some(l), Some(u)) => format!("[{l:.1}, {u:.1}]"),
        _ => "[absent]".to_string(),
    }
}

/// Rounded human-readable summary.
pub fn render_console(summary: &AnalysisSummary) -> String {
    let mut s = String::new();
    for f in &summary.flocks {
        s.push_str(&format!("flock {} ({} animals)\n", f.flock_id, f.n_animals));
        s.push_str(&format!(
            "  FECRT {:.1}%  approx CI {} -> {:?}  bootstrap CI {} -> {:?}\n",
            f.fecrt_approximate.estimate,
            fmt_ci(&f.fecrt_approximate),
            f.verdict_approximate.level,
            fmt_ci(&f.fecrt_bootstrap),
            f.verdict_bootstrap.level,
        ));
        for h in &f.hierarchical {
            let r = &h.summary.reduction;
            s.push_str(&format!(
                "  Beta({}, {}) prior: reduction {:.1}% HPD [{:.1}, {:.1}] -> {:?}; P(<95%) = {:.3} ({:?}); acceptance phi {:.2} mu {:.2} delta {:.2}\n",
                h.prior.a_delta,
                h.prior.b_delta,
                r.median,
                r.hpd_lower,
                r.hpd_upper,
                h.verdict.level,
                h.prob_reduction_below_95,
                h.denwood,
                h.acceptance.phi,
                h.acceptance.mu,
                h.acceptance.delta,
            ));
        }
    }
    if summary.validation.excluded_missing_post > 0 {
        s.push_str(&format!(
            "{} animal(s) excluded for missing post-treatment counts\n",
            summary.validation.excluded_missing_post
        ));
    }
    s
}
