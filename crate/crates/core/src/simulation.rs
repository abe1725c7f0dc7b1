//! Synthetic flocks and the comparative classification study.
//!
//! Flocks are generated as: `mu_i ~ Gamma(phi, phi / mu)`,
//! `y_b_i ~ Pois(mu_i)`, `raw_pre_i ~ Pois(y_b_i / f)`,
//! `y_a_i ~ Pois(mu_i (1 - d / 100))`, `raw_post_i ~ Pois(y_a_i / f)`.
//! The slide counts are Poisson-thinned here although the model assumes
//! binomial sub-sampling; the mismatch is intentional.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{classify_waavp, fecr_approx_ci, fecr_bootstrap_ci, ResistanceLevel};
use crate::distributions::{sample_gamma, sample_poisson};
use crate::error::{Error, Result};
use crate::mcmc::{run_chain, ChainConfig, FlockData, PriorConfig};
use crate::posterior::{
    classify_hierarchical, denwood_from_probability, prob_reduction_below, summarize, DenwoodThresholds, DenwoodVerdict,
};
use crate::rng::RngStream;

/// The efficacy grid used when none is given.
pub const DEFAULT_EFFICACIES: [f64; 8] = [85.0, 87.0, 89.0, 91.0, 93.0, 95.0, 97.0, 99.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_animals: usize,
    pub true_mu: f64,
    pub true_phi: f64,
    pub correction_factor: f64,
    /// True efficacies `d` in percent.
    pub efficacies: Vec<f64>,
    pub replicates: usize,
    pub chain: ChainConfig,
    pub priors: PriorConfig,
    pub bootstrap_resamples: usize,
    pub level: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_animals: 15,
            true_mu: 500.0,
            true_phi: 0.9,
            correction_factor: 50.0,
            efficacies: DEFAULT_EFFICACIES.to_vec(),
            replicates: 200,
            chain: ChainConfig::desk(),
            priors: PriorConfig::default(),
            bootstrap_resamples: 1999,
            level: 0.95,
            seed: 1,
        }
    }
}

impl ScenarioConfig {
    /// 2000 replicates with full-length chains.
    pub fn paper_scale(self) -> Self {
        Self {
            replicates: 2000,
            chain: ChainConfig {
                seed: self.chain.seed,
                ..ChainConfig::default()
            },
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_animals < 2 {
            return Err(Error::Config("a scenario needs at least two animals".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if !(self.correction_factor >= 1.0) {
            return Err(Error::Config("correction factor must be >= 1".into()));
        }
        if !(self.true_mu > 0.0) || !(self.true_phi > 0.0) {
            return Err(Error::Config("true mu and phi must be positive".into()));
        }
        if self.efficacies.is_empty() || self.efficacies.iter().any(|d| !(0.0..=100.0).contains(d)) {
            return Err(Error::Config("efficacies must lie in [0, 100]".into()));
        }
        self.priors.validate()?;
        self.chain.validate()
    }
}

/// A generated flock with its latent quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedFlock {
    pub data: FlockData,
    pub mu_i: Vec<f64>,
    pub latent_pre: Vec<u64>,
    pub latent_post: Vec<u64>,
}

pub fn simulate_flock(cfg: &ScenarioConfig, efficacy: f64, rng: &mut RngStream) -> Result<SimulatedFlock> {
    let n = cfg.n_animals;
    let f = cfg.correction_factor;
    let keep = 1.0 - efficacy / 100.0;
    let mut mu_i = Vec::with_capacity(n);
    let mut latent_pre = Vec::with_capacity(n);
    let mut latent_post = Vec::with_capacity(n);
    let mut raw_pre = Vec::with_capacity(n);
    let mut raw_post = Vec::with_capacity(n);
    for _ in 0..n {
        let m = sample_gamma(cfg.true_phi, cfg.true_phi / cfg.true_mu, rng)?;
        let yb = sample_poisson(m, rng)?;
        let rb = sample_poisson(yb as f64 / f, rng)?;
        let ya = sample_poisson(m * keep, rng)?;
        let ra = sample_poisson(ya as f64 / f, rng)?;
        mu_i.push(m);
        latent_pre.push(yb);
        latent_post.push(ya);
        raw_pre.push(rb);
        raw_post.push(ra);
    }
    Ok(SimulatedFlock {
        data: FlockData::with_common_factor(raw_pre, raw_post, f)?,
        mu_i,
        latent_pre,
        latent_post,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ApproximateFecrt,
    BootstrapFecrt,
    Hierarchical,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::ApproximateFecrt, Method::BootstrapFecrt, Method::Hierarchical];

    pub fn label(&self) -> &'static str {
        match self {
            Method::ApproximateFecrt => "fecrt_approximate",
            Method::BootstrapFecrt => "fecrt_bootstrap",
            Method::Hierarchical => "hierarchical",
        }
    }
}

/// One replicate's verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub approximate: ResistanceLevel,
    pub bootstrap: ResistanceLevel,
    pub hierarchical: ResistanceLevel,
    pub hierarchical_median: f64,
    pub hierarchical_hpd_lower: f64,
    pub hierarchical_hpd_upper: f64,
    /// `P(reduction < 95%)` under the hierarchical model.
    pub prob_below_95: f64,
    pub denwood: DenwoodVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodFractions {
    pub method: Method,
    pub present: f64,
    pub suspected: f64,
    pub absent: f64,
}

impl MethodFractions {
    fn from_levels(method: Method, levels: impl Iterator<Item = ResistanceLevel>) -> Self {
        let (mut p, mut s, mut a) = (0usize, 0usize, 0usize);
        for l in levels {
            match l {
                ResistanceLevel::Present => p += 1,
                ResistanceLevel::Suspected => s += 1,
                ResistanceLevel::Absent => a += 1,
            }
        }
        let total = (p + s + a).max(1) as f64;
        Self {
            method,
            present: p as f64 / total,
            suspected: s as f64 / total,
            absent: a as f64 / total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficacyResult {
    pub efficacy: f64,
    pub replicates: usize,
    pub failures: usize,
    pub fractions: Vec<MethodFractions>,
    pub outcomes: Vec<ReplicateOutcome>,
    pub denwood_resistance: usize,
    pub denwood_susceptibility: usize,
    pub denwood_inconclusive: usize,
    pub mean_prob_below_95: f64,
}

impl EfficacyResult {
    pub fn fractions_for(&self, method: Method) -> MethodFractions {
        *self
            .fractions
            .iter()
            .find(|f| f.method == method)
            .expect("all methods present")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub efficacies: Vec<EfficacyResult>,
}

impl ScenarioResult {
    pub fn for_efficacy(&self, d: f64) -> Option<&EfficacyResult> {
        self.efficacies.iter().find(|e| (e.efficacy - d).abs() < 1e-9)
    }
}

fn efficacy_key(d: f64) -> u64 {
    (d * 1000.0).round() as u64
}

fn run_replicate(cfg: &ScenarioConfig, efficacy: f64, replicate: usize) -> Result<ReplicateOutcome> {
    let mut rng = RngStream::new(cfg.seed)
        .substream(efficacy_key(efficacy))
        .substream(replicate as u64);
    let flock = simulate_flock(cfg, efficacy, &mut rng)?;
    let sample = flock.data.to_epg_sample()?;

    let approx = fecr_approx_ci(&sample, cfg.level)?;
    let boot = fecr_bootstrap_ci(&sample, cfg.bootstrap_resamples, cfg.level, &mut rng.substream(1))?;

    let chain = ChainConfig {
        seed: rng.substream(2).seed(),
        ..cfg.chain
    };
    let draws = run_chain(&flock.data, &cfg.priors, &chain)?;
    let summary = summarize(&draws, cfg.level)?;
    let prob = prob_reduction_below(&draws.delta, 95.0);

    Ok(ReplicateOutcome {
        replicate,
        approximate: classify_waavp(approx.estimate, approx.ci_lower).level,
        bootstrap: classify_waavp(boot.estimate, boot.ci_lower).level,
        hierarchical: classify_hierarchical(&summary).level,
        hierarchical_median: summary.reduction.median,
        hierarchical_hpd_lower: summary.reduction.hpd_lower,
        hierarchical_hpd_upper: summary.reduction.hpd_upper,
        prob_below_95: prob,
        denwood: denwood_from_probability(prob, DenwoodThresholds::default()),
    })
}

/// Runs every replicate at one efficacy. Failed replicates (undefined
/// classical estimate or a chain failure) are excluded and counted; more
/// than 5% failures abort.
pub fn run_efficacy(cfg: &ScenarioConfig, efficacy: f64) -> Result<EfficacyResult> {
    let results: Vec<Result<ReplicateOutcome>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| run_replicate(cfg, efficacy, r))
        .collect();
    let failures = results.iter().filter(|r| r.is_err()).count();
    if failures as f64 > 0.05 * cfg.replicates as f64 {
        return Err(Error::ScenarioAborted {
            failed: failures,
            total: cfg.replicates,
        });
    }
    let outcomes: Vec<ReplicateOutcome> = results.into_iter().filter_map(|r| r.ok()).collect();
    let fractions = vec![
        MethodFractions::from_levels(Method::ApproximateFecrt, outcomes.iter().map(|o| o.approximate)),
        MethodFractions::from_levels(Method::BootstrapFecrt, outcomes.iter().map(|o| o.bootstrap)),
        MethodFractions::from_levels(Method::Hierarchical, outcomes.iter().map(|o| o.hierarchical)),
    ];
    let count = |v: DenwoodVerdict| outcomes.iter().filter(|o| o.denwood == v).count();
    let mean_prob = outcomes.iter().map(|o| o.prob_below_95).sum::<f64>() / outcomes.len().max(1) as f64;
    Ok(EfficacyResult {
        efficacy,
        replicates: outcomes.len(),
        failures,
        fractions,
        denwood_resistance: count(DenwoodVerdict::ConfirmedResistance),
        denwood_susceptibility: count(DenwoodVerdict::ConfirmedSusceptibility),
        denwood_inconclusive: count(DenwoodVerdict::Inconclusive),
        mean_prob_below_95: mean_prob,
        outcomes,
    })
}

/// Runs the full efficacy grid.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioResult> {
    cfg.validate()?;
    let efficacies = cfg
        .efficacies
        .iter()
        .map(|&d| run_efficacy(cfg, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioResult {
        config: cfg.clone(),
        efficacies,
    })
}
