//! Gibbs / Metropolis–Hastings sampler for the paired hierarchical model.
//!
//! Model, per animal `i`:
//!
//! ```text
//! raw_pre_i  | y_b_i   ~ Bin(y_b_i, p_i)
//! raw_post_i | y_a_i   ~ Bin(y_a_i, p_i)
//! y_b_i      | mu_i    ~ Pois(mu_i)
//! y_a_i      | mu_i    ~ Pois(delta * mu_i)
//! mu_i       | phi, mu ~ Gamma(shape = phi, rate = phi / mu)
//! ```
//!
//! with `phi ~ Gamma(a_phi, b_phi)`, `mu ~ Gamma(a_mu, b_mu)` and
//! `delta ~ Beta(a_delta, b_delta)`. `p_i = 1 / f_i` is the sub-sampling
//! fraction given by the correction factor of the counting technique.

mod chain;
mod proposal;
mod tuning;
mod updates;

pub use chain::{run_chain, ChainDiagnostics};
pub use proposal::{
    build_delta_proposal, build_mu_proposal, kl_divergence, kl_select, mu_candidates, DeltaConditional, GridProposal,
    MuConditional, ProposalFamily, ProposalSpec,
};
pub use tuning::PhiTuner;
pub use updates::{
    delta_conditional_coeffs, ln_phi_conditional, mu_conditional_coeffs, update_delta, update_individual_means,
    update_latent_post, update_latent_pre, update_mu, update_phi, DeltaUpdatePath, MuUpdatePath, UpdateOutcome,
};

use serde::{Deserialize, Serialize};

use crate::classical::PairedEpgSample;
use crate::error::{Error, Result};

/// Observed slide counts for one flock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlockData {
    raw_pre: Vec<u64>,
    raw_post: Vec<u64>,
    correction_factor: Vec<f64>,
}

impl FlockData {
    pub fn new(raw_pre: Vec<u64>, raw_post: Vec<u64>, correction_factor: Vec<f64>) -> Result<Self> {
        let n = raw_pre.len();
        if n == 0 {
            return Err(Error::InvalidSample("a flock needs at least one animal".into()));
        }
        if raw_post.len() != n || correction_factor.len() != n {
            return Err(Error::InvalidSample("per-animal columns differ in length".into()));
        }
        if let Some(f) = correction_factor.iter().find(|f| !(**f >= 1.0) || !f.is_finite()) {
            return Err(Error::InvalidSample(format!("correction factor must be >= 1, got {f}")));
        }
        Ok(Self {
            raw_pre,
            raw_post,
            correction_factor,
        })
    }

    /// All animals share one correction factor.
    pub fn with_common_factor(raw_pre: Vec<u64>, raw_post: Vec<u64>, f: f64) -> Result<Self> {
        let n = raw_pre.len();
        Self::new(raw_pre, raw_post, vec![f; n])
    }

    pub fn len(&self) -> usize {
        self.raw_pre.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw_pre.is_empty()
    }

    pub fn raw_pre(&self) -> &[u64] {
        &self.raw_pre
    }

    pub fn raw_post(&self) -> &[u64] {
        &self.raw_post
    }

    pub fn correction_factor(&self) -> &[f64] {
        &self.correction_factor
    }

    /// Sub-sampling probability `1 / f_i`.
    pub fn p(&self, i: usize) -> f64 {
        1.0 / self.correction_factor[i]
    }

    /// Eggs per gram (`raw * f`) for the classical test.
    pub fn to_epg_sample(&self) -> Result<PairedEpgSample> {
        let epg = |raw: &[u64]| -> Vec<f64> {
            raw.iter()
                .zip(&self.correction_factor)
                .map(|(&r, &f)| r as f64 * f)
                .collect()
        };
        PairedEpgSample::new(epg(&self.raw_pre), epg(&self.raw_post))
    }
}

/// Hyperparameters of the gamma priors on `phi` and `mu` (shape, rate) and
/// the beta prior on `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub a_phi: f64,
    pub b_phi: f64,
    pub a_mu: f64,
    pub b_mu: f64,
    pub a_delta: f64,
    pub b_delta: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            a_phi: 1.0,
            b_phi: 0.7,
            a_mu: 1.0,
            b_mu: 0.001,
            a_delta: 1.0,
            b_delta: 1.0,
        }
    }
}

impl PriorConfig {
    pub fn with_delta_prior(self, a_delta: f64, b_delta: f64) -> Self {
        Self {
            a_delta,
            b_delta,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("a_phi", self.a_phi),
            ("b_phi", self.b_phi),
            ("a_mu", self.a_mu),
            ("b_mu", self.b_mu),
            ("a_delta", self.a_delta),
            ("b_delta", self.b_delta),
        ];
        for (name, v) in all {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!(
                    "prior hyperparameter {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// The four reduction-parameter priors of the sensitivity analysis.
    pub fn sensitivity_priors(self) -> [PriorConfig; 4] {
        [
            self.with_delta_prior(1.0, 1.0),
            self.with_delta_prior(0.5, 1.0),
            self.with_delta_prior(1.0, 0.5),
            self.with_delta_prior(5.0, 1.0),
        ]
    }
}

/// Run lengths and tuning settings for one chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Initial half-width of the uniform proposal for `phi`.
    pub phi_step_s: f64,
    pub target_accept: (f64, f64),
    pub tune_interval: usize,
    pub tune_factor: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            burn_in: 10_000,
            thin: 10,
            seed: 1,
            phi_step_s: 0.5,
            target_accept: (0.30, 0.40),
            tune_interval: 200,
            tune_factor: 1.5,
        }
    }
}

impl ChainConfig {
    /// Shorter chains for simulation studies and tests.
    pub fn desk() -> Self {
        Self {
            n_samples: 2_000,
            burn_in: 2_000,
            thin: 2,
            ..Self::default()
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if !(self.phi_step_s > 0.0) {
            return Err(Error::Config("phi step must be positive".into()));
        }
        let (lo, hi) = self.target_accept;
        if !(0.0 < lo && lo < hi && hi < 1.0) {
            return Err(Error::Config(
                "target acceptance band must satisfy 0 < lo < hi < 1".into(),
            ));
        }
        if self.tune_interval == 0 || !(self.tune_factor > 1.0) {
            return Err(Error::Config("tuning interval must be >= 1 and factor > 1".into()));
        }
        Ok(())
    }
}

/// Current values of all latent variables and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    /// Latent true pre-treatment counts.
    pub y_b: Vec<u64>,
    /// Latent true post-treatment counts.
    pub y_a: Vec<u64>,
    /// Individual pre-treatment epg rates.
    pub mu_i: Vec<f64>,
    pub phi: f64,
    pub mu: f64,
    pub delta: f64,
}

impl ChainState {
    /// Moment-based starting point: latent counts at `raw * f`, individual
    /// rates at those counts (at least 1), `phi = 1` and `delta` at a
    /// smoothed post/pre ratio clamped into `(0.001, 0.999)`.
    pub fn initial(data: &FlockData) -> Self {
        let scale = |raw: &[u64]| -> Vec<u64> {
            raw.iter()
                .zip(data.correction_factor())
                .map(|(&r, &f)| (r as f64 * f).round() as u64)
                .collect()
        };
        let y_b = scale(data.raw_pre());
        let y_a = scale(data.raw_post());
        let mu_i: Vec<f64> = y_b.iter().map(|&y| (y as f64).max(1.0)).collect();
        let mu = mu_i.iter().sum::<f64>() / mu_i.len() as f64;
        let sum_a: u64 = y_a.iter().sum();
        let sum_b: u64 = y_b.iter().sum();
        let delta = ((sum_a as f64 + 0.5) / (sum_b as f64 + 1.0)).clamp(0.001, 0.999);
        Self {
            y_b,
            y_a,
            mu_i,
            phi: 1.0,
            mu,
            delta,
        }
    }

    /// Checks the support constraints against the observed counts.
    pub fn check_support(&self, data: &FlockData) -> std::result::Result<(), String> {
        for i in 0..data.len() {
            if self.y_b[i] < data.raw_pre()[i] {
                return Err(format!(
                    "y_b[{i}] = {} below observed {}",
                    self.y_b[i],
                    data.raw_pre()[i]
                ));
            }
            if self.y_a[i] < data.raw_post()[i] {
                return Err(format!(
                    "y_a[{i}] = {} below observed {}",
                    self.y_a[i],
                    data.raw_post()[i]
                ));
            }
            if !(self.mu_i[i] > 0.0) || !self.mu_i[i].is_finite() {
                return Err(format!("mu_i[{i}] = {} not positive", self.mu_i[i]));
            }
        }
        if !(self.phi > 0.0) || !self.phi.is_finite() {
            return Err(format!("phi = {} not positive", self.phi));
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(format!("mu = {} not positive", self.mu));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(format!("delta = {} outside (0, 1)", self.delta));
        }
        Ok(())
    }

    pub(crate) fn snapshot(&self) -> String {
        format!(
            "phi={} mu={} delta={} sum_y_b={} sum_y_a={} sum_mu_i={}",
            self.phi,
            self.mu,
            self.delta,
            self.y_b.iter().sum::<u64>(),
            self.y_a.iter().sum::<u64>(),
            self.mu_i.iter().sum::<f64>()
        )
    }
}
