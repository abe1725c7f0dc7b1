use serde::{Deserialize, Serialize};

use super::tuning::PhiTuner;
use super::updates::{
    update_delta, update_individual_means, update_latent_post, update_latent_pre, update_mu, update_phi,
    DeltaUpdatePath, MuUpdatePath,
};
use super::{ChainConfig, ChainState, FlockData, PriorConfig};
use crate::error::{Error, Result};
use crate::posterior::PosteriorDraws;
use crate::rng::RngStream;

/// How often each proposal path was taken over the whole run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub mu_inverse_gamma: usize,
    pub mu_log_normal: usize,
    pub mu_gamma: usize,
    pub mu_window_fallback: usize,
    pub delta_beta: usize,
    pub delta_exact: usize,
    pub delta_grid_fallback: usize,
}

impl ChainDiagnostics {
    fn record_mu(&mut self, path: MuUpdatePath) {
        match path {
            MuUpdatePath::InverseGamma => self.mu_inverse_gamma += 1,
            MuUpdatePath::LogNormal => self.mu_log_normal += 1,
            MuUpdatePath::Gamma => self.mu_gamma += 1,
            MuUpdatePath::WindowFallback => self.mu_window_fallback += 1,
        }
    }

    fn record_delta(&mut self, path: DeltaUpdatePath) {
        match path {
            DeltaUpdatePath::Beta => self.delta_beta += 1,
            DeltaUpdatePath::Exact => self.delta_exact += 1,
            DeltaUpdatePath::GridFallback => self.delta_grid_fallback += 1,
        }
    }
}

#[derive(Default)]
struct AcceptCounts {
    phi: usize,
    mu: usize,
    delta: usize,
    total: usize,
}

/// Runs one chain: `burn_in` tuning sweeps followed by `n_samples * thin`
/// sweeps of which every `thin`-th is kept.
///
/// A sweep updates, in order, the latent pre- and post-treatment counts, the
/// individual rates, `phi`, `mu` and `delta`. Acceptance rates are computed
/// over the post-burn-in sweeps. The result depends only on the inputs and
/// `config.seed`.
pub fn run_chain(data: &FlockData, priors: &PriorConfig, config: &ChainConfig) -> Result<PosteriorDraws> {
    priors.validate()?;
    config.validate()?;

    let mut rng = RngStream::new(config.seed);
    let mut state = ChainState::initial(data);
    let mut tuner = PhiTuner::new(
        config.phi_step_s,
        config.target_accept,
        config.tune_interval,
        config.tune_factor,
    );
    let mut diagnostics = ChainDiagnostics::default();
    let mut counts = AcceptCounts::default();

    let mut draws = PosteriorDraws {
        iteration: Vec::with_capacity(config.n_samples),
        phi: Vec::with_capacity(config.n_samples),
        mu: Vec::with_capacity(config.n_samples),
        delta: Vec::with_capacity(config.n_samples),
        accept_phi: 0.0,
        accept_mu: 0.0,
        accept_delta: 0.0,
        seed: config.seed,
        burn_in: config.burn_in,
        thin: config.thin,
        n_samples: config.n_samples,
        phi_step: config.phi_step_s,
        diagnostics,
    };

    let total = config.burn_in + config.n_samples * config.thin;
    for iter in 0..total {
        if iter == config.burn_in {
            tuner.freeze();
        }
        let sweep = (|| -> Result<(bool, bool, bool)> {
            update_latent_pre(&mut state, data, &mut rng)?;
            update_latent_post(&mut state, data, &mut rng)?;
            update_individual_means(&mut state, &mut rng)?;
            let phi_ok = update_phi(&mut state, priors, tuner.step(), &mut rng)?;
            let mu = update_mu(&mut state, priors, &mut rng)?;
            let delta = update_delta(&mut state, priors, &mut rng)?;
            diagnostics.record_mu(mu.path);
            diagnostics.record_delta(delta.path);
            Ok((phi_ok, mu.accepted, delta.accepted))
        })();
        let (phi_ok, mu_ok, delta_ok) = sweep.map_err(|e| Error::ChainFailure {
            iteration: iter,
            reason: e.to_string(),
            snapshot: state.snapshot(),
        })?;
        if let Err(reason) = state.check_support(data) {
            return Err(Error::ChainFailure {
                iteration: iter,
                reason,
                snapshot: state.snapshot(),
            });
        }

        if iter < config.burn_in {
            tuner.record(phi_ok);
            continue;
        }
        counts.total += 1;
        counts.phi += phi_ok as usize;
        counts.mu += mu_ok as usize;
        counts.delta += delta_ok as usize;
        let k = iter - config.burn_in + 1;
        if k.is_multiple_of(config.thin) {
            draws.iteration.push(iter + 1);
            draws.phi.push(state.phi);
            draws.mu.push(state.mu);
            draws.delta.push(state.delta);
        }
    }

    let t = counts.total.max(1) as f64;
    draws.accept_phi = counts.phi as f64 / t;
    draws.accept_mu = counts.mu as f64 / t;
    draws.accept_delta = counts.delta as f64 / t;
    draws.phi_step = tuner.step();
    draws.diagnostics = diagnostics;
    Ok(draws)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> FlockData {
        FlockData::with_common_factor(vec![12, 3, 25, 0, 7, 9], vec![2, 0, 4, 0, 1, 0], 50.0).unwrap()
    }

    fn short() -> ChainConfig {
        ChainConfig {
            n_samples: 300,
            burn_in: 400,
            thin: 2,
            seed: 99,
            ..ChainConfig::default()
        }
    }

    #[test]
    fn lengths_and_iterations() {
        let d = run_chain(&small(), &PriorConfig::default(), &short()).unwrap();
        assert_eq!(d.delta.len(), 300);
        assert_eq!(d.phi.len(), 300);
        assert_eq!(d.iteration[0], 402);
        assert_eq!(*d.iteration.last().unwrap(), 1000);
        assert!(d.delta.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn deterministic_given_seed() {
        let a = run_chain(&small(), &PriorConfig::default(), &short()).unwrap();
        let b = run_chain(&small(), &PriorConfig::default(), &short()).unwrap();
        assert_eq!(a, b);
        let c = run_chain(&small(), &PriorConfig::default(), &short().with_seed(100)).unwrap();
        assert_ne!(a.delta, c.delta);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = ChainConfig {
            n_samples: 0,
            ..short()
        };
        assert!(run_chain(&small(), &PriorConfig::default(), &cfg).is_err());
    }
}
