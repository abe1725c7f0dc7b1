//! Single-variable updates of the sampler. Each function mutates the state in
//! place; Metropolis–Hastings steps report whether the proposal was accepted.

use statrs::function::gamma::ln_gamma;

use super::proposal::{
    build_delta_proposal, build_mu_proposal, sample_exact_delta, DeltaConditional, GridProposal, MuConditional,
    ProposalFamily, ProposalSpec,
};
use super::{ChainState, FlockData, PriorConfig};
use crate::distributions::{sample_displaced_poisson, sample_gamma};
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MuUpdatePath {
    InverseGamma,
    LogNormal,
    Gamma,
    /// Random walk on `ln(mu)` after the proposal fit failed.
    WindowFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaUpdatePath {
    Beta,
    /// Truncated-exponential Gibbs draw.
    Exact,
    /// Grid proposal after a boundary mode.
    GridFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateOutcome<P> {
    pub accepted: bool,
    pub path: P,
}

/// Latent pre-treatment counts: `y_b_i = raw_pre_i + Pois((1 - p_i) mu_i)`.
pub fn update_latent_pre(state: &mut ChainState, data: &FlockData, rng: &mut RngStream) -> Result<()> {
    for i in 0..data.len() {
        let mean = (1.0 - data.p(i)) * state.mu_i[i];
        state.y_b[i] = sample_displaced_poisson(data.raw_pre()[i], mean, rng)?;
    }
    Ok(())
}

/// Latent post-treatment counts: `y_a_i = raw_post_i + Pois((1 - p_i) delta mu_i)`.
pub fn update_latent_post(state: &mut ChainState, data: &FlockData, rng: &mut RngStream) -> Result<()> {
    for i in 0..data.len() {
        let mean = (1.0 - data.p(i)) * state.delta * state.mu_i[i];
        state.y_a[i] = sample_displaced_poisson(data.raw_post()[i], mean, rng)?;
    }
    Ok(())
}

/// Individual rates: `mu_i ~ Gamma(y_b_i + y_a_i + phi, 1 + delta + phi / mu)`.
///
/// The rate follows from the joint posterior: the two Poisson terms
/// contribute `exp(-(1 + delta) mu_i)` and the gamma population density
/// contributes `exp(-phi mu_i / mu)`.
pub fn update_individual_means(state: &mut ChainState, rng: &mut RngStream) -> Result<()> {
    let rate = 1.0 + state.delta + state.phi / state.mu;
    for i in 0..state.mu_i.len() {
        let shape = (state.y_b[i] + state.y_a[i]) as f64 + state.phi;
        state.mu_i[i] = sample_gamma(shape, rate, rng)?;
    }
    Ok(())
}

/// Log of the unnormalized `phi` full conditional.
pub fn ln_phi_conditional(phi: f64, mu: f64, mu_i: &[f64], priors: &PriorConfig) -> f64 {
    let sum: f64 = mu_i.iter().sum();
    let sum_ln: f64 = mu_i.iter().map(|m| m.ln()).sum();
    ln_phi_conditional_from_sums(phi, mu, mu_i.len() as f64, sum, sum_ln, priors)
}

fn ln_phi_conditional_from_sums(phi: f64, mu: f64, n: f64, sum: f64, sum_ln: f64, priors: &PriorConfig) -> f64 {
    if phi <= 0.0 {
        return f64::NEG_INFINITY;
    }
    (n * phi + priors.a_phi - 1.0) * phi.ln() - n * ln_gamma(phi) - n * phi * mu.ln() + (phi - 1.0) * sum_ln
        - phi * (sum / mu + priors.b_phi)
}

/// Random-walk step for `phi` with a uniform proposal on
/// `(max(0, phi - s), phi + s)`; the Hastings ratio accounts for the
/// truncation at zero.
pub fn update_phi(state: &mut ChainState, priors: &PriorConfig, step: f64, rng: &mut RngStream) -> Result<bool> {
    let n = state.mu_i.len() as f64;
    let sum: f64 = state.mu_i.iter().sum();
    let sum_ln: f64 = state.mu_i.iter().map(|m| m.ln()).sum();
    let current = state.phi;
    let lo = (current - step).max(0.0);
    let proposal = lo + rng.uniform() * (current + step - lo);
    if proposal <= 0.0 {
        return Ok(false);
    }
    let ln_cur = ln_phi_conditional_from_sums(current, state.mu, n, sum, sum_ln, priors);
    if !ln_cur.is_finite() {
        return Err(Error::DegenerateConditional(format!(
            "phi conditional not finite at {current}"
        )));
    }
    let ln_prop = ln_phi_conditional_from_sums(proposal, state.mu, n, sum, sum_ln, priors);
    // q(x | y) = 1 / (min(y, s) + s)
    let ln_q_forward = -(current.min(step) + step).ln();
    let ln_q_backward = -(proposal.min(step) + step).ln();
    let ln_ratio = ln_prop - ln_cur + ln_q_backward - ln_q_forward;
    if rng.uniform().ln() < ln_ratio {
        state.phi = proposal;
        Ok(true)
    } else {
        Ok(false)
    }
}

/// Coefficients of `G(mu) = a ln(mu) + b mu + c / mu` with
/// `a = n phi - a_mu + 1`, `b = b_mu`, `c = phi * sum(mu_i)`.
pub fn mu_conditional_coeffs(state: &ChainState, priors: &PriorConfig) -> MuConditional {
    let n = state.mu_i.len() as f64;
    MuConditional {
        a: n * state.phi - priors.a_mu + 1.0,
        b: priors.b_mu,
        c: state.phi * state.mu_i.iter().sum::<f64>(),
    }
}

fn independence_step(
    spec: &ProposalSpec,
    current: f64,
    ln_target: impl Fn(f64) -> f64,
    rng: &mut RngStream,
) -> Result<Option<f64>> {
    let proposal = spec.sample(rng)?;
    let ln_cur = ln_target(current);
    if !ln_cur.is_finite() {
        return Err(Error::DegenerateConditional(format!(
            "target not finite at current value {current}"
        )));
    }
    let ln_ratio = ln_target(proposal) - ln_cur + spec.ln_density(current) - spec.ln_density(proposal);
    if rng.uniform().ln() < ln_ratio {
        Ok(Some(proposal))
    } else {
        Ok(None)
    }
}

/// Independence Metropolis–Hastings step for `mu` with the KL-selected
/// mode-matched proposal; a log-scale random walk is used if no proposal
/// can be fitted.
pub fn update_mu(
    state: &mut ChainState,
    priors: &PriorConfig,
    rng: &mut RngStream,
) -> Result<UpdateOutcome<MuUpdatePath>> {
    let cond = mu_conditional_coeffs(state, priors);
    match build_mu_proposal(&cond) {
        Ok(spec) => {
            let path = match spec.family {
                ProposalFamily::InverseGamma { .. } => MuUpdatePath::InverseGamma,
                ProposalFamily::LogNormal { .. } => MuUpdatePath::LogNormal,
                _ => MuUpdatePath::Gamma,
            };
            let accepted = match independence_step(&spec, state.mu, |x| cond.ln_unnorm(x), rng)? {
                Some(x) => {
                    state.mu = x;
                    true
                }
                None => false,
            };
            Ok(UpdateOutcome { accepted, path })
        }
        Err(Error::DegenerateConditional(_)) => {
            let accepted = window_step_log_scale(state, &cond, 0.5, rng)?;
            Ok(UpdateOutcome {
                accepted,
                path: MuUpdatePath::WindowFallback,
            })
        }
        Err(e) => Err(e),
    }
}

fn window_step_log_scale(
    state: &mut ChainState,
    cond: &MuConditional,
    half_width: f64,
    rng: &mut RngStream,
) -> Result<bool> {
    let cur = state.mu;
    let prop = cur * (half_width * (2.0 * rng.uniform() - 1.0)).exp();
    // Jacobian of the log transform
    let ln_cur = cond.ln_unnorm(cur) + cur.ln();
    if !ln_cur.is_finite() {
        return Err(Error::DegenerateConditional(format!(
            "mu conditional not finite at {cur}"
        )));
    }
    let ln_ratio = cond.ln_unnorm(prop) + prop.ln() - ln_cur;
    if rng.uniform().ln() < ln_ratio {
        state.mu = prop;
        Ok(true)
    } else {
        Ok(false)
    }
}

/// Coefficients of `G(delta) = -a ln(delta) - b ln(1 - delta) + c delta` with
/// `a = sum(y_a) + a_delta - 1`, `b = b_delta - 1`, `c = sum(mu_i)`.
pub fn delta_conditional_coeffs(state: &ChainState, priors: &PriorConfig) -> DeltaConditional {
    DeltaConditional {
        a: state.y_a.iter().sum::<u64>() as f64 + priors.a_delta - 1.0,
        b: priors.b_delta - 1.0,
        c: state.mu_i.iter().sum(),
    }
}

/// Independence Metropolis–Hastings step for `delta` with the mode-matched
/// beta proposal, an exact draw when the conditional is a truncated
/// exponential, or a grid proposal when the mode is on the boundary.
pub fn update_delta(
    state: &mut ChainState,
    priors: &PriorConfig,
    rng: &mut RngStream,
) -> Result<UpdateOutcome<DeltaUpdatePath>> {
    let cond = delta_conditional_coeffs(state, priors);
    let (spec, path) = match build_delta_proposal(&cond) {
        Ok(spec) => match spec.family {
            ProposalFamily::Exact { rate } => {
                state.delta = sample_exact_delta(rate, rng)?;
                return Ok(UpdateOutcome {
                    accepted: true,
                    path: DeltaUpdatePath::Exact,
                });
            }
            _ => (spec, DeltaUpdatePath::Beta),
        },
        Err(Error::DegenerateConditional(_)) => {
            let grid = GridProposal::for_delta(&cond)?;
            (
                ProposalSpec {
                    family: ProposalFamily::Grid(grid),
                    mode: 0.0,
                    curvature: f64::NAN,
                },
                DeltaUpdatePath::GridFallback,
            )
        }
        Err(e) => return Err(e),
    };
    let accepted = match independence_step(&spec, state.delta, |x| cond.ln_unnorm(x), rng)? {
        Some(x) => {
            state.delta = x;
            true
        }
        None => false,
    };
    Ok(UpdateOutcome { accepted, path })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flock(pre: Vec<u64>, post: Vec<u64>, f: f64) -> FlockData {
        FlockData::with_common_factor(pre, post, f).unwrap()
    }

    #[test]
    fn no_subsampling_pins_latent_counts() {
        let data = flock(vec![3, 9, 0], vec![1, 0, 2], 1.0);
        let mut s = ChainState::initial(&data);
        let mut rng = RngStream::new(4);
        for _ in 0..100 {
            update_latent_pre(&mut s, &data, &mut rng).unwrap();
            update_latent_post(&mut s, &data, &mut rng).unwrap();
            assert_eq!(s.y_b, vec![3, 9, 0]);
            assert_eq!(s.y_a, vec![1, 0, 2]);
        }
    }

    #[test]
    fn vanishing_rates_pin_latent_counts() {
        let data = flock(vec![3, 9], vec![1, 0], 50.0);
        let mut s = ChainState::initial(&data);
        s.mu_i = vec![1e-300, 1e-300];
        s.delta = 1e-300;
        let mut rng = RngStream::new(4);
        update_latent_pre(&mut s, &data, &mut rng).unwrap();
        update_latent_post(&mut s, &data, &mut rng).unwrap();
        assert_eq!(s.y_b, vec![3, 9]);
        assert_eq!(s.y_a, vec![1, 0]);
    }

    #[test]
    fn latent_pre_increment_mean() {
        let data = flock(vec![10], vec![0], 50.0);
        let mut s = ChainState::initial(&data);
        s.mu_i = vec![500.0];
        let mut rng = RngStream::new(8);
        let n = 20_000;
        let mut acc = 0.0;
        for _ in 0..n {
            update_latent_pre(&mut s, &data, &mut rng).unwrap();
            acc += (s.y_b[0] - 10) as f64;
        }
        assert!((acc / n as f64 - 490.0).abs() / 490.0 < 0.01);
    }

    #[test]
    fn latent_post_increment_mean() {
        let data = flock(vec![10], vec![2], 50.0);
        let mut s = ChainState::initial(&data);
        s.mu_i = vec![500.0];
        s.delta = 0.2;
        let mut rng = RngStream::new(9);
        let n = 20_000;
        let mut acc = 0.0;
        for _ in 0..n {
            update_latent_post(&mut s, &data, &mut rng).unwrap();
            acc += (s.y_a[0] - 2) as f64;
        }
        assert!((acc / n as f64 - 98.0).abs() / 98.0 < 0.02);
    }

    #[test]
    fn individual_mean_conditional_mean() {
        let mut s = ChainState {
            y_b: vec![10],
            y_a: vec![0],
            mu_i: vec![1.0],
            phi: 1.0,
            mu: 10.0,
            delta: 0.5,
        };
        let mut rng = RngStream::new(10);
        let n = 200_000;
        let mut acc = 0.0;
        for _ in 0..n {
            update_individual_means(&mut s, &mut rng).unwrap();
            acc += s.mu_i[0];
        }
        assert!((acc / n as f64 - 6.875).abs() / 6.875 < 0.01);
    }

    #[test]
    fn individual_mean_all_zero_special_case() {
        let mut s = ChainState {
            y_b: vec![0],
            y_a: vec![0],
            mu_i: vec![1.0],
            phi: 1.0,
            mu: 1.0,
            delta: 1e-12,
        };
        let mut rng = RngStream::new(11);
        let n = 200_000;
        let mut acc = 0.0;
        for _ in 0..n {
            update_individual_means(&mut s, &mut rng).unwrap();
            acc += s.mu_i[0];
        }
        assert!((acc / n as f64 - 0.5).abs() < 0.005);
    }

    #[test]
    fn phi_step_to_zero_always_accepts() {
        let mut s = ChainState {
            y_b: vec![5, 8, 2],
            y_a: vec![0, 1, 0],
            mu_i: vec![4.0, 9.0, 2.5],
            phi: 1.3,
            mu: 5.0,
            delta: 0.1,
        };
        let mut rng = RngStream::new(12);
        let acc = (0..2000)
            .filter(|_| update_phi(&mut s, &PriorConfig::default(), 1e-9, &mut rng).unwrap())
            .count();
        assert!(acc >= 1990, "{acc}");
    }

    #[test]
    fn conditional_coefficients() {
        let s = ChainState {
            y_b: vec![1; 10],
            y_a: vec![0; 10],
            mu_i: (1..=10).map(|v| v as f64).collect(),
            phi: 1.0,
            mu: 5.0,
            delta: 0.1,
        };
        let p = PriorConfig::default();
        let m = mu_conditional_coeffs(&s, &p);
        assert_eq!(m.a, 10.0);
        assert_eq!(m.b, p.b_mu);
        assert_eq!(m.c, 55.0);
        let d = delta_conditional_coeffs(&s, &p);
        assert_eq!(d.a, 0.0);
        assert_eq!(d.b, 0.0);
        assert_eq!(d.c, 55.0);
    }
}
