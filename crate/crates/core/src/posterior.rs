//! Posterior summaries: HPD intervals, tail probabilities, resistance
//! classification and effective sample size.

use serde::{Deserialize, Serialize};

use crate::classical::{classify_with, ResistanceVerdict, VerdictSource, WaavpThresholds};
use crate::error::{Error, Result};
use crate::mcmc::ChainDiagnostics;

/// Thinned post-burn-in draws of `(phi, mu, delta)` from one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    /// Sweep index (1-based, counting burn-in) of each kept draw.
    pub iteration: Vec<usize>,
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
    pub delta: Vec<f64>,
    pub accept_phi: f64,
    pub accept_mu: f64,
    pub accept_delta: f64,
    pub seed: u64,
    pub burn_in: usize,
    pub thin: usize,
    pub n_samples: usize,
    /// Final (frozen) half-width of the `phi` proposal.
    pub phi_step: f64,
    pub diagnostics: ChainDiagnostics,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    /// Percent reduction `100 (1 - delta)` per draw.
    pub fn reduction(&self) -> Vec<f64> {
        self.delta.iter().map(|d| 100.0 * (1.0 - d)).collect()
    }
}

/// Shortest interval over order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HpdInterval {
    pub lower: f64,
    pub upper: f64,
    /// A window at most twice as wide exists more than one interval width
    /// away from the chosen one, hinting at more than one mode.
    pub multimodal: bool,
}

pub const MIN_SAMPLES: usize = 100;

/// Shortest window containing `ceil(level * N)` consecutive order
/// statistics. Ties go to the window with the lowest lower endpoint.
pub fn hpd_interval(samples: &[f64], level: f64) -> Result<HpdInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::ParameterDomain(format!(
            "HPD level must be in (0, 1), got {level}"
        )));
    }
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let k = ((level * n as f64).ceil() as usize).clamp(1, n);
    let widths: Vec<f64> = (0..=n - k).map(|i| sorted[i + k - 1] - sorted[i]).collect();
    let mut best = 0;
    for (i, &w) in widths.iter().enumerate() {
        if w < widths[best] {
            best = i;
        }
    }
    // runner-up: shortest window whose lower end lies more than one best
    // width away from the chosen one
    let best_width = widths[best];
    let mut runner_up: Option<usize> = None;
    for (i, &w) in widths.iter().enumerate() {
        if (sorted[i] - sorted[best]).abs() > best_width && runner_up.is_none_or(|r| w < widths[r]) {
            runner_up = Some(i);
        }
    }
    let multimodal = runner_up.is_some_and(|r| widths[r] <= 2.0 * best_width);
    Ok(HpdInterval {
        lower: sorted[best],
        upper: sorted[best + k - 1],
        multimodal,
    })
}

fn median_of(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub median: f64,
    pub mean: f64,
    pub hpd_lower: f64,
    pub hpd_upper: f64,
    pub multimodal: bool,
}

impl ParameterSummary {
    pub fn from_samples(samples: &[f64], level: f64) -> Result<Self> {
        let hpd = hpd_interval(samples, level)?;
        Ok(Self {
            median: median_of(samples),
            mean: samples.iter().sum::<f64>() / samples.len() as f64,
            hpd_lower: hpd.lower,
            hpd_upper: hpd.upper,
            multimodal: hpd.multimodal,
        })
    }
}

/// Medians, means and HPD intervals of the model parameters; `reduction` is
/// on the `100 (1 - delta)` percent scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub level: f64,
    pub reduction: ParameterSummary,
    pub delta: ParameterSummary,
    pub mu: ParameterSummary,
    pub phi: ParameterSummary,
}

pub fn summarize(draws: &PosteriorDraws, level: f64) -> Result<PosteriorSummary> {
    let delta = ParameterSummary::from_samples(&draws.delta, level)?;
    let mut reduction = ParameterSummary::from_samples(&draws.reduction(), level)?;
    // keep the percent-scale median an exact image of the delta median
    reduction.median = 100.0 * (1.0 - delta.median);
    Ok(PosteriorSummary {
        level,
        reduction,
        delta,
        mu: ParameterSummary::from_samples(&draws.mu, level)?,
        phi: ParameterSummary::from_samples(&draws.phi, level)?,
    })
}

/// Posterior probability that the percent reduction is below `threshold`.
pub fn prob_reduction_below(delta: &[f64], threshold: f64) -> f64 {
    if delta.is_empty() {
        return f64::NAN;
    }
    let hits = delta.iter().filter(|d| 100.0 * (1.0 - **d) < threshold).count();
    hits as f64 / delta.len() as f64
}

/// WAAVP rule applied to the posterior median and the HPD lower limit of the
/// percent reduction.
pub fn classify_hierarchical(summary: &PosteriorSummary) -> ResistanceVerdict {
    classify_hierarchical_with(summary, WaavpThresholds::default())
}

pub fn classify_hierarchical_with(summary: &PosteriorSummary, thresholds: WaavpThresholds) -> ResistanceVerdict {
    classify_with(
        summary.reduction.median,
        Some(summary.reduction.hpd_lower),
        thresholds,
        VerdictSource::Hierarchical,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenwoodVerdict {
    ConfirmedResistance,
    ConfirmedSusceptibility,
    Inconclusive,
}

impl DenwoodVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            DenwoodVerdict::ConfirmedResistance => "resistance",
            DenwoodVerdict::ConfirmedSusceptibility => "susceptibility",
            DenwoodVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Cut-offs on `P(reduction < 95%)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenwoodThresholds {
    pub resistance: f64,
    pub susceptibility: f64,
}

impl Default for DenwoodThresholds {
    fn default() -> Self {
        Self {
            resistance: 0.975,
            susceptibility: 0.025,
        }
    }
}

pub fn denwood_from_probability(prob: f64, thresholds: DenwoodThresholds) -> DenwoodVerdict {
    if prob > thresholds.resistance {
        DenwoodVerdict::ConfirmedResistance
    } else if prob < thresholds.susceptibility {
        DenwoodVerdict::ConfirmedSusceptibility
    } else {
        DenwoodVerdict::Inconclusive
    }
}

pub fn classify_denwood(draws: &PosteriorDraws) -> DenwoodVerdict {
    denwood_from_probability(prob_reduction_below(&draws.delta, 95.0), DenwoodThresholds::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSampleSize {
    pub value: f64,
    /// All samples identical; the value is reported as N.
    pub zero_variance: bool,
}

/// Effective sample size with Geyer's initial positive sequence estimator.
pub fn effective_sample_size(samples: &[f64]) -> Result<EffectiveSampleSize> {
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_SAMPLES,
            got: n,
        });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = samples.iter().map(|x| x - mean).collect();
    let autocov = |lag: usize| -> f64 {
        centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let c0 = autocov(0);
    if c0 <= 0.0 || !c0.is_finite() {
        return Ok(EffectiveSampleSize {
            value: n as f64,
            zero_variance: true,
        });
    }
    let mut sum_pairs = 0.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = (autocov(2 * m) + autocov(2 * m + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        sum_pairs += pair;
        m += 1;
    }
    let tau = (-1.0 + 2.0 * sum_pairs).max(1.0 / n as f64);
    Ok(EffectiveSampleSize {
        value: n as f64 / tau,
        zero_variance: false,
    })
}
