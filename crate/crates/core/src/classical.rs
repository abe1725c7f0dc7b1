//! The standard faecal egg count reduction test (FECRT).
//!
//! Point estimate `100 (1 - mean(post) / mean(pre))`, the approximate
//! log-ratio interval with a t quantile, a paired percentile bootstrap and
//! the WAAVP resistance classification.

use serde::{Deserialize, Serialize};

use crate::distributions::t_quantile;
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Paired pre/post treatment egg counts (eggs per gram), one entry per animal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedEpgSample {
    pre: Vec<f64>,
    post: Vec<f64>,
}

impl PairedEpgSample {
    pub fn new(pre: Vec<f64>, post: Vec<f64>) -> Result<Self> {
        if pre.len() != post.len() {
            return Err(Error::InvalidSample(format!(
                "pre has {} animals but post has {}",
                pre.len(),
                post.len()
            )));
        }
        if pre.len() < 2 {
            return Err(Error::InvalidSample("at least two animals are required".into()));
        }
        if let Some(v) = pre.iter().chain(&post).find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidSample(format!(
                "counts must be finite and non-negative, got {v}"
            )));
        }
        Ok(Self { pre, post })
    }

    pub fn pre(&self) -> &[f64] {
        &self.pre
    }

    pub fn post(&self) -> &[f64] {
        &self.post
    }

    pub fn len(&self) -> usize {
        self.pre.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pre.is_empty()
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMethod {
    Approximate,
    Bootstrap,
}

/// A reduction estimate in percent with an optional interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FecrResult {
    pub estimate: f64,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub method: IntervalMethod,
    /// Degrees of freedom for the approximate interval.
    pub df: Option<u32>,
    /// Number of bootstrap resamples for the bootstrap interval.
    pub resamples: Option<usize>,
}

impl FecrResult {
    pub fn has_interval(&self) -> bool {
        self.ci_lower.is_some() && self.ci_upper.is_some()
    }
}

/// Percent reduction in mean counts.
pub fn fecr_point(sample: &PairedEpgSample) -> Result<f64> {
    let pre = mean(&sample.pre);
    if pre <= 0.0 {
        return Err(Error::UndefinedEstimate("pre-treatment mean is zero".into()));
    }
    Ok(100.0 * (1.0 - mean(&sample.post) / pre))
}

/// Approximate interval on the log ratio of means, back-transformed to the
/// percent-reduction scale.
///
/// The interval is absent when the post-treatment mean or variance is zero.
pub fn fecr_approx_ci(sample: &PairedEpgSample, level: f64) -> Result<FecrResult> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::ParameterDomain(format!("level must be in (0, 1), got {level}")));
    }
    let estimate = fecr_point(sample)?;
    let n = sample.len();
    let df = (2 * n - 2) as u32;
    let mut result = FecrResult {
        estimate,
        ci_lower: None,
        ci_upper: None,
        method: IntervalMethod::Approximate,
        df: Some(df),
        resamples: None,
    };
    let mean_pre = mean(&sample.pre);
    let mean_post = mean(&sample.post);
    let var_post = sample_variance(&sample.post);
    if mean_post <= 0.0 || var_post <= 0.0 {
        return Ok(result);
    }
    let var_pre = sample_variance(&sample.pre);
    let nf = n as f64;
    let var_log_ratio = var_post / nf / mean_post.powi(2) + var_pre / nf / mean_pre.powi(2);
    let t = t_quantile(0.5 + level / 2.0, df)?;
    let half_width = t * var_log_ratio.sqrt();
    let log_ratio = (mean_post / mean_pre).ln();
    result.ci_lower = Some(100.0 * (1.0 - (log_ratio + half_width).exp()));
    result.ci_upper = Some((100.0 * (1.0 - (log_ratio - half_width).exp())).min(100.0));
    Ok(result)
}

/// Paired percentile bootstrap: animals are resampled with their pre and post
/// counts kept together.
///
/// The interval endpoints are the `(R + 1) * alpha / 2` and
/// `(R + 1) * (1 - alpha / 2)` order statistics of the `R` resampled
/// estimates (rounded to the nearest rank and clamped into `1..=R`).
pub fn fecr_bootstrap_ci(
    sample: &PairedEpgSample,
    resamples: usize,
    level: f64,
    rng: &mut RngStream,
) -> Result<FecrResult> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::ParameterDomain(format!("level must be in (0, 1), got {level}")));
    }
    if resamples == 0 {
        return Err(Error::ParameterDomain("need at least one bootstrap resample".into()));
    }
    let estimate = fecr_point(sample)?;
    let mut result = FecrResult {
        estimate,
        ci_lower: None,
        ci_upper: None,
        method: IntervalMethod::Bootstrap,
        df: None,
        resamples: Some(resamples),
    };
    if sample.post.iter().all(|&v| v == 0.0) {
        return Ok(result);
    }

    let n = sample.len();
    let mut stats = Vec::with_capacity(resamples);
    while stats.len() < resamples {
        let (mut pre, mut post) = (0.0, 0.0);
        for _ in 0..n {
            let i = rng.below(n);
            pre += sample.pre[i];
            post += sample.post[i];
        }
        if pre > 0.0 {
            stats.push(100.0 * (1.0 - post / pre));
        }
    }
    stats.sort_by(f64::total_cmp);
    let alpha = 1.0 - level;
    let rank = |q: f64| -> usize {
        let k = ((resamples as f64 + 1.0) * q).round() as usize;
        k.clamp(1, resamples) - 1
    };
    result.ci_lower = Some(stats[rank(alpha / 2.0)]);
    result.ci_upper = Some(stats[rank(1.0 - alpha / 2.0)]);
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResistanceLevel {
    Present,
    Suspected,
    Absent,
}

impl ResistanceLevel {
    /// Lower-case label; `Suspected` reads as "possible".
    pub fn label(&self) -> &'static str {
        match self {
            ResistanceLevel::Present => "present",
            ResistanceLevel::Suspected => "possible",
            ResistanceLevel::Absent => "absent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictSource {
    Classical,
    Hierarchical,
}

/// Outcome of the WAAVP rule together with the two criteria behind it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResistanceVerdict {
    pub level: ResistanceLevel,
    /// Estimated reduction below the efficacy threshold (95%).
    pub criterion_a_met: bool,
    /// Lower interval limit below the lower-limit threshold (90%).
    pub criterion_b_met: bool,
    /// Set when no lower limit was available; criterion b then counts as unmet.
    pub lower_limit_absent: bool,
    pub source: VerdictSource,
}

/// Thresholds of the WAAVP decision rule, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaavpThresholds {
    pub reduction: f64,
    pub lower_limit: f64,
}

impl Default for WaavpThresholds {
    fn default() -> Self {
        Self {
            reduction: 95.0,
            lower_limit: 90.0,
        }
    }
}

pub(crate) fn level_from_criteria(a: bool, b: bool) -> ResistanceLevel {
    match (a, b) {
        (true, true) => ResistanceLevel::Present,
        (false, false) => ResistanceLevel::Absent,
        _ => ResistanceLevel::Suspected,
    }
}

pub fn classify_with(
    estimate: f64,
    lower_limit: Option<f64>,
    thresholds: WaavpThresholds,
    source: VerdictSource,
) -> ResistanceVerdict {
    let criterion_a_met = estimate < thresholds.reduction;
    let criterion_b_met = lower_limit.is_some_and(|l| l < thresholds.lower_limit);
    ResistanceVerdict {
        level: level_from_criteria(criterion_a_met, criterion_b_met),
        criterion_a_met,
        criterion_b_met,
        lower_limit_absent: lower_limit.is_none(),
        source,
    }
}

/// WAAVP rule with the standard 95% / 90% thresholds. Resistance is present
/// when both the estimate is below 95 and the lower limit is below 90,
/// suspected when exactly one holds. A missing lower limit never meets
/// criterion b.
pub fn classify_waavp(estimate: f64, lower_limit: Option<f64>) -> ResistanceVerdict {
    classify_with(
        estimate,
        lower_limit,
        WaavpThresholds::default(),
        VerdictSource::Classical,
    )
}
