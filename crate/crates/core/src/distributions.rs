//! Samplers and log-density kernels for the families used by the model.
//!
//! All samplers take an explicit [`RngStream`] so that every draw is
//! reproducible from a seed.

use rand_distr::{Binomial, Distribution, Poisson};
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};
use crate::rng::RngStream;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Gamma draw with mean `shape / rate`.
pub fn sample_gamma(shape: f64, rate: f64, rng: &mut RngStream) -> Result<f64> {
    check_positive("gamma shape", shape)?;
    check_positive("gamma rate", rate)?;
    let g = rand_distr::Gamma::new(shape, 1.0 / rate).map_err(|e| domain(e.to_string()))?;
    let x: f64 = g.sample(rng);
    // Tiny shapes can underflow to exactly zero.
    Ok(x.max(f64::MIN_POSITIVE))
}

pub fn sample_beta(a: f64, b: f64, rng: &mut RngStream) -> Result<f64> {
    check_positive("beta a", a)?;
    check_positive("beta b", b)?;
    let d = rand_distr::Beta::new(a, b).map_err(|e| domain(e.to_string()))?;
    let x: f64 = d.sample(rng);
    Ok(x.clamp(f64::EPSILON * 0.5, 1.0 - f64::EPSILON * 0.5))
}

pub fn sample_poisson(mean: f64, rng: &mut RngStream) -> Result<u64> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(domain(format!("poisson mean must be non-negative, got {mean}")));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| domain(e.to_string()))?;
    let x: f64 = d.sample(rng);
    Ok(x as u64)
}

/// `lower + Poisson(mean)`: the law of a latent count given that at least
/// `lower` of its units were observed.
pub fn sample_displaced_poisson(lower: u64, mean: f64, rng: &mut RngStream) -> Result<u64> {
    Ok(lower + sample_poisson(mean, rng)?)
}

pub fn sample_binomial(size: u64, p: f64, rng: &mut RngStream) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("binomial p must lie in [0, 1], got {p}")));
    }
    if p == 0.0 || size == 0 {
        return Ok(0);
    }
    if p == 1.0 {
        return Ok(size);
    }
    let d = Binomial::new(size, p).map_err(|e| domain(e.to_string()))?;
    Ok(d.sample(rng))
}

/// Exponential(rate) truncated to (0, 1), drawn by inversion.
pub fn sample_truncated_exponential(rate: f64, rng: &mut RngStream) -> Result<f64> {
    check_positive("truncated exponential rate", rate)?;
    let u = rng.uniform();
    let x = -(u * (-rate).exp_m1()).ln_1p() / rate;
    Ok(x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON * 0.5))
}

/// CDF of Exponential(rate) truncated to (0, 1).
pub fn truncated_exponential_cdf(rate: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        (-rate * x).exp_m1() / (-rate).exp_m1()
    }
}

/// Upper tail P(T > t) of Student's t for t >= 0.
fn t_upper_tail(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    0.5 * beta_reg(0.5 * df, 0.5, x)
}

fn t_density(t: f64, df: f64) -> f64 {
    (-(0.5 * (df + 1.0)) * (1.0 + t * t / df).ln() - 0.5 * df.ln() - ln_beta(0.5 * df, 0.5)).exp()
}

/// Quantile of Student's t distribution with `df` degrees of freedom.
///
/// Inverts the regularized incomplete beta representation of the tail with a
/// safeguarded Newton iteration.
pub fn t_quantile(prob: f64, df: u32) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(domain(format!("t quantile probability must be in (0, 1), got {prob}")));
    }
    if df == 0 {
        return Err(domain("t quantile needs df >= 1"));
    }
    if prob == 0.5 {
        return Ok(0.0);
    }
    let df = df as f64;
    let tail = if prob > 0.5 { 1.0 - prob } else { prob };
    let sign = if prob > 0.5 { 1.0 } else { -1.0 };

    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while t_upper_tail(hi, df) > tail {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(domain("t quantile bracket overflow"));
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = t_upper_tail(t, df) - tail;
        if f > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        // tail is decreasing in t, so Newton step is t + f / density
        let step = f / t_density(t, df);
        let mut next = t + step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-14 * next.abs().max(1e-300) || hi - lo <= 1e-15 * hi {
            t = next;
            break;
        }
        t = next;
    }
    Ok(sign * t)
}

/// Distribution families with their parameters, for log-density evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Poisson {
        mean: f64,
    },
    Binomial {
        size: u64,
        p: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    Beta {
        a: f64,
        b: f64,
    },
    InverseGamma {
        shape: f64,
        scale: f64,
    },
    LogNormal {
        location: f64,
        scale: f64,
    },
    /// Exponential truncated to (0, 1).
    TruncatedExponential {
        rate: f64,
    },
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Family::Poisson { mean } => {
                if mean >= 0.0 && mean.is_finite() {
                    Ok(())
                } else {
                    Err(domain(format!("poisson mean {mean}")))
                }
            }
            Family::Binomial { p, .. } => {
                if (0.0..=1.0).contains(&p) {
                    Ok(())
                } else {
                    Err(domain(format!("binomial p {p}")))
                }
            }
            Family::Gamma { shape, rate } => {
                check_positive("gamma shape", shape)?;
                check_positive("gamma rate", rate)
            }
            Family::Beta { a, b } => {
                check_positive("beta a", a)?;
                check_positive("beta b", b)
            }
            Family::InverseGamma { shape, scale } => {
                check_positive("inverse gamma shape", shape)?;
                check_positive("inverse gamma scale", scale)
            }
            Family::LogNormal { location, scale } => {
                if !location.is_finite() {
                    return Err(domain(format!("log-normal location {location}")));
                }
                check_positive("log-normal scale", scale)
            }
            Family::TruncatedExponential { rate } => check_positive("truncated exponential rate", rate),
        }
    }

    /// Natural log of the normalized density (or pmf) at `x`; `-inf` outside
    /// the support.
    pub fn ln_pdf(&self, x: f64) -> Result<f64> {
        self.validate()?;
        Ok(self.ln_pdf_unchecked(x))
    }

    pub(crate) fn ln_pdf_unchecked(&self, x: f64) -> f64 {
        let neg_inf = f64::NEG_INFINITY;
        match *self {
            Family::Poisson { mean } => {
                if x < 0.0 || x.fract() != 0.0 {
                    return neg_inf;
                }
                if mean == 0.0 {
                    return if x == 0.0 { 0.0 } else { neg_inf };
                }
                x * mean.ln() - mean - ln_gamma(x + 1.0)
            }
            Family::Binomial { size, p } => {
                let n = size as f64;
                if x < 0.0 || x > n || x.fract() != 0.0 {
                    return neg_inf;
                }
                let ln_choose = ln_gamma(n + 1.0) - ln_gamma(x + 1.0) - ln_gamma(n - x + 1.0);
                let a = if x == 0.0 { 0.0 } else { x * p.ln() };
                let b = if x == n { 0.0 } else { (n - x) * (-p).ln_1p() };
                ln_choose + a + b
            }
            Family::Gamma { shape, rate } => {
                if x <= 0.0 {
                    return neg_inf;
                }
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
            }
            Family::Beta { a, b } => {
                if x <= 0.0 || x >= 1.0 {
                    return neg_inf;
                }
                (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)
            }
            Family::InverseGamma { shape, scale } => {
                if x <= 0.0 {
                    return neg_inf;
                }
                shape * scale.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - scale / x
            }
            Family::LogNormal { location, scale } => {
                if x <= 0.0 {
                    return neg_inf;
                }
                let z = (x.ln() - location) / scale;
                -0.5 * z * z - x.ln() - scale.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            Family::TruncatedExponential { rate } => {
                if x <= 0.0 || x >= 1.0 {
                    return neg_inf;
                }
                rate.ln() - rate * x - (-(-rate).exp_m1()).ln()
            }
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Result<f64> {
        match *self {
            Family::Poisson { mean } => sample_poisson(mean, rng).map(|v| v as f64),
            Family::Binomial { size, p } => sample_binomial(size, p, rng).map(|v| v as f64),
            Family::Gamma { shape, rate } => sample_gamma(shape, rate, rng),
            Family::Beta { a, b } => sample_beta(a, b, rng),
            Family::InverseGamma { shape, scale } => {
                // 1/X with X ~ Gamma(shape, rate = scale)
                let g = sample_gamma(shape, scale, rng)?;
                Ok(1.0 / g)
            }
            Family::LogNormal { location, scale } => {
                self.validate()?;
                let z: f64 = rand_distr::StandardNormal.sample(rng);
                Ok((location + scale * z).exp())
            }
            Family::TruncatedExponential { rate } => sample_truncated_exponential(rate, rng),
        }
    }
}

/// Convenience wrapper over [`Family::ln_pdf`].
pub fn log_density(family: Family, x: f64) -> Result<f64> {
    family.ln_pdf(x)
}
