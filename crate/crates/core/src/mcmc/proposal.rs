//! Proposal construction for the `mu` and `delta` updates.
//!
//! Both full conditionals are written as `exp(-G(x))`. A proposal family is
//! fitted by matching the mode of `G` and the second derivative `G''` at the
//! mode. For `mu` three families are fitted and the one closest to the
//! target in Kullback–Leibler divergence is used.

use statrs::function::gamma::ln_gamma;

use crate::distributions::{self, Family};
use crate::error::{Error, Result};
use crate::rng::RngStream;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `G(mu) = a ln(mu) + b mu + c / mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuConditional {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl MuConditional {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// `-G(mu)`.
    pub fn ln_unnorm(&self, mu: f64) -> f64 {
        if mu <= 0.0 {
            return f64::NEG_INFINITY;
        }
        -self.a * mu.ln() - self.b * mu - self.c / mu
    }

    /// `G'(mu)`.
    pub fn gradient(&self, mu: f64) -> f64 {
        self.a / mu + self.b - self.c / (mu * mu)
    }

    /// `G''(mu)`.
    pub fn curvature(&self, mu: f64) -> f64 {
        -self.a / (mu * mu) + 2.0 * self.c / (mu * mu * mu)
    }

    /// Positive root of `b m^2 + a m - c = 0`.
    pub fn mode(&self) -> f64 {
        let disc = (self.a * self.a + 4.0 * self.b * self.c).sqrt();
        if self.a > 0.0 {
            // cancellation-free form of (-a + disc) / (2b)
            2.0 * self.c / (self.a + disc)
        } else {
            (-self.a + disc) / (2.0 * self.b)
        }
    }
}

/// `G(delta) = -a ln(delta) - b ln(1 - delta) + c delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaConditional {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl DeltaConditional {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// `-G(delta)`.
    pub fn ln_unnorm(&self, d: f64) -> f64 {
        if d <= 0.0 || d >= 1.0 {
            return f64::NEG_INFINITY;
        }
        let la = if self.a == 0.0 { 0.0 } else { self.a * d.ln() };
        let lb = if self.b == 0.0 { 0.0 } else { self.b * (-d).ln_1p() };
        la + lb - self.c * d
    }

    pub fn gradient(&self, d: f64) -> f64 {
        -self.a / d + self.b / (1.0 - d) + self.c
    }

    pub fn curvature(&self, d: f64) -> f64 {
        self.a / (d * d) + self.b / ((1.0 - d) * (1.0 - d))
    }

    /// Smaller root of `c m^2 - (a + b + c) m + a = 0`, or `None` when the
    /// quadratic has no real root.
    pub fn mode(&self) -> Option<f64> {
        let (a, b, c) = (self.a, self.b, self.c);
        // (a + b + c)^2 - 4ac rewritten to avoid cancellation for b >= 0
        let disc = (a + b - c).powi(2) + 4.0 * b * c;
        if disc < 0.0 {
            return None;
        }
        let s = a + b + c;
        let root = disc.sqrt();
        if s > 0.0 {
            Some(2.0 * a / (s + root))
        } else {
            Some((s - root) / (2.0 * c))
        }
    }
}

/// Piecewise proposal on (0, 1) used when the beta approximation is not
/// available. The first bin carries the `delta^a` power-law shape exactly;
/// the remaining bins are log-spaced and uniform within.
#[derive(Debug, Clone, PartialEq)]
pub struct GridProposal {
    power: f64,
    edges: Vec<f64>,
    cdf: Vec<f64>,
    ln_mass: Vec<f64>,
}

impl GridProposal {
    const BINS: usize = 2048;

    pub fn for_delta(cond: &DeltaConditional) -> Result<Self> {
        let power = cond.a;
        if !(power > -1.0) || !(cond.b > -1.0) || !(cond.c >= 0.0) {
            return Err(Error::DegenerateConditional(format!(
                "delta conditional not integrable: a={} b={} c={}",
                cond.a, cond.b, cond.c
            )));
        }
        let lo = (1e-3 / cond.c.max(1.0)).min(1e-6);
        let ln_lo = lo.ln();
        let mut edges = Vec::with_capacity(Self::BINS + 1);
        edges.push(0.0);
        for k in 0..Self::BINS {
            let t = k as f64 / (Self::BINS - 1) as f64;
            edges.push((ln_lo * (1.0 - t)).exp());
        }
        *edges.last_mut().unwrap() = 1.0;

        let ln_rest = |d: f64| -> f64 {
            let lb = if cond.b == 0.0 { 0.0 } else { cond.b * (-d).ln_1p() };
            lb - cond.c * d
        };
        let mut ln_mass = Vec::with_capacity(Self::BINS);
        // first bin: integral of d^a over (0, lo] times the other factors at lo / 2
        ln_mass.push((power + 1.0) * lo.ln() - (power + 1.0).ln() + ln_rest(0.5 * lo));
        for k in 1..Self::BINS {
            let (l, r) = (edges[k], edges[k + 1]);
            let mid = (l * r).sqrt().min(0.5 * (l + r));
            ln_mass.push(cond.ln_unnorm(mid) + (r - l).ln());
        }
        let max = ln_mass.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::DegenerateConditional("grid proposal has no mass".into()));
        }
        let total: f64 = ln_mass.iter().map(|l| (l - max).exp()).sum();
        let ln_total = max + total.ln();
        for l in ln_mass.iter_mut() {
            *l -= ln_total;
        }
        let mut cdf = Vec::with_capacity(Self::BINS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for l in &ln_mass {
            acc += l.exp();
            cdf.push(acc);
        }
        Ok(Self {
            power,
            edges,
            cdf,
            ln_mass,
        })
    }

    fn bin_of(&self, x: f64) -> usize {
        match self.edges.binary_search_by(|e| e.total_cmp(&x)) {
            Ok(i) => i.saturating_sub(1).min(Self::BINS - 1),
            Err(i) => (i - 1).min(Self::BINS - 1),
        }
    }

    pub fn ln_density(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return f64::NEG_INFINITY;
        }
        let k = self.bin_of(x);
        if k == 0 {
            let e1 = self.edges[1];
            let p1 = self.power + 1.0;
            self.ln_mass[0] + p1.ln() + self.power * x.ln() - p1 * e1.ln()
        } else {
            self.ln_mass[k] - (self.edges[k + 1] - self.edges[k]).ln()
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let u = rng.uniform() * self.cdf[Self::BINS];
        let k = match self.cdf.binary_search_by(|c| c.total_cmp(&u)) {
            Ok(i) => i.min(Self::BINS - 1),
            Err(i) => (i - 1).min(Self::BINS - 1),
        };
        let v = rng.uniform();
        let x = if k == 0 {
            self.edges[1] * v.powf(1.0 / (self.power + 1.0))
        } else {
            self.edges[k] + v * (self.edges[k + 1] - self.edges[k])
        };
        x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON * 0.5)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProposalFamily {
    InverseGamma {
        shape: f64,
        scale: f64,
    },
    LogNormal {
        location: f64,
        scale: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    Beta {
        a: f64,
        b: f64,
    },
    /// Random walk on `ln(mu)` with the given half-width.
    UniformWindow {
        half_width: f64,
    },
    /// Exponential truncated to (0, 1); the conditional is sampled exactly.
    Exact {
        rate: f64,
    },
    /// Discretized inverse-CDF proposal for boundary-mode `delta` conditionals.
    Grid(GridProposal),
}

impl ProposalFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ProposalFamily::InverseGamma { .. } => "inverse-gamma",
            ProposalFamily::LogNormal { .. } => "log-normal",
            ProposalFamily::Gamma { .. } => "gamma",
            ProposalFamily::Beta { .. } => "beta",
            ProposalFamily::UniformWindow { .. } => "uniform-window",
            ProposalFamily::Exact { .. } => "exact",
            ProposalFamily::Grid(_) => "grid",
        }
    }

    pub fn as_distribution(&self) -> Option<Family> {
        match *self {
            ProposalFamily::InverseGamma { shape, scale } => Some(Family::InverseGamma { shape, scale }),
            ProposalFamily::LogNormal { location, scale } => Some(Family::LogNormal { location, scale }),
            ProposalFamily::Gamma { shape, rate } => Some(Family::Gamma { shape, rate }),
            ProposalFamily::Beta { a, b } => Some(Family::Beta { a, b }),
            ProposalFamily::Exact { rate } => Some(Family::TruncatedExponential { rate }),
            ProposalFamily::UniformWindow { .. } | ProposalFamily::Grid(_) => None,
        }
    }

    /// Analytic mode of the family, for the mode-matched families.
    pub fn mode(&self) -> Option<f64> {
        match *self {
            ProposalFamily::InverseGamma { shape, scale } => Some(scale / (shape + 1.0)),
            ProposalFamily::LogNormal { location, scale } => Some((location - scale * scale).exp()),
            ProposalFamily::Gamma { shape, rate } => Some((shape - 1.0) / rate),
            ProposalFamily::Beta { a, b } => Some((a - 1.0) / (a + b - 2.0)),
            _ => None,
        }
    }

    /// Second derivative of minus the log density at `x`.
    pub fn neg_ln_density_curvature(&self, x: f64) -> Option<f64> {
        match *self {
            ProposalFamily::InverseGamma { shape, scale } => Some(-(shape + 1.0) / (x * x) + 2.0 * scale / (x * x * x)),
            ProposalFamily::LogNormal { location, scale } => {
                let s2 = scale * scale;
                Some((-1.0 + 1.0 / s2 - (x.ln() - location) / s2) / (x * x))
            }
            ProposalFamily::Gamma { shape, .. } => Some((shape - 1.0) / (x * x)),
            ProposalFamily::Beta { a, b } => Some((a - 1.0) / (x * x) + (b - 1.0) / ((1.0 - x) * (1.0 - x))),
            _ => None,
        }
    }
}

/// A fitted proposal together with the target mode and curvature it matches.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalSpec {
    pub family: ProposalFamily,
    pub mode: f64,
    pub curvature: f64,
}

impl ProposalSpec {
    pub fn name(&self) -> &'static str {
        self.family.name()
    }

    /// Normalized log density of an independence proposal at `x`. Not
    /// defined for the random-walk window.
    pub fn ln_density(&self, x: f64) -> f64 {
        match &self.family {
            ProposalFamily::Grid(g) => g.ln_density(x),
            ProposalFamily::UniformWindow { .. } => f64::NAN,
            other => other
                .as_distribution()
                .map(|f| f.ln_pdf_unchecked(x))
                .unwrap_or(f64::NAN),
        }
    }

    /// Independent draw; the random-walk window has no independent draw.
    pub fn sample(&self, rng: &mut RngStream) -> Result<f64> {
        match &self.family {
            ProposalFamily::Grid(g) => Ok(g.sample(rng)),
            ProposalFamily::UniformWindow { .. } => Err(Error::DegenerateConditional(
                "random-walk window has no independent draw".into(),
            )),
            other => other.as_distribution().expect("independence family").sample(rng),
        }
    }
}

/// The three mode/curvature matched candidates for the `mu` conditional.
/// The inverse gamma is dropped when its shape would be non-positive.
pub fn mu_candidates(cond: &MuConditional) -> Result<Vec<ProposalSpec>> {
    if !(cond.c > 0.0) || !(cond.b >= 0.0) || !(cond.b > 0.0 || cond.a > 0.0) {
        return Err(Error::DegenerateConditional(format!(
            "mu conditional needs b > 0 and c > 0: a={} b={} c={}",
            cond.a, cond.b, cond.c
        )));
    }
    let m = cond.mode();
    let g2 = cond.curvature(m);
    if !(m > 0.0) || !m.is_finite() || !(g2 > 0.0) || !g2.is_finite() {
        return Err(Error::DegenerateConditional(format!("mode {m}, curvature {g2}")));
    }
    let mut out = Vec::with_capacity(3);
    let ig_scale = g2 * m * m * m;
    let ig_shape = ig_scale / m - 1.0;
    if ig_shape > 0.0 {
        out.push(ProposalSpec {
            family: ProposalFamily::InverseGamma {
                shape: ig_shape,
                scale: ig_scale,
            },
            mode: m,
            curvature: g2,
        });
    }
    out.push(ProposalSpec {
        family: ProposalFamily::LogNormal {
            location: m.ln() + 1.0 / (g2 * m * m),
            scale: 1.0 / (g2.sqrt() * m),
        },
        mode: m,
        curvature: g2,
    });
    out.push(ProposalSpec {
        family: ProposalFamily::Gamma {
            shape: g2 * m * m + 1.0,
            rate: g2 * m,
        },
        mode: m,
        curvature: g2,
    });
    Ok(out)
}

/// Target `exp(-G(mu))` normalized by Simpson quadrature on a grid in
/// `t = ln(mu)`.
struct LogGrid {
    t: Vec<f64>,
    e: Vec<f64>,
    weight: Vec<f64>,
    ln_p: Vec<f64>,
}

impl LogGrid {
    const NODES: usize = 257;
    const SPAN_SD: f64 = 12.0;
    const TAIL_NATS: f64 = 40.0;

    fn new(cond: &MuConditional) -> Result<Self> {
        let m = cond.mode();
        let g2 = cond.curvature(m);
        let sd = 1.0 / (g2.sqrt() * m);
        let tm = m.ln();
        // density of t = ln(mu), up to a constant
        let h = |t: f64| -> f64 {
            let e = t.exp();
            -(cond.a - 1.0) * t - cond.b * e - cond.c / e
        };
        let peak = h(tm);
        if !peak.is_finite() || !sd.is_finite() || !(sd > 0.0) {
            return Err(Error::DegenerateConditional("non-finite target at mode".into()));
        }
        let (mut lo, mut hi) = (tm - Self::SPAN_SD * sd, tm + Self::SPAN_SD * sd);
        for _ in 0..25 {
            if h(lo) < peak - Self::TAIL_NATS {
                break;
            }
            lo -= 4.0 * sd;
        }
        for _ in 0..25 {
            if h(hi) < peak - Self::TAIL_NATS {
                break;
            }
            hi += 4.0 * sd;
        }
        let n = Self::NODES;
        let step = (hi - lo) / (n - 1) as f64;
        let mut t = Vec::with_capacity(n);
        let mut e = Vec::with_capacity(n);
        let mut ln_p = Vec::with_capacity(n);
        let mut weight = Vec::with_capacity(n);
        for j in 0..n {
            let tj = lo + j as f64 * step;
            let ej = tj.exp();
            t.push(tj);
            e.push(ej);
            ln_p.push(-(cond.a - 1.0) * tj - cond.b * ej - cond.c / ej);
            let w = if j == 0 || j == n - 1 {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
            weight.push(w * step / 3.0);
        }
        let max = ln_p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = ln_p.iter().zip(&weight).map(|(l, w)| w * (l - max).exp()).sum();
        let ln_z = max + z.ln();
        if !ln_z.is_finite() {
            return Err(Error::DegenerateConditional("quadrature normalizer not finite".into()));
        }
        for l in ln_p.iter_mut() {
            *l -= ln_z;
        }
        Ok(Self { t, e, weight, ln_p })
    }

    /// Log density of the candidate in `t = ln(mu)` space.
    fn candidate_ln_q(family: &ProposalFamily) -> Option<Box<dyn Fn(f64, f64) -> f64>> {
        match *family {
            ProposalFamily::InverseGamma { shape, scale } => {
                let k = shape * scale.ln() - ln_gamma(shape);
                Some(Box::new(move |t, e| k - shape * t - scale / e))
            }
            ProposalFamily::LogNormal { location, scale } => {
                let k = -scale.ln() - LN_SQRT_2PI;
                Some(Box::new(move |t, _| {
                    let z = (t - location) / scale;
                    k - 0.5 * z * z
                }))
            }
            ProposalFamily::Gamma { shape, rate } => {
                let k = shape * rate.ln() - ln_gamma(shape);
                Some(Box::new(move |t, e| k + shape * t - rate * e))
            }
            _ => None,
        }
    }

    fn kl(&self, family: &ProposalFamily) -> f64 {
        let Some(ln_q) = Self::candidate_ln_q(family) else {
            return f64::NAN;
        };
        let mut acc = 0.0;
        for j in 0..self.t.len() {
            let lp = self.ln_p[j];
            let p = lp.exp();
            if p == 0.0 {
                continue;
            }
            acc += self.weight[j] * p * (lp - ln_q(self.t[j], self.e[j]));
        }
        acc
    }
}

/// `KL(target || candidate)` for the `mu` conditional, by quadrature.
pub fn kl_divergence(cond: &MuConditional, candidate: &ProposalSpec) -> Result<f64> {
    let grid = LogGrid::new(cond)?;
    Ok(grid.kl(&candidate.family))
}

/// Returns the candidate with the smallest divergence from the target.
pub fn kl_select(cond: &MuConditional, candidates: &[ProposalSpec]) -> Result<ProposalSpec> {
    let grid = LogGrid::new(cond)?;
    let mut best: Option<(f64, &ProposalSpec)> = None;
    for c in candidates {
        let kl = grid.kl(&c.family);
        if !kl.is_finite() {
            continue;
        }
        if best.is_none_or(|(b, _)| kl < b) {
            best = Some((kl, c));
        }
    }
    best.map(|(_, c)| c.clone())
        .ok_or_else(|| Error::DegenerateConditional("no candidate with finite divergence".into()))
}

/// Fits inverse-gamma, log-normal and gamma approximations to the `mu`
/// conditional and returns the one selected by [`kl_select`].
pub fn build_mu_proposal(cond: &MuConditional) -> Result<ProposalSpec> {
    let candidates = mu_candidates(cond)?;
    kl_select(cond, &candidates)
}

/// Beta approximation of the `delta` conditional, or the exact truncated
/// exponential when `a = b = 0`.
///
/// Fails with [`Error::DegenerateConditional`] when the mode sits on the
/// boundary (`a <= 0` otherwise) or the curvature is not positive; callers
/// fall back to a [`GridProposal`].
pub fn build_delta_proposal(cond: &DeltaConditional) -> Result<ProposalSpec> {
    let DeltaConditional { a, b, c } = *cond;
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::DegenerateConditional(format!(
            "delta conditional needs c > 0, got {c}"
        )));
    }
    if a == 0.0 && b == 0.0 {
        return Ok(ProposalSpec {
            family: ProposalFamily::Exact { rate: c },
            mode: 0.0,
            curvature: 0.0,
        });
    }
    if !(a > 0.0) {
        return Err(Error::DegenerateConditional(format!("boundary mode: a = {a}")));
    }
    let m = cond
        .mode()
        .ok_or_else(|| Error::DegenerateConditional("no interior stationary point".into()))?;
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::DegenerateConditional(format!("mode {m} outside (0, 1)")));
    }
    let g2 = cond.curvature(m);
    if !(g2 > 0.0) || !g2.is_finite() {
        return Err(Error::DegenerateConditional(format!("curvature {g2} at mode {m}")));
    }
    let alpha = (1.0 - m) * m * m * g2 + 1.0;
    let beta = m * (1.0 - m) * (1.0 - m) * g2 + 1.0;
    Ok(ProposalSpec {
        family: ProposalFamily::Beta { a: alpha, b: beta },
        mode: m,
        curvature: g2,
    })
}

/// Draws `delta` from the exact truncated-exponential conditional.
pub(crate) fn sample_exact_delta(rate: f64, rng: &mut RngStream) -> Result<f64> {
    distributions::sample_truncated_exponential(rate, rng)
}
