//! Run configuration from flat `key = value` files and flag overrides.
//!
//! Keys use snake_case; dashes are accepted and normalized, so `a-delta`
//! and `a_delta` are the same key. Lines starting with `#` are comments.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classical::WaavpThresholds;
use crate::error::{Error, Result};
use crate::io::input::{LoadOptions, ValidationPolicy};
use crate::mcmc::{ChainConfig, PriorConfig};
use crate::posterior::DenwoodThresholds;
use crate::simulation::ScenarioConfig;

pub type Pairs = Vec<(String, String)>;

pub fn normalize_key(key: &str) -> String {
    key.trim()
        .trim_start_matches("--")
        .replace('-', "_")
        .to_ascii_lowercase()
}

pub fn parse_pairs(text: &str) -> Result<Pairs> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        out.push((normalize_key(k), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_pairs(path: impl AsRef<Path>) -> Result<Pairs> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_pairs(&text)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got '{value}'"))),
    }
}

fn apply_prior(priors: &mut PriorConfig, key: &str, value: &str) -> Result<bool> {
    let slot = match key {
        "a_phi" => &mut priors.a_phi,
        "b_phi" => &mut priors.b_phi,
        "a_mu" => &mut priors.a_mu,
        "b_mu" => &mut priors.b_mu,
        "a_delta" => &mut priors.a_delta,
        "b_delta" => &mut priors.b_delta,
        _ => return Ok(false),
    };
    *slot = parse(key, value)?;
    Ok(true)
}

fn apply_chain(chain: &mut ChainConfig, key: &str, value: &str) -> Result<bool> {
    match key {
        "n_samples" => chain.n_samples = parse(key, value)?,
        "burn_in" => chain.burn_in = parse(key, value)?,
        "thin" => chain.thin = parse(key, value)?,
        "phi_step" => chain.phi_step_s = parse(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn check_percent(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 100.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in (0, 100), got {v}")))
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")))
    }
}

/// Settings of one `analyze` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub priors: PriorConfig,
    pub chain: ChainConfig,
    /// `None` means a seed is generated at run time.
    pub seed: Option<u64>,
    pub resamples: usize,
    pub level: f64,
    pub waavp: WaavpThresholds,
    pub denwood: DenwoodThresholds,
    pub policy: ValidationPolicy,
    pub raw_counts: bool,
    pub sensitivity_sweep: bool,
    pub summary_path: Option<PathBuf>,
    pub draws_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            priors: PriorConfig::default(),
            chain: ChainConfig::default(),
            seed: None,
            resamples: 1999,
            level: 0.95,
            waavp: WaavpThresholds::default(),
            denwood: DenwoodThresholds::default(),
            policy: ValidationPolicy::default(),
            raw_counts: false,
            sensitivity_sweep: false,
            summary_path: None,
            draws_path: None,
        }
    }
}

impl RunConfig {
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let key = normalize_key(key);
        let key = key.as_str();
        if apply_prior(&mut self.priors, key, value)? || apply_chain(&mut self.chain, key, value)? {
            return Ok(());
        }
        match key {
            "seed" => self.seed = Some(parse(key, value)?),
            "resamples" => self.resamples = parse(key, value)?,
            "level" => self.level = parse(key, value)?,
            "reduction_threshold" => self.waavp.reduction = parse(key, value)?,
            "lower_limit_threshold" => self.waavp.lower_limit = parse(key, value)?,
            "denwood_resistance" => self.denwood.resistance = parse(key, value)?,
            "denwood_susceptibility" => self.denwood.susceptibility = parse(key, value)?,
            "policy" => self.policy = value.parse()?,
            "raw_counts" => self.raw_counts = parse_bool(key, value)?,
            "sensitivity_sweep" => self.sensitivity_sweep = parse_bool(key, value)?,
            "output" | "summary" => self.summary_path = Some(PathBuf::from(value.trim())),
            "draws" => self.draws_path = Some(PathBuf::from(value.trim())),
            _ => return Err(Error::Config(format!("unknown analyze setting '{key}'"))),
        }
        Ok(())
    }

    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in pairs {
            cfg.apply(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.priors.validate()?;
        self.chain.validate()?;
        check_percent("reduction_threshold", self.waavp.reduction)?;
        check_percent("lower_limit_threshold", self.waavp.lower_limit)?;
        check_unit("denwood_resistance", self.denwood.resistance)?;
        check_unit("denwood_susceptibility", self.denwood.susceptibility)?;
        check_unit("level", self.level)?;
        if self.resamples == 0 {
            return Err(Error::Config("resamples must be at least 1".into()));
        }
        Ok(())
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            policy: self.policy,
            raw_counts: self.raw_counts,
        }
    }
}

/// Settings of one `simulate` run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub scenario: ScenarioConfig,
    pub seed: Option<u64>,
    pub paper_scale: bool,
    pub table_path: Option<PathBuf>,
    pub replicates_path: Option<PathBuf>,
}

impl SimulateConfig {
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let key = normalize_key(key);
        let key = key.as_str();
        let s = &mut self.scenario;
        if apply_prior(&mut s.priors, key, value)? || apply_chain(&mut s.chain, key, value)? {
            return Ok(());
        }
        match key {
            "seed" => self.seed = Some(parse(key, value)?),
            "paper_scale" => {
                self.paper_scale = parse_bool(key, value)?;
                if self.paper_scale {
                    *s = s.clone().paper_scale();
                }
            }
            "resamples" => s.bootstrap_resamples = parse(key, value)?,
            "level" => s.level = parse(key, value)?,
            "replicates" => s.replicates = parse(key, value)?,
            "n_animals" => s.n_animals = parse(key, value)?,
            "true_mu" => s.true_mu = parse(key, value)?,
            "true_phi" => s.true_phi = parse(key, value)?,
            "correction_factor" => s.correction_factor = parse(key, value)?,
            "efficacy" => {
                s.efficacies = value
                    .split([',', ' '])
                    .filter(|t| !t.is_empty())
                    .map(|t| parse(key, t))
                    .collect::<Result<_>>()?
            }
            "output" | "table" => self.table_path = Some(PathBuf::from(value.trim())),
            "replicates_output" => self.replicates_path = Some(PathBuf::from(value.trim())),
            _ => return Err(Error::Config(format!("unknown simulate setting '{key}'"))),
        }
        Ok(())
    }

    /// Applies `paper_scale` before any other key so explicit settings win.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut cfg = Self::default();
        let (scale, rest): (Vec<_>, Vec<_>) = pairs.iter().partition(|(k, _)| normalize_key(k) == "paper_scale");
        for (k, v) in scale.into_iter().chain(rest) {
            cfg.apply(k, v)?;
        }
        cfg.scenario.validate()?;
        Ok(cfg)
    }
}
