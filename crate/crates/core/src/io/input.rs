//! Delimited-text ingestion of paired egg counts.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::FlockData;

const DEFAULT_CORRECTION_FACTOR: f64 = 50.0;
const MULTIPLE_TOLERANCE: f64 = 1e-9;

/// What to do with an epg value that is not a multiple of its correction
/// factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationPolicy {
    /// Reject the file.
    Strict,
    /// Set the count to zero.
    CoerceToZero,
    /// Round to the nearest slide count.
    #[default]
    Warn,
}

impl FromStr for ValidationPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "strict" => Ok(Self::Strict),
            "coerce-to-zero" | "coerce" => Ok(Self::CoerceToZero),
            "warn" => Ok(Self::Warn),
            other => Err(Error::Config(format!("unknown validation policy '{other}'"))),
        }
    }
}

/// One parsed input row. `line` is the 1-based line number in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRow {
    pub line: usize,
    pub animal_id: String,
    pub pre_epg: f64,
    pub post_epg: Option<f64>,
    pub correction_factor: f64,
    pub flock_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InputTable {
    pub rows: Vec<InputRow>,
}

fn parse_missing(s: &str) -> bool {
    matches!(s.trim().to_ascii_lowercase().as_str(), "" | "na" | "nan" | "." | "-")
}

fn parse_value(raw: &str, column: &str, line: usize) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| Error::Ingestion {
        row: Some(line),
        message: format!("{column}: '{}' is not a number", raw.trim()),
    })?;
    if !v.is_finite() {
        return Err(Error::Ingestion {
            row: Some(line),
            message: format!("{column}: value must be finite"),
        });
    }
    if v < 0.0 {
        return Err(Error::Ingestion {
            row: Some(line),
            message: format!("{column}: negative value {v}"),
        });
    }
    Ok(v)
}

fn column(headers: &csv::StringRecord, names: &[&str]) -> Option<usize> {
    headers
        .iter()
        .position(|h| names.iter().any(|n| h.trim().eq_ignore_ascii_case(n)))
}

impl InputTable {
    pub fn read_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::Ingestion {
            row: None,
            message: format!("cannot open {}: {e}", path.display()),
        })?;
        Self::from_reader(BufReader::new(file))
    }

    /// Parses comma- or tab-separated text with a header row. The delimiter
    /// is taken from the header line.
    pub fn from_reader(mut reader: impl Read) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text).map_err(|e| Error::Ingestion {
            row: None,
            message: format!("unreadable input: {e}"),
        })?;
        let header = text.lines().next().ok_or_else(|| Error::Ingestion {
            row: None,
            message: "empty input".into(),
        })?;
        let delimiter = if header.contains('\t') { b'\t' } else { b',' };
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let headers = rdr
            .headers()
            .map_err(|e| Error::Ingestion {
                row: Some(1),
                message: format!("bad header: {e}"),
            })?
            .clone();
        let require = |names: &[&str]| {
            column(&headers, names).ok_or_else(|| Error::Ingestion {
                row: Some(1),
                message: format!("missing required column '{}'", names[0]),
            })
        };
        let animal = require(&["animal_id"])?;
        let pre = require(&["pre_epg", "pre_count"])?;
        let post = require(&["post_epg", "post_count"])?;
        let factor = column(&headers, &["correction_factor"]);
        let flock = column(&headers, &["flock_id"]);

        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| Error::Ingestion {
                row: Some(line),
                message: e.to_string(),
            })?;
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            let field = |idx: usize| record.get(idx).unwrap_or("");
            let pre_raw = field(pre);
            if parse_missing(pre_raw) {
                return Err(Error::Ingestion {
                    row: Some(line),
                    message: "pre_epg is required".into(),
                });
            }
            let post_raw = field(post);
            let correction_factor = match factor.map(field) {
                Some(s) if !parse_missing(s) => parse_value(s, "correction_factor", line)?,
                _ => DEFAULT_CORRECTION_FACTOR,
            };
            if correction_factor < 1.0 {
                return Err(Error::Ingestion {
                    row: Some(line),
                    message: format!("correction_factor must be >= 1, got {correction_factor}"),
                });
            }
            rows.push(InputRow {
                line,
                animal_id: field(animal).to_string(),
                pre_epg: parse_value(pre_raw, "pre_epg", line)?,
                post_epg: if parse_missing(post_raw) {
                    None
                } else {
                    Some(parse_value(post_raw, "post_epg", line)?)
                },
                correction_factor,
                flock_id: flock.map(field).filter(|s| !s.is_empty()).map(str::to_string),
            });
        }
        Ok(Self { rows })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventAction {
    ExcludedMissingPost,
    CoercedToZero,
    Rounded,
}

/// One data mutation or exclusion performed during loading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationEvent {
    pub line: usize,
    pub flock_id: String,
    pub animal_id: String,
    pub column: Option<String>,
    pub original: Option<f64>,
    pub replacement: Option<u64>,
    pub action: EventAction,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rows_read: usize,
    pub rows_used: usize,
    pub excluded_missing_post: usize,
    pub events: Vec<ValidationEvent>,
}

impl ValidationReport {
    pub fn warnings(&self) -> impl Iterator<Item = String> + '_ {
        self.events.iter().map(|e| match e.action {
            EventAction::ExcludedMissingPost => format!(
                "line {}: animal {} excluded (missing post-treatment count)",
                e.line, e.animal_id
            ),
            EventAction::CoercedToZero | EventAction::Rounded => format!(
                "line {}: animal {} {} {} is not a multiple of the correction factor; set to {} slide counts",
                e.line,
                e.animal_id,
                e.column.as_deref().unwrap_or(""),
                e.original.unwrap_or(f64::NAN),
                e.replacement.unwrap_or(0)
            ),
        })
    }
}

/// A single flock's data in file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadedFlock {
    pub flock_id: String,
    pub animal_ids: Vec<String>,
    pub data: FlockData,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LoadOptions {
    pub policy: ValidationPolicy,
    /// Count columns hold raw slide counts instead of epg.
    pub raw_counts: bool,
}

const DEFAULT_FLOCK: &str = "flock";

/// Animal ids, pre counts, post counts and correction factors of one flock.
type Columns = (Vec<String>, Vec<u64>, Vec<u64>, Vec<f64>);

fn to_count(
    value: f64,
    column: &str,
    row: &InputRow,
    flock: &str,
    options: LoadOptions,
    report: &mut ValidationReport,
) -> Result<u64> {
    let scale = if options.raw_counts { 1.0 } else { row.correction_factor };
    let nearest = (value / scale).round();
    if (value - nearest * scale).abs() <= MULTIPLE_TOLERANCE {
        return Ok(nearest as u64);
    }
    let what = if options.raw_counts {
        "is not an integer count".to_string()
    } else {
        format!("is not a multiple of correction factor {}", row.correction_factor)
    };
    let (replacement, action) = match options.policy {
        ValidationPolicy::Strict => {
            return Err(Error::Ingestion {
                row: Some(row.line),
                message: format!("{column} {value} {what}"),
            })
        }
        ValidationPolicy::CoerceToZero => (0, EventAction::CoercedToZero),
        ValidationPolicy::Warn => (nearest as u64, EventAction::Rounded),
    };
    report.events.push(ValidationEvent {
        line: row.line,
        flock_id: flock.to_string(),
        animal_id: row.animal_id.clone(),
        column: Some(column.to_string()),
        original: Some(value),
        replacement: Some(replacement),
        action,
    });
    Ok(replacement)
}

/// Splits a table into flocks (by `flock_id`, in order of first
/// appearance), converts epg to slide counts and applies the policy.
pub fn build_flocks(table: &InputTable, options: LoadOptions) -> Result<(Vec<LoadedFlock>, ValidationReport)> {
    let mut report = ValidationReport {
        rows_read: table.rows.len(),
        ..ValidationReport::default()
    };
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Columns> = BTreeMap::new();
    for row in &table.rows {
        let flock = row.flock_id.clone().unwrap_or_else(|| DEFAULT_FLOCK.to_string());
        let Some(post_epg) = row.post_epg else {
            report.excluded_missing_post += 1;
            report.events.push(ValidationEvent {
                line: row.line,
                flock_id: flock,
                animal_id: row.animal_id.clone(),
                column: Some("post_epg".into()),
                original: None,
                replacement: None,
                action: EventAction::ExcludedMissingPost,
            });
            continue;
        };
        let pre = to_count(row.pre_epg, "pre_epg", row, &flock, options, &mut report)?;
        let post = to_count(post_epg, "post_epg", row, &flock, options, &mut report)?;
        if !groups.contains_key(&flock) {
            order.push(flock.clone());
        }
        let g = groups.entry(flock).or_default();
        g.0.push(row.animal_id.clone());
        g.1.push(pre);
        g.2.push(post);
        g.3.push(row.correction_factor);
        report.rows_used += 1;
    }
    let mut flocks = Vec::with_capacity(order.len());
    for id in order {
        let (animal_ids, pre, post, f) = groups.remove(&id).expect("grouped above");
        let data = FlockData::new(pre, post, f).map_err(|e| Error::Ingestion {
            row: None,
            message: format!("flock {id}: {e}"),
        })?;
        flocks.push(LoadedFlock {
            flock_id: id,
            animal_ids,
            data,
        });
    }
    Ok((flocks, report))
}

/// Reads a file and returns its flocks with the validation report.
pub fn load_flocks(path: impl AsRef<Path>, options: LoadOptions) -> Result<(Vec<LoadedFlock>, ValidationReport)> {
    build_flocks(&InputTable::read_path(path)?, options)
}
