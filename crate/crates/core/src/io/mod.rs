//! Ingestion, configuration and the `analyze` / `simulate` workflows.

pub mod analyze;
pub mod config;
pub mod input;
pub mod simulate;

pub use analyze::{analyze_flocks, run_analyze, AnalysisOutput, AnalysisSummary, FlockReport, SCHEMA};
pub use config::{RunConfig, SimulateConfig};
pub use input::{load_flocks, InputTable, LoadOptions, LoadedFlock, ValidationPolicy, ValidationReport};
pub use simulate::run_simulate;
