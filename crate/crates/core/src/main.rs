use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eggcount_kit::io::analyze::{render_console, write_outputs};
use eggcount_kit::io::config::{read_pairs, Pairs};
use eggcount_kit::io::{run_analyze, run_simulate, simulate, RunConfig, SimulateConfig};
use eggcount_kit::Error;

#[derive(Parser)]
#[command(name = "eggcount", version, about = "Faecal egg count reduction analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyse paired pre/post egg counts from a CSV or TSV file.
    Analyze(AnalyzeArgs),
    /// Run the classification simulation study.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct ChainArgs {
    /// Flat key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    a_delta: Option<f64>,
    #[arg(long)]
    b_delta: Option<f64>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    /// Bootstrap resamples.
    #[arg(long)]
    resamples: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    input: PathBuf,
    #[command(flatten)]
    chain: ChainArgs,
    /// strict, coerce-to-zero or warn.
    #[arg(long)]
    policy: Option<String>,
    /// Count columns hold slide counts rather than epg.
    #[arg(long)]
    raw_counts: bool,
    /// Repeat the hierarchical analysis under four reduction priors.
    #[arg(long)]
    sensitivity_sweep: bool,
    /// JSON summary path.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// CSV path for thinned draws.
    #[arg(long)]
    draws: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    chain: ChainArgs,
    /// Comma-separated true efficacies in percent.
    #[arg(long)]
    efficacy: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    /// 2000 replicates and full-length chains.
    #[arg(long)]
    paper_scale: bool,
    /// Per-method fraction table (CSV).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Per-replicate verdicts (CSV).
    #[arg(long)]
    replicates_output: Option<PathBuf>,
}

fn push<T: ToString>(pairs: &mut Pairs, key: &str, value: Option<T>) {
    if let Some(v) = value {
        pairs.push((key.to_string(), v.to_string()));
    }
}

fn chain_pairs(args: &ChainArgs) -> Result<Pairs, Error> {
    let mut pairs = match &args.config {
        Some(p) => read_pairs(p)?,
        None => Vec::new(),
    };
    push(&mut pairs, "seed", args.seed);
    push(&mut pairs, "a_delta", args.a_delta);
    push(&mut pairs, "b_delta", args.b_delta);
    push(&mut pairs, "burn_in", args.burn_in);
    push(&mut pairs, "n_samples", args.n_samples);
    push(&mut pairs, "thin", args.thin);
    push(&mut pairs, "resamples", args.resamples);
    Ok(pairs)
}

fn flag(pairs: &mut Pairs, key: &str, set: bool) {
    if set {
        pairs.push((key.to_string(), "true".to_string()));
    }
}

fn analyze(args: AnalyzeArgs) -> Result<(), Error> {
    let mut pairs = chain_pairs(&args.chain)?;
    push(&mut pairs, "policy", args.policy);
    flag(&mut pairs, "raw_counts", args.raw_counts);
    flag(&mut pairs, "sensitivity_sweep", args.sensitivity_sweep);
    push(&mut pairs, "output", args.output.map(|p| p.display().to_string()));
    push(&mut pairs, "draws", args.draws.map(|p| p.display().to_string()));
    let cfg = RunConfig::from_pairs(&pairs)?;
    let out = run_analyze(&args.input, &cfg)?;
    if cfg.seed.is_none() {
        eprintln!("seed: {}", out.summary.seed);
    }
    for w in out.summary.validation.warnings() {
        eprintln!("warning: {w}");
    }
    print!("{}", render_console(&out.summary));
    write_outputs(&out, &cfg)?;
    Ok(())
}

fn simulate_cmd(args: SimulateArgs) -> Result<(), Error> {
    let mut pairs = chain_pairs(&args.chain)?;
    push(&mut pairs, "efficacy", args.efficacy);
    push(&mut pairs, "replicates", args.replicates);
    flag(&mut pairs, "paper_scale", args.paper_scale);
    push(&mut pairs, "output", args.output.map(|p| p.display().to_string()));
    push(
        &mut pairs,
        "replicates_output",
        args.replicates_output.map(|p| p.display().to_string()),
    );
    let cfg = SimulateConfig::from_pairs(&pairs)?;
    let (result, seed) = run_simulate(&cfg)?;
    if cfg.seed.is_none() {
        eprintln!("seed: {seed}");
    }
    print!("{}", simulate::render_console(&result));
    simulate::write_outputs(&result, &cfg)?;
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Analyze(a) => analyze(a),
        Command::Simulate(s) => simulate_cmd(s),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
