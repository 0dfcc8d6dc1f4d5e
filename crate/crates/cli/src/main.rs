//! Command-line driver for the user-node interaction simulator:
//! configuration files, Monte Carlo batches, summary statistics, and
//! plot-ready CSV/JSON export.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use unim_cli::{config, export, stats};
use unim_core::model::{NetworkConfig, Policy, Scenario};
use unim_core::SimResult;

#[derive(Parser)]
#[command(
    name = "unim",
    version,
    about = "Simulate user-node interaction under reputation-weighted ledger access"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one policy under one load scenario and export the results
    Run(RunArgs),
    /// Run all four policies on one scenario and print a comparison table
    Compare(CompareArgs),
    /// Check a configuration file and echo the effective settings
    ValidateConfig {
        /// TOML configuration file
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file; built-in defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Node-selection policy (overrides the config file)
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    /// Load scenario (overrides the config file's load_fraction)
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
    /// Base RNG seed; Monte Carlo run i uses seed + i
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo repetitions
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory (default: $UNIM_OUT_DIR, then ./out)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// TOML configuration file; built-in defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Load scenario (overrides the config file's load_fraction)
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
    /// Base RNG seed; Monte Carlo run i uses seed + i
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo repetitions per policy
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory (default: $UNIM_OUT_DIR, then ./out)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum PolicyArg {
    Urns,
    Rbns,
    Dbns,
    DbnsPlus,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Policy {
        match p {
            PolicyArg::Urns => Policy::Urns,
            PolicyArg::Rbns => Policy::Rbns,
            PolicyArg::Dbns => Policy::Dbns,
            PolicyArg::DbnsPlus => Policy::DbnsPlus,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum ScenarioArg {
    A90,
    B98,
    C120,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Scenario {
        match s {
            ScenarioArg::A90 => Scenario::A90,
            ScenarioArg::B98 => Scenario::B98,
            ScenarioArg::C120 => Scenario::C120,
        }
    }
}

/// Failures split by exit code: bad input exits 2, environment trouble 1.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Failure {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Compare(args) => cmd_compare(args),
        Cmd::ValidateConfig { config } => cmd_validate(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn resolve_out(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("UNIM_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Config file overlaid with the flags every subcommand shares.
fn effective_config(
    path: Option<&std::path::Path>,
    scenario: Option<ScenarioArg>,
    seed: Option<u64>,
    runs: Option<usize>,
) -> Result<NetworkConfig, Failure> {
    let mut cfg = config::load(path).map_err(Failure::Usage)?;
    if let Some(s) = scenario {
        cfg.load_fraction = Scenario::from(s).load_fraction();
    }
    if let Some(s) = seed {
        cfg.rng_seed = s;
    }
    if let Some(r) = runs {
        cfg.mc_runs = r;
    }
    Ok(cfg)
}

fn run_batch(cfg: &NetworkConfig) -> Result<Vec<SimResult>, Failure> {
    cfg.validate().map_err(Failure::usage)?;
    (0..cfg.mc_runs)
        .map(|i| unim_core::run(cfg, cfg.rng_seed + i as u64).map_err(Failure::usage))
        .collect()
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let mut cfg = effective_config(a.config.as_deref(), a.scenario, a.seed, a.runs)?;
    if let Some(p) = a.policy {
        cfg.policy = p.into();
    }
    let out = resolve_out(a.out);
    let results = run_batch(&cfg)?;
    export::export(&results, &out).map_err(|e| Failure::Runtime(format!("{e:#}")))?;
    let summary = stats::SummaryStats::from_runs(&results);
    print!("{}", stats::compare_table(std::slice::from_ref(&summary)));
    println!("wrote {} run(s) to {}", results.len(), out.display());
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> Result<(), Failure> {
    let cfg = effective_config(a.config.as_deref(), a.scenario, a.seed, a.runs)?;
    let out = resolve_out(a.out);
    let mut rows = Vec::with_capacity(Policy::ALL.len());
    for policy in Policy::ALL {
        let results = run_batch(&NetworkConfig {
            policy,
            ..cfg.clone()
        })?;
        rows.push(stats::SummaryStats::from_runs(&results));
    }
    print!("{}", stats::compare_table(&rows));
    export::write_compare(&rows, &out).map_err(|e| Failure::Runtime(format!("{e:#}")))?;
    println!("wrote comparison to {}", out.join("compare.json").display());
    Ok(())
}

fn cmd_validate(path: &std::path::Path) -> Result<(), Failure> {
    let cfg = config::load(Some(path)).map_err(Failure::Usage)?;
    cfg.validate().map_err(Failure::usage)?;
    print!("{}", config::echo(&cfg));
    Ok(())
}
