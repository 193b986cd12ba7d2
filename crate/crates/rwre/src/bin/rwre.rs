use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rwre::experiment::{self, exit_code, CommandOutcome, ExperimentConfig};

#[derive(Parser)]
#[command(name = "rwre", version, about = "Monte Carlo lab for random walks in random environments on Z^2")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment config
    #[arg(long)]
    config: Option<PathBuf>,
    /// master seed, overriding the config
    #[arg(long)]
    seed: Option<u64>,
    /// worker threads (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// step cap per walk
    #[arg(long)]
    cap: Option<u64>,
    /// output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Record walks up to a target height
    Simulate(Common),
    /// Direction exceedance curves and v-/v+
    EstimateDirection(Common),
    /// Trap verdicts at reference points
    TrapScan(Common),
    /// Threat verdicts for every range up to r
    ThreatScan(Common),
    /// Threatened densities along a walk
    Density(Common),
    /// Run property suites (all when none are named)
    Verify {
        #[command(flatten)]
        common: Common,
        /// barrier, loops, uniforms, theta, assumptions, mixing
        suites: Vec<String>,
    },
    /// Box covariances across separations
    MixingScan(Common),
}

fn load(c: &Common, needs_config: bool) -> rwre::Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None if needs_config => return Err(rwre::Error::ConfigInvalid("--config is required".into())),
        None => ExperimentConfig::from_toml("")?,
    };
    if c.seed.is_some() {
        cfg.seed = c.seed;
    }
    if c.workers.is_some() {
        cfg.workers = c.workers;
    }
    if let Some(cap) = c.cap {
        cfg.cap = cap;
    }
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> rwre::Result<CommandOutcome> {
    match cli.command {
        Command::Simulate(c) => experiment::cmd_simulate(&load(&c, true)?),
        Command::EstimateDirection(c) => experiment::cmd_estimate_direction(&load(&c, true)?),
        Command::TrapScan(c) => experiment::cmd_trap_scan(&load(&c, true)?),
        Command::ThreatScan(c) => experiment::cmd_threat_scan(&load(&c, true)?),
        Command::Density(c) => experiment::cmd_density(&load(&c, true)?),
        Command::MixingScan(c) => experiment::cmd_mixing_scan(&load(&c, true)?),
        Command::Verify { common, suites } => {
            let mut cfg = load(&common, false)?;
            if cfg.verify.is_none() {
                cfg.verify = Some(Default::default());
            }
            // cap overrides apply to the suites that walk to a height
            if let (Some(cap), Some(v)) = (common.cap, cfg.verify.as_mut()) {
                v.barrier.get_or_insert_with(Default::default).cap = cap;
                v.theta.get_or_insert_with(Default::default).cap = cap;
                v.assumptions.get_or_insert_with(Default::default).cap = cap;
            }
            experiment::cmd_verify(&cfg, &suites)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(if outcome.passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
