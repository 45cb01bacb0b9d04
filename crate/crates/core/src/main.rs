use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use singular_euler::io::{parse_config, run, Command, RunConfig};
use singular_euler::{DomainSpec, Error, Result};

/// Vortex-blob Euler flow on singular planar domains, with numerical checks
/// of the boundary estimates.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Compare det DS from the product formula with |S'|^2 on a polar grid.
    MapDiag(Common),
    /// Advect the configured field and write trajectories.
    Simulate(Common),
    /// Run estimate checks and write one report per check.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Check name or `all`; repeatable.
        #[arg(long)]
        check: Vec<String>,
        /// Sample count for every selected check.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Check the exact algebraic identities.
    Identities {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; defaults to the unit disc with no field.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed, overriding `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
        None => RunConfig::for_domain(DomainSpec::disc()),
    };
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("SINGULAR_EULER_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::InvalidConfig(format!("SINGULAR_EULER_THREADS='{v}' is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn execute(cli: Cli) -> Result<bool> {
    configure_threads()?;
    let (cfg, command) = match cli.command {
        Sub::MapDiag(c) => (load(&c)?, Command::MapDiag),
        Sub::Simulate(c) => (load(&c)?, Command::Simulate),
        Sub::Verify {
            common,
            check,
            samples,
        } => {
            let mut cfg = load(&common)?;
            if !check.is_empty() {
                cfg.verify.checks = check;
            }
            if samples.is_some() {
                cfg.verify.samples = samples;
            }
            cfg.validate()?;
            (cfg, Command::Verify)
        }
        Sub::Identities { common, samples } => {
            let mut cfg = load(&common)?;
            if samples.is_some() {
                cfg.verify.samples = samples;
            }
            (cfg, Command::Identities)
        }
    };
    run(&cfg, command)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!(r#"{{"error":"HardCheckFailed","message":"at least one hard check failed; see summary.json"}}"#);
            ExitCode::from(1)
        }
        Err(e) => {
            let msg = serde_json::json!({"error": e.code(), "message": e.to_string()});
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}
