//! Command-line parsing and dispatch.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::Report;
use crate::suites::Suite;

#[derive(Debug, Parser)]
#[command(name = "fibspace", version, about = "Invariant suites and constructions on fibrations of flat tori")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML or JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for the randomized suites.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Nodes per axis; `convergence` takes a comma-separated list.
    #[arg(long, global = true, value_name = "N[,N...]", value_delimiter = ',')]
    pub grid: Vec<usize>,
    /// Output directory for artifacts and `report.json`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Tolerance override, repeatable.
    #[arg(long = "tol", global = true, value_name = "KEY=VAL")]
    pub tol: Vec<String>,
    /// Record wall time in the report (makes reports non-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the invariant suites.
    Verify {
        /// Restrict to these suites (repeatable); all by default.
        #[arg(long = "suite", value_enum)]
        suites: Vec<Suite>,
        #[command(flatten)]
        common: Common,
    },
    /// Error-versus-grid study on the exp(sin) scenario.
    Convergence {
        #[command(flatten)]
        common: Common,
    },
    /// Split a diffeomorphism into slice and vertical factors.
    Decompose {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Find f with π∘f = π₀ for a fibration near π₀.
    Factorize {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Chain factorizations along a path of fibrations.
    Connect {
        manifest: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Trivialize a fibration over the global section.
    Trivialize {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Split a section of π₀*TB.
    Split {
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Transport fibers along a path of fibrations.
    Transport {
        manifest: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Verify { common, .. }
            | Command::Convergence { common }
            | Command::Decompose { common, .. }
            | Command::Factorize { common, .. }
            | Command::Connect { common, .. }
            | Command::Trivialize { common, .. }
            | Command::Split { common, .. }
            | Command::Transport { common, .. } => common,
        }
    }
}

/// Config file, then flags, then defaults.
fn build_config(command: &Command) -> Result<RunConfig, CliError> {
    let common = command.common();
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    match (command, common.grid.as_slice()) {
        (_, []) => {}
        (Command::Convergence { .. }, grids) => config.convergence_grids = grids.to_vec(),
        (_, [n]) => config.grid = *n,
        (_, _) => return Err(CliError::Config("--grid takes a single size outside `convergence`".into())),
    }
    if let Some(out) = &common.out {
        config.out = Some(out.clone());
    }
    for spec in &common.tol {
        config.set_tolerance(spec)?;
    }
    config.resolve()
}

/// Runs the parsed command; `args` is echoed into the report.
pub fn run(cli: Cli, args: Vec<String>) -> Result<Report, CliError> {
    let start = Instant::now();
    let config = build_config(&cli.command)?;
    let timing = cli.command.common().timing;
    let mut report = match &cli.command {
        Command::Verify { suites, .. } => {
            let suites = if suites.is_empty() { Suite::ALL.to_vec() } else { suites.clone() };
            commands::verify(args, config, &suites)?
        }
        Command::Convergence { .. } => commands::convergence(args, config)?,
        Command::Decompose { input, .. } => commands::decompose(args, config, input)?,
        Command::Factorize { input, .. } => commands::factorize_cmd(args, config, input)?,
        Command::Connect { manifest, .. } => commands::connect(args, config, manifest)?,
        Command::Trivialize { input, .. } => commands::trivialize_cmd(args, config, input)?,
        Command::Split { input, .. } => commands::split(args, config, input)?,
        Command::Transport { manifest, .. } => commands::transport(args, config, manifest)?,
    };
    if timing {
        report.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    if let Some(dir) = &report.config.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
        let path = dir.join("report.json");
        std::fs::write(&path, report.to_json() + "\n")
            .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    }
    Ok(report)
}
