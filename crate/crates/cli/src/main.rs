//! `finsler`: scenario-driven runs of the forward problem, norm recovery,
//! the non-uniqueness construction, elastic media and boundary geodesy.
//!
//! Exit codes: 0 all checks passed, 2 invalid configuration, 3 the
//! scenario is degenerate or the construction is impossible, 4 a
//! verification failed, 1 any other error.

mod commands;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use finsler_core::Error;

use crate::scenario::Scenario;

#[derive(Parser, Debug)]
#[command(name = "finsler", version, about = "Boundary distance experiments on Finsler manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "INT")]
    threads: Option<usize>,
    /// Strip ground truth (source locations, true norms) from outputs.
    #[arg(long, global = true)]
    blind: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Boundary distance data and oracle calibration.
    Forward,
    /// Embedding, matching, charts and norm recovery from boundary data.
    Recover {
        /// Boundary distance data file; overrides the scenario.
        #[arg(long, value_name = "PATH")]
        data: Option<PathBuf>,
    },
    /// A second norm with the same boundary distance data.
    Nonunique,
    /// qP Finsler norm of a stiffness field.
    Elastic {
        /// Stiffness field file (JSON); overrides the scenario.
        #[arg(long, value_name = "PATH")]
        stiffness: Option<PathBuf>,
    },
    /// Exit, cut, boundary cut and focal distances along inward normals.
    Geodesy,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Forward => "forward",
            Command::Recover { .. } => "recover",
            Command::Nonunique => "nonunique",
            Command::Elastic { .. } => "elastic",
            Command::Geodesy => "geodesy",
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Impossible(String),
    Io(String),
    Engine(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Input(m) => Failure::Config(m),
            Error::ConstructionImpossible(_) | Error::SeparationViolation { .. } => {
                Failure::Impossible(e.to_string())
            }
            e => Failure::Engine(e),
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Impossible(_) => 3,
            Failure::Io(_) | Failure::Engine(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Impossible(m) => write!(f, "{m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
            Failure::Engine(e) => write!(f, "{e}"),
        }
    }
}

/// Result of a command whose artifacts were written.
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

pub struct Ctx {
    pub scenario: Scenario,
    pub out: output::Out,
    pub blind: bool,
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("--config is required".into()))?;
    let mut scenario = Scenario::load(path)?;
    if let Some(s) = cli.seed {
        scenario.seed = s;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    let ctx = Ctx {
        scenario,
        out: output::Out::new(&cli.out)?,
        blind: cli.blind,
    };
    let outcome = match &cli.command {
        Command::Forward => commands::forward(&ctx),
        Command::Recover { data } => commands::recover(&ctx, data.as_deref()),
        Command::Nonunique => commands::nonunique(&ctx),
        Command::Elastic { stiffness } => commands::elastic(&ctx, stiffness.as_deref()),
        Command::Geodesy => commands::geodesy(&ctx),
    }?;
    ctx.out.json(
        "summary.json",
        &serde_json::json!({
            "command": cli.command.name(),
            "scenario": ctx.scenario.name,
            "seed": ctx.scenario.seed,
            "blind": ctx.blind,
            "pass": outcome.pass,
            "detail": outcome.detail,
        }),
    )?;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    match run(cli) {
        Ok(o) => {
            println!("{name}: {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            ExitCode::from(if o.pass { 0 } else { 4 })
        }
        Err(e) => {
            eprintln!("{name}: {e}");
            ExitCode::from(e.code())
        }
    }
}
