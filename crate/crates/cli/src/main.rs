//! `qw`: command-line front end for the quadratic-form checks.
//!
//! Reads one JSON document (stdin or `--input`) and prints one JSON report.
//! Exit codes: 0 positive result, 3 negative or inconclusive, 2 input error.

mod commands;
mod input;
mod output;

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use qw_testkit::OracleConfig;
use serde::Serialize;
use serde_json::{json, Value};

use commands::{OracleKind, Outcome};

const EXIT_INPUT: u8 = 2;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct InputError {
    pub kind: &'static str,
    pub message: String,
}

impl InputError {
    pub fn parse(message: impl Into<String>) -> Self {
        Self { kind: "parse", message: message.into() }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self { kind: "invalid_input", message: message.into() }
    }

    pub fn core(context: &str, e: qw_core::Error) -> Self {
        Self::invalid(format!("{context}: {e}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Pretty,
}

#[derive(Debug, Parser)]
#[command(name = "qw", version, about = "Nonsolvability checks for complex quadratic-form operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Input document (defaults to stdin).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Relative singular-value cutoff for numerical ranks.
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    /// Relative eigenvalue cutoff for semidefiniteness.
    #[arg(long, global = true)]
    tol_psd: Option<f64>,
    #[arg(long, global = true)]
    max_starts: Option<usize>,
    #[arg(long, global = true)]
    mu_attempts: Option<usize>,
    /// Use C = (AJB - BJA)/2 instead of the Poisson bracket with S = J.
    #[arg(long, global = true)]
    heisenberg_normalization: bool,
    /// Explain which rank threshold decided condition (c).
    #[arg(long, global = true)]
    frontier: bool,
    #[arg(long, global = true, value_enum, default_value = "json")]
    output: OutputFormat,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bracket matrix C of A and B.
    Bracket,
    /// Decide whether span{A, B} contains a nonzero semidefinite member.
    Nondissipative,
    /// Extreme ranks and joint kernel of the pencil.
    Ranks,
    /// Search for a common zero of Q_A and Q_B (with Q_C != 0 if C is known).
    Witness,
    /// Full nonsolvability check.
    Check,
    #[command(hide = true)]
    Oracle {
        #[arg(value_enum)]
        which: OracleKind,
        #[arg(long, default_value_t = 10_000)]
        grid_points: usize,
        #[arg(long, default_value_t = 1_000_000)]
        sphere_samples: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Bracket => "bracket",
            Command::Nondissipative => "nondissipative",
            Command::Ranks => "ranks",
            Command::Witness => "witness",
            Command::Check => "check",
            Command::Oracle { .. } => "oracle",
        }
    }
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    input: &'a Value,
    result: Value,
    wall_ms: u128,
}

fn read_input(path: Option<&PathBuf>) -> Result<String, InputError> {
    let mut text = String::new();
    match path {
        Some(p) => {
            text = std::fs::read_to_string(p).map_err(|e| InputError::parse(format!("{}: {e}", p.display())))?;
        }
        None => {
            std::io::stdin().read_to_string(&mut text).map_err(|e| InputError::parse(format!("stdin: {e}")))?;
        }
    }
    Ok(text)
}

fn run(cli: &Cli, start: Instant) -> Result<(String, i32), InputError> {
    let doc = input::parse(&read_input(cli.input.as_ref())?)?;
    let overrides = input::Overrides {
        seed: cli.seed,
        tol_rank: cli.tol_rank,
        tol_psd: cli.tol_psd,
        max_starts: cli.max_starts,
        mu_attempts: cli.mu_attempts,
        frontier: cli.frontier,
    };
    let cfg = input::check_config(&doc, &overrides)?;
    let seed = cfg.tol.seed;
    log::info!("{} on {:?} input of dimension {} (seed {seed})", cli.command.name(), doc.kind, doc.a.dim());
    let Outcome { result, code } = match &cli.command {
        Command::Bracket => commands::bracket(&doc, &cfg, cli.heisenberg_normalization)?,
        Command::Nondissipative => commands::nondissipative(&doc, &cfg)?,
        Command::Ranks => commands::ranks(&doc, &cfg)?,
        Command::Witness => commands::witness(&doc, &cfg, cli.heisenberg_normalization)?,
        Command::Check => commands::check(&doc, &cfg)?,
        Command::Oracle { which, grid_points, sphere_samples } => {
            let ocfg = OracleConfig { grid_points: *grid_points, sphere_samples: *sphere_samples, seed };
            ocfg.validate().map_err(|e| InputError::core("oracle", e))?;
            commands::oracle(&doc, *which, &ocfg, &cfg)?
        }
    };
    let report = Report {
        tool: "qw",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name(),
        seed,
        input: &doc.echo,
        result,
        wall_ms: start.elapsed().as_millis(),
    };
    Ok((render(&report, cli.output), code))
}

fn render<T: Serialize>(value: &T, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => serde_json::to_string(value),
        OutputFormat::Pretty => serde_json::to_string_pretty(value),
    }
    .expect("reports serialize")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QW_LOG", "warn")).init();
    let start = Instant::now();
    let cli = Cli::parse();
    match run(&cli, start) {
        Ok((text, code)) => {
            println!("{text}");
            ExitCode::from(code as u8)
        }
        Err(e) => {
            log::error!("{e}");
            let body = json!({ "error": { "kind": e.kind, "message": e.message } });
            println!("{}", render(&body, cli.output));
            ExitCode::from(EXIT_INPUT)
        }
    }
}
