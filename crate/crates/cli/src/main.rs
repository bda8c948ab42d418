//! `helson`: experiments on random Helson and S-patterned matrices.
//!
//! Exit codes: 0 success, 2 configuration error, 3 budget exceeded, 1 other.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use helson::Execution;
use serde::Serialize;

use config::{
    CircuitsArgs, Layered, MomentsArgs, NumtheoryArgs, PatternCheckArgs, SimulateArgs, TruncationArgs, WordsArgs,
};
use output::Outputs;

/// An invalid option or option combination.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Parser)]
#[command(name = "helson", version, about = "Spectral experiments on random patterned matrices")]
struct Cli {
    /// JSON config file or a manifest from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: $HELSON_OUT or ./helson-out].
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Run every loop on one thread. Outputs are identical either way.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample matrices and compare their ESD with the semicircle law.
    Simulate(SimulateArgs),
    /// Monte Carlo trace moments with the combinatorial cross-check.
    Moments(MomentsArgs),
    /// Report the C-condition for a pattern map.
    PatternCheck(PatternCheckArgs),
    /// Enumerate or classify partition words.
    Words(WordsArgs),
    /// Solution counts p_n(w) of a word's equation system.
    Circuits(CircuitsArgs),
    /// Multiplication-table ratios.
    Numtheory(NumtheoryArgs),
    /// Truncation coupling gaps and the bounded-Lipschitz bound.
    Truncation(TruncationArgs),
}

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    config: &'a T,
    outputs: Vec<String>,
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out_dir
        .clone()
        .or_else(|| std::env::var_os("HELSON_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("helson-out"))
}

fn finish<T: Serialize>(cli: &Cli, name: &str, cfg: &T, mut out: Outputs, line: String) -> anyhow::Result<()> {
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        subcommand: name,
        config: cfg,
        outputs: out.names(),
    };
    out.add_json("manifest.json", &manifest);
    let dir = out_dir(cli);
    let written = out.write_all(&dir)?;
    // A closed stdout (e.g. piped into `head`) is not an error of the run.
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{name}: {line}");
    for p in written {
        let _ = writeln!(stdout, "  wrote {}", p.display());
    }
    Ok(())
}

fn run<T, V>(
    cli: &Cli,
    name: &str,
    args: &T,
    validate: impl FnOnce(&T) -> Result<V, ConfigError>,
    body: impl FnOnce(&V, &mut Outputs) -> anyhow::Result<String>,
) -> anyhow::Result<()>
where
    T: Layered,
{
    let resolved = config::resolve(name, args, cli.config.as_deref())?;
    let validated = validate(&resolved)?;
    let mut out = Outputs::default();
    let line = body(&validated, &mut out)?;
    finish(cli, name, &resolved, out, line)
}

fn dispatch(cli: &Cli) -> anyhow::Result<()> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match &cli.command {
        Command::Simulate(a) => run(cli, "simulate", a, |r| r.validate(), |c, o| commands::simulate(c, exec, o)),
        Command::Moments(a) => run(cli, "moments", a, |r| r.validate(), |c, o| commands::moments(c, exec, o)),
        Command::PatternCheck(a) => run(cli, "pattern-check", a, |r| r.validate(), commands::pattern_check),
        Command::Words(a) => run(cli, "words", a, |r| Ok(r.clone()), commands::words),
        Command::Circuits(a) => run(cli, "circuits", a, |r| Ok(r.clone()), |c, o| commands::circuits(c, exec, o)),
        Command::Numtheory(a) => run(cli, "numtheory", a, |r| Ok(r.clone()), commands::numtheory),
        Command::Truncation(a) => run(cli, "truncation", a, |r| r.validate(), |c, o| commands::truncation(c, exec, o)),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<helson::Error>() {
        Some(helson::Error::Budget { .. }) | Some(helson::Error::LabelOverflow { .. }) => 3,
        Some(helson::Error::InvalidInput(_))
        | Some(helson::Error::DegenerateTruncation(_))
        | Some(helson::Error::InjectivityViolation { .. })
        | Some(helson::Error::DimensionMismatch(..)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
