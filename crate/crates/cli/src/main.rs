mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use commands::{Failure, Outcome};
use config::{Format, Settings};

#[derive(Parser, Debug)]
#[command(
    name = "dyadic-sparse",
    version,
    about = "Deterministic batch runs of the dyadic-sparse harnesses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config file; flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report destination [default: stdout]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Haar analysis, synthesis and Parseval check of f
    Haar,
    /// Calderon-Zygmund decomposition of f on r-grandchildren
    Cz,
    /// Stopping family of (f, g) and its sparsity certificate
    Stopping,
    /// Sparse covers for j = 0..=j-max
    SparseCover,
    /// Square function against the sparse form over seeded random pairs
    Domination,
    /// Weak (1,1) profile of the dyadic square functions
    Weak11,
    /// Testing constant of the built-in kernel
    Testing,
    /// Monte Carlo probability of goodness with an independence test
    Goodness,
    /// Weighted square-function ratios against A_p characteristics
    Weights,
    /// Off-diagonal Poisson-type estimate over admissible pairs
    Offdiag,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Haar => "haar",
            Command::Cz => "cz",
            Command::Stopping => "stopping",
            Command::SparseCover => "sparse-cover",
            Command::Domination => "domination",
            Command::Weak11 => "weak11",
            Command::Testing => "testing",
            Command::Goodness => "goodness",
            Command::Weights => "weights",
            Command::Offdiag => "offdiag",
        }
    }

    fn run(self, s: &mut Settings) -> Result<Outcome, Failure> {
        match self {
            Command::Haar => commands::haar(s),
            Command::Cz => commands::cz(s),
            Command::Stopping => commands::stopping(s),
            Command::SparseCover => commands::sparse_cover(s),
            Command::Domination => commands::domination(s),
            Command::Weak11 => commands::weak11(s),
            Command::Testing => commands::testing(s),
            Command::Goodness => commands::goodness(s),
            Command::Weights => commands::weights(s),
            Command::Offdiag => commands::offdiag(s),
        }
    }
}

fn strip_nulls(v: Value) -> Value {
    match v {
        Value::Object(m) => Value::Object(m.into_iter().filter(|(_, v)| !v.is_null()).collect()),
        v => v,
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut settings = match &cli.config {
        Some(p) => match Settings::load(p) {
            Ok(s) => s.merged(&cli.settings),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => cli.settings.clone(),
    };
    if let Some(n) = settings.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let format = *settings.format.get_or_insert(Format::Json);
    let outcome = match cli.command.run(&mut settings) {
        Ok(o) => o,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(Failure::Invariant(e)) => {
            eprintln!("invariant failure: {e}");
            return ExitCode::from(1);
        }
    };
    let text = match format {
        Format::Json => {
            let report = json!({
                "schema": 1,
                "command": cli.command.name(),
                "config": strip_nulls(serde_json::to_value(&settings).expect("settings serialize")),
                "result": outcome.result,
                "passed": outcome.passed,
            });
            serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
        }
        Format::Csv => outcome.csv.unwrap_or_default(),
    };
    if let Err(e) = emit(cli.out.as_ref(), &text) {
        eprintln!("error: writing report: {e}");
        return ExitCode::from(2);
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
