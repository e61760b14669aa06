use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use sectorlab::report::{Diagnostic, DiagnosticKind, Report};
use sectorlab::{execute, Command, Options};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
}

/// Verify operator-algebra scenarios and write a JSON report.
///
/// Exit codes: 0 all applicable checks pass, 1 a check fails, 2 parse
/// error, 3 precondition violated, 4 numerically ambiguous.
#[derive(Debug, Parser)]
#[command(name = "sectorlab", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Scenario file (JSON).
    scenario: PathBuf,
    /// Relative tolerance for rank and membership decisions [default: 1e-9].
    #[arg(long)]
    tolerance: Option<f64>,
    /// Seed for generic elements and sampling [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Format::Json = cli.format;
    let report = match std::fs::read_to_string(&cli.scenario) {
        Ok(text) => {
            if let Some(t) = cli.tolerance.filter(|t| !(t.is_finite() && *t > 0.0)) {
                failed(&cli, DiagnosticKind::Parse, format!("--tolerance must be positive, found {t}"))
            } else {
                execute(cli.command, &text, &Options { tolerance: cli.tolerance, seed: cli.seed })
            }
        }
        Err(e) => failed(&cli, DiagnosticKind::Io, format!("cannot read {}: {e}", cli.scenario.display())),
    };
    for d in &report.diagnostics {
        eprintln!("sectorlab: {:?}: {}", d.kind, d.message);
    }
    let text = report.to_json();
    match &cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("sectorlab: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(report.exit_code as u8)
}

fn failed(cli: &Cli, kind: DiagnosticKind, message: String) -> Report {
    let mut r = Report::new(cli.command.name(), cli.seed.unwrap_or(0), cli.tolerance.unwrap_or(1e-9), serde_json::Value::Null);
    r.diagnostics.push(Diagnostic { kind, section: None, message });
    r.finalize();
    r
}
