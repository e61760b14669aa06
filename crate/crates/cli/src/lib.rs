//! Scenario-driven front end for `sectorlab-core`: reads a JSON scenario,
//! runs the requested verification sections and assembles a JSON report.

pub mod codec;
pub mod commands;
pub mod report;
pub mod scenario;

use std::time::Instant;

use sectorlab_core::Config;

pub use commands::Command;
use commands::Fault;
use report::{Check, Diagnostic, DiagnosticKind, Report, Section};
use scenario::{Context, Scenario};

/// Flag overrides; unset values fall back to the scenario, then to the
/// defaults (`1e-9`, seed `0`).
#[derive(Clone, Copy, Debug, Default)]
pub struct Options {
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
}

/// Runs `command` on the scenario text. Always returns a report; its
/// `exit_code` is the process exit code.
pub fn execute(command: Command, text: &str, opts: &Options) -> Report {
    let start = Instant::now();
    let defaults = Config::default();
    let mut report = match Scenario::parse(text) {
        Err(msg) => {
            let mut r = Report::new(
                command.name(),
                opts.seed.unwrap_or(defaults.seed),
                opts.tolerance.unwrap_or(defaults.tol),
                serde_json::Value::Null,
            );
            r.diagnostics.push(Diagnostic { kind: DiagnosticKind::Parse, section: None, message: msg });
            r
        }
        Ok(sc) => {
            let cfg = Config {
                tol: opts.tolerance.or(sc.tolerance).unwrap_or(defaults.tol),
                seed: opts.seed.or(sc.seed).unwrap_or(defaults.seed),
            };
            let mut r = Report::new(command.name(), cfg.seed, cfg.tol, sc.source.clone());
            match Context::build(&sc, cfg) {
                Err(e) => r.diagnostics.push(Diagnostic::from_error(Some("scenario"), &e)),
                Ok(ctx) => run(command, &ctx, &mut r),
            }
            r
        }
    };
    report.finalize();
    report.timing.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    report
}

fn run(command: Command, ctx: &Context, report: &mut Report) {
    let (list, strict): (&[Command], bool) = match command {
        Command::All => (&Command::PIPELINE, false),
        _ => (std::slice::from_ref(&command), true),
    };
    for &c in list {
        let name = c.name();
        match commands::run_section(c, ctx) {
            Ok(out) => {
                let mut status = commands::section_status(&out.checks);
                if strict && !out.unmet.is_empty() {
                    status = "precondition_failed";
                    report.diagnostics.extend(out.unmet.iter().map(|m| Diagnostic {
                        kind: DiagnosticKind::Precondition,
                        section: Some(name.into()),
                        message: m.clone(),
                    }));
                }
                report.checks.extend(out.checks.into_iter().map(|mut ch| {
                    ch.section = name.into();
                    ch
                }));
                report.sections.push(Section { name: name.into(), status: status.into(), data: out.data });
            }
            Err(Fault::Missing(why)) if !strict => {
                let mut ch = Check::not_applicable("inputs", why.clone());
                ch.section = name.into();
                report.checks.push(ch);
                report.sections.push(Section {
                    name: name.into(),
                    status: "not_applicable".into(),
                    data: serde_json::json!({ "reason": why }),
                });
            }
            Err(Fault::Missing(why)) => {
                report.diagnostics.push(Diagnostic {
                    kind: DiagnosticKind::Precondition,
                    section: Some(name.into()),
                    message: format!("{name} {why}"),
                });
                report.sections.push(Section { name: name.into(), status: "precondition_failed".into(), data: serde_json::Value::Null });
            }
            Err(Fault::Engine(e)) => {
                let d = Diagnostic::from_error(Some(name), &e);
                let status = match d.kind {
                    DiagnosticKind::Ambiguity => "ambiguous",
                    _ => "precondition_failed",
                };
                report.diagnostics.push(d);
                report.sections.push(Section { name: name.into(), status: status.into(), data: serde_json::Value::Null });
            }
        }
    }
}
