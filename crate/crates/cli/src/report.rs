//! Verification reports. Everything except `timing` is a function of the
//! scenario, seed and tolerance.

use serde::Serialize;
use serde_json::Value;
use sectorlab_core::{Error, ErrorKind};

pub const REPORT_SCHEMA: &str = "sectorlab.report/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub section: String,
    pub verdict: Verdict,
    pub residual: Option<f64>,
    pub threshold: Option<f64>,
    pub invariants: Vec<String>,
    pub detail: Option<String>,
}

impl Check {
    fn new(name: &str, verdict: Verdict) -> Self {
        Self {
            name: name.into(),
            section: String::new(),
            verdict,
            residual: None,
            threshold: None,
            invariants: Vec::new(),
            detail: None,
        }
    }

    /// Passes when `residual ≤ threshold`.
    pub fn residual(name: &str, residual: f64, threshold: f64) -> Self {
        let verdict = if residual <= threshold { Verdict::Pass } else { Verdict::Fail };
        Self { residual: Some(residual), threshold: Some(threshold), ..Self::new(name, verdict) }
    }

    pub fn boolean(name: &str, holds: bool) -> Self {
        Self::new(name, if holds { Verdict::Pass } else { Verdict::Fail })
    }

    pub fn not_applicable(name: &str, why: impl Into<String>) -> Self {
        Self { detail: Some(why.into()), ..Self::new(name, Verdict::NotApplicable) }
    }

    pub fn with_invariants(mut self, invariants: impl IntoIterator<Item = String>) -> Self {
        self.invariants = invariants.into_iter().collect();
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    Parse,
    Precondition,
    Ambiguity,
    Io,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub section: Option<String>,
    pub message: String,
}

impl Diagnostic {
    pub fn from_error(section: Option<&str>, e: &Error) -> Self {
        let kind = match e.kind() {
            ErrorKind::Precondition => DiagnosticKind::Precondition,
            ErrorKind::Ambiguity => DiagnosticKind::Ambiguity,
        };
        Self { kind, section: section.map(String::from), message: e.to_string() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    ParseError,
    PreconditionFailed,
    Ambiguous,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::ParseError => 2,
            Status::PreconditionFailed => 3,
            Status::Ambiguous => 4,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Section {
    pub name: String,
    /// `pass`, `fail`, `not_applicable`, `precondition_failed` or `ambiguous`.
    pub status: String,
    pub data: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub seed: u64,
    pub tolerance: f64,
    pub status: Status,
    pub exit_code: i32,
    pub scenario: Value,
    pub sections: Vec<Section>,
    pub checks: Vec<Check>,
    pub diagnostics: Vec<Diagnostic>,
    /// Wall-clock data; the only non-deterministic field.
    pub timing: Timing,
}

impl Report {
    pub fn new(command: &str, seed: u64, tolerance: f64, scenario: Value) -> Self {
        Self {
            schema: REPORT_SCHEMA,
            tool_version: TOOL_VERSION,
            command: command.into(),
            seed,
            tolerance,
            status: Status::Pass,
            exit_code: 0,
            scenario,
            sections: Vec::new(),
            checks: Vec::new(),
            diagnostics: Vec::new(),
            timing: Timing { elapsed_ms: 0.0 },
        }
    }

    /// Status from diagnostics and verdicts: precondition failures first,
    /// then ambiguities, then failed checks.
    pub fn finalize(&mut self) {
        let has = |k: DiagnosticKind| self.diagnostics.iter().any(|d| d.kind == k);
        self.status = if has(DiagnosticKind::Parse) || has(DiagnosticKind::Io) {
            Status::ParseError
        } else if has(DiagnosticKind::Precondition) {
            Status::PreconditionFailed
        } else if has(DiagnosticKind::Ambiguity) {
            Status::Ambiguous
        } else if self.checks.iter().any(|c| c.verdict == Verdict::Fail) {
            Status::Fail
        } else {
            Status::Pass
        };
        self.exit_code = self.status.exit_code();
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_precedence() {
        let mut r = Report::new("all", 0, 1e-9, Value::Null);
        r.checks.push(Check::residual("x", 1.0, 0.5));
        r.finalize();
        assert_eq!(r.exit_code, 1);
        r.diagnostics.push(Diagnostic::from_error(None, &Error::Ambiguous("gap".into())));
        r.finalize();
        assert_eq!(r.exit_code, 4);
        r.diagnostics.push(Diagnostic::from_error(None, &Error::Precondition("bad".into())));
        r.finalize();
        assert_eq!(r.exit_code, 3);
    }

    #[test]
    fn not_applicable_checks_do_not_fail() {
        let mut r = Report::new("theorem1", 0, 1e-9, Value::Null);
        r.checks.push(Check::not_applicable("theorem1_hypotheses", "action_not_inner"));
        r.finalize();
        assert_eq!(r.status, Status::Pass);
    }
}
