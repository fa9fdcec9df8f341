//! Uniform command report: every CLI subcommand emits one of these, as
//! text, LaTeX or JSON with the fixed schema
//! `{"command", "status", "items": [{"name", "expr", "verdict"}], "notes"}`.

use serde::Serialize;
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Verified,
    Falsified,
    Unknown,
    Error,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Verified => "verified",
            Status::Falsified => "falsified",
            Status::Unknown => "unknown",
            Status::Error => "error",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportItem {
    pub name: String,
    pub expr: String,
    pub verdict: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub status: Status,
    pub items: Vec<ReportItem>,
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(command: &str, status: Status) -> Report {
        Report { command: command.into(), status, items: Vec::new(), notes: Vec::new() }
    }

    pub fn item(&mut self, name: impl Into<String>, expr: impl Into<String>, verdict: impl Into<String>) {
        self.items.push(ReportItem {
            name: name.into(),
            expr: expr.into(),
            verdict: verdict.into(),
        });
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}: {}\n", self.command, self.status);
        for it in &self.items {
            if it.expr.is_empty() {
                out.push_str(&format!("  {}: {}\n", it.name, it.verdict));
            } else {
                out.push_str(&format!("  {} = {}  [{}]\n", it.name, it.expr, it.verdict));
            }
        }
        for n in &self.notes {
            out.push_str(&format!("  note: {n}\n"));
        }
        out
    }
}
