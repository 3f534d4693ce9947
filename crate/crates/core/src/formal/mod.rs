//! Formal assurance documents: generation from argument modules, parsing,
//! integrity checking, and the client side of the verification-backend
//! protocol.
//!
//! Rendered syntax, one statement per line:
//!
//! ```text
//! Claim C7_c <<The LRE is deadlock free>>
//! Claim LRE.Validation needsSupport <<...>>
//! ArtifactReference Sn3 <<...>>
//! Inference I1 src <{@{ArtifactReference Sn3}}> tgt <{@{Claim C7_c}}> <<...>>
//! Context X1 src <{@{Claim LRE_A1}}> tgt <{@{Claim C6_a}}> <<...>>
//! (* verdict: deadlock_free = holds; 32256 configurations explored *)
//! ```

mod client;
mod export;
mod integrity;
mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::case_model::Declaration;

pub use client::{submit_to_backend, FormalChecker, LocalChecker, RemoteChecker, TransportError};
pub use export::{export_module, ExportError};
pub use integrity::{check_integrity, check_text};
pub use parse::{parse_formal, FormalSyntaxError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RefKind {
    Claim,
    ArtifactReference,
    Inference,
}

impl RefKind {
    pub fn keyword(self) -> &'static str {
        match self {
            RefKind::Claim => "Claim",
            RefKind::ArtifactReference => "ArtifactReference",
            RefKind::Inference => "Inference",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Reference {
    pub kind: RefKind,
    pub name: String,
}

impl Reference {
    pub fn claim(name: impl Into<String>) -> Self {
        Reference {
            kind: RefKind::Claim,
            name: name.into(),
        }
    }

    pub fn artifact(name: impl Into<String>) -> Self {
        Reference {
            kind: RefKind::ArtifactReference,
            name: name.into(),
        }
    }
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{{{} {}}}", self.kind.keyword(), self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Claim {
        name: String,
        declaration: Declaration,
        description: String,
    },
    ArtifactReference {
        name: String,
        description: String,
    },
    Inference {
        name: String,
        sources: Vec<Reference>,
        target: Reference,
        description: String,
    },
    Context {
        name: String,
        source: Reference,
        target: Reference,
        description: String,
    },
}

impl Statement {
    pub fn name(&self) -> &str {
        match self {
            Statement::Claim { name, .. }
            | Statement::ArtifactReference { name, .. }
            | Statement::Inference { name, .. }
            | Statement::Context { name, .. } => name,
        }
    }

    /// The reference kind under which other statements may cite this one.
    pub fn ref_kind(&self) -> Option<RefKind> {
        match self {
            Statement::Claim { .. } => Some(RefKind::Claim),
            Statement::ArtifactReference { .. } => Some(RefKind::ArtifactReference),
            Statement::Inference { .. } => Some(RefKind::Inference),
            Statement::Context { .. } => None,
        }
    }

    pub fn references(&self) -> Vec<&Reference> {
        match self {
            Statement::Inference { sources, target, .. } => {
                sources.iter().chain(std::iter::once(target)).collect()
            }
            Statement::Context { source, target, .. } => vec![source, target],
            _ => Vec::new(),
        }
    }
}

/// Result of an external machine check attached to a document, e.g. the
/// exhaustive deadlock check of a state machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineVerdict {
    pub property: String,
    pub holds: bool,
    pub detail: String,
}

/// Statements in document order. Line numbers are kept for diagnostics and
/// ignored by equality.
#[derive(Debug, Clone, Default)]
pub struct FormalDocument {
    pub statements: Vec<Statement>,
    pub verdicts: Vec<MachineVerdict>,
    pub statement_lines: Vec<usize>,
    pub verdict_lines: Vec<usize>,
}

impl PartialEq for FormalDocument {
    fn eq(&self, other: &Self) -> bool {
        self.statements == other.statements && self.verdicts == other.verdicts
    }
}

impl FormalDocument {
    pub fn line_of(&self, index: usize) -> Option<usize> {
        self.statement_lines.get(index).copied()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for stmt in &self.statements {
            out.push_str(&render_statement(stmt));
            out.push('\n');
        }
        for v in &self.verdicts {
            let outcome = if v.holds { "holds" } else { "fails" };
            if v.detail.is_empty() {
                out.push_str(&format!("(* verdict: {} = {outcome} *)\n", v.property));
            } else {
                out.push_str(&format!("(* verdict: {} = {outcome}; {} *)\n", v.property, v.detail));
            }
        }
        out
    }
}

fn escape_description(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '>' => out.push_str("\\>"),
            '\n' => out.push(' '),
            other => out.push(other),
        }
    }
    out
}

fn ref_list(refs: &[Reference]) -> String {
    let inner: Vec<String> = refs.iter().map(Reference::to_string).collect();
    format!("<{{{}}}>", inner.join(", "))
}

pub fn render_statement(stmt: &Statement) -> String {
    match stmt {
        Statement::Claim {
            name,
            declaration,
            description,
        } => {
            let decl = declaration.keyword();
            let sep = if decl.is_empty() { "" } else { " " };
            format!("Claim {name}{sep}{decl} <<{}>>", escape_description(description))
        }
        Statement::ArtifactReference { name, description } => {
            format!("ArtifactReference {name} <<{}>>", escape_description(description))
        }
        Statement::Inference {
            name,
            sources,
            target,
            description,
        } => format!(
            "Inference {name} src {} tgt {} <<{}>>",
            ref_list(sources),
            ref_list(std::slice::from_ref(target)),
            escape_description(description)
        ),
        Statement::Context {
            name,
            source,
            target,
            description,
        } => format!(
            "Context {name} src {} tgt {} <<{}>>",
            ref_list(std::slice::from_ref(source)),
            ref_list(std::slice::from_ref(target)),
            escape_description(description)
        ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticEntry {
    pub id: String,
    pub severity: Severity,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
}

/// Wire form: `{"ok": bool, "entries": [{"id", "severity", "message", "line"?}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendDiagnostics {
    pub ok: bool,
    pub entries: Vec<DiagnosticEntry>,
}

impl BackendDiagnostics {
    pub fn from_entries(entries: Vec<DiagnosticEntry>) -> Self {
        let ok = entries.iter().all(|e| e.severity != Severity::Error);
        BackendDiagnostics { ok, entries }
    }

    pub fn errors(&self) -> impl Iterator<Item = &DiagnosticEntry> {
        self.entries.iter().filter(|e| e.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &DiagnosticEntry> {
        self.entries.iter().filter(|e| e.severity == Severity::Warning)
    }

    /// `ok` agrees with the entries.
    pub fn is_consistent(&self) -> bool {
        self.ok == self.entries.iter().all(|e| e.severity != Severity::Error)
    }
}
