//! Constraint Query Language: a small, strict subset of the Epsilon Object
//! Language used to write validation rules over artifact views.
//!
//! Programs are statement lists (`var`, assignment, `for`, `if`/`else`,
//! `return`) over expressions with navigation (`e.Attr`), type extents
//! (`T.all()`, `M!T.all()`, `all("T")`), collection operations (`select`,
//! `selectOne`, `first`, `count`), `asReal`, `isTypeOf`, boolean and
//! arithmetic operators. The grammar is in `docs/cql.md`.

mod eval;
mod parser;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::artifact_store::{ArtifactView, Element};

pub use parser::{AssignOp, BinOp, Expr, ExprKind, Method, Stmt, UnOp};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// A positioned syntax or runtime error.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{position}: {message}")]
pub struct Diagnostic {
    pub message: String,
    pub position: Pos,
}

impl Diagnostic {
    pub(crate) fn new(message: impl Into<String>, position: Pos) -> Self {
        Diagnostic {
            message: message.into(),
            position,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Boolean(bool),
    Real(f64),
    Text(String),
    Element(Arc<Element>),
    ElementList(Vec<Arc<Element>>),
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Boolean(_) => "Boolean",
            Value::Real(_) => "Real",
            Value::Text(_) => "Text",
            Value::Element(_) => "Element",
            Value::ElementList(_) => "ElementList",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryProgram {
    pub statements: Vec<Stmt>,
    pub source_text: String,
}

pub fn parse_query(text: &str) -> Result<QueryProgram, Diagnostic> {
    let tokens = parser::tokenize(text)?;
    let statements = parser::Parser::new(tokens).program()?;
    Ok(QueryProgram {
        statements,
        source_text: text.to_string(),
    })
}

/// Runs the program against a view. Never mutates the view.
pub fn eval_query(program: &QueryProgram, view: &ArtifactView) -> Result<Value, Diagnostic> {
    eval::Interpreter::new(view).run(&program.statements)
}

/// Evaluates a constraint, which must produce a Boolean.
pub fn check_constraint(program: &QueryProgram, view: &ArtifactView) -> Result<bool, Diagnostic> {
    match eval_query(program, view)? {
        Value::Boolean(b) => Ok(b),
        other => Err(Diagnostic::new(
            format!("constraint returned {} instead of Boolean", other.type_name()),
            program.statements.last().map(Stmt::pos).unwrap_or_default(),
        )),
    }
}
