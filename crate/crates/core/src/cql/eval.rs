use std::collections::HashMap;
use std::sync::Arc;

use super::parser::{AssignOp, BinOp, Expr, ExprKind, Method, Stmt, UnOp};
use super::{Diagnostic, Pos, Value};
use crate::artifact_store::{ArtifactView, Child, Element, Scalar};

pub(crate) struct Interpreter<'v> {
    view: &'v ArtifactView,
    scopes: Vec<HashMap<String, Value>>,
}

type Flow = Result<Option<Value>, Diagnostic>;

impl<'v> Interpreter<'v> {
    pub(crate) fn new(view: &'v ArtifactView) -> Self {
        Interpreter {
            view,
            scopes: vec![HashMap::new()],
        }
    }

    pub(crate) fn run(&mut self, program: &[Stmt]) -> Result<Value, Diagnostic> {
        match self.block(program)? {
            Some(v) => Ok(v),
            None => Err(Diagnostic::new("program finished without returning", Pos::default())),
        }
    }

    fn block(&mut self, stmts: &[Stmt]) -> Flow {
        for stmt in stmts {
            if let Some(v) = self.stmt(stmt)? {
                return Ok(Some(v));
            }
        }
        Ok(None)
    }

    fn scoped(&mut self, frame: HashMap<String, Value>, stmts: &[Stmt]) -> Flow {
        self.scopes.push(frame);
        let result = self.block(stmts);
        self.scopes.pop();
        result
    }

    fn lookup(&self, name: &str, pos: Pos) -> Result<Value, Diagnostic> {
        self.scopes
            .iter()
            .rev()
            .find_map(|s| s.get(name))
            .cloned()
            .ok_or_else(|| Diagnostic::new(format!("unbound variable `{name}`"), pos))
    }

    fn stmt(&mut self, stmt: &Stmt) -> Flow {
        match stmt {
            Stmt::Var { name, value, .. } => {
                let v = self.expr(value)?;
                self.scopes.last_mut().expect("scope").insert(name.clone(), v);
                Ok(None)
            }
            Stmt::Assign { name, op, value, pos } => {
                let rhs = self.expr(value)?;
                let new = match op {
                    AssignOp::Set => rhs,
                    AssignOp::Add | AssignOp::Sub => {
                        let current = self.lookup(name, *pos)?;
                        let bin = if *op == AssignOp::Add { BinOp::Add } else { BinOp::Sub };
                        arithmetic(bin, &current, &rhs, *pos)?
                    }
                };
                let slot = self
                    .scopes
                    .iter_mut()
                    .rev()
                    .find_map(|s| s.get_mut(name))
                    .ok_or_else(|| Diagnostic::new(format!("unbound variable `{name}`"), *pos))?;
                *slot = new;
                Ok(None)
            }
            Stmt::For { var, iterable, body, pos } => {
                let items = match self.expr(iterable)? {
                    Value::ElementList(items) => items,
                    other => {
                        return Err(Diagnostic::new(
                            format!("for-loop needs an element list, got {}", other.type_name()),
                            *pos,
                        ))
                    }
                };
                for item in items {
                    let frame = HashMap::from([(var.clone(), Value::Element(item))]);
                    if let Some(v) = self.scoped(frame, body)? {
                        return Ok(Some(v));
                    }
                }
                Ok(None)
            }
            Stmt::If { condition, then, otherwise, .. } => {
                if self.boolean(condition)? {
                    self.scoped(HashMap::new(), then)
                } else if let Some(otherwise) = otherwise {
                    self.scoped(HashMap::new(), otherwise)
                } else {
                    Ok(None)
                }
            }
            Stmt::Return { value, .. } => self.expr(value).map(Some),
        }
    }

    fn boolean(&mut self, expr: &Expr) -> Result<bool, Diagnostic> {
        match self.expr(expr)? {
            Value::Boolean(b) => Ok(b),
            other => Err(Diagnostic::new(
                format!("expected Boolean, got {}", other.type_name()),
                expr.pos,
            )),
        }
    }

    fn expr(&mut self, expr: &Expr) -> Result<Value, Diagnostic> {
        let pos = expr.pos;
        match &expr.kind {
            ExprKind::Real(r) => Ok(Value::Real(*r)),
            ExprKind::Text(t) => Ok(Value::Text(t.clone())),
            ExprKind::Bool(b) => Ok(Value::Boolean(*b)),
            ExprKind::Var(name) => self.lookup(name, pos),
            ExprKind::All(type_name) => Ok(Value::ElementList(self.view.all(type_name))),
            ExprKind::Unary(UnOp::Not, inner) => Ok(Value::Boolean(!self.boolean(inner)?)),
            ExprKind::Unary(UnOp::Neg, inner) => match self.expr(inner)? {
                Value::Real(r) => Ok(Value::Real(-r)),
                other => Err(Diagnostic::new(
                    format!("cannot negate {}", other.type_name()),
                    pos,
                )),
            },
            ExprKind::Binary(BinOp::And, lhs, rhs) => {
                Ok(Value::Boolean(self.boolean(lhs)? && self.boolean(rhs)?))
            }
            ExprKind::Binary(BinOp::Or, lhs, rhs) => {
                Ok(Value::Boolean(self.boolean(lhs)? || self.boolean(rhs)?))
            }
            ExprKind::Binary(op, lhs, rhs) => {
                let l = self.expr(lhs)?;
                let r = self.expr(rhs)?;
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => arithmetic(*op, &l, &r, pos),
                    _ => compare(*op, &l, &r, pos),
                }
            }
            ExprKind::Member(target, name) => {
                let element = self.element(target)?;
                member(&element, name, pos)
            }
            ExprKind::Call(target, method) => self.call(target, method, pos),
        }
    }

    fn element(&mut self, expr: &Expr) -> Result<Arc<Element>, Diagnostic> {
        match self.expr(expr)? {
            Value::Element(e) => Ok(e),
            other => Err(Diagnostic::new(
                format!("expected an element, got {}", other.type_name()),
                expr.pos,
            )),
        }
    }

    fn list(&mut self, expr: &Expr) -> Result<Vec<Arc<Element>>, Diagnostic> {
        match self.expr(expr)? {
            Value::ElementList(items) => Ok(items),
            other => Err(Diagnostic::new(
                format!("expected an element list, got {}", other.type_name()),
                expr.pos,
            )),
        }
    }

    fn filter(&mut self, items: Vec<Arc<Element>>, var: &str, predicate: &Expr) -> Result<Vec<Arc<Element>>, Diagnostic> {
        let mut kept = Vec::new();
        for item in items {
            self.scopes
                .push(HashMap::from([(var.to_string(), Value::Element(item.clone()))]));
            let verdict = self.boolean(predicate);
            self.scopes.pop();
            if verdict? {
                kept.push(item);
            }
        }
        Ok(kept)
    }

    fn call(&mut self, target: &Expr, method: &Method, pos: Pos) -> Result<Value, Diagnostic> {
        match method {
            Method::AsReal => match self.expr(target)? {
                Value::Real(r) => Ok(Value::Real(r)),
                Value::Text(t) => parse_decimal(&t).map(Value::Real).ok_or_else(|| {
                    Diagnostic::new(format!("asReal: {t:?} is not a decimal number"), pos)
                }),
                other => Err(Diagnostic::new(
                    format!("asReal is not defined on {}", other.type_name()),
                    pos,
                )),
            },
            Method::First => {
                let items = self.list(target)?;
                items
                    .into_iter()
                    .next()
                    .map(Value::Element)
                    .ok_or_else(|| Diagnostic::new("first() of an empty list", pos))
            }
            Method::Count => Ok(Value::Real(self.list(target)?.len() as f64)),
            Method::IsTypeOf(type_name) => {
                let element = self.element(target)?;
                Ok(Value::Boolean(element.type_name == *type_name))
            }
            Method::Select { var, predicate } => {
                let items = self.list(target)?;
                Ok(Value::ElementList(self.filter(items, var, predicate)?))
            }
            Method::SelectOne { var, predicate } => {
                let items = self.list(target)?;
                self.filter(items, var, predicate)?
                    .into_iter()
                    .next()
                    .map(Value::Element)
                    .ok_or_else(|| Diagnostic::new("selectOne found no matching element", pos))
            }
        }
    }
}

fn member(element: &Element, name: &str, pos: Pos) -> Result<Value, Diagnostic> {
    if let Some(scalar) = element.attributes.get(name) {
        return Ok(match scalar {
            Scalar::Boolean(b) => Value::Boolean(*b),
            Scalar::Real(r) => Value::Real(*r),
            Scalar::Text(t) => Value::Text(t.clone()),
        });
    }
    match element.children.get(name) {
        Some(Child::One(e)) => Ok(Value::Element(e.clone())),
        Some(Child::Many(items)) => Ok(Value::ElementList(items.clone())),
        None => Err(Diagnostic::new(
            format!("{} has no attribute or child `{name}`", element.type_name),
            pos,
        )),
    }
}

fn arithmetic(op: BinOp, l: &Value, r: &Value, pos: Pos) -> Result<Value, Diagnostic> {
    let (Value::Real(a), Value::Real(b)) = (l, r) else {
        return Err(Diagnostic::new(
            format!(
                "arithmetic needs Real operands, got {} and {}",
                l.type_name(),
                r.type_name()
            ),
            pos,
        ));
    };
    let v = match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if *b == 0.0 {
                return Err(Diagnostic::new("division by zero", pos));
            }
            a / b
        }
        _ => unreachable!("not an arithmetic operator"),
    };
    Ok(Value::Real(v))
}

fn compare(op: BinOp, l: &Value, r: &Value, pos: Pos) -> Result<Value, Diagnostic> {
    let mismatch = || {
        Diagnostic::new(
            format!("cannot compare {} with {}", l.type_name(), r.type_name()),
            pos,
        )
    };
    let result = match (op, l, r) {
        (BinOp::Eq | BinOp::Ne, Value::Text(a), Value::Text(b)) => (a == b) == (op == BinOp::Eq),
        (BinOp::Eq | BinOp::Ne, Value::Boolean(a), Value::Boolean(b)) => (a == b) == (op == BinOp::Eq),
        (_, Value::Real(a), Value::Real(b)) => match op {
            BinOp::Eq => a == b,
            BinOp::Ne => a != b,
            BinOp::Lt => a < b,
            BinOp::Le => a <= b,
            BinOp::Gt => a > b,
            BinOp::Ge => a >= b,
            _ => unreachable!("not a comparison"),
        },
        _ => return Err(mismatch()),
    };
    Ok(Value::Boolean(result))
}

/// Optional sign, digits, optional fraction. Nothing else.
pub(crate) fn parse_decimal(text: &str) -> Option<f64> {
    let t = text.trim();
    let digits = t.strip_prefix(['+', '-']).unwrap_or(t);
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (digits, None),
    };
    let all_digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int) || frac.is_some_and(|f| !all_digits(f)) {
        return None;
    }
    t.parse().ok()
}
