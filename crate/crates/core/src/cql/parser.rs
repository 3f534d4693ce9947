use std::collections::HashSet;

use super::{Diagnostic, Pos};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    Var,
    For,
    In,
    If,
    Else,
    Return,
    And,
    Or,
    Not,
    True,
    False,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Comma,
    Dot,
    Bar,
    Bang,
    Assign,
    PlusAssign,
    MinusAssign,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", symbol(other)),
        }
    }
}

fn symbol(t: &Tok) -> &'static str {
    match t {
        Tok::Var => "var",
        Tok::For => "for",
        Tok::In => "in",
        Tok::If => "if",
        Tok::Else => "else",
        Tok::Return => "return",
        Tok::And => "and",
        Tok::Or => "or",
        Tok::Not => "not",
        Tok::True => "true",
        Tok::False => "false",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::Semi => ";",
        Tok::Comma => ",",
        Tok::Dot => ".",
        Tok::Bar => "|",
        Tok::Bang => "!",
        Tok::Assign => "=",
        Tok::PlusAssign => "+=",
        Tok::MinusAssign => "-=",
        Tok::Eq => "=",
        Tok::Ne => "<>",
        Tok::Lt => "<",
        Tok::Le => "<=",
        Tok::Gt => ">",
        Tok::Ge => ">=",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::Slash => "/",
        _ => "?",
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(Diagnostic::new("unterminated comment", pos));
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.as_str() {
                "var" => Tok::Var,
                "for" => Tok::For,
                "in" => Tok::In,
                "if" => Tok::If,
                "else" => Tok::Else,
                "return" => Tok::Return,
                "and" => Tok::And,
                "or" => Tok::Or,
                "not" => Tok::Not,
                "true" => Tok::True,
                "false" => Tok::False,
                _ => Tok::Ident(word),
            };
            out.push((tok, pos));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
            }
            let text: String = chars[start..i].iter().collect();
            let n = text
                .parse::<f64>()
                .map_err(|_| Diagnostic::new(format!("bad number {text}"), pos))?;
            out.push((Tok::Number(n), pos));
            continue;
        }
        if c == '"' || c == '\'' {
            let quote = c;
            bump!();
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None | Some('\n') => return Err(Diagnostic::new("unterminated string", pos)),
                    Some(&ch) if ch == quote => {
                        bump!();
                        break;
                    }
                    Some('\\') => {
                        bump!();
                        let escaped = match chars.get(i) {
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some(&other) => other,
                            None => return Err(Diagnostic::new("unterminated string", pos)),
                        };
                        s.push(escaped);
                        bump!();
                    }
                    Some(&ch) => {
                        s.push(ch);
                        bump!();
                    }
                }
            }
            out.push((Tok::Str(s), pos));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, width) = match (c, next) {
            ('+', Some('=')) => (Tok::PlusAssign, 2),
            ('-', Some('=')) => (Tok::MinusAssign, 2),
            ('<', Some('>')) => (Tok::Ne, 2),
            ('<', Some('=')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('=', Some('=')) => (Tok::Eq, 2),
            ('<', _) => (Tok::Lt, 1),
            ('>', _) => (Tok::Gt, 1),
            ('=', _) => (Tok::Assign, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            (';', _) => (Tok::Semi, 1),
            (',', _) => (Tok::Comma, 1),
            ('.', _) => (Tok::Dot, 1),
            ('|', _) => (Tok::Bar, 1),
            ('!', _) => (Tok::Bang, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            _ => return Err(Diagnostic::new(format!("unexpected character {c:?}"), pos)),
        };
        for _ in 0..width {
            bump!();
        }
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Pos { line, column: col }));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    And,
    Or,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    AsReal,
    First,
    Count,
    IsTypeOf(String),
    Select { var: String, predicate: Box<Expr> },
    SelectOne { var: String, predicate: Box<Expr> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Real(f64),
    Text(String),
    Bool(bool),
    Var(String),
    /// Every element of the named type.
    All(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Attribute or child access.
    Member(Box<Expr>, String),
    Call(Box<Expr>, Method),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Var {
        name: String,
        value: Expr,
        pos: Pos,
    },
    Assign {
        name: String,
        op: AssignOp,
        value: Expr,
        pos: Pos,
    },
    For {
        var: String,
        iterable: Expr,
        body: Vec<Stmt>,
        pos: Pos,
    },
    If {
        condition: Expr,
        then: Vec<Stmt>,
        otherwise: Option<Vec<Stmt>>,
        pos: Pos,
    },
    Return {
        value: Expr,
        pos: Pos,
    },
}

impl Stmt {
    pub fn pos(&self) -> Pos {
        match self {
            Stmt::Var { pos, .. }
            | Stmt::Assign { pos, .. }
            | Stmt::For { pos, .. }
            | Stmt::If { pos, .. }
            | Stmt::Return { pos, .. } => *pos,
        }
    }

    fn always_returns(&self) -> bool {
        match self {
            Stmt::Return { .. } => true,
            Stmt::If {
                then,
                otherwise: Some(otherwise),
                ..
            } => block_returns(then) && block_returns(otherwise),
            _ => false,
        }
    }
}

fn block_returns(block: &[Stmt]) -> bool {
    block.iter().any(Stmt::always_returns)
}

pub(crate) struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    scopes: Vec<HashSet<String>>,
}

impl Parser {
    pub(crate) fn new(toks: Vec<(Tok, Pos)>) -> Self {
        Parser {
            toks,
            at: 0,
            scopes: vec![HashSet::new()],
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.at + offset).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn advance(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at < self.toks.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> Diagnostic {
        Diagnostic::new(
            format!("expected {wanted}, found {}", self.peek().describe()),
            self.pos(),
        )
    }

    fn expect(&mut self, tok: Tok) -> Result<Pos, Diagnostic> {
        if *self.peek() == tok {
            Ok(self.advance().1)
        } else {
            Err(self.unexpected(&format!("`{}`", symbol(&tok))))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), Diagnostic> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let pos = self.advance().1;
                Ok((name, pos))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn bound(&self, name: &str) -> bool {
        self.scopes.iter().rev().any(|s| s.contains(name))
    }

    fn bind(&mut self, name: String) {
        self.scopes.last_mut().expect("scope").insert(name);
    }

    pub(crate) fn program(&mut self) -> Result<Vec<Stmt>, Diagnostic> {
        let body = self.statements(&Tok::Eof)?;
        if !block_returns(&body) {
            return Err(Diagnostic::new(
                "program must return a value on every path",
                self.pos(),
            ));
        }
        Ok(body)
    }

    fn statements(&mut self, end: &Tok) -> Result<Vec<Stmt>, Diagnostic> {
        let mut out: Vec<Stmt> = Vec::new();
        while self.peek() != end {
            if *self.peek() == Tok::Eof {
                return Err(self.unexpected("`}`"));
            }
            let stmt = self.statement()?;
            if out.last().is_some_and(Stmt::always_returns) {
                return Err(Diagnostic::new("unreachable statement after return", stmt.pos()));
            }
            out.push(stmt);
        }
        Ok(out)
    }

    fn block(&mut self) -> Result<Vec<Stmt>, Diagnostic> {
        self.expect(Tok::LBrace)?;
        self.scopes.push(HashSet::new());
        let body = self.statements(&Tok::RBrace);
        self.scopes.pop();
        let body = body?;
        self.expect(Tok::RBrace)?;
        Ok(body)
    }

    fn statement(&mut self) -> Result<Stmt, Diagnostic> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Var => {
                self.advance();
                let (name, _) = self.ident()?;
                self.expect(Tok::Assign)?;
                let value = self.expr()?;
                self.expect(Tok::Semi)?;
                self.bind(name.clone());
                Ok(Stmt::Var { name, value, pos })
            }
            Tok::For => {
                self.advance();
                self.expect(Tok::LParen)?;
                let (var, _) = self.ident()?;
                self.expect(Tok::In)?;
                let iterable = self.expr()?;
                self.expect(Tok::RParen)?;
                self.scopes.push(HashSet::from([var.clone()]));
                let body = self.block();
                self.scopes.pop();
                Ok(Stmt::For {
                    var,
                    iterable,
                    body: body?,
                    pos,
                })
            }
            Tok::If => {
                self.advance();
                self.expect(Tok::LParen)?;
                let condition = self.expr()?;
                self.expect(Tok::RParen)?;
                let then = self.block()?;
                let otherwise = if *self.peek() == Tok::Else {
                    self.advance();
                    if *self.peek() == Tok::If {
                        Some(vec![self.statement()?])
                    } else {
                        Some(self.block()?)
                    }
                } else {
                    None
                };
                Ok(Stmt::If {
                    condition,
                    then,
                    otherwise,
                    pos,
                })
            }
            Tok::Return => {
                self.advance();
                let value = self.expr()?;
                self.expect(Tok::Semi)?;
                Ok(Stmt::Return { value, pos })
            }
            Tok::Ident(name)
                if matches!(self.peek_at(1), Tok::Assign | Tok::PlusAssign | Tok::MinusAssign) =>
            {
                self.advance();
                let op = match self.advance().0 {
                    Tok::Assign => AssignOp::Set,
                    Tok::PlusAssign => AssignOp::Add,
                    _ => AssignOp::Sub,
                };
                if !self.bound(&name) {
                    return Err(Diagnostic::new(format!("assignment to unbound variable `{name}`"), pos));
                }
                let value = self.expr()?;
                self.expect(Tok::Semi)?;
                Ok(Stmt::Assign { name, op, value, pos })
            }
            _ => Err(self.unexpected("statement")),
        }
    }

    fn expr(&mut self) -> Result<Expr, Diagnostic> {
        self.or_expr()
    }

    fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        let pos = lhs.pos;
        Expr {
            kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
            pos,
        }
    }

    fn or_expr(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.and_expr()?;
        while *self.peek() == Tok::Or {
            self.advance();
            let rhs = self.and_expr()?;
            lhs = Self::binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.not_expr()?;
        while *self.peek() == Tok::And {
            self.advance();
            let rhs = self.not_expr()?;
            lhs = Self::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, Diagnostic> {
        if *self.peek() == Tok::Not {
            let pos = self.advance().1;
            let inner = self.not_expr()?;
            return Ok(Expr {
                kind: ExprKind::Unary(UnOp::Not, Box::new(inner)),
                pos,
            });
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, Diagnostic> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Assign | Tok::Eq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.additive()?;
        Ok(Self::binary(op, lhs, rhs))
    }

    fn additive(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = Self::binary(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Self::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, Diagnostic> {
        if *self.peek() == Tok::Minus {
            let pos = self.advance().1;
            let inner = self.unary()?;
            return Ok(Expr {
                kind: ExprKind::Unary(UnOp::Neg, Box::new(inner)),
                pos,
            });
        }
        self.postfix()
    }

    fn empty_parens(&mut self) -> Result<(), Diagnostic> {
        if *self.peek() == Tok::LParen {
            self.advance();
            self.expect(Tok::RParen)?;
        }
        Ok(())
    }

    fn postfix(&mut self) -> Result<Expr, Diagnostic> {
        let mut expr = self.primary()?;
        while *self.peek() == Tok::Dot {
            self.advance();
            let (name, pos) = self.ident()?;
            let call = |method| ExprKind::Call(Box::new(expr.clone()), method);
            let kind = match name.as_str() {
                "asReal" => {
                    self.expect(Tok::LParen)?;
                    self.expect(Tok::RParen)?;
                    call(Method::AsReal)
                }
                "first" => {
                    self.empty_parens()?;
                    call(Method::First)
                }
                "count" | "size" => {
                    self.expect(Tok::LParen)?;
                    self.expect(Tok::RParen)?;
                    call(Method::Count)
                }
                "isTypeOf" => {
                    self.expect(Tok::LParen)?;
                    let (type_name, _) = self.ident()?;
                    self.expect(Tok::RParen)?;
                    call(Method::IsTypeOf(type_name))
                }
                "select" | "selectOne" => {
                    self.expect(Tok::LParen)?;
                    let (var, _) = self.ident()?;
                    self.expect(Tok::Bar)?;
                    self.scopes.push(HashSet::from([var.clone()]));
                    let predicate = self.expr();
                    self.scopes.pop();
                    let predicate = Box::new(predicate?);
                    self.expect(Tok::RParen)?;
                    if name == "select" {
                        call(Method::Select { var, predicate })
                    } else {
                        call(Method::SelectOne { var, predicate })
                    }
                }
                "all" => return Err(Diagnostic::new("`all` applies only to a type name", pos)),
                _ if *self.peek() == Tok::LParen => {
                    return Err(Diagnostic::new(format!("unknown operation `{name}`"), pos));
                }
                _ => ExprKind::Member(Box::new(expr.clone()), name),
            };
            expr = Expr { kind, pos };
        }
        Ok(expr)
    }

    /// `T.all`, `T.all()`, `M!T.all()`.
    fn type_extent(&mut self, type_name: String, pos: Pos) -> Result<Expr, Diagnostic> {
        self.expect(Tok::Dot)?;
        match self.peek().clone() {
            Tok::Ident(word) if word == "all" => {
                self.advance();
                self.empty_parens()?;
                Ok(Expr {
                    kind: ExprKind::All(type_name),
                    pos,
                })
            }
            _ => Err(self.unexpected("`all`")),
        }
    }

    fn primary(&mut self) -> Result<Expr, Diagnostic> {
        let (tok, pos) = self.advance();
        let kind = match tok {
            Tok::Number(n) => ExprKind::Real(n),
            Tok::Str(s) => ExprKind::Text(s),
            Tok::True => ExprKind::Bool(true),
            Tok::False => ExprKind::Bool(false),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                return Ok(inner);
            }
            Tok::Ident(name) if name == "all" && *self.peek() == Tok::LParen => {
                self.advance();
                let type_name = match self.advance() {
                    (Tok::Str(s), _) => s,
                    (_, p) => return Err(Diagnostic::new("all(...) takes a type name string", p)),
                };
                self.expect(Tok::RParen)?;
                ExprKind::All(type_name)
            }
            Tok::Ident(_model) if *self.peek() == Tok::Bang => {
                self.advance();
                let (type_name, _) = self.ident()?;
                return self.type_extent(type_name, pos);
            }
            Tok::Ident(name) if self.bound(&name) => ExprKind::Var(name),
            Tok::Ident(name) => {
                if *self.peek() == Tok::Dot
                    && matches!(self.peek_at(1), Tok::Ident(w) if w == "all")
                {
                    return self.type_extent(name, pos);
                }
                return Err(Diagnostic::new(format!("unbound variable `{name}`"), pos));
            }
            other => {
                self.at -= usize::from(other != Tok::Eof);
                return Err(self.unexpected("expression"));
            }
        };
        Ok(Expr { kind, pos })
    }
}
