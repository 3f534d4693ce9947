use thiserror::Error;

use super::{FormalDocument, MachineVerdict, RefKind, Reference, Statement};
use crate::case_model::Declaration;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct FormalSyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Description(String),
    ListOpen,
    ListClose,
    RefOpen,
    RefClose,
    Comma,
    Verdict(MachineVerdict),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Description(_) => "a description".into(),
            Tok::ListOpen => "`<{`".into(),
            Tok::ListClose => "`}>`".into(),
            Tok::RefOpen => "`@{`".into(),
            Tok::RefClose => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Verdict(_) => "a verdict comment".into(),
            Tok::Eof => "end of document".into(),
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | '-' | '\'')
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Lexer<'_> {
    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, column: usize, message: impl Into<String>) -> FormalSyntaxError {
        FormalSyntaxError {
            line,
            column,
            message: message.into(),
        }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize, usize)>, FormalSyntaxError> {
        let mut out = Vec::new();
        loop {
            let (line, column) = (self.line, self.column);
            let Some(&c) = self.chars.peek() else {
                out.push((Tok::Eof, line, column));
                return Ok(out);
            };
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            let tok = match c {
                '<' => {
                    self.bump();
                    match self.bump() {
                        Some('{') => Tok::ListOpen,
                        Some('<') => Tok::Description(self.description(line, column)?),
                        _ => return Err(self.error(line, column, "expected `<{` or `<<`")),
                    }
                }
                '@' => {
                    self.bump();
                    if self.bump() != Some('{') {
                        return Err(self.error(line, column, "expected `@{`"));
                    }
                    Tok::RefOpen
                }
                '}' => {
                    self.bump();
                    if self.chars.peek() == Some(&'>') {
                        self.bump();
                        Tok::ListClose
                    } else {
                        Tok::RefClose
                    }
                }
                ',' => {
                    self.bump();
                    Tok::Comma
                }
                '(' => {
                    self.bump();
                    if self.bump() != Some('*') {
                        return Err(self.error(line, column, "expected `(*`"));
                    }
                    match self.comment(line, column)? {
                        Some(v) => Tok::Verdict(v),
                        None => continue,
                    }
                }
                c if is_word_char(c) => {
                    let mut word = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if !is_word_char(c) {
                            break;
                        }
                        word.push(c);
                        self.bump();
                    }
                    Tok::Word(word)
                }
                other => return Err(self.error(line, column, format!("unexpected character {other:?}"))),
            };
            out.push((tok, line, column));
        }
    }

    fn description(&mut self, line: usize, column: usize) -> Result<String, FormalSyntaxError> {
        let mut text = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error(line, column, "unterminated description")),
                Some('\\') => match self.bump() {
                    Some(c) => text.push(c),
                    None => return Err(self.error(line, column, "unterminated description")),
                },
                Some('>') if self.chars.peek() == Some(&'>') => {
                    self.bump();
                    return Ok(text);
                }
                Some(c) => text.push(c),
            }
        }
    }

    fn comment(&mut self, line: usize, column: usize) -> Result<Option<MachineVerdict>, FormalSyntaxError> {
        let mut body = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error(line, column, "unterminated comment")),
                Some('*') if self.chars.peek() == Some(&')') => {
                    self.bump();
                    break;
                }
                Some(c) => body.push(c),
            }
        }
        let Some(rest) = body.trim().strip_prefix("verdict:") else {
            return Ok(None);
        };
        let (claim, detail) = match rest.split_once(';') {
            Some((c, d)) => (c, d.trim()),
            None => (rest, ""),
        };
        let (property, outcome) = claim
            .split_once('=')
            .ok_or_else(|| self.error(line, column, "verdict needs `<property> = holds|fails`"))?;
        let holds = match outcome.trim() {
            "holds" => true,
            "fails" => false,
            other => return Err(self.error(line, column, format!("unknown verdict outcome `{other}`"))),
        };
        let property = property.trim();
        if property.is_empty() || !property.chars().all(is_word_char) {
            return Err(self.error(line, column, "verdict property must be a name"));
        }
        Ok(Some(MachineVerdict {
            property: property.to_string(),
            holds,
            detail: detail.to_string(),
        }))
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn here(&self) -> (usize, usize) {
        let (_, l, c) = &self.toks[self.at];
        (*l, *c)
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at < self.toks.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn error(&self, wanted: &str) -> FormalSyntaxError {
        let (line, column) = self.here();
        FormalSyntaxError {
            line,
            column,
            message: format!("expected {wanted}, found {}", self.peek().describe()),
        }
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<(), FormalSyntaxError> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            Err(self.error(wanted))
        }
    }

    fn word(&mut self, wanted: &str) -> Result<String, FormalSyntaxError> {
        match self.peek().clone() {
            Tok::Word(w) => {
                self.next();
                Ok(w)
            }
            _ => Err(self.error(wanted)),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), FormalSyntaxError> {
        match self.peek() {
            Tok::Word(w) if w == kw => {
                self.next();
                Ok(())
            }
            _ => Err(self.error(&format!("`{kw}`"))),
        }
    }

    fn description(&mut self) -> Result<String, FormalSyntaxError> {
        match self.peek().clone() {
            Tok::Description(d) => {
                self.next();
                Ok(d)
            }
            _ => Err(self.error("a `<<description>>`")),
        }
    }

    fn reference(&mut self) -> Result<Reference, FormalSyntaxError> {
        self.expect(Tok::RefOpen, "`@{`")?;
        let kind = match self.word("a reference kind")?.as_str() {
            "Claim" => RefKind::Claim,
            "ArtifactReference" => RefKind::ArtifactReference,
            "Inference" => RefKind::Inference,
            other => {
                self.at -= 1;
                let (line, column) = self.here();
                return Err(FormalSyntaxError {
                    line,
                    column,
                    message: format!("unknown reference kind `{other}`"),
                });
            }
        };
        let name = self.word("a statement name")?;
        self.expect(Tok::RefClose, "`}`")?;
        Ok(Reference { kind, name })
    }

    fn ref_list(&mut self) -> Result<Vec<Reference>, FormalSyntaxError> {
        self.expect(Tok::ListOpen, "`<{`")?;
        let mut refs = Vec::new();
        if *self.peek() != Tok::ListClose {
            refs.push(self.reference()?);
            while *self.peek() == Tok::Comma {
                self.next();
                refs.push(self.reference()?);
            }
        }
        self.expect(Tok::ListClose, "`}>`")?;
        Ok(refs)
    }

    fn single(&mut self, role: &str) -> Result<Reference, FormalSyntaxError> {
        let (line, column) = self.here();
        let mut refs = self.ref_list()?;
        if refs.len() != 1 {
            return Err(FormalSyntaxError {
                line,
                column,
                message: format!("{role} must name exactly one statement"),
            });
        }
        Ok(refs.remove(0))
    }

    fn statement(&mut self) -> Result<Statement, FormalSyntaxError> {
        let keyword = self.word("a statement keyword")?;
        let name = self.word("a statement name")?;
        let stmt = match keyword.as_str() {
            "Claim" => {
                let declaration = match self.peek().clone() {
                    Tok::Word(w) => match Declaration::from_keyword(&w) {
                        Some(d) => {
                            self.next();
                            d
                        }
                        None => return Err(self.error("a declaration or description")),
                    },
                    _ => Declaration::None,
                };
                Statement::Claim {
                    name,
                    declaration,
                    description: self.description()?,
                }
            }
            "ArtifactReference" => Statement::ArtifactReference {
                name,
                description: self.description()?,
            },
            "Inference" => {
                self.keyword("src")?;
                let sources = self.ref_list()?;
                self.keyword("tgt")?;
                let target = self.single("tgt")?;
                Statement::Inference {
                    name,
                    sources,
                    target,
                    description: self.description()?,
                }
            }
            "Context" => {
                self.keyword("src")?;
                let source = self.single("src")?;
                self.keyword("tgt")?;
                let target = self.single("tgt")?;
                Statement::Context {
                    name,
                    source,
                    target,
                    description: self.description()?,
                }
            }
            other => {
                self.at -= 2;
                return Err(self.error(&format!(
                    "Claim, ArtifactReference, Inference or Context (not `{other}`)"
                )));
            }
        };
        Ok(stmt)
    }
}

/// Parses rendered formal text. Accepts duplicate names and dangling
/// references; those are integrity problems, not syntax errors.
pub fn parse_formal(text: &str) -> Result<FormalDocument, FormalSyntaxError> {
    let lexer = Lexer {
        chars: text.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut parser = Parser {
        toks: lexer.tokens()?,
        at: 0,
    };
    let mut doc = FormalDocument::default();
    loop {
        let (line, _) = parser.here();
        match parser.peek().clone() {
            Tok::Eof => return Ok(doc),
            Tok::Verdict(v) => {
                parser.next();
                doc.verdicts.push(v);
                doc.verdict_lines.push(line);
            }
            _ => {
                let stmt = parser.statement()?;
                doc.statements.push(stmt);
                doc.statement_lines.push(line);
            }
        }
    }
}
