//! Concrete syntax for processes.
//!
//! ```text
//! P ::= "0" | "(new" NAME ")" P | "!" P | P "|" P
//!     | INT ":" B "." P | INT ":" NAME "!" T "." P
//!     | INT ":" "case" XVAR "of" "some(" YVAR ")" ":" P "else" P "end"
//! B ::= NAME "?" XVAR | "&" ("forall" | "exists") "(" B ("," B)* ")"
//! T ::= NAME | YVAR
//! ```
//!
//! Identifiers match `[a-zA-Z_][a-zA-Z0-9_']*`; the words `new`, `case`,
//! `of`, `some`, `else`, `end`, `forall` and `exists` are reserved.
//! Whitespace is insignificant, `//` starts a line comment. Parallel
//! composition has the lowest precedence and associates to the left; the
//! prefix operators (`!`, restriction, labelled actions) bind tighter, and
//! case branches extend to the closing `else`/`end`.
//!
//! [`parse_process`] also runs [`ast::validate`] so that a returned process
//! is always well formed; [`pretty`] renders the canonical one-line form,
//! and parsing it back yields the identical tree.

use crate::ast::{self, Binder, Guard, InVarId, LabelId, Name, Process, Term, TermVarId};
use std::fmt;
use thiserror::Error;

/// A half-open byte region with 1-based line/column of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("{span}: unexpected character {found:?}")]
    UnexpectedChar { span: SourceSpan, found: char },
    #[error("{span}: expected {expected}, found {found}")]
    Unexpected {
        span: SourceSpan,
        expected: String,
        found: String,
    },
    #[error("{span}: label {text} is out of range")]
    LabelOutOfRange { span: SourceSpan, text: String },
    #[error("{span}: label must be positive")]
    LabelZero { span: SourceSpan },
    #[error("{span}: {word} is a reserved word")]
    ReservedWord { span: SourceSpan, word: String },
    #[error("ill-formed process: {0}")]
    Invalid(ast::Violation),
}

const RESERVED: [&str; 8] = ["new", "case", "of", "some", "else", "end", "forall", "exists"];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(String),
    Ident(String),
    LParen,
    RParen,
    Bang,
    Pipe,
    Colon,
    Dot,
    Question,
    Amp,
    Comma,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Int(s) => write!(f, "integer {s}"),
            Tok::Ident(s) => write!(f, "identifier {s}"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Bang => f.write_str("'!'"),
            Tok::Pipe => f.write_str("'|'"),
            Tok::Colon => f.write_str("':'"),
            Tok::Dot => f.write_str("'.'"),
            Tok::Question => f.write_str("'?'"),
            Tok::Amp => f.write_str("'&'"),
            Tok::Comma => f.write_str("','"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
    let mut toks = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let span = SourceSpan { line, col };
        let mut advance = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        match c {
            c if c.is_whitespace() => {
                advance(&mut chars);
            }
            '/' => {
                advance(&mut chars);
                if chars.peek() == Some(&'/') {
                    while let Some(&c) = chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        advance(&mut chars);
                    }
                } else {
                    return Err(ParseError::UnexpectedChar { span, found: '/' });
                }
            }
            '0'..='9' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(advance(&mut chars));
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Int(s), span));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                        s.push(advance(&mut chars));
                    } else {
                        break;
                    }
                }
                toks.push((Tok::Ident(s), span));
            }
            '(' | ')' | '!' | '|' | ':' | '.' | '?' | '&' | ',' => {
                let tok = match advance(&mut chars) {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '!' => Tok::Bang,
                    '|' => Tok::Pipe,
                    ':' => Tok::Colon,
                    '.' => Tok::Dot,
                    '?' => Tok::Question,
                    '&' => Tok::Amp,
                    ',' => Tok::Comma,
                    _ => unreachable!(),
                };
                toks.push((tok, span));
            }
            other => return Err(ParseError::UnexpectedChar { span, found: other }),
        }
    }
    toks.push((Tok::Eof, SourceSpan { line, col }));
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> (Tok, SourceSpan) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::Unexpected {
            span: self.span(),
            expected: expected.to_string(),
            found: self.peek().to_string(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.next();
            Ok(())
        } else {
            self.fail(what)
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                if RESERVED.contains(&s.as_str()) {
                    return Err(ParseError::ReservedWord { span: self.span(), word: s });
                }
                self.next();
                Ok(s)
            }
            _ => self.fail(what),
        }
    }

    /// A specific reserved word in keyword position.
    fn keyword(&mut self, word: &str) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == word => {
                self.next();
                Ok(())
            }
            _ => self.fail(&format!("'{word}'")),
        }
    }

    fn label(&mut self) -> Result<LabelId, ParseError> {
        match self.peek().clone() {
            Tok::Int(s) => {
                let span = self.span();
                self.next();
                let v: u32 = s
                    .parse()
                    .map_err(|_| ParseError::LabelOutOfRange { span, text: s.clone() })?;
                if v == 0 {
                    return Err(ParseError::LabelZero { span });
                }
                Ok(LabelId(v))
            }
            _ => self.fail("a label"),
        }
    }

    /// Full process: prefixes separated by `|`, folded to the left.
    fn process(&mut self) -> Result<Process, ParseError> {
        let mut acc = self.prefix()?;
        while *self.peek() == Tok::Pipe {
            self.next();
            let rhs = self.prefix()?;
            acc = Process::Par { left: Box::new(acc), right: Box::new(rhs) };
        }
        Ok(acc)
    }

    /// A prefix-level process: everything that binds tighter than `|`.
    fn prefix(&mut self) -> Result<Process, ParseError> {
        match self.peek().clone() {
            Tok::Int(s) if s == "0" && !matches!(self.peek2(), Tok::Colon) => {
                self.next();
                Ok(Process::Nil)
            }
            Tok::Int(_) => {
                let label = self.label()?;
                self.expect(Tok::Colon, "':'")?;
                self.action(label)
            }
            Tok::Bang => {
                self.next();
                let body = self.prefix()?;
                Ok(Process::Repl { body: Box::new(body) })
            }
            Tok::LParen => {
                self.next();
                if matches!(self.peek(), Tok::Ident(s) if s == "new") {
                    self.next();
                    let name = self.ident("a name")?;
                    self.expect(Tok::RParen, "')'")?;
                    let body = self.prefix()?;
                    Ok(Process::Restrict { name: Name::new(name), body: Box::new(body) })
                } else {
                    let inner = self.process()?;
                    self.expect(Tok::RParen, "')'")?;
                    Ok(inner)
                }
            }
            _ => self.fail("a process"),
        }
    }

    /// The labelled action after `INT ":"`.
    fn action(&mut self, label: LabelId) -> Result<Process, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "case" => {
                self.next();
                let scrutinee = InVarId::new(self.ident("a variable")?);
                self.keyword("of")?;
                self.keyword("some")?;
                self.expect(Tok::LParen, "'('")?;
                let var = TermVarId::new(self.ident("a variable")?);
                self.expect(Tok::RParen, "')'")?;
                self.expect(Tok::Colon, "':'")?;
                let then_branch = self.process()?;
                self.keyword("else")?;
                let else_branch = self.process()?;
                self.keyword("end")?;
                Ok(Process::Case {
                    label,
                    scrutinee,
                    var,
                    then_branch: Box::new(then_branch),
                    else_branch: Box::new(else_branch),
                })
            }
            Tok::Amp => {
                let binder = self.binder()?;
                self.expect(Tok::Dot, "'.'")?;
                let body = self.prefix()?;
                Ok(Process::Bind { label, binder, body: Box::new(body) })
            }
            Tok::Ident(_) => {
                let name = self.ident("a channel")?;
                match self.peek() {
                    Tok::Bang => {
                        self.next();
                        let payload = self.term()?;
                        self.expect(Tok::Dot, "'.'")?;
                        let body = self.prefix()?;
                        Ok(Process::Output {
                            label,
                            channel: Name::new(name),
                            payload,
                            body: Box::new(body),
                        })
                    }
                    Tok::Question => {
                        self.next();
                        let var = InVarId::new(self.ident("a variable")?);
                        self.expect(Tok::Dot, "'.'")?;
                        let body = self.prefix()?;
                        Ok(Process::Bind {
                            label,
                            binder: Binder::Input { channel: Name::new(name), var },
                            body: Box::new(body),
                        })
                    }
                    _ => self.fail("'!' or '?'"),
                }
            }
            _ => self.fail("an action"),
        }
    }

    fn binder(&mut self) -> Result<Binder, ParseError> {
        if *self.peek() == Tok::Amp {
            self.next();
            let guard = match self.peek() {
                Tok::Ident(s) if s == "forall" => Guard::Forall,
                Tok::Ident(s) if s == "exists" => Guard::Exists,
                _ => return self.fail("'forall' or 'exists'"),
            };
            self.next();
            self.expect(Tok::LParen, "'('")?;
            let mut subs = vec![self.binder()?];
            while *self.peek() == Tok::Comma {
                self.next();
                subs.push(self.binder()?);
            }
            self.expect(Tok::RParen, "')'")?;
            Ok(Binder::Quality { guard, subs })
        } else {
            let channel = self.ident("a channel")?;
            self.expect(Tok::Question, "'?'")?;
            let var = self.ident("a variable")?;
            Ok(Binder::Input {
                channel: Name::new(channel),
                var: InVarId::new(var),
            })
        }
    }

    /// A term in output position; whether it names a constant or a
    /// case-bound variable is resolved against the enclosing scope later,
    /// during validation-driven resolution (see `resolve_terms`).
    fn term(&mut self) -> Result<Term, ParseError> {
        let s = self.ident("a name or variable")?;
        Ok(Term::Const(Name::new(s)))
    }
}

/// Rewrite output payloads that refer to an enclosing case-bound variable
/// from `Const` (the parser's default) to `Var`. Purely lexical: a payload
/// is a variable exactly when a surrounding some-branch binds its spelling.
fn resolve_terms(p: &mut Process, ys: &mut Vec<String>) {
    match p {
        Process::Nil => {}
        Process::Restrict { body, .. } | Process::Repl { body } => resolve_terms(body, ys),
        Process::Par { left, right } => {
            resolve_terms(left, ys);
            resolve_terms(right, ys);
        }
        Process::Bind { body, .. } => resolve_terms(body, ys),
        Process::Output { payload, body, .. } => {
            if let Term::Const(n) = payload {
                if ys.contains(&n.0) {
                    *payload = Term::Var(TermVarId::new(n.0.clone()));
                }
            }
            resolve_terms(body, ys);
        }
        Process::Case { var, then_branch, else_branch, .. } => {
            ys.push(var.0.clone());
            resolve_terms(then_branch, ys);
            ys.pop();
            resolve_terms(else_branch, ys);
        }
    }
}

/// Parse a process and check it is well formed.
pub fn parse_process(src: &str) -> Result<Process, ParseError> {
    let toks = lex(src)?;
    let mut parser = Parser { toks, pos: 0 };
    let mut p = parser.process()?;
    parser.expect(Tok::Eof, "end of input")?;
    resolve_terms(&mut p, &mut Vec::new());
    if let Some(v) = ast::validate(&p).into_iter().next() {
        return Err(ParseError::Invalid(v));
    }
    Ok(p)
}

/// Render the canonical one-line form. `parse_process(&pretty(p))`
/// reconstructs `p` exactly for any well-formed process.
pub fn pretty(p: &Process) -> String {
    let mut s = String::new();
    write_process(p, &mut s);
    s
}

fn write_process(p: &Process, out: &mut String) {
    if let Process::Par { left, right } = p {
        write_process(left, out);
        out.push_str(" | ");
        write_prefix(right, out);
    } else {
        write_prefix(p, out);
    }
}

/// Write `p` in a position that must parse back at prefix level: a trailing
/// parallel composition needs parentheses there.
fn write_prefix(p: &Process, out: &mut String) {
    match p {
        Process::Nil => out.push('0'),
        Process::Par { .. } => {
            out.push('(');
            write_process(p, out);
            out.push(')');
        }
        Process::Restrict { name, body } => {
            out.push_str("(new ");
            out.push_str(name.as_str());
            out.push_str(") ");
            write_prefix(body, out);
        }
        Process::Repl { body } => {
            out.push('!');
            write_prefix(body, out);
        }
        Process::Bind { label, binder, body } => {
            out.push_str(&format!("{label}: "));
            write_binder(binder, out);
            out.push_str(" . ");
            write_prefix(body, out);
        }
        Process::Output { label, channel, payload, body } => {
            out.push_str(&format!("{label}: {channel}!"));
            match payload {
                Term::Const(n) => out.push_str(n.as_str()),
                Term::Var(y) => out.push_str(&y.0),
            }
            out.push_str(" . ");
            write_prefix(body, out);
        }
        Process::Case { label, scrutinee, var, then_branch, else_branch } => {
            out.push_str(&format!("{label}: case {scrutinee} of some({var}): "));
            write_process(then_branch, out);
            out.push_str(" else ");
            write_process(else_branch, out);
            out.push_str(" end");
        }
    }
}

fn write_binder(b: &Binder, out: &mut String) {
    match b {
        Binder::Input { channel, var } => {
            out.push_str(channel.as_str());
            out.push('?');
            out.push_str(&var.0);
        }
        Binder::Quality { guard, subs } => {
            out.push('&');
            out.push_str(match guard {
                Guard::Forall => "forall",
                Guard::Exists => "exists",
            });
            out.push('(');
            for (i, sub) in subs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_binder(sub, out);
            }
            out.push(')');
        }
    }
}
