//! Recursive-descent parser for the concrete process grammar.
//!
//! ```text
//! par   ::= sum ('|' par)?
//! sum   ::= unary ('+' unary)*
//! unary ::= '0' | 'tau' '.' unary
//!         | name '?' '(' name ')' ('.' unary)?
//!         | name '!' name ('.' unary)?
//!         | name '!' '(' name ')' '.' unary      -- new y.(x!y.P)
//!         | 'new' name '.' unary | '!' unary | '(' par ')'
//! ```
//!
//! A network is a list of components separated by `||`, optionally preceded
//! by `%ids <base>` and `%hoisted <names>` directive lines.

use std::collections::BTreeSet;

use thiserror::Error;

use super::{free_names, rename, Prefix, Process, Renaming};
use crate::name::{is_identifier, is_numeral, Name, Origin};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Name(String),
    New,
    Tau,
    Bang,
    Query,
    Dot,
    Plus,
    Bar,
    BarBar,
    LParen,
    RParen,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str, line0: usize) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, line0, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let err = |message: String| ParseError { line: tl, column: tc, message };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let single = match c {
            '!' => Some(Tok::Bang),
            '?' => Some(Tok::Query),
            '.' => Some(Tok::Dot),
            '+' => Some(Tok::Plus),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '|' if chars.get(i + 1) == Some(&'|') => {
                tokens.push(Token { tok: Tok::BarBar, line: tl, column: tc });
                i += 2;
                col += 2;
                continue;
            }
            '|' => Some(Tok::Bar),
            _ => None,
        };
        if let Some(tok) = single {
            tokens.push(Token { tok, line: tl, column: tc });
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' || c == '#' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || matches!(chars[i], '_' | '\'' | '#')) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = match word.as_str() {
                "new" => Tok::New,
                "tau" => Tok::Tau,
                _ => {
                    if !valid_name(&word) {
                        return Err(err(format!("malformed name `{word}`")));
                    }
                    Tok::Name(word)
                }
            };
            tokens.push(Token { tok, line: tl, column: tc });
            continue;
        }
        return Err(err(format!("unexpected character `{c}`")));
    }
    tokens.push(Token { tok: Tok::Eof, line, column: col });
    Ok(tokens)
}

fn valid_name(word: &str) -> bool {
    match word.find('#') {
        None => is_identifier(word) || is_numeral(word),
        Some(0) => is_numeral(&word[1..]),
        Some(i) => is_identifier(&word[..i]) && is_numeral(&word[i + 1..]),
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    scope: Vec<Name>,
    depth: usize,
}

const MAX_DEPTH: usize = 200;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError { line: t.line, column: t.column, message: message.into() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            Err(self.error_here(format!("expected {what}, found {}", describe(self.peek()))))
        }
    }

    fn name_use(&mut self) -> Result<Name, ParseError> {
        match self.peek().clone() {
            Tok::Name(w) => {
                let name = Name::new(&w);
                if name.origin() == Origin::Canonical && !self.scope.contains(&name) {
                    return Err(self.error_here(format!("canonical name `{w}` used outside its binder")));
                }
                self.advance();
                name.reserve();
                Ok(name)
            }
            other => Err(self.error_here(format!("expected a name, found {}", describe(&other)))),
        }
    }

    fn name_binder(&mut self) -> Result<Name, ParseError> {
        match self.peek().clone() {
            Tok::Name(w) => {
                let name = Name::new(&w);
                if name.is_reserved() {
                    return Err(self.error_here(format!("reserved name `{w}` cannot be bound")));
                }
                self.advance();
                name.reserve();
                Ok(name)
            }
            other => Err(self.error_here(format!("expected a name to bind, found {}", describe(&other)))),
        }
    }

    fn par(&mut self) -> Result<Process, ParseError> {
        let mut parts = vec![self.sum()?];
        while *self.peek() == Tok::Bar {
            self.advance();
            parts.push(self.sum()?);
        }
        Ok(Process::par_all(parts))
    }

    fn sum(&mut self) -> Result<Process, ParseError> {
        let first_pos = self.pos;
        let first = self.unary()?;
        if *self.peek() != Tok::Plus {
            return Ok(first);
        }
        let mut operands = vec![(first_pos, first)];
        while *self.peek() == Tok::Plus {
            self.advance();
            let pos = self.pos;
            operands.push((pos, self.unary()?));
        }
        self.build_sum(operands)
    }

    /// Restrictions in an operand of `+` scope over the whole sum.
    fn build_sum(&mut self, operands: Vec<(usize, Process)>) -> Result<Process, ParseError> {
        let mut hoisted: Vec<Name> = Vec::new();
        let mut pending: Vec<(Vec<Name>, Vec<(Prefix, Process)>)> = Vec::new();
        for (pos, mut op) in operands {
            let mut binders = Vec::new();
            loop {
                match op {
                    Process::New(x, body) => {
                        binders.push(x);
                        op = *body;
                    }
                    Process::Out(x, y) => {
                        op = Process::output(x, y, Process::nil());
                    }
                    Process::Sum(bs) => {
                        pending.push((binders, bs));
                        break;
                    }
                    _ => {
                        let t = &self.tokens[pos];
                        return Err(ParseError {
                            line: t.line,
                            column: t.column,
                            message: "operand of `+` must be a guarded process".into(),
                        });
                    }
                }
            }
        }
        // Rename hoisted binders that would capture names of sibling branches.
        let mut branches = Vec::new();
        let all: Vec<BTreeSet<Name>> =
            pending.iter().map(|(_, bs)| free_names(&Process::Sum(bs.clone()))).collect();
        for (i, (binders, bs)) in pending.into_iter().enumerate() {
            let mut body = Process::Sum(bs);
            // innermost first, so each renaming hits exactly its own occurrences
            for (bi, b) in binders.iter().enumerate().rev() {
                let clash = hoisted.contains(b)
                    || binders.iter().enumerate().any(|(bj, c)| bj != bi && c == b)
                    || all.iter().enumerate().any(|(j, fns)| j != i && fns.contains(b));
                let target = if clash { Name::fresh(b) } else { b.clone() };
                if target != *b {
                    body = rename(&body, &Renaming::single(b.clone(), target.clone()), false);
                }
                hoisted.push(target);
            }
            if let Process::Sum(bs) = body {
                branches.extend(bs);
            }
        }
        let mut out = Process::Sum(branches);
        for b in hoisted.into_iter().rev() {
            out = Process::New(b, Box::new(out));
        }
        Ok(out)
    }

    fn continuation(&mut self) -> Result<Process, ParseError> {
        if *self.peek() == Tok::Dot {
            self.advance();
            self.unary()
        } else {
            Ok(Process::nil())
        }
    }

    fn unary(&mut self) -> Result<Process, ParseError> {
        if self.depth >= MAX_DEPTH {
            return Err(self.error_here("term nested too deeply"));
        }
        self.depth += 1;
        let r = self.unary_inner();
        self.depth -= 1;
        r
    }

    fn unary_inner(&mut self) -> Result<Process, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.advance();
                let p = self.par()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(p)
            }
            Tok::Tau => {
                self.advance();
                self.expect(Tok::Dot, "`.` after `tau`")?;
                Ok(Process::tau(self.unary()?))
            }
            Tok::New => {
                self.advance();
                let x = self.name_binder()?;
                self.expect(Tok::Dot, "`.` after restricted name")?;
                self.scope.push(x.clone());
                let body = self.unary();
                self.scope.pop();
                Ok(Process::new_name(x, body?))
            }
            Tok::Bang => {
                self.advance();
                Ok(Process::rep(self.unary()?))
            }
            Tok::Name(w) => {
                let is_action = matches!(self.peek_at(1), Tok::Bang | Tok::Query);
                if !is_action {
                    if w == "0" {
                        self.advance();
                        return Ok(Process::nil());
                    }
                    self.advance();
                    return Err(self.error_here(format!("expected `!` or `?` after `{w}`")));
                }
                let channel = self.name_use()?;
                match self.advance().tok {
                    Tok::Query => {
                        self.expect(Tok::LParen, "`(`")?;
                        let formal = self.name_binder()?;
                        self.expect(Tok::RParen, "`)`")?;
                        self.scope.push(formal.clone());
                        let cont = self.continuation();
                        self.scope.pop();
                        Ok(Process::input(channel, formal, cont?))
                    }
                    _ => {
                        if *self.peek() == Tok::LParen {
                            self.advance();
                            let y = self.name_binder()?;
                            self.expect(Tok::RParen, "`)`")?;
                            self.expect(Tok::Dot, "`.` after bound output")?;
                            self.scope.push(y.clone());
                            let cont = self.unary();
                            self.scope.pop();
                            return Ok(Process::new_name(y.clone(), Process::output(channel, y, cont?)));
                        }
                        let datum = self.name_use()?;
                        if *self.peek() == Tok::Dot {
                            self.advance();
                            Ok(Process::output(channel, datum, self.unary()?))
                        } else {
                            Ok(Process::Out(channel, datum))
                        }
                    }
                }
            }
            other => Err(self.error_here(format!("expected a process, found {}", describe(&other)))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Name(w) => format!("`{w}`"),
        Tok::New => "`new`".into(),
        Tok::Tau => "`tau`".into(),
        Tok::Bang => "`!`".into(),
        Tok::Query => "`?`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Bar => "`|`".into(),
        Tok::BarBar => "`||`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses a single process term.
pub fn parse(text: &str) -> Result<Process, ParseError> {
    let tokens = lex(text, 1)?;
    let mut p = Parser { tokens, pos: 0, scope: Vec::new(), depth: 0 };
    let proc = p.par()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error_here(format!("unexpected {}", describe(p.peek()))));
    }
    Ok(proc)
}

/// The raw content of a network file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkText {
    pub components: Vec<Process>,
    pub hoisted: Vec<Name>,
    /// `%ids <base>`: node i (1-based) is identified by numeral `base + i - 1`.
    pub id_base: Option<u64>,
    /// `%idmap 0,1 2,3`: explicit identifier numerals per node.
    pub id_groups: Option<Vec<Vec<Name>>>,
}

/// Parses `P1 || P2 || ...` with optional `%ids` and `%hoisted` directives.
pub fn parse_network_text(text: &str) -> Result<NetworkText, ParseError> {
    let mut hoisted = Vec::new();
    let mut id_base = None;
    let mut id_groups = None;
    let mut body = String::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix('%') {
            let err = |message: String| ParseError { line: idx + 1, column: 1, message };
            let mut words = rest.split_whitespace();
            match words.next() {
                Some("ids") => {
                    let v = words.next().ok_or_else(|| err("`%ids` needs a base".into()))?;
                    id_base = Some(v.parse().map_err(|_| err(format!("bad id base `{v}`")))?);
                }
                Some("idmap") => {
                    let mut groups = Vec::new();
                    for g in words {
                        let mut group = Vec::new();
                        for v in g.split(',') {
                            if !is_numeral(v) {
                                return Err(err(format!("bad identifier `{v}` in `%idmap`")));
                            }
                            group.push(Name::new(v));
                        }
                        groups.push(group);
                    }
                    id_groups = Some(groups);
                }
                Some("hoisted") => {
                    for w in words {
                        if !valid_name(w) || Name::new(w).is_reserved() {
                            return Err(err(format!("bad hoisted name `{w}`")));
                        }
                        let n = Name::new(w);
                        n.reserve();
                        hoisted.push(n);
                    }
                }
                other => return Err(err(format!("unknown directive `{}`", other.unwrap_or("")))),
            }
            body.push('\n');
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let tokens = lex(&body, 1)?;
    let mut p = Parser { tokens, pos: 0, scope: Vec::new(), depth: 0 };
    let mut components = Vec::new();
    loop {
        components.push(p.par()?);
        match p.peek() {
            Tok::BarBar => {
                p.advance();
            }
            Tok::Eof => break,
            other => {
                let d = describe(other);
                return Err(p.error_here(format!("unexpected {d}")));
            }
        }
    }
    Ok(NetworkText { components, hoisted, id_base, id_groups })
}
