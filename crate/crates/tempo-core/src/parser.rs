//! Text ↔ AST for programs (`.dmtl`), datasets (`.dtf`), and queries (`.q`).
//!
//! The surface grammar is ASCII and LL(1):
//!
//! ```text
//! program   := statement*                      (rules and embedded facts)
//! statement := rule | fact "."
//! rule      := matom ":-" matom ("," matom)* "."
//! fact      := relatom "@" moment
//! matom     := unary (("since" | "until") window unary)?
//! unary     := prefix window unary | "top" | "bot" | relatom | "(" matom ")"
//! prefix    := "boxplus" | "boxminus" | "diamondplus" | "diamondminus"
//! window    := ("[" | "(") endpoint "," endpoint ("]" | ")")
//! moment    := window | signed-number          (punctual shorthand)
//! endpoint  := ("+" | "-")? (number | "inf")
//! relatom   := identifier ("(" term ("," term)* ")")?
//! term      := identifier | quoted-string
//! ```
//!
//! Identifiers starting with an uppercase letter are variables; all other
//! identifiers and every quoted string are constants, so the variable and
//! constant namespaces are disjoint by construction. Numbers are integers,
//! fractions `n/d`, or decimals; `%` starts a comment running to the end of
//! the line. `since`/`until` are non-associative: nested occurrences need
//! parentheses.
//!
//! Rendering is the `Display` implementation of each AST type; parsing a
//! rendered value yields a structurally equal AST (see the round-trip
//! property test).
//!
//! The reserved prefixes `m_` (magic predicates) and `aux_` (normalisation
//! helpers) are accepted only in the exact shapes this crate generates —
//! `m_<base>_<adornment>` with matching arity, `aux_<n>` — so that emitted
//! rewritings and store dumps can be fed back in, while stray user names
//! cannot collide with the generated namespaces.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use thiserror::Error;

use crate::magic::Adornment;
use crate::syntax::{
    Dataset, Fact, MetricAtom, Predicate, Program, Query, RelationalAtom, Rule, SyntaxError, Term,
    AUX_PREFIX, MAGIC_PREFIX,
};
use crate::temporal::{Interval, TimePoint};

/// A half-open byte range into the source text, with the line and column
/// (1-based, in characters) of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    fn to(self, other: SourceSpan) -> SourceSpan {
        SourceSpan { end: other.end.max(self.end), ..self }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// What went wrong; every variant is reported together with a [`SourceSpan`].
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("lexical error: {0}")]
    Lexical(String),
    #[error("expected {expected}, found {found}")]
    Expected { expected: String, found: String },
    #[error("predicate {name} used with {found} arguments but previously with {expected}")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("{0:?} is reserved for generated predicates")]
    ReservedPredicate(String),
    #[error("{0:?} cannot be used as a predicate")]
    ReservedWord(String),
    #[error("malformed interval: {0}")]
    MalformedInterval(String),
    #[error("facts admit no metric operators")]
    OperatorOnFact,
    #[error("{0}")]
    BadRule(#[from] SyntaxError),
    #[error("expected exactly one query")]
    ExtraQuery,
    #[error("no query found")]
    MissingQuery,
}

/// A parse failure, locating [`ParseErrorKind`] in the source text.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("{span}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: SourceSpan,
}

/// Predicate arities seen so far. Threading one table through several parses
/// extends the consistency check across artifacts (program, dataset, query).
#[derive(Debug, Clone, Default)]
pub struct ArityTable {
    seen: BTreeMap<String, usize>,
}

impl ArityTable {
    pub fn new() -> ArityTable {
        ArityTable::default()
    }

    fn observe(&mut self, name: &str, arity: usize, span: SourceSpan) -> Result<(), ParseError> {
        match self.seen.get(name) {
            Some(&expected) if expected != arity => Err(ParseError {
                kind: ParseErrorKind::ArityMismatch {
                    name: name.to_string(),
                    expected,
                    found: arity,
                },
                span,
            }),
            Some(_) => Ok(()),
            None => {
                self.seen.insert(name.to_string(), arity);
                Ok(())
            }
        }
    }
}

/// A parsed `.dmtl` file: its rules plus any embedded facts (the `rewrite`
/// subcommand emits the magic seed as a fact next to the rewritten rules, so
/// program files must round-trip both).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProgramFile {
    pub program: Program,
    pub facts: Dataset,
}

/// Renders in the program-file format: rules first, then one dot-terminated
/// fact per line. Unlike the bare [`Dataset`] rendering (the dataset-file
/// format, no dots), the result parses back as a program file.
impl fmt::Display for ProgramFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.program)?;
        for fact in self.facts.facts() {
            writeln!(f, "{fact}.")?;
        }
        Ok(())
    }
}

/// Parses a program file (rules, optionally embedded facts).
pub fn parse_program(text: &str) -> Result<ProgramFile, ParseError> {
    parse_program_with(text, &mut ArityTable::new())
}

/// As [`parse_program`], sharing an arity table across artifacts.
pub fn parse_program_with(text: &str, arities: &mut ArityTable) -> Result<ProgramFile, ParseError> {
    let mut parser = Parser::new(text, arities);
    let mut out = ProgramFile::default();
    while !parser.at_eof()? {
        parser.statement(&mut out)?;
    }
    Ok(out)
}

/// Parses a dataset: facts, one per line, the trailing `.` optional.
pub fn parse_dataset(text: &str) -> Result<Dataset, ParseError> {
    parse_dataset_with(text, &mut ArityTable::new())
}

/// As [`parse_dataset`], sharing an arity table across artifacts.
pub fn parse_dataset_with(text: &str, arities: &mut ArityTable) -> Result<Dataset, ParseError> {
    let mut parser = Parser::new(text, arities);
    let mut out = Dataset::default();
    while !parser.at_eof()? {
        let fact = parser.fact()?;
        parser.optional_dot()?;
        out.push(fact);
    }
    Ok(out)
}

/// Parses exactly one query `Atom@Interval`; the atom may contain variables.
pub fn parse_query(text: &str) -> Result<Query, ParseError> {
    parse_query_with(text, &mut ArityTable::new())
}

/// As [`parse_query`], sharing an arity table across artifacts.
pub fn parse_query_with(text: &str, arities: &mut ArityTable) -> Result<Query, ParseError> {
    let mut parser = Parser::new(text, arities);
    if parser.at_eof()? {
        return Err(ParseError { kind: ParseErrorKind::MissingQuery, span: parser.here() });
    }
    let atom = parser.relational_atom()?;
    parser.expect(&TokenKind::At)?;
    let interval = parser.moment()?;
    parser.optional_dot()?;
    if !parser.at_eof()? {
        return Err(ParseError { kind: ParseErrorKind::ExtraQuery, span: parser.here() });
    }
    Ok(Query { atom, interval })
}

/// Renders a program, one rule per line.
pub fn render_program(p: &Program) -> String {
    p.to_string()
}

/// Renders a program file: rules, then embedded facts (dot-terminated).
pub fn render_program_file(pf: &ProgramFile) -> String {
    let mut out = pf.program.to_string();
    for fact in pf.facts.facts() {
        out.push_str(&fact.to_string());
        out.push_str(".\n");
    }
    out
}

/// Renders a dataset, one fact per line.
pub fn render_dataset(d: &Dataset) -> String {
    d.to_string()
}

/// Renders a query on a single line.
pub fn render_query(q: &Query) -> String {
    format!("{q}\n")
}

const KEYWORDS: [&str; 8] =
    ["top", "bot", "boxplus", "boxminus", "diamondplus", "diamondminus", "since", "until"];

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokenKind {
    Ident(String),
    Quoted(String),
    Number(BigRational),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Dot,
    At,
    ColonDash,
    Plus,
    Minus,
    Eof,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("`{s}`"),
            TokenKind::Quoted(s) => format!("{s:?}"),
            TokenKind::Number(_) => "a number".to_string(),
            TokenKind::LBracket => "`[`".to_string(),
            TokenKind::RBracket => "`]`".to_string(),
            TokenKind::LParen => "`(`".to_string(),
            TokenKind::RParen => "`)`".to_string(),
            TokenKind::Comma => "`,`".to_string(),
            TokenKind::Dot => "`.`".to_string(),
            TokenKind::At => "`@`".to_string(),
            TokenKind::ColonDash => "`:-`".to_string(),
            TokenKind::Plus => "`+`".to_string(),
            TokenKind::Minus => "`-`".to_string(),
            TokenKind::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    span: SourceSpan,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Lexer<'a> {
        Lexer { src: text.as_bytes(), pos: 0, line: 1, column: 1 }
    }

    fn bump(&mut self) -> u8 {
        let b = self.src[self.pos];
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.column = 1;
        } else if b & 0xC0 != 0x80 {
            // Count characters, not UTF-8 continuation bytes.
            self.column += 1;
        }
        b
    }

    fn peek_byte(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_trivia(&mut self) {
        while let Some(b) = self.peek_byte() {
            match b {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.bump();
                }
                b'%' => {
                    while let Some(c) = self.peek_byte() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn here(&self) -> SourceSpan {
        SourceSpan { line: self.line, column: self.column, start: self.pos, end: self.pos }
    }

    fn next_token(&mut self) -> Result<Token, ParseError> {
        self.skip_trivia();
        let start = self.here();
        let Some(b) = self.peek_byte() else {
            return Ok(Token { kind: TokenKind::Eof, span: start });
        };
        let kind = match b {
            b'[' => self.single(TokenKind::LBracket),
            b']' => self.single(TokenKind::RBracket),
            b'(' => self.single(TokenKind::LParen),
            b')' => self.single(TokenKind::RParen),
            b',' => self.single(TokenKind::Comma),
            b'@' => self.single(TokenKind::At),
            b'+' => self.single(TokenKind::Plus),
            b'-' => self.single(TokenKind::Minus),
            b'.' => self.single(TokenKind::Dot),
            b':' => {
                self.bump();
                if self.peek_byte() == Some(b'-') {
                    self.bump();
                    TokenKind::ColonDash
                } else {
                    return Err(self.lexical(start, "expected `-` after `:`"));
                }
            }
            b'"' => self.quoted(start)?,
            b'0'..=b'9' => self.number(start)?,
            c if c.is_ascii_alphabetic() => self.identifier(),
            c => {
                return Err(self.lexical(start, &format!("unexpected character {:?}", c as char)));
            }
        };
        let mut span = start;
        span.end = self.pos;
        Ok(Token { kind, span })
    }

    fn single(&mut self, kind: TokenKind) -> TokenKind {
        self.bump();
        kind
    }

    fn lexical(&self, at: SourceSpan, message: &str) -> ParseError {
        let mut span = at;
        span.end = self.pos.max(at.start);
        ParseError { kind: ParseErrorKind::Lexical(message.to_string()), span }
    }

    fn identifier(&mut self) -> TokenKind {
        let start = self.pos;
        while let Some(b) = self.peek_byte() {
            if b.is_ascii_alphanumeric() || b == b'_' {
                self.bump();
            } else {
                break;
            }
        }
        TokenKind::Ident(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while matches!(self.peek_byte(), Some(b'0'..=b'9')) {
            self.bump();
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    /// Unsigned number: `digits`, `digits.digits`, or `digits/digits`. A `.`
    /// not followed by a digit is left alone (it terminates statements).
    fn number(&mut self, start: SourceSpan) -> Result<TokenKind, ParseError> {
        let int_part = self.digits();
        let int: BigInt = int_part.parse().expect("digits parse as an integer");
        if self.peek_byte() == Some(b'.') && matches!(self.src.get(self.pos + 1), Some(b'0'..=b'9'))
        {
            self.bump();
            let frac = self.digits();
            let scale = BigInt::from(10u8).pow(frac.len() as u32);
            let frac_int: BigInt = frac.parse().expect("digits parse as an integer");
            return Ok(TokenKind::Number(BigRational::new(int * &scale + frac_int, scale)));
        }
        if self.peek_byte() == Some(b'/') {
            self.bump();
            let denom_digits = self.digits();
            if denom_digits.is_empty() {
                return Err(self.lexical(start, "expected digits after `/`"));
            }
            let denom: BigInt = denom_digits.parse().expect("digits parse as an integer");
            if denom == BigInt::from(0u8) {
                return Err(self.lexical(start, "zero denominator"));
            }
            return Ok(TokenKind::Number(BigRational::new(int, denom)));
        }
        Ok(TokenKind::Number(BigRational::from_integer(int)))
    }

    fn quoted(&mut self, start: SourceSpan) -> Result<TokenKind, ParseError> {
        self.bump(); // opening quote
        let mut value = String::new();
        loop {
            match self.peek_byte() {
                None | Some(b'\n') => {
                    return Err(self.lexical(start, "unterminated string"));
                }
                Some(b'"') => {
                    self.bump();
                    return Ok(TokenKind::Quoted(value));
                }
                Some(b'\\') => {
                    self.bump();
                    match self.peek_byte() {
                        Some(b'"') => {
                            self.bump();
                            value.push('"');
                        }
                        Some(b'\\') => {
                            self.bump();
                            value.push('\\');
                        }
                        _ => return Err(self.lexical(start, "unknown escape")),
                    }
                }
                Some(_) => {
                    // Collect one UTF-8 scalar worth of bytes.
                    let from = self.pos;
                    self.bump();
                    while matches!(self.peek_byte(), Some(b) if b & 0xC0 == 0x80) {
                        self.bump();
                    }
                    value.push_str(&String::from_utf8_lossy(&self.src[from..self.pos]));
                }
            }
        }
    }
}

struct Parser<'a, 't> {
    lexer: Lexer<'t>,
    lookahead: Option<Token>,
    arities: &'a mut ArityTable,
}

impl<'a, 't> Parser<'a, 't> {
    fn new(text: &'t str, arities: &'a mut ArityTable) -> Parser<'a, 't> {
        Parser { lexer: Lexer::new(text), lookahead: None, arities }
    }

    fn peek(&mut self) -> Result<&Token, ParseError> {
        if self.lookahead.is_none() {
            self.lookahead = Some(self.lexer.next_token()?);
        }
        Ok(self.lookahead.as_ref().expect("lookahead just filled"))
    }

    fn advance(&mut self) -> Result<Token, ParseError> {
        match self.lookahead.take() {
            Some(t) => Ok(t),
            None => self.lexer.next_token(),
        }
    }

    fn here(&mut self) -> SourceSpan {
        match self.peek() {
            Ok(t) => t.span,
            Err(e) => e.span,
        }
    }

    fn at_eof(&mut self) -> Result<bool, ParseError> {
        Ok(matches!(self.peek()?.kind, TokenKind::Eof))
    }

    fn expect(&mut self, kind: &TokenKind) -> Result<Token, ParseError> {
        let token = self.advance()?;
        if &token.kind == kind {
            Ok(token)
        } else {
            Err(self.expected(kind.describe(), token))
        }
    }

    fn expected(&self, what: impl Into<String>, found: Token) -> ParseError {
        ParseError {
            kind: ParseErrorKind::Expected { expected: what.into(), found: found.kind.describe() },
            span: found.span,
        }
    }

    fn optional_dot(&mut self) -> Result<(), ParseError> {
        if matches!(self.peek()?.kind, TokenKind::Dot) {
            self.advance()?;
        }
        Ok(())
    }

    /// One `.dmtl` statement: a rule, or a fact terminated by `.`.
    fn statement(&mut self, out: &mut ProgramFile) -> Result<(), ParseError> {
        let start = self.here();
        let first = self.metric_atom()?;
        let token = self.advance()?;
        match token.kind {
            TokenKind::At => {
                let MetricAtom::Rel(atom) = first else {
                    return Err(ParseError {
                        kind: ParseErrorKind::OperatorOnFact,
                        span: start.to(token.span),
                    });
                };
                let interval = self.moment()?;
                let end = self.expect(&TokenKind::Dot)?;
                let fact = Fact::new(atom, interval).map_err(|e| ParseError {
                    kind: ParseErrorKind::BadRule(e),
                    span: start.to(end.span),
                })?;
                out.facts.push(fact);
                Ok(())
            }
            TokenKind::ColonDash => {
                let mut body = vec![self.metric_atom()?];
                while matches!(self.peek()?.kind, TokenKind::Comma) {
                    self.advance()?;
                    body.push(self.metric_atom()?);
                }
                let end = self.expect(&TokenKind::Dot)?;
                let rule = Rule::new(first, body).map_err(|e| ParseError {
                    kind: ParseErrorKind::BadRule(e),
                    span: start.to(end.span),
                })?;
                out.program.push(rule);
                Ok(())
            }
            _ => Err(self.expected("`:-` or `@`", token)),
        }
    }

    /// A dataset fact `Atom@Interval` (no operators).
    fn fact(&mut self) -> Result<Fact, ParseError> {
        let start = self.here();
        let atom = self.relational_atom()?;
        self.expect(&TokenKind::At)?;
        let interval = self.moment()?;
        let end = self.here();
        Fact::new(atom, interval)
            .map_err(|e| ParseError { kind: ParseErrorKind::BadRule(e), span: start.to(end) })
    }

    /// `matom := unary (("since"|"until") window unary)?` — non-associative.
    fn metric_atom(&mut self) -> Result<MetricAtom, ParseError> {
        let left = self.unary_atom()?;
        let is_binary = matches!(
            &self.peek()?.kind,
            TokenKind::Ident(name) if name == "since" || name == "until"
        );
        if !is_binary {
            return Ok(left);
        }
        let op = self.advance()?;
        let window = self.window()?;
        let right = self.unary_atom()?;
        let TokenKind::Ident(name) = op.kind else { unreachable!("matched above") };
        Ok(if name == "since" {
            MetricAtom::since(left, window, right)
        } else {
            MetricAtom::until(left, window, right)
        })
    }

    fn unary_atom(&mut self) -> Result<MetricAtom, ParseError> {
        let token = self.peek()?;
        match &token.kind {
            TokenKind::LParen => {
                self.advance()?;
                let inner = self.metric_atom()?;
                self.expect(&TokenKind::RParen)?;
                Ok(inner)
            }
            TokenKind::Ident(name) => match name.as_str() {
                "top" => {
                    self.advance()?;
                    Ok(MetricAtom::Truth)
                }
                "bot" => {
                    self.advance()?;
                    Ok(MetricAtom::Falsehood)
                }
                "boxplus" | "boxminus" | "diamondplus" | "diamondminus" => {
                    let op = name.clone();
                    self.advance()?;
                    let window = self.window()?;
                    let inner = self.unary_atom()?;
                    Ok(match op.as_str() {
                        "boxplus" => MetricAtom::box_plus(window, inner),
                        "boxminus" => MetricAtom::box_minus(window, inner),
                        "diamondplus" => MetricAtom::diamond_plus(window, inner),
                        _ => MetricAtom::diamond_minus(window, inner),
                    })
                }
                "since" | "until" => {
                    let token = self.advance()?;
                    Err(ParseError {
                        kind: ParseErrorKind::ReservedWord(name_of(&token)),
                        span: token.span,
                    })
                }
                _ => Ok(MetricAtom::Rel(self.relational_atom()?)),
            },
            _ => {
                let token = self.advance()?;
                Err(self.expected("an atom", token))
            }
        }
    }

    fn relational_atom(&mut self) -> Result<RelationalAtom, ParseError> {
        let token = self.advance()?;
        let TokenKind::Ident(name) = &token.kind else {
            return Err(self.expected("a predicate", token));
        };
        if KEYWORDS.contains(&name.as_str()) {
            return Err(ParseError {
                kind: ParseErrorKind::ReservedWord(name.clone()),
                span: token.span,
            });
        }
        let name = name.clone();
        let name_span = token.span;
        let mut args = Vec::new();
        if matches!(self.peek()?.kind, TokenKind::LParen) {
            self.advance()?;
            loop {
                args.push(self.term()?);
                let next = self.advance()?;
                match next.kind {
                    TokenKind::Comma => continue,
                    TokenKind::RParen => break,
                    _ => return Err(self.expected("`,` or `)`", next)),
                }
            }
        }
        let predicate = self.classify_predicate(&name, args.len(), name_span)?;
        self.arities.observe(&name, args.len(), name_span)?;
        Ok(RelationalAtom { predicate, args })
    }

    /// Builds the predicate, enforcing the reserved-prefix policy: `m_...`
    /// must decode as `m_<base>_<adornment>` with the arity of its bound
    /// positions (and is then a real magic predicate), `aux_...` must be
    /// `aux_<n>`; anything else with these prefixes is rejected.
    fn classify_predicate(
        &self,
        name: &str,
        arity: usize,
        span: SourceSpan,
    ) -> Result<Predicate, ParseError> {
        let reserved =
            || ParseError { kind: ParseErrorKind::ReservedPredicate(name.to_string()), span };
        if let Some(rest) = name.strip_prefix(MAGIC_PREFIX) {
            let split = rest.rfind('_').ok_or_else(reserved)?;
            let base = &rest[..split];
            let adornment = Adornment::parse(&rest[split + 1..]).map_err(|_| reserved())?;
            if base.is_empty() {
                return Err(reserved());
            }
            if adornment.bound_count() != arity {
                return Err(ParseError {
                    kind: ParseErrorKind::ArityMismatch {
                        name: name.to_string(),
                        expected: adornment.bound_count(),
                        found: arity,
                    },
                    span,
                });
            }
            return Ok(Predicate::magic(base, &adornment));
        }
        if let Some(rest) = name.strip_prefix(AUX_PREFIX) {
            if rest.parse::<usize>().is_err() {
                return Err(reserved());
            }
        }
        Ok(Predicate::new(name, arity))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let token = self.advance()?;
        match &token.kind {
            TokenKind::Ident(name) => {
                if name.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
                    Ok(Term::Variable(name.clone()))
                } else {
                    Ok(Term::Constant(name.clone()))
                }
            }
            TokenKind::Quoted(value) => Ok(Term::Constant(value.clone())),
            _ => Err(self.expected("a term", token)),
        }
    }

    /// An explicit interval `[l,u]` / `(l,u)` / mixed.
    fn window(&mut self) -> Result<Interval, ParseError> {
        let open = self.advance()?;
        let lower_closed = match open.kind {
            TokenKind::LBracket => true,
            TokenKind::LParen => false,
            _ => return Err(self.expected("`[` or `(`", open)),
        };
        let lower = self.endpoint()?;
        self.expect(&TokenKind::Comma)?;
        let upper = self.endpoint()?;
        let close = self.advance()?;
        let upper_closed = match close.kind {
            TokenKind::RBracket => true,
            TokenKind::RParen => false,
            _ => return Err(self.expected("`]` or `)`", close)),
        };
        let span = open.span.to(close.span);
        Interval::new(lower, lower_closed, upper, upper_closed).ok_or(ParseError {
            kind: ParseErrorKind::MalformedInterval("the interval is empty".to_string()),
            span,
        })
    }

    /// The interval of a fact or query: a window, or a punctual time point.
    fn moment(&mut self) -> Result<Interval, ParseError> {
        if matches!(self.peek()?.kind, TokenKind::LBracket | TokenKind::LParen) {
            return self.window();
        }
        let start = self.here();
        let point = self.endpoint()?;
        let end = self.here();
        if !point.is_finite() {
            return Err(ParseError {
                kind: ParseErrorKind::MalformedInterval(
                    "a punctual interval needs a finite time point".to_string(),
                ),
                span: start.to(end),
            });
        }
        Ok(Interval::point(point))
    }

    /// `("+"|"-")? (number | "inf")`.
    fn endpoint(&mut self) -> Result<TimePoint, ParseError> {
        let mut negative = false;
        if matches!(self.peek()?.kind, TokenKind::Plus | TokenKind::Minus) {
            negative = matches!(self.advance()?.kind, TokenKind::Minus);
        }
        let token = self.advance()?;
        match &token.kind {
            TokenKind::Number(q) => {
                let q = if negative { -q.clone() } else { q.clone() };
                Ok(TimePoint::Finite(q))
            }
            TokenKind::Ident(name) if name == "inf" => {
                Ok(if negative { TimePoint::NegInf } else { TimePoint::PosInf })
            }
            _ => Err(self.expected("a number or `inf`", token)),
        }
    }
}

fn name_of(token: &Token) -> String {
    match &token.kind {
        TokenKind::Ident(s) => s.clone(),
        other => other.describe(),
    }
}
