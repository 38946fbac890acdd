//! The `.dlp` text format: facts, rules with optional `exists` prefixes, and queries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use stickychase_core::{
    make_program, normalize_rules, Atom, ConjunctiveQuery, ModelError, Program, QueryError,
    SourceRule, Symbol, Term,
};

/// A 1-based location in the input; `column` and `length` count characters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiagnosticKind {
    Syntax,
    ArityConflict,
    NonGroundFact,
    UnsafeHeadVariable,
    AnswerVarNotInBody,
    Invalid,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub span: SourceSpan,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}",
            self.span.line, self.span.column, self.message
        )
    }
}

impl std::error::Error for Diagnostic {}

/// Diagnostics of one failed parse, in source order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseErrors(pub Vec<Diagnostic>);

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}", d)?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseErrors {}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Lower(String),
    Upper(String),
    Quoted(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Arrow,
    BackArrow,
    Question,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Lower(s) | Tok::Upper(s) => format!("`{}`", s),
            Tok::Quoted(s) => format!("\"{}\"", s),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::BackArrow => "`<-`".into(),
            Tok::Question => "`?`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, SourceSpan)>, Diagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, column, length, message: String| Diagnostic {
        kind: DiagnosticKind::Syntax,
        span: SourceSpan {
            line,
            column,
            length,
        },
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = (line, col);
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            '?' => Some(Tok::Question),
            _ => None,
        };
        if let Some(t) = single {
            out.push((
                t,
                SourceSpan {
                    line,
                    column: col,
                    length: 1,
                },
            ));
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' || c == '<' {
            let want = if c == '-' { '>' } else { '-' };
            if chars.get(i + 1) == Some(&want) {
                let t = if c == '-' { Tok::Arrow } else { Tok::BackArrow };
                out.push((
                    t,
                    SourceSpan {
                        line,
                        column: col,
                        length: 2,
                    },
                ));
                i += 2;
                col += 2;
                continue;
            }
            return Err(err(line, col, 1, format!("unexpected character `{}`", c)));
        }
        if c == '"' {
            let mut s = String::new();
            i += 1;
            col += 1;
            loop {
                match chars.get(i) {
                    None | Some('\n') => {
                        return Err(err(
                            start.0,
                            start.1,
                            col - start.1,
                            "unterminated quoted constant".into(),
                        ))
                    }
                    Some('"') => {
                        i += 1;
                        col += 1;
                        break;
                    }
                    Some('\\') => {
                        let e = match chars.get(i + 1) {
                            Some('"') => '"',
                            Some('\\') => '\\',
                            Some('n') => '\n',
                            Some('t') => '\t',
                            _ => return Err(err(line, col, 2, "unknown escape sequence".into())),
                        };
                        s.push(e);
                        i += 2;
                        col += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                        col += 1;
                    }
                }
            }
            out.push((
                Tok::Quoted(s),
                SourceSpan {
                    line: start.0,
                    column: start.1,
                    length: col - start.1,
                },
            ));
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            let span = SourceSpan {
                line: start.0,
                column: start.1,
                length: s.chars().count(),
            };
            let t = if c.is_ascii_uppercase() || c == '_' {
                Tok::Upper(s)
            } else {
                Tok::Lower(s)
            };
            out.push((t, span));
            continue;
        }
        return Err(err(line, col, 1, format!("unexpected character `{}`", c)));
    }
    out.push((
        Tok::Eof,
        SourceSpan {
            line,
            column: col,
            length: 0,
        },
    ));
    Ok(out)
}

/// An atom with the span of each argument.
struct Parsed {
    atom: Atom,
    span: SourceSpan,
    arg_spans: Vec<SourceSpan>,
}

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, SourceSpan) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    /// Points at the gap before the current token when there is one.
    fn unexpected(&self, expected: &str) -> Diagnostic {
        let cur = self.span();
        let mut span = cur;
        if self.pos > 0 {
            let prev = self.toks[self.pos - 1].1;
            let prev_end = prev.column + prev.length;
            if prev.line == cur.line && prev_end < cur.column {
                span = SourceSpan {
                    line: cur.line,
                    column: prev_end,
                    length: cur.column - prev_end,
                };
            }
        }
        Diagnostic {
            kind: DiagnosticKind::Syntax,
            span,
            message: format!("expected {}, found {}", expected, self.peek().describe()),
        }
    }

    fn expect(&mut self, t: Tok, expected: &str) -> PResult<SourceSpan> {
        if *self.peek() == t {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn term(&mut self) -> PResult<(Term, SourceSpan)> {
        match self.peek().clone() {
            Tok::Lower(s) | Tok::Quoted(s) => {
                let sp = self.bump().1;
                Ok((Term::Const(Symbol::from(s.as_str())), sp))
            }
            Tok::Upper(s) => {
                let sp = self.bump().1;
                Ok((Term::Var(Symbol::from(s.as_str())), sp))
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    fn atom(&mut self) -> PResult<Parsed> {
        let (name, start) = match self.peek().clone() {
            Tok::Lower(s) => (s, self.bump().1),
            _ => return Err(self.unexpected("a predicate name")),
        };
        let mut args = Vec::new();
        let mut arg_spans = Vec::new();
        let mut end = start;
        if *self.peek() == Tok::LParen {
            self.bump();
            if *self.peek() != Tok::RParen {
                loop {
                    let (t, sp) = self.term()?;
                    args.push(t);
                    arg_spans.push(sp);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            end = self.expect(Tok::RParen, "`,` or `)`")?;
        }
        let length = if end.line == start.line {
            end.column + end.length - start.column
        } else {
            start.length
        };
        Ok(Parsed {
            atom: Atom {
                predicate: Symbol::from(name.as_str()),
                args,
            },
            span: SourceSpan {
                line: start.line,
                column: start.column,
                length,
            },
            arg_spans,
        })
    }

    fn conjunction(&mut self) -> PResult<Vec<Parsed>> {
        let mut out = vec![self.atom()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.atom()?);
        }
        Ok(out)
    }

    /// `exists` followed by a variable starts an existential prefix.
    fn existentials(&mut self) -> PResult<Vec<(Symbol, SourceSpan)>> {
        let mut out = Vec::new();
        if *self.peek() == Tok::Lower("exists".into()) && matches!(self.peek_at(1), Tok::Upper(_)) {
            self.bump();
            loop {
                match self.peek().clone() {
                    Tok::Upper(v) => {
                        let sp = self.bump().1;
                        out.push((Symbol::from(v.as_str()), sp));
                    }
                    _ => return Err(self.unexpected("a variable")),
                }
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect(Tok::Dot, "`.` after the existential variables")?;
        }
        Ok(out)
    }
}

struct Arity {
    seen: BTreeMap<Symbol, usize>,
}

impl Arity {
    fn check(&mut self, p: &Parsed, out: &mut Vec<Diagnostic>) {
        match self.seen.get(&p.atom.predicate) {
            Some(&n) if n != p.atom.arity() => out.push(Diagnostic {
                kind: DiagnosticKind::ArityConflict,
                span: p.span,
                message: format!(
                    "predicate {} used with arity {} but earlier with arity {}",
                    p.atom.predicate,
                    p.atom.arity(),
                    n
                ),
            }),
            Some(_) => {}
            None => {
                self.seen.insert(p.atom.predicate.clone(), p.atom.arity());
            }
        }
    }
}

fn first_span_of(parsed: &[Parsed], var: &str) -> Option<SourceSpan> {
    parsed.iter().find_map(|p| {
        p.atom
            .args
            .iter()
            .zip(&p.arg_spans)
            .find(|(t, _)| t.as_var().is_some_and(|v| &**v == var))
            .map(|(_, s)| *s)
    })
}

/// Parses a program. Multi-atom heads are normalized into single-head rules.
pub fn parse_program(text: &str) -> Result<Program, ParseErrors> {
    let toks = lex(text).map_err(|d| ParseErrors(vec![d]))?;
    let mut p = Parser { toks, pos: 0 };
    let mut diags = Vec::new();
    let mut arity = Arity {
        seen: BTreeMap::new(),
    };
    let mut facts = Vec::new();
    let mut rules = Vec::new();
    let mut rule_spans = Vec::new();

    while *p.peek() != Tok::Eof {
        let first = p.conjunction().map_err(|d| ParseErrors(vec![d]))?;
        for a in &first {
            arity.check(a, &mut diags);
        }
        match p.peek() {
            Tok::Dot if first.len() == 1 => {
                p.bump();
                let f = first.into_iter().next().unwrap();
                if let Some((_, sp)) = f
                    .atom
                    .args
                    .iter()
                    .zip(&f.arg_spans)
                    .find(|(t, _)| t.as_var().is_some())
                {
                    diags.push(Diagnostic {
                        kind: DiagnosticKind::NonGroundFact,
                        span: *sp,
                        message: format!("fact {} contains a variable", f.atom),
                    });
                } else {
                    facts.push(f.atom);
                }
            }
            Tok::Arrow => {
                let start = p.bump().1;
                let ex = p.existentials().map_err(|d| ParseErrors(vec![d]))?;
                let head = p.conjunction().map_err(|d| ParseErrors(vec![d]))?;
                p.expect(Tok::Dot, "`,` or `.` after the rule head")
                    .map_err(|d| ParseErrors(vec![d]))?;
                for a in &head {
                    arity.check(a, &mut diags);
                }
                let body_vars: BTreeSet<Symbol> =
                    first.iter().flat_map(|a| a.atom.vars()).collect();
                let declared: BTreeSet<Symbol> = ex.iter().map(|(v, _)| v.clone()).collect();
                for (v, sp) in &ex {
                    if body_vars.contains(v) {
                        diags.push(Diagnostic {
                            kind: DiagnosticKind::Invalid,
                            span: *sp,
                            message: format!("existential variable {} also occurs in the body", v),
                        });
                    }
                }
                for v in head
                    .iter()
                    .flat_map(|a| a.atom.vars())
                    .collect::<BTreeSet<_>>()
                {
                    if !body_vars.contains(&v) && !declared.contains(&v) {
                        diags.push(Diagnostic {
                            kind: DiagnosticKind::UnsafeHeadVariable,
                            span: first_span_of(&head, &v).unwrap_or(start),
                            message: format!(
                                "head variable {} is neither in the body nor declared with exists",
                                v
                            ),
                        });
                    }
                }
                rule_spans.push(start);
                rules.push(SourceRule {
                    body: first.into_iter().map(|a| a.atom).collect(),
                    head: head.into_iter().map(|a| a.atom).collect(),
                    existential_vars: declared,
                });
            }
            _ => {
                let expected = if first.len() == 1 {
                    "`.` or `->`"
                } else {
                    "`->`"
                };
                diags.push(p.unexpected(expected));
                return Err(ParseErrors(diags));
            }
        }
    }
    if !diags.is_empty() {
        return Err(ParseErrors(diags));
    }
    let reserved: BTreeSet<Symbol> = facts.iter().map(|f: &Atom| f.predicate.clone()).collect();
    let normalized = normalize_rules(rules, &reserved);
    let spans: Vec<SourceSpan> = normalized.iter().map(|(i, _)| rule_spans[*i]).collect();
    let rules = normalized.into_iter().map(|(_, r)| r).collect();
    make_program(rules, facts).map_err(|errs| {
        let whole = SourceSpan {
            line: 1,
            column: 1,
            length: 0,
        };
        ParseErrors(
            errs.into_iter()
                .map(|e| {
                    let span = match &e {
                        ModelError::UnsafeHeadVariable { rule, .. }
                        | ModelError::EmptyBody { rule }
                        | ModelError::NullInRule { rule }
                        | ModelError::ExistentialInBody { rule, .. } => {
                            spans.get(rule.wrapping_sub(1)).copied().unwrap_or(whole)
                        }
                        _ => whole,
                    };
                    Diagnostic {
                        kind: DiagnosticKind::Invalid,
                        span,
                        message: e.to_string(),
                    }
                })
                .collect(),
        )
    })
}

/// Parses `?(X,Y) <- body.`; `?() <- body.` is Boolean.
pub fn parse_query(text: &str) -> Result<ConjunctiveQuery, ParseErrors> {
    let one = |d: Diagnostic| ParseErrors(vec![d]);
    let toks = lex(text).map_err(one)?;
    let mut p = Parser { toks, pos: 0 };
    p.expect(Tok::Question, "`?` to start a query")
        .map_err(one)?;
    p.expect(Tok::LParen, "`(`").map_err(one)?;
    let mut answer = Vec::new();
    if *p.peek() != Tok::RParen {
        loop {
            match p.peek().clone() {
                Tok::Upper(v) => {
                    let sp = p.bump().1;
                    answer.push((Symbol::from(v.as_str()), sp));
                }
                _ => return Err(one(p.unexpected("an answer variable"))),
            }
            if *p.peek() == Tok::Comma {
                p.bump();
            } else {
                break;
            }
        }
    }
    p.expect(Tok::RParen, "`,` or `)`").map_err(one)?;
    p.expect(Tok::BackArrow, "`<-`").map_err(one)?;
    let body = p.conjunction().map_err(one)?;
    p.expect(Tok::Dot, "`,` or `.` after the query body")
        .map_err(one)?;
    if *p.peek() != Tok::Eof {
        return Err(one(p.unexpected("end of input after the query")));
    }
    let mut diags = Vec::new();
    let mut arity = Arity {
        seen: BTreeMap::new(),
    };
    for a in &body {
        arity.check(a, &mut diags);
    }
    if !diags.is_empty() {
        return Err(ParseErrors(diags));
    }
    let spans: BTreeMap<Symbol, SourceSpan> = answer.iter().cloned().collect();
    ConjunctiveQuery::new(
        answer.into_iter().map(|(v, _)| v).collect(),
        body.into_iter().map(|a| a.atom).collect(),
    )
    .map_err(|e| {
        let (kind, span) = match &e {
            QueryError::AnswerVarNotInBody(v) => (DiagnosticKind::AnswerVarNotInBody, spans[v]),
            _ => (
                DiagnosticKind::Invalid,
                SourceSpan {
                    line: 1,
                    column: 1,
                    length: 0,
                },
            ),
        };
        one(Diagnostic {
            kind,
            span,
            message: e.to_string(),
        })
    })
}
