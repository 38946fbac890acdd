//! Terms, atoms, positions and variable assignments.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

/// Interned-by-refcount name used for predicates, constants and variables.
pub type Symbol = Arc<str>;

/// Identifier of a labeled null. Rendered as `ζ<id>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NullId(pub u32);

impl fmt::Display for NullId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ζ{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(Symbol),
    Null(NullId),
    Var(Symbol),
}

impl Term {
    pub fn constant(name: &str) -> Term {
        Term::Const(Symbol::from(name))
    }

    pub fn var(name: &str) -> Term {
        Term::Var(Symbol::from(name))
    }

    pub fn null(id: u32) -> Term {
        Term::Null(NullId(id))
    }

    pub fn is_ground(&self) -> bool {
        !matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&Symbol> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_null(&self) -> Option<NullId> {
        match self {
            Term::Null(n) => Some(*n),
            _ => None,
        }
    }
}

/// True when `name` can be written without quotes as a constant.
pub fn is_plain_constant(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() || c.is_ascii_digit() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Writes a constant, quoting it when it is not a plain lowercase identifier.
pub fn write_constant(f: &mut impl fmt::Write, name: &str) -> fmt::Result {
    if is_plain_constant(name) {
        return f.write_str(name);
    }
    f.write_char('"')?;
    for c in name.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('"')
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write_constant(f, c),
            Term::Null(n) => write!(f, "{}", n),
            Term::Var(v) => f.write_str(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: Symbol,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Atom {
        Atom {
            predicate: Symbol::from(predicate),
            args,
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn has_nulls(&self) -> bool {
        self.args.iter().any(|t| matches!(t, Term::Null(_)))
    }

    /// Variables in order of first occurrence, without repetition.
    pub fn vars(&self) -> Vec<Symbol> {
        let mut out: Vec<Symbol> = Vec::new();
        for t in &self.args {
            if let Term::Var(v) = t {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        }
        out
    }

    pub fn nulls(&self) -> impl Iterator<Item = NullId> + '_ {
        self.args.iter().filter_map(Term::as_null)
    }

    /// The position of argument `i` (0-based).
    pub fn position(&self, i: usize) -> Position {
        Position::new(self.predicate.clone(), i + 1)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if self.args.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", t)?;
        }
        f.write_str(")")
    }
}

/// An argument slot `p[i]` of a predicate; `index` is 1-based.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position {
    pub predicate: Symbol,
    pub index: usize,
}

impl Position {
    pub fn new(predicate: Symbol, index: usize) -> Position {
        Position { predicate, index }
    }

    pub fn of(predicate: &str, index: usize) -> Position {
        Position::new(Symbol::from(predicate), index)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.predicate, self.index)
    }
}

/// A mapping from variable names to ground terms.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment(pub BTreeMap<Symbol, Term>);

impl Assignment {
    pub fn new() -> Assignment {
        Assignment(BTreeMap::new())
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.0.get(var)
    }

    pub fn insert(&mut self, var: Symbol, value: Term) -> Option<Term> {
        self.0.insert(var, value)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Term)> {
        self.0.iter()
    }
}

impl<const N: usize> From<[(&str, Term); N]> for Assignment {
    fn from(pairs: [(&str, Term); N]) -> Assignment {
        Assignment(
            pairs
                .into_iter()
                .map(|(k, v)| (Symbol::from(k), v))
                .collect(),
        )
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}->{}", k, v)?;
        }
        f.write_str("}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnboundVariable(pub String);

impl fmt::Display for UnboundVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "variable {} has no value in the assignment", self.0)
    }
}

impl core::error::Error for UnboundVariable {}

/// Replaces every variable of `atom` by its image under `theta`.
pub fn apply_assignment(atom: &Atom, theta: &Assignment) -> Result<Atom, UnboundVariable> {
    let mut args = Vec::with_capacity(atom.args.len());
    for t in &atom.args {
        match t {
            Term::Var(v) => match theta.0.get(v) {
                Some(value) => args.push(value.clone()),
                None => return Err(UnboundVariable(String::from(&**v))),
            },
            other => args.push(other.clone()),
        }
    }
    Ok(Atom {
        predicate: atom.predicate.clone(),
        args,
    })
}
