//! Rules, queries and programs, with validation and head normalization.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::term::{Atom, Position, Symbol, Term};

pub type RuleId = usize;

/// A single-head existential rule `body -> exists Z. head`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub id: RuleId,
    pub body: Vec<Atom>,
    pub head: Atom,
    pub existential_vars: BTreeSet<Symbol>,
    /// Source rule number when this rule came from splitting a multi-atom head.
    pub origin: Option<usize>,
}

impl Rule {
    /// Builds a rule whose existential variables are the head variables missing from the body.
    pub fn new(id: RuleId, body: Vec<Atom>, head: Atom) -> Rule {
        let body_vars: BTreeSet<Symbol> = body.iter().flat_map(|a| a.vars()).collect();
        let existential_vars = head
            .vars()
            .into_iter()
            .filter(|v| !body_vars.contains(v))
            .collect();
        Rule {
            id,
            body,
            head,
            existential_vars,
            origin: None,
        }
    }

    /// Body variables in order of first occurrence.
    pub fn body_vars(&self) -> Vec<Symbol> {
        let mut out: Vec<Symbol> = Vec::new();
        for a in &self.body {
            for v in a.vars() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    pub fn is_existential(&self, var: &str) -> bool {
        self.existential_vars.contains(var)
    }

    /// Body variables that also occur in the head.
    pub fn frontier(&self) -> Vec<Symbol> {
        let head_vars = self.head.vars();
        self.body_vars()
            .into_iter()
            .filter(|v| head_vars.contains(v))
            .collect()
    }

    /// Positions at which `var` occurs in the body, with repetition.
    pub fn body_positions(&self, var: &str) -> Vec<Position> {
        let mut out = Vec::new();
        for a in &self.body {
            for (i, t) in a.args.iter().enumerate() {
                if matches!(t, Term::Var(v) if &**v == var) {
                    out.push(a.position(i));
                }
            }
        }
        out
    }

    /// Positions at which `var` occurs in the head.
    pub fn head_positions(&self, var: &str) -> Vec<Position> {
        let mut out = Vec::new();
        for (i, t) in self.head.args.iter().enumerate() {
            if matches!(t, Term::Var(v) if &**v == var) {
                out.push(self.head.position(i));
            }
        }
        out
    }

    /// Number of body argument slots holding `var`.
    pub fn body_occurrences(&self, var: &str) -> usize {
        self.body_positions(var).len()
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", a)?;
        }
        f.write_str(" -> ")?;
        if !self.existential_vars.is_empty() {
            f.write_str("exists ")?;
            for (i, v) in self.existential_vars.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                f.write_str(v)?;
            }
            f.write_str(". ")?;
        }
        write!(f, "{}.", self.head)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjunctiveQuery {
    pub name: Symbol,
    pub answer_vars: Vec<Symbol>,
    pub body: Vec<Atom>,
}

impl ConjunctiveQuery {
    pub fn new(answer_vars: Vec<Symbol>, body: Vec<Atom>) -> Result<ConjunctiveQuery, QueryError> {
        if body.is_empty() {
            return Err(QueryError::EmptyBody);
        }
        for a in &body {
            if a.has_nulls() {
                return Err(QueryError::NullInQuery(a.clone()));
            }
        }
        let vars = body_vars(&body);
        for v in &answer_vars {
            if !vars.contains(v) {
                return Err(QueryError::AnswerVarNotInBody(v.clone()));
            }
        }
        Ok(ConjunctiveQuery {
            name: Symbol::from("ans"),
            answer_vars,
            body,
        })
    }

    pub fn is_boolean(&self) -> bool {
        self.answer_vars.is_empty()
    }

    /// Distinct variables of the body, in order of first occurrence.
    pub fn body_vars(&self) -> Vec<Symbol> {
        body_vars(&self.body)
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("?(")?;
        for (i, v) in self.answer_vars.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(v)?;
        }
        f.write_str(") <- ")?;
        for (i, a) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", a)?;
        }
        f.write_str(".")
    }
}

fn body_vars(body: &[Atom]) -> Vec<Symbol> {
    let mut out: Vec<Symbol> = Vec::new();
    for a in body {
        for v in a.vars() {
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QueryError {
    EmptyBody,
    AnswerVarNotInBody(Symbol),
    NullInQuery(Atom),
}

impl fmt::Display for QueryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryError::EmptyBody => f.write_str("query body is empty"),
            QueryError::AnswerVarNotInBody(v) => {
                write!(f, "answer variable {} does not occur in the query body", v)
            }
            QueryError::NullInQuery(a) => write!(f, "query atom {} contains a null", a),
        }
    }
}

impl core::error::Error for QueryError {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelError {
    ArityConflict {
        predicate: Symbol,
        expected: usize,
        found: usize,
    },
    NonGroundFact(Atom),
    UnsafeHeadVariable {
        rule: RuleId,
        var: Symbol,
    },
    EmptyBody {
        rule: RuleId,
    },
    NullInRule {
        rule: RuleId,
    },
    ExistentialInBody {
        rule: RuleId,
        var: Symbol,
    },
    DuplicateRuleId(RuleId),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::ArityConflict {
                predicate,
                expected,
                found,
            } => write!(
                f,
                "predicate {} used with arity {} but earlier with arity {}",
                predicate, found, expected
            ),
            ModelError::NonGroundFact(a) => write!(f, "fact {} is not ground", a),
            ModelError::UnsafeHeadVariable { rule, var } => write!(
                f,
                "rule {}: head variable {} is neither in the body nor existential",
                rule, var
            ),
            ModelError::EmptyBody { rule } => write!(f, "rule {} has an empty body", rule),
            ModelError::NullInRule { rule } => write!(f, "rule {} contains a null", rule),
            ModelError::ExistentialInBody { rule, var } => write!(
                f,
                "rule {}: existential variable {} also occurs in the body",
                rule, var
            ),
            ModelError::DuplicateRuleId(id) => write!(f, "rule id {} is used twice", id),
        }
    }
}

impl core::error::Error for ModelError {}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    /// Ground constant-only facts, deduplicated, in insertion order.
    pub facts: Vec<Atom>,
    pub schema: BTreeMap<Symbol, usize>,
}

impl Program {
    pub fn rule(&self, id: RuleId) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// All positions of all schema predicates.
    pub fn positions(&self) -> BTreeSet<Position> {
        schema_positions(&self.schema)
    }

    /// Predicates that occur in some rule head.
    pub fn intensional(&self) -> BTreeSet<Symbol> {
        self.rules
            .iter()
            .map(|r| r.head.predicate.clone())
            .collect()
    }

    pub fn has_facts_for(&self, predicate: &str) -> bool {
        self.facts.iter().any(|f| &*f.predicate == predicate)
    }
}

pub(crate) fn schema_positions(schema: &BTreeMap<Symbol, usize>) -> BTreeSet<Position> {
    let mut out = BTreeSet::new();
    for (p, &n) in schema {
        for i in 1..=n {
            out.insert(Position::new(p.clone(), i));
        }
    }
    out
}

/// Validates rules and facts and infers the schema.
pub fn make_program(rules: Vec<Rule>, facts: Vec<Atom>) -> Result<Program, Vec<ModelError>> {
    let mut errors = Vec::new();
    let mut schema: BTreeMap<Symbol, usize> = BTreeMap::new();
    let mut seen_ids = BTreeSet::new();

    let mut record = |a: &Atom, errors: &mut Vec<ModelError>| match schema.get(&a.predicate) {
        Some(&n) if n != a.arity() => {
            let e = ModelError::ArityConflict {
                predicate: a.predicate.clone(),
                expected: n,
                found: a.arity(),
            };
            if !errors.contains(&e) {
                errors.push(e);
            }
        }
        Some(_) => {}
        None => {
            schema.insert(a.predicate.clone(), a.arity());
        }
    };

    for r in &rules {
        if !seen_ids.insert(r.id) {
            errors.push(ModelError::DuplicateRuleId(r.id));
        }
        if r.body.is_empty() {
            errors.push(ModelError::EmptyBody { rule: r.id });
        }
        for a in r.body.iter().chain(core::iter::once(&r.head)) {
            record(a, &mut errors);
        }
        if r.body
            .iter()
            .chain(core::iter::once(&r.head))
            .any(Atom::has_nulls)
        {
            errors.push(ModelError::NullInRule { rule: r.id });
        }
        let body_vars = r.body_vars();
        for v in r.head.vars() {
            if !body_vars.contains(&v) && !r.existential_vars.contains(&v) {
                errors.push(ModelError::UnsafeHeadVariable { rule: r.id, var: v });
            }
        }
        for v in &r.existential_vars {
            if body_vars.contains(v) {
                errors.push(ModelError::ExistentialInBody {
                    rule: r.id,
                    var: v.clone(),
                });
            }
        }
    }

    let mut seen = BTreeSet::new();
    let mut kept = Vec::new();
    for f in facts {
        record(&f, &mut errors);
        if f.args.iter().any(|t| !matches!(t, Term::Const(_))) {
            errors.push(ModelError::NonGroundFact(f));
            continue;
        }
        if seen.insert(f.clone()) {
            kept.push(f);
        }
    }

    if errors.is_empty() {
        Ok(Program {
            rules,
            facts: kept,
            schema,
        })
    } else {
        Err(errors)
    }
}

/// A rule as written, possibly with several head atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceRule {
    pub body: Vec<Atom>,
    pub head: Vec<Atom>,
    pub existential_vars: BTreeSet<Symbol>,
}

/// Turns source rules into single-head rules numbered from 1.
///
/// A multi-atom head with existential variables becomes one rule into a fresh
/// predicate over all head variables followed by one projection rule per head
/// atom. Without existential variables the head atoms are simply split.
/// Returns each rule with the index of the source rule it came from.
pub fn normalize_rules(source: Vec<SourceRule>, reserved: &BTreeSet<Symbol>) -> Vec<(usize, Rule)> {
    let mut used: BTreeSet<Symbol> = reserved.clone();
    for r in &source {
        for a in r.body.iter().chain(r.head.iter()) {
            used.insert(a.predicate.clone());
        }
    }
    let mut out = Vec::new();
    let mut next_id = 1;
    for (idx, r) in source.into_iter().enumerate() {
        let ordinal = idx + 1;
        if r.head.len() == 1 {
            let head = r.head.into_iter().next().unwrap();
            out.push((
                idx,
                Rule {
                    id: next_id,
                    body: r.body,
                    head,
                    existential_vars: r.existential_vars,
                    origin: None,
                },
            ));
            next_id += 1;
            continue;
        }
        if r.existential_vars.is_empty() {
            for head in r.head {
                out.push((
                    idx,
                    Rule {
                        id: next_id,
                        body: r.body.clone(),
                        head,
                        existential_vars: BTreeSet::new(),
                        origin: Some(ordinal),
                    },
                ));
                next_id += 1;
            }
            continue;
        }
        let mut head_vars: Vec<Symbol> = Vec::new();
        for a in &r.head {
            for v in a.vars() {
                if !head_vars.contains(&v) {
                    head_vars.push(v);
                }
            }
        }
        let aux_name = fresh_name(&format!("aux_{}", ordinal), &mut used);
        let aux = Atom {
            predicate: aux_name,
            args: head_vars.iter().cloned().map(Term::Var).collect(),
        };
        out.push((
            idx,
            Rule {
                id: next_id,
                body: r.body,
                head: aux.clone(),
                existential_vars: r.existential_vars,
                origin: Some(ordinal),
            },
        ));
        next_id += 1;
        for head in r.head {
            out.push((
                idx,
                Rule {
                    id: next_id,
                    body: alloc::vec![aux.clone()],
                    head,
                    existential_vars: BTreeSet::new(),
                    origin: Some(ordinal),
                },
            ));
            next_id += 1;
        }
    }
    out
}

/// Returns `base` or `base_<n>`, whichever is first absent from `used`, and reserves it.
pub(crate) fn fresh_name(base: &str, used: &mut BTreeSet<Symbol>) -> Symbol {
    let mut candidate = String::from(base);
    let mut n = 1;
    while used.contains(candidate.as_str()) {
        candidate = format!("{}_{}", base, n);
        n += 1;
    }
    let sym = Symbol::from(candidate.as_str());
    used.insert(sym.clone());
    sym
}

/// Structural equality of two rule lists up to a per-rule renaming of variables.
pub fn rules_equal_modulo_renaming(a: &[Rule], b: &[Rule]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| rule_equal_modulo_renaming(x, y))
}

/// True when `b` is `a` with its variables consistently renamed.
pub fn rule_equal_modulo_renaming(a: &Rule, b: &Rule) -> bool {
    let mut fwd: BTreeMap<Symbol, Symbol> = BTreeMap::new();
    let mut bwd: BTreeMap<Symbol, Symbol> = BTreeMap::new();
    if a.body.len() != b.body.len() {
        return false;
    }
    let pairs = a
        .body
        .iter()
        .zip(&b.body)
        .chain(core::iter::once((&a.head, &b.head)));
    for (x, y) in pairs {
        if x.predicate != y.predicate || x.arity() != y.arity() {
            return false;
        }
        for (s, t) in x.args.iter().zip(&y.args) {
            match (s, t) {
                (Term::Var(u), Term::Var(v)) => {
                    if fwd.get(u).is_some_and(|w| w != v) || bwd.get(v).is_some_and(|w| w != u) {
                        return false;
                    }
                    fwd.insert(u.clone(), v.clone());
                    bwd.insert(v.clone(), u.clone());
                }
                (s, t) if s == t && !matches!(s, Term::Var(_)) => {}
                _ => return false,
            }
        }
    }
    let mapped: Option<BTreeSet<Symbol>> = a
        .existential_vars
        .iter()
        .map(|v| fwd.get(v).cloned())
        .collect();
    mapped.as_ref() == Some(&b.existential_vars)
}
