//! Magic-sets rewriting with full left-to-right SIPS for existential rules.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::chase::{certain_answers_via_chase, Budget, ChaseError, ChaseStatus};
use crate::graphs::scc;
use crate::program::{
    fresh_name, rule_equal_modulo_renaming, ConjunctiveQuery, Program, Rule, RuleId,
};
use crate::term::{Atom, Position, Symbol, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Binding {
    Bound,
    Free,
}

/// One bound/free flag per argument.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Adornment(pub Vec<Binding>);

impl Adornment {
    /// Adorns `atom`: constants and variables in `bound` are bound.
    pub fn of(atom: &Atom, bound: &BTreeSet<Symbol>) -> Adornment {
        Adornment(
            atom.args
                .iter()
                .map(|t| match t {
                    Term::Var(v) if !bound.contains(v) => Binding::Free,
                    _ => Binding::Bound,
                })
                .collect(),
        )
    }

    pub fn is_bound(&self, i: usize) -> bool {
        self.0[i] == Binding::Bound
    }

    pub fn bound_count(&self) -> usize {
        self.0.iter().filter(|b| **b == Binding::Bound).count()
    }

    /// The arguments of `atom` at bound positions.
    pub fn bound_args(&self, atom: &Atom) -> Vec<Term> {
        atom.args
            .iter()
            .zip(&self.0)
            .filter(|(_, b)| **b == Binding::Bound)
            .map(|(t, _)| t.clone())
            .collect()
    }
}

impl fmt::Display for Adornment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b == Binding::Bound { "b" } else { "f" })?;
        }
        Ok(())
    }
}

impl core::str::FromStr for Adornment {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                'b' => Ok(Binding::Bound),
                'f' => Ok(Binding::Free),
                _ => Err(()),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Adornment)
    }
}

/// Binding pattern of one rule under one head adornment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sips {
    pub head: Adornment,
    /// Body atom indexes in evaluation order.
    pub order: Vec<usize>,
    /// Adornment of each body atom, by body index.
    pub body: Vec<Adornment>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MagicError {
    ExistentialBoundRejected {
        rule: RuleId,
        position: Position,
    },
    AdornmentArity {
        rule: RuleId,
        expected: usize,
        found: usize,
    },
}

impl fmt::Display for MagicError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MagicError::ExistentialBoundRejected { rule, position } => {
                write!(
                    f,
                    "rule {}: existential position {} cannot be bound",
                    rule, position
                )
            }
            MagicError::AdornmentArity {
                rule,
                expected,
                found,
            } => write!(
                f,
                "rule {}: adornment has {} flags but the head has arity {}",
                rule, found, expected
            ),
        }
    }
}

impl core::error::Error for MagicError {}

/// Full SIPS in written body order: an argument is bound when it is a constant,
/// a variable bound in the head, or a variable of an earlier body atom.
pub fn full_sips(rule: &Rule, head: &Adornment) -> Result<Sips, MagicError> {
    if head.0.len() != rule.head.arity() {
        return Err(MagicError::AdornmentArity {
            rule: rule.id,
            expected: rule.head.arity(),
            found: head.0.len(),
        });
    }
    let mut bound = BTreeSet::new();
    for (i, t) in rule.head.args.iter().enumerate() {
        if let Term::Var(v) = t {
            if head.is_bound(i) {
                if rule.is_existential(v) {
                    return Err(MagicError::ExistentialBoundRejected {
                        rule: rule.id,
                        position: rule.head.position(i),
                    });
                }
                bound.insert(v.clone());
            }
        }
    }
    let mut body = Vec::with_capacity(rule.body.len());
    for a in &rule.body {
        body.push(Adornment::of(a, &bound));
        bound.extend(a.vars());
    }
    Ok(Sips {
        head: head.clone(),
        order: (0..rule.body.len()).collect(),
        body,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PredicateRole {
    Adorned(Adornment),
    Magic(Adornment),
    /// A magic predicate standing for several equivalent ones.
    MergedMagic(Vec<Adornment>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateInfo {
    pub base: Symbol,
    pub role: PredicateRole,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdornedProgram {
    pub adorned_rules: Vec<Rule>,
    pub magic_rules: Vec<Rule>,
    pub loading_rules: Vec<Rule>,
    pub seeds: Vec<Atom>,
    pub adorned_query: ConjunctiveQuery,
    pub predicate_map: BTreeMap<Symbol, PredicateInfo>,
    /// The facts of the input program.
    pub facts: Vec<Atom>,
}

impl AdornedProgram {
    /// All rules: adorned, then magic, then loading.
    pub fn rules(&self) -> impl Iterator<Item = &Rule> {
        self.adorned_rules
            .iter()
            .chain(&self.magic_rules)
            .chain(&self.loading_rules)
    }

    /// The rewritten program: all rules, the input facts and the seeds.
    pub fn program(&self) -> Program {
        let rules = self.rules().cloned().collect();
        let facts = self.facts.iter().chain(&self.seeds).cloned().collect();
        crate::program::make_program(rules, facts).expect("rewriting yields a valid program")
    }

    /// Positions of adorned predicates flagged bound.
    pub fn bound_positions(&self) -> BTreeSet<Position> {
        let mut out = BTreeSet::new();
        for (name, info) in &self.predicate_map {
            if let PredicateRole::Adorned(ad) = &info.role {
                for i in 0..ad.0.len() {
                    if ad.is_bound(i) {
                        out.insert(Position::new(name.clone(), i + 1));
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MagicOptions {
    pub merge_equivalent_magic: bool,
}

struct Namer {
    used: BTreeSet<Symbol>,
    adorned: BTreeMap<(Symbol, Adornment), Symbol>,
    magic: BTreeMap<(Symbol, Adornment), Symbol>,
    map: BTreeMap<Symbol, PredicateInfo>,
}

impl Namer {
    fn new(program: &Program, query: &ConjunctiveQuery) -> Namer {
        let mut used: BTreeSet<Symbol> = program.schema.keys().cloned().collect();
        for a in &query.body {
            used.insert(a.predicate.clone());
        }
        used.insert(query.name.clone());
        Namer {
            used,
            adorned: BTreeMap::new(),
            magic: BTreeMap::new(),
            map: BTreeMap::new(),
        }
    }

    fn adorned(&mut self, base: &Symbol, ad: &Adornment) -> Symbol {
        let key = (base.clone(), ad.clone());
        if let Some(n) = self.adorned.get(&key) {
            return n.clone();
        }
        let name = fresh_name(&format!("{}__{}", base, ad), &mut self.used);
        self.map.insert(
            name.clone(),
            PredicateInfo {
                base: base.clone(),
                role: PredicateRole::Adorned(ad.clone()),
            },
        );
        self.adorned.insert(key, name.clone());
        name
    }

    fn magic(&mut self, base: &Symbol, ad: &Adornment) -> Symbol {
        let key = (base.clone(), ad.clone());
        if let Some(n) = self.magic.get(&key) {
            return n.clone();
        }
        let name = fresh_name(&format!("mg_{}__{}", base, ad), &mut self.used);
        self.map.insert(
            name.clone(),
            PredicateInfo {
                base: base.clone(),
                role: PredicateRole::Magic(ad.clone()),
            },
        );
        self.magic.insert(key, name.clone());
        name
    }

    fn magic_atom(&mut self, atom: &Atom, ad: &Adornment) -> Atom {
        Atom {
            predicate: self.magic(&atom.predicate, ad),
            args: ad.bound_args(atom),
        }
    }

    fn adorned_atom(&mut self, atom: &Atom, ad: &Adornment) -> Atom {
        Atom {
            predicate: self.adorned(&atom.predicate, ad),
            args: atom.args.clone(),
        }
    }
}

/// The query part of the rewriting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryAdornment {
    pub query: ConjunctiveQuery,
    /// Ground magic facts for query atoms whose bound arguments are constants.
    pub seeds: Vec<Atom>,
    /// Magic rules for query atoms bound through earlier query atoms.
    pub magic_rules: Vec<Rule>,
    /// Adorned predicates still to be processed, in order.
    pub worklist: Vec<(Symbol, Adornment)>,
}

fn adorn_query_with(namer: &mut Namer, query: &ConjunctiveQuery) -> QueryAdornment {
    let mut bound = BTreeSet::new();
    let mut body = Vec::new();
    let mut seeds = Vec::new();
    let mut magic_rules = Vec::new();
    let mut worklist = Vec::new();
    for a in &query.body {
        let ad = Adornment::of(a, &bound);
        let magic = namer.magic_atom(a, &ad);
        if magic.is_ground() {
            if !seeds.contains(&magic) {
                seeds.push(magic);
            }
        } else {
            magic_rules.push(Rule::new(0, body.clone(), magic));
        }
        body.push(namer.adorned_atom(a, &ad));
        bound.extend(a.vars());
        let item = (a.predicate.clone(), ad);
        if !worklist.contains(&item) {
            worklist.push(item);
        }
    }
    QueryAdornment {
        query: ConjunctiveQuery {
            name: query.name.clone(),
            answer_vars: query.answer_vars.clone(),
            body,
        },
        seeds,
        magic_rules,
        worklist,
    }
}

/// Adorns the query left to right and derives its seeds.
pub fn adorn_query(program: &Program, query: &ConjunctiveQuery) -> QueryAdornment {
    adorn_query_with(&mut Namer::new(program, query), query)
}

/// Adds `r` unless it repeats a kept rule or its head occurs in its body.
fn push_unique(rules: &mut Vec<Rule>, r: Rule) {
    if !r.body.contains(&r.head) && !rules.iter().any(|x| rule_equal_modulo_renaming(x, &r)) {
        rules.push(r);
    }
}

/// Rewrites `program` for `query`.
pub fn magicd_plus(
    program: &Program,
    query: &ConjunctiveQuery,
    options: MagicOptions,
) -> AdornedProgram {
    let intensional = program.intensional();
    let mut namer = Namer::new(program, query);
    let qa = adorn_query_with(&mut namer, query);

    let mut adorned_rules = Vec::new();
    let mut magic_rules = Vec::new();
    let mut loading_rules = Vec::new();
    for r in qa.magic_rules {
        push_unique(&mut magic_rules, r);
    }

    let mut seen: BTreeSet<(Symbol, Adornment)> = qa.worklist.iter().cloned().collect();
    let mut work: VecDeque<(Symbol, Adornment)> = qa.worklist.into_iter().collect();
    while let Some((p, ad)) = work.pop_front() {
        for rule in program.rules.iter().filter(|r| r.head.predicate == p) {
            let Ok(sips) = full_sips(rule, &ad) else {
                continue;
            };
            let magic_head = namer.magic_atom(&rule.head, &ad);
            let mut body = alloc::vec![magic_head];
            for &i in &sips.order {
                let a = &rule.body[i];
                if intensional.contains(&a.predicate) {
                    let bad = &sips.body[i];
                    let magic = namer.magic_atom(a, bad);
                    push_unique(&mut magic_rules, Rule::new(0, body.clone(), magic));
                    body.push(namer.adorned_atom(a, bad));
                    let item = (a.predicate.clone(), bad.clone());
                    if seen.insert(item.clone()) {
                        work.push_back(item);
                    }
                } else {
                    body.push(a.clone());
                }
            }
            adorned_rules.push(Rule {
                id: 0,
                body,
                head: namer.adorned_atom(&rule.head, &ad),
                existential_vars: rule.existential_vars.clone(),
                origin: None,
            });
        }
        if program.has_facts_for(&p) {
            let arity = program.schema[&p];
            let vars: Vec<Term> = (1..=arity)
                .map(|i| Term::Var(Symbol::from(format!("X{}", i).as_str())))
                .collect();
            let base = Atom {
                predicate: p.clone(),
                args: vars,
            };
            let magic = namer.magic_atom(&base, &ad);
            let head = namer.adorned_atom(&base, &ad);
            loading_rules.push(Rule::new(0, alloc::vec![magic, base], head));
        }
    }

    let mut out = AdornedProgram {
        adorned_rules,
        magic_rules,
        loading_rules,
        seeds: qa.seeds,
        adorned_query: qa.query,
        predicate_map: namer.map,
        facts: program.facts.clone(),
    };
    if options.merge_equivalent_magic {
        merge_magic(&mut out, &mut namer.used);
    }
    for (i, r) in out
        .adorned_rules
        .iter_mut()
        .chain(out.magic_rules.iter_mut())
        .chain(out.loading_rules.iter_mut())
        .enumerate()
    {
        r.id = i + 1;
    }
    out
}

/// Merges magic predicates of one base predicate that copy into each other.
///
/// Two magic predicates are equivalent when unit rules `m1(X̄) -> m2(X̄)` and,
/// possibly through others, `m2(X̄) -> m1(X̄)` exist: then their extensions are equal.
fn merge_magic(ap: &mut AdornedProgram, used: &mut BTreeSet<Symbol>) {
    let magic: Vec<Symbol> = ap
        .predicate_map
        .iter()
        .filter(|(_, i)| matches!(i.role, PredicateRole::Magic(_)))
        .map(|(n, _)| n.clone())
        .collect();
    let idx: BTreeMap<&Symbol, usize> = magic.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let mut adj = alloc::vec![Vec::new(); magic.len()];
    for r in &ap.magic_rules {
        if r.body.len() != 1 || r.body[0].args != r.head.args {
            continue;
        }
        let (Some(&u), Some(&v)) = (idx.get(&r.body[0].predicate), idx.get(&r.head.predicate))
        else {
            continue;
        };
        if ap.predicate_map[&magic[u]].base == ap.predicate_map[&magic[v]].base {
            adj[u].push(v);
        }
    }
    let comp = scc(magic.len(), &adj);
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, &c) in comp.iter().enumerate() {
        groups.entry(c).or_default().push(v);
    }
    let mut rename: BTreeMap<Symbol, Symbol> = BTreeMap::new();
    let mut groups: Vec<Vec<usize>> = groups.into_values().filter(|g| g.len() > 1).collect();
    groups.sort();
    for g in groups {
        let base = ap.predicate_map[&magic[g[0]]].base.clone();
        let name = fresh_name(&format!("mg_{}", base), used);
        let mut ads = Vec::new();
        for &v in &g {
            if let Some(PredicateInfo {
                role: PredicateRole::Magic(ad),
                ..
            }) = ap.predicate_map.remove(&magic[v])
            {
                ads.push(ad);
            }
            rename.insert(magic[v].clone(), name.clone());
        }
        ap.predicate_map.insert(
            name,
            PredicateInfo {
                base,
                role: PredicateRole::MergedMagic(ads),
            },
        );
    }
    if rename.is_empty() {
        return;
    }
    let fix = |a: &mut Atom| {
        if let Some(n) = rename.get(&a.predicate) {
            a.predicate = n.clone();
        }
    };
    for r in ap
        .adorned_rules
        .iter_mut()
        .chain(ap.magic_rules.iter_mut())
        .chain(ap.loading_rules.iter_mut())
    {
        r.body.iter_mut().for_each(fix);
        fix(&mut r.head);
    }
    ap.seeds.iter_mut().for_each(fix);
    let mut seeds = Vec::new();
    for s in core::mem::take(&mut ap.seeds) {
        if !seeds.contains(&s) {
            seeds.push(s);
        }
    }
    ap.seeds = seeds;
    let mut kept = Vec::new();
    for r in core::mem::take(&mut ap.magic_rules) {
        push_unique(&mut kept, r);
    }
    ap.magic_rules = kept;
}

/// Outcome of comparing certain answers before and after rewriting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PreservationReport {
    Equal(BTreeSet<Vec<Symbol>>),
    Differ {
        original: BTreeSet<Vec<Symbol>>,
        rewritten: BTreeSet<Vec<Symbol>>,
    },
    /// One of the chases hit the budget.
    Inconclusive,
}

/// Compares chase-based certain answers of `query` on `program` and on its rewriting.
pub fn answers_preserved_check(
    program: &Program,
    query: &ConjunctiveQuery,
    budget: Budget,
) -> Result<PreservationReport, ChaseError> {
    let (original, s1) = certain_answers_via_chase(program, query, budget)?;
    if s1 != ChaseStatus::Terminated {
        return Ok(PreservationReport::Inconclusive);
    }
    let ap = magicd_plus(program, query, MagicOptions::default());
    let (rewritten, s2) = certain_answers_via_chase(&ap.program(), &ap.adorned_query, budget)?;
    if s2 != ChaseStatus::Terminated {
        return Ok(PreservationReport::Inconclusive);
    }
    Ok(if original == rewritten {
        PreservationReport::Equal(original)
    } else {
        PreservationReport::Differ {
            original,
            rewritten,
        }
    })
}
