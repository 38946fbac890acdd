//! Variable marking, the sticky / WA / WS / JWS tests and selection functions.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::graphs::{
    build_dependency_graph, build_edg, finite_existential_positions, finite_rank_positions, scc,
};
use crate::program::{Program, Rule, RuleId};
use crate::term::{Position, Symbol, Term};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MarkingResult {
    /// Marked body slots as (rule id, body atom index, argument index), both indexes 0-based.
    pub marked: BTreeSet<(RuleId, usize, usize)>,
    /// Marking verdict for every body variable of every rule.
    pub vars: BTreeMap<(RuleId, Symbol), bool>,
}

impl MarkingResult {
    pub fn is_marked(&self, rule: RuleId, var: &str) -> bool {
        self.vars
            .get(&(rule, Symbol::from(var)))
            .copied()
            .unwrap_or(false)
    }

    /// Marked variables of one rule, sorted.
    pub fn marked_vars(&self, rule: RuleId) -> BTreeSet<Symbol> {
        self.vars
            .iter()
            .filter(|((r, _), m)| *r == rule && **m)
            .map(|((_, v), _)| v.clone())
            .collect()
    }
}

/// Runs the preliminary marking step and propagates it to a fixpoint.
pub fn mark_variables(rules: &[Rule]) -> MarkingResult {
    // Rules whose head holds a body variable at a given position.
    let mut head_at: BTreeMap<Position, Vec<(usize, Symbol)>> = BTreeMap::new();
    for (ri, r) in rules.iter().enumerate() {
        for (i, t) in r.head.args.iter().enumerate() {
            if let Term::Var(v) = t {
                if !r.is_existential(v) {
                    head_at
                        .entry(r.head.position(i))
                        .or_default()
                        .push((ri, v.clone()));
                }
            }
        }
    }

    let mut marked: BTreeSet<(usize, Symbol)> = BTreeSet::new();
    let mut seen_pos: BTreeSet<Position> = BTreeSet::new();
    let mut work: VecDeque<Position> = VecDeque::new();

    let mut mark = |ri: usize,
                    v: Symbol,
                    marked: &mut BTreeSet<(usize, Symbol)>,
                    work: &mut VecDeque<Position>| {
        if marked.insert((ri, v.clone())) {
            for p in rules[ri].body_positions(&v) {
                if seen_pos.insert(p.clone()) {
                    work.push_back(p);
                }
            }
        }
    };

    for (ri, r) in rules.iter().enumerate() {
        let head_vars = r.head.vars();
        for v in r.body_vars() {
            if !head_vars.contains(&v) {
                mark(ri, v, &mut marked, &mut work);
            }
        }
    }
    while let Some(p) = work.pop_front() {
        if let Some(list) = head_at.get(&p) {
            for (ri, v) in list.clone() {
                mark(ri, v, &mut marked, &mut work);
            }
        }
    }

    let mut result = MarkingResult::default();
    for (ri, r) in rules.iter().enumerate() {
        for v in r.body_vars() {
            result
                .vars
                .insert((r.id, v.clone()), marked.contains(&(ri, v)));
        }
        for (ai, a) in r.body.iter().enumerate() {
            for (i, t) in a.args.iter().enumerate() {
                if let Term::Var(v) = t {
                    if marked.contains(&(ri, v.clone())) {
                        result.marked.insert((r.id, ai, i));
                    }
                }
            }
        }
    }
    result
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Class {
    Sticky,
    WeaklyAcyclic,
    WeaklySticky,
    Jws,
}

impl Class {
    pub fn name(self) -> &'static str {
        match self {
            Class::Sticky => "sticky",
            Class::WeaklyAcyclic => "weakly_acyclic",
            Class::WeaklySticky => "weakly_sticky",
            Class::Jws => "jws",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Why a rule set fails a class test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub class: Class,
    pub rule: RuleId,
    pub variable: Symbol,
    pub reason: String,
}

fn join_positions(ps: &[Position]) -> String {
    let parts: Vec<String> = ps.iter().map(|p| format!("{}", p)).collect();
    parts.join(", ")
}

/// Marked variables occurring at least twice in one body, with their body positions.
fn repeated_marked(
    rules: &[Rule],
    marking: &MarkingResult,
) -> Vec<(RuleId, Symbol, Vec<Position>)> {
    let mut out = Vec::new();
    for r in rules {
        for v in r.body_vars() {
            let ps = r.body_positions(&v);
            if ps.len() >= 2 && marking.is_marked(r.id, &v) {
                out.push((r.id, v, ps));
            }
        }
    }
    out
}

pub fn is_sticky(rules: &[Rule]) -> (bool, Vec<Witness>) {
    let marking = mark_variables(rules);
    let witnesses: Vec<Witness> = repeated_marked(rules, &marking)
        .into_iter()
        .map(|(rule, variable, ps)| Witness {
            class: Class::Sticky,
            rule,
            reason: format!(
                "{} is marked and occurs {} times in the body",
                variable,
                ps.len()
            ),
            variable,
        })
        .collect();
    (witnesses.is_empty(), witnesses)
}

fn repeated_outside(
    rules: &[Rule],
    allowed: &BTreeSet<Position>,
    class: Class,
    what: &str,
) -> (bool, Vec<Witness>) {
    let marking = mark_variables(rules);
    let witnesses: Vec<Witness> = repeated_marked(rules, &marking)
        .into_iter()
        .filter(|(_, _, ps)| ps.iter().all(|p| !allowed.contains(p)))
        .map(|(rule, variable, ps)| Witness {
            class,
            rule,
            reason: format!(
                "{} is marked, repeated, and occurs only at {} positions ({})",
                variable,
                what,
                join_positions(&ps)
            ),
            variable,
        })
        .collect();
    (witnesses.is_empty(), witnesses)
}

pub fn is_weakly_sticky(rules: &[Rule]) -> (bool, Vec<Witness>) {
    let finite = finite_rank_positions(&build_dependency_graph(rules)).finite();
    repeated_outside(rules, &finite, Class::WeaklySticky, "infinite-rank")
}

pub fn is_jws(rules: &[Rule]) -> (bool, Vec<Witness>) {
    let finite = finite_existential_positions(rules);
    repeated_outside(rules, &finite, Class::Jws, "non-finite-existential")
}

/// Weak acyclicity; witnesses name existential variables whose special edge lies on a cycle.
pub fn is_weakly_acyclic(rules: &[Rule]) -> (bool, Vec<Witness>) {
    let g = build_dependency_graph(rules);
    let nodes: Vec<&Position> = g.nodes.iter().collect();
    let idx: BTreeMap<&Position, usize> = nodes.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let mut adj = alloc::vec![Vec::new(); nodes.len()];
    for e in &g.edges {
        adj[idx[&e.from]].push(idx[&e.to]);
    }
    let comp = scc(nodes.len(), &adj);
    let mut witnesses = Vec::new();
    for r in rules {
        for z in &r.existential_vars {
            let cyclic = r.head_positions(z).into_iter().find_map(|to| {
                r.frontier()
                    .iter()
                    .flat_map(|x| r.body_positions(x))
                    .find(|from| comp[idx[from]] == comp[idx[&to]])
                    .map(|from| (from, to))
            });
            if let Some((from, to)) = cyclic {
                witnesses.push(Witness {
                    class: Class::WeaklyAcyclic,
                    rule: r.id,
                    variable: z.clone(),
                    reason: format!("special edge {} -> {} lies on a cycle", from, to),
                });
            }
        }
    }
    (witnesses.is_empty(), witnesses)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SelectionFunctionId {
    Bottom,
    Rank,
    Existential,
}

impl SelectionFunctionId {
    pub fn name(self) -> &'static str {
        match self {
            SelectionFunctionId::Bottom => "bottom",
            SelectionFunctionId::Rank => "rank",
            SelectionFunctionId::Existential => "existential",
        }
    }

    /// The syntactic class under which this selection makes SChQA complete.
    pub fn required_class(self) -> Class {
        match self {
            SelectionFunctionId::Bottom => Class::Sticky,
            SelectionFunctionId::Rank => Class::WeaklySticky,
            SelectionFunctionId::Existential => Class::Jws,
        }
    }
}

impl fmt::Display for SelectionFunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownSelection(pub String);

impl fmt::Display for UnknownSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown selection function {:?} (expected bottom, rank or existential)",
            self.0
        )
    }
}

impl core::error::Error for UnknownSelection {}

impl FromStr for SelectionFunctionId {
    type Err = UnknownSelection;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bottom" => Ok(SelectionFunctionId::Bottom),
            "rank" => Ok(SelectionFunctionId::Rank),
            "existential" => Ok(SelectionFunctionId::Existential),
            other => Err(UnknownSelection(String::from(other))),
        }
    }
}

pub fn selection(rules: &[Rule], id: SelectionFunctionId) -> BTreeSet<Position> {
    match id {
        SelectionFunctionId::Bottom => BTreeSet::new(),
        SelectionFunctionId::Rank => finite_rank_positions(&build_dependency_graph(rules)).finite(),
        SelectionFunctionId::Existential => finite_existential_positions(rules),
    }
}

/// Runs the class test matching `class`.
pub fn check_class(rules: &[Rule], class: Class) -> (bool, Vec<Witness>) {
    match class {
        Class::Sticky => is_sticky(rules),
        Class::WeaklyAcyclic => is_weakly_acyclic(rules),
        Class::WeaklySticky => is_weakly_sticky(rules),
        Class::Jws => is_jws(rules),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationReport {
    pub sticky: bool,
    pub weakly_acyclic: bool,
    pub weakly_sticky: bool,
    pub jws: bool,
    pub finite_rank_positions: BTreeSet<Position>,
    pub finite_existential_positions: BTreeSet<Position>,
    pub witnesses: Vec<Witness>,
}

/// Runs every class test. Positions of predicates that only occur in facts
/// count as finite in both position sets.
pub fn classify(program: &Program) -> ClassificationReport {
    let rules = &program.rules;
    let (sticky, mut witnesses) = is_sticky(rules);
    let (weakly_acyclic, w) = is_weakly_acyclic(rules);
    witnesses.extend(w);
    let (weakly_sticky, w) = is_weakly_sticky(rules);
    witnesses.extend(w);
    let (jws, w) = is_jws(rules);
    witnesses.extend(w);

    let graph = build_dependency_graph(rules);
    let ranks = finite_rank_positions(&graph);
    let edg = build_edg(rules);
    let mut excluded: BTreeSet<Position> = BTreeSet::new();
    for z in edg.cyclic_nodes() {
        excluded.extend(edg.targets[&z].iter().cloned());
    }
    let all = program.positions();
    let finite_rank_positions = all
        .iter()
        .filter(|p| ranks.get(p).is_none_or(|r| r.is_finite()))
        .cloned()
        .collect();
    let finite_existential_positions = all
        .iter()
        .filter(|p| !excluded.contains(*p))
        .cloned()
        .collect();

    ClassificationReport {
        sticky,
        weakly_acyclic,
        weakly_sticky,
        jws,
        finite_rank_positions,
        finite_existential_positions,
        witnesses,
    }
}
