//! The level-saturating restricted chase, derivations and the bounded stickiness check.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;
use core::fmt;

use crate::classify::{selection, SelectionFunctionId};
use crate::engine::{discover, CompiledRule};
use crate::instance::{evaluate_query, AtomId, Instance};
use crate::program::{ConjunctiveQuery, Program, RuleId};
use crate::term::{Assignment, Atom, Symbol, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_steps: usize,
    pub max_atoms: usize,
}

impl Budget {
    pub fn steps(max_steps: usize) -> Budget {
        Budget {
            max_steps,
            max_atoms: usize::MAX,
        }
    }

    pub fn atoms(max_atoms: usize) -> Budget {
        Budget {
            max_steps: usize::MAX,
            max_atoms,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChaseError {
    InvalidBudget,
    InvalidBound,
}

impl fmt::Display for ChaseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChaseError::InvalidBudget => f.write_str("chase budget must be positive"),
            ChaseError::InvalidBound => f.write_str("step bound must be at least 1"),
        }
    }
}

impl core::error::Error for ChaseError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChaseStatus {
    Terminated,
    BudgetExhausted,
}

impl ChaseStatus {
    pub fn name(self) -> &'static str {
        match self {
            ChaseStatus::Terminated => "terminated",
            ChaseStatus::BudgetExhausted => "budget_exhausted",
        }
    }
}

impl fmt::Display for ChaseStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One applied (rule, assignment) pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChaseStep {
    pub rule: RuleId,
    /// Values of the body variables.
    pub assignment: Assignment,
    /// Body images, one per body atom.
    pub premises: Vec<AtomId>,
    pub atom: AtomId,
    pub level: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChaseTrace {
    pub steps: Vec<ChaseStep>,
    /// Level of every instance atom, by atom id.
    pub levels: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct ChaseResult {
    pub instance: Instance,
    pub status: ChaseStatus,
    pub trace: ChaseTrace,
}

struct Trigger {
    rule: usize,
    values: Vec<Term>,
    premises: Vec<AtomId>,
}

/// Runs the restricted chase. Pending pairs are dispatched by the highest
/// level among their premises, lowest first, and in discovery order within a level.
pub fn chase(program: &Program, budget: Budget) -> Result<ChaseResult, ChaseError> {
    if budget.max_steps == 0 || budget.max_atoms == 0 {
        return Err(ChaseError::InvalidBudget);
    }
    let rules: Vec<CompiledRule> = program.rules.iter().map(CompiledRule::new).collect();
    let mut inst = Instance::new();
    let mut trace = ChaseTrace::default();
    let mut queue: BTreeMap<usize, VecDeque<Trigger>> = BTreeMap::new();

    let enqueue = |inst: &Instance,
                   id: AtomId,
                   levels: &[usize],
                   queue: &mut BTreeMap<usize, VecDeque<Trigger>>| {
        discover(&rules, inst, id, &mut |rule, values, premises| {
            let level = premises.iter().map(|&p| levels[p]).max().unwrap_or(0);
            queue.entry(level).or_default().push_back(Trigger {
                rule,
                values,
                premises,
            });
        });
    };

    for f in &program.facts {
        let (id, new) = inst.insert(f.clone());
        if new {
            trace.levels.push(0);
            enqueue(&inst, id, &trace.levels, &mut queue);
        }
    }

    let mut status = ChaseStatus::Terminated;
    while let Some(mut entry) = queue.first_entry() {
        let level = *entry.key();
        let t = entry.get_mut().pop_front().unwrap();
        if entry.get().is_empty() {
            entry.remove();
        }
        let r = &rules[t.rule];
        if r.head_satisfied(&inst, &t.values) {
            continue;
        }
        if trace.steps.len() >= budget.max_steps || inst.len() >= budget.max_atoms {
            status = ChaseStatus::BudgetExhausted;
            break;
        }
        let fresh: Vec<Term> = (0..r.n_exist)
            .map(|_| Term::Null(inst.fresh_null()))
            .collect();
        let atom = r.head_atom(&t.values, &fresh);
        let (id, new) = inst.insert(atom);
        debug_assert!(new);
        trace.levels.push(level + 1);
        trace.steps.push(ChaseStep {
            rule: program.rules[t.rule].id,
            assignment: r.assignment(&t.values),
            premises: t.premises,
            atom: id,
            level: level + 1,
        });
        enqueue(&inst, id, &trace.levels, &mut queue);
    }

    Ok(ChaseResult {
        instance: inst,
        status,
        trace,
    })
}

/// Evaluates `query` over the chase; tuples with nulls are dropped.
/// The answers are complete only when the status is `Terminated`.
pub fn certain_answers_via_chase(
    program: &Program,
    query: &ConjunctiveQuery,
    budget: Budget,
) -> Result<(BTreeSet<Vec<Symbol>>, ChaseStatus), ChaseError> {
    let result = chase(program, budget)?;
    Ok((evaluate_query(query, &result.instance), result.status))
}

/// Premise-to-product pairs of a chase trace.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DerivationRelation {
    pub direct: BTreeSet<(AtomId, AtomId)>,
}

impl DerivationRelation {
    /// Atoms derived from `a` through one or more steps, ascending.
    pub fn descendants(&self, a: AtomId) -> BTreeSet<AtomId> {
        let mut children: BTreeMap<AtomId, Vec<AtomId>> = BTreeMap::new();
        for &(p, c) in &self.direct {
            children.entry(p).or_default().push(c);
        }
        let mut out = BTreeSet::new();
        let mut work = alloc::vec![a];
        while let Some(x) = work.pop() {
            for &c in children.get(&x).map(Vec::as_slice).unwrap_or(&[]) {
                if out.insert(c) {
                    work.push(c);
                }
            }
        }
        out
    }

    /// The transitive closure of the direct pairs.
    pub fn closure(&self) -> BTreeSet<(AtomId, AtomId)> {
        let sources: BTreeSet<AtomId> = self.direct.iter().map(|&(p, _)| p).collect();
        let mut out = BTreeSet::new();
        for s in sources {
            for d in self.descendants(s) {
                out.insert((s, d));
            }
        }
        out
    }
}

pub fn derivation_relation(trace: &ChaseTrace) -> DerivationRelation {
    let mut direct = BTreeSet::new();
    for s in &trace.steps {
        for &p in &s.premises {
            direct.insert((p, s.atom));
        }
    }
    DerivationRelation { direct }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StickinessVerdict {
    NoViolationUpTo(usize),
    Violation {
        /// 1-based step number.
        step: usize,
        rule: RuleId,
        variable: Symbol,
        value: Term,
        /// The produced atom or descendant lacking the value.
        missing: Atom,
    },
}

/// Runs `k` chase steps and looks for a repeated body variable, outside the
/// selected positions, whose value is lost by the produced atom or one of its
/// descendants. A violation is conclusive; its absence is not.
pub fn check_stickiness_bounded(
    program: &Program,
    k: usize,
    sel: SelectionFunctionId,
) -> Result<StickinessVerdict, ChaseError> {
    if k == 0 {
        return Err(ChaseError::InvalidBound);
    }
    let result = chase(program, Budget::steps(k))?;
    let selected = selection(&program.rules, sel);
    let derivations = derivation_relation(&result.trace);
    for (i, step) in result.trace.steps.iter().enumerate() {
        let rule = program.rule(step.rule).expect("trace names a program rule");
        for x in rule.body_vars() {
            let ps = rule.body_positions(&x);
            if ps.len() < 2 || ps.iter().any(|p| selected.contains(p)) {
                continue;
            }
            let value = step
                .assignment
                .get(&x)
                .expect("body variable is assigned")
                .clone();
            let lacking = core::iter::once(step.atom)
                .chain(derivations.descendants(step.atom))
                .find(|&d| !result.instance.get(d).args.contains(&value));
            if let Some(d) = lacking {
                return Ok(StickinessVerdict::Violation {
                    step: i + 1,
                    rule: rule.id,
                    variable: x,
                    value,
                    missing: result.instance.get(d).clone(),
                });
            }
        }
    }
    Ok(StickinessVerdict::NoViolationUpTo(k))
}
