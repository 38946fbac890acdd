//! Query answering by isomorphism-guarded saturation with freezing and resumptions.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;
use core::fmt;

use crate::classify::{check_class, selection, SelectionFunctionId, Witness};
use crate::engine::{discover, CompiledRule, HeadArg};
use crate::instance::{evaluate_query, iso_key, AtomId, Instance, IsoKey, KeyTerm};
use crate::program::{ConjunctiveQuery, Program, Rule, RuleId};
use crate::term::{Assignment, NullId, Position, Symbol, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SchqaEvent {
    Applied {
        rule: RuleId,
        assignment: Assignment,
        atom: AtomId,
    },
    Frozen(NullId),
    Resumption(usize),
}

#[derive(Clone, Debug)]
struct Pending {
    rule: usize,
    values: Vec<Term>,
    /// Freeze epoch at the last failed applicability test.
    checked_at: u64,
}

/// Everything SChQA knows between steps; resumable.
#[derive(Clone, Debug)]
pub struct SchqaState {
    pub instance: Instance,
    pub frozen: BTreeSet<NullId>,
    /// Applied pairs as (rule id, body values in first-occurrence order of the variables).
    pub applied: BTreeSet<(RuleId, Vec<Term>)>,
    pub resumptions_done: usize,
    pub selection_positions: BTreeSet<Position>,
    rules: Vec<Rule>,
    /// Existential rules fire once per frontier tuple.
    fired: BTreeSet<(usize, Vec<Term>)>,
    compiled: Vec<CompiledRule>,
    keys: BTreeMap<IsoKey, usize>,
    atoms_with_null: BTreeMap<NullId, Vec<AtomId>>,
    queue: VecDeque<Pending>,
    blocked: Vec<Pending>,
    epoch: u64,
    log: Option<Vec<SchqaEvent>>,
}

impl SchqaState {
    /// Seeds the instance with the facts of `program` (Step 1).
    pub fn new(program: &Program, selection_positions: BTreeSet<Position>) -> SchqaState {
        let mut state = SchqaState {
            instance: Instance::new(),
            frozen: BTreeSet::new(),
            applied: BTreeSet::new(),
            resumptions_done: 0,
            selection_positions,
            rules: program.rules.clone(),
            fired: BTreeSet::new(),
            compiled: program.rules.iter().map(CompiledRule::new).collect(),
            keys: BTreeMap::new(),
            atoms_with_null: BTreeMap::new(),
            queue: VecDeque::new(),
            blocked: Vec::new(),
            epoch: 0,
            log: None,
        };
        for f in &program.facts {
            state.add_atom(f.clone());
        }
        state
    }

    /// Starts recording applied pairs, freezes and resumptions.
    pub fn record_log(&mut self) {
        self.log.get_or_insert_with(Vec::new);
    }

    pub fn log(&self) -> &[SchqaEvent] {
        self.log.as_deref().unwrap_or(&[])
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    fn emit(&mut self, e: SchqaEvent) {
        if let Some(log) = &mut self.log {
            log.push(e);
        }
    }

    fn add_atom(&mut self, atom: crate::term::Atom) -> Option<AtomId> {
        let (id, new) = self.instance.insert(atom);
        if !new {
            return None;
        }
        let atom = self.instance.get(id).clone();
        *self.keys.entry(iso_key(&atom, &self.frozen)).or_insert(0) += 1;
        let mut seen = Vec::new();
        for n in atom.nulls() {
            if !seen.contains(&n) {
                seen.push(n);
                self.atoms_with_null.entry(n).or_default().push(id);
            }
        }
        // Step 3: freeze nulls sitting at selected positions.
        for (i, t) in atom.args.iter().enumerate() {
            if let Term::Null(n) = t {
                if self.selection_positions.contains(&atom.position(i)) {
                    self.freeze(*n);
                }
            }
        }
        let compiled = &self.compiled;
        let queue = &mut self.queue;
        discover(compiled, &self.instance, id, &mut |rule, values, _| {
            queue.push_back(Pending {
                rule,
                values,
                checked_at: 0,
            });
        });
        Some(id)
    }

    fn freeze(&mut self, n: NullId) {
        if self.frozen.contains(&n) {
            return;
        }
        let ids = self.atoms_with_null.get(&n).cloned().unwrap_or_default();
        for &id in &ids {
            let old = iso_key(self.instance.get(id), &self.frozen);
            if let Some(c) = self.keys.get_mut(&old) {
                *c -= 1;
                if *c == 0 {
                    self.keys.remove(&old);
                }
            }
        }
        self.frozen.insert(n);
        for &id in &ids {
            *self
                .keys
                .entry(iso_key(self.instance.get(id), &self.frozen))
                .or_insert(0) += 1;
        }
        self.epoch += 1;
        self.emit(SchqaEvent::Frozen(n));
    }

    /// Key of the head under `values` with fresh nulls for existential variables.
    fn candidate_key(&self, p: &Pending) -> IsoKey {
        let r = &self.compiled[p.rule];
        let mut seen: Vec<Option<NullId>> = Vec::new();
        let mut fresh_slot: Vec<Option<u32>> = alloc::vec![None; r.n_exist];
        let slot_of = |n: Option<NullId>, seen: &mut Vec<Option<NullId>>| -> u32 {
            match seen.iter().position(|m| *m == n) {
                Some(k) => k as u32,
                None => {
                    seen.push(n);
                    (seen.len() - 1) as u32
                }
            }
        };
        let args = r
            .head
            .iter()
            .map(|h| {
                let t = match h {
                    HeadArg::Fixed(t) => t,
                    HeadArg::Body(s) => &p.values[*s],
                    HeadArg::Exist(k) => {
                        let slot = match fresh_slot[*k] {
                            Some(s) => s,
                            None => {
                                // Fresh nulls are distinct from every existing null.
                                seen.push(None);
                                let s = (seen.len() - 1) as u32;
                                fresh_slot[*k] = Some(s);
                                s
                            }
                        };
                        return KeyTerm::Slot(slot);
                    }
                };
                match t {
                    Term::Null(n) if self.frozen.contains(n) => KeyTerm::Frozen(*n),
                    Term::Null(n) => KeyTerm::Slot(slot_of(Some(*n), &mut seen)),
                    Term::Const(c) | Term::Var(c) => KeyTerm::Const(c.clone()),
                }
            })
            .collect();
        (r.head_predicate.clone(), args)
    }

    fn frontier_key(&self, p: &Pending) -> Option<(usize, Vec<Term>)> {
        let r = &self.compiled[p.rule];
        (r.n_exist > 0).then(|| (p.rule, r.frontier_values(&p.values)))
    }

    fn already_fired(&self, p: &Pending) -> bool {
        self.frontier_key(p)
            .is_some_and(|k| self.fired.contains(&k))
    }

    fn is_applicable(&self, p: &Pending) -> bool {
        !self.already_fired(p) && !self.keys.contains_key(&self.candidate_key(p))
    }

    fn apply(&mut self, p: Pending) {
        let r = &self.compiled[p.rule];
        let mut fresh = Vec::with_capacity(r.n_exist);
        for _ in 0..r.n_exist {
            fresh.push(Term::Null(self.instance.fresh_null()));
        }
        let atom = r.head_atom(&p.values, &fresh);
        let rule_id = self.rules[p.rule].id;
        let assignment = r.assignment(&p.values);
        if let Some(k) = self.frontier_key(&p) {
            self.fired.insert(k);
        }
        self.applied.insert((rule_id, p.values));
        if let Some(id) = self.add_atom(atom) {
            self.emit(SchqaEvent::Applied {
                rule: rule_id,
                assignment,
                atom: id,
            });
        }
    }

    /// Applies pairs until none is applicable (Steps 2 to 4).
    pub fn saturate(&mut self) {
        loop {
            while let Some(mut p) = self.queue.pop_front() {
                if self.already_fired(&p) {
                    continue;
                }
                if self.is_applicable(&p) {
                    self.apply(p);
                } else {
                    p.checked_at = self.epoch;
                    self.blocked.push(p);
                }
            }
            // Freezing since a pair was blocked may have unblocked it.
            let mut still = Vec::new();
            for mut p in core::mem::take(&mut self.blocked) {
                if self.already_fired(&p) {
                    continue;
                }
                if p.checked_at < self.epoch && self.is_applicable(&p) {
                    self.queue.push_back(p);
                } else {
                    p.checked_at = self.epoch;
                    still.push(p);
                }
            }
            self.blocked = still;
            if self.queue.is_empty() {
                return;
            }
        }
    }

    /// Pairs applicable right now, in the order they would be tried.
    pub fn applicable_pairs(&self) -> Vec<(RuleId, Assignment)> {
        self.queue
            .iter()
            .chain(self.blocked.iter())
            .filter(|p| self.is_applicable(p))
            .map(|p| {
                (
                    self.rules[p.rule].id,
                    self.compiled[p.rule].assignment(&p.values),
                )
            })
            .collect()
    }

    /// Freezes every null, then saturates again; repeated `additional` times.
    pub fn resume(&mut self, additional: usize) {
        for _ in 0..additional {
            self.resumptions_done += 1;
            self.emit(SchqaEvent::Resumption(self.resumptions_done));
            for n in self.instance.null_ids() {
                self.freeze(n);
            }
            self.saturate();
        }
    }
}

/// Free-function form of [`SchqaState::resume`].
pub fn resume(mut state: SchqaState, additional: usize) -> SchqaState {
    state.resume(additional);
    state
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnswerSet {
    /// Constant tuples; a Boolean query that holds has the single empty tuple.
    pub tuples: BTreeSet<Vec<Symbol>>,
    pub boolean: bool,
    pub resumptions_used: usize,
}

impl AnswerSet {
    /// For a Boolean query: whether it holds.
    pub fn holds(&self) -> bool {
        !self.tuples.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SchqaError {
    /// The rules are outside the class the selection function needs.
    PreconditionFailed {
        selection: SelectionFunctionId,
        witnesses: Vec<Witness>,
    },
}

impl fmt::Display for SchqaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchqaError::PreconditionFailed {
                selection,
                witnesses,
            } => {
                write!(
                    f,
                    "selection {} needs a {} program",
                    selection,
                    selection.required_class()
                )?;
                if let Some(w) = witnesses.first() {
                    write!(f, " (rule {}: {})", w.rule, w.reason)?;
                }
                Ok(())
            }
        }
    }
}

impl core::error::Error for SchqaError {}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SchqaOptions {
    /// Overrides the number of resumptions, which defaults to the count of query variables.
    pub resumptions: Option<usize>,
    /// Runs even if the program fails the class test for the selection.
    pub waive_precondition: bool,
    pub record_log: bool,
}

/// Answers `query` over `program`.
pub fn schqa(
    program: &Program,
    query: &ConjunctiveQuery,
    sel: SelectionFunctionId,
    options: SchqaOptions,
) -> Result<(AnswerSet, SchqaState), SchqaError> {
    if !options.waive_precondition {
        let (ok, witnesses) = check_class(&program.rules, sel.required_class());
        if !ok {
            return Err(SchqaError::PreconditionFailed {
                selection: sel,
                witnesses,
            });
        }
    }
    let mut state = SchqaState::new(program, selection(&program.rules, sel));
    if options.record_log {
        state.record_log();
    }
    state.saturate();
    let m = options
        .resumptions
        .unwrap_or_else(|| query.body_vars().len());
    state.resume(m);
    let answers = answer(&state, query);
    Ok((answers, state))
}

/// Evaluates `query` over the state's instance (Step 6).
pub fn answer(state: &SchqaState, query: &ConjunctiveQuery) -> AnswerSet {
    AnswerSet {
        tuples: evaluate_query(query, &state.instance),
        boolean: query.is_boolean(),
        resumptions_used: state.resumptions_done,
    }
}
