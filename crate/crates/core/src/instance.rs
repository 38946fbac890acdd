//! Ground instances, homomorphism search and atom isomorphism.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::program::ConjunctiveQuery;
use crate::term::{Assignment, Atom, NullId, Symbol, Term};

/// Index of an atom in its instance; ids grow with insertion order.
pub type AtomId = usize;

/// A deduplicated set of ground atoms kept in insertion order.
#[derive(Clone, Debug, Default)]
pub struct Instance {
    atoms: Vec<Atom>,
    lookup: BTreeMap<Atom, AtomId>,
    by_pred: BTreeMap<Symbol, Vec<AtomId>>,
    by_arg: BTreeMap<(Symbol, usize, Term), Vec<AtomId>>,
    next_null: u32,
}

impl Instance {
    pub fn new() -> Instance {
        Instance {
            next_null: 1,
            ..Instance::default()
        }
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> Instance {
        let mut inst = Instance::new();
        for a in atoms {
            inst.insert(a);
        }
        inst
    }

    /// Inserts a ground atom. Returns its id and whether it was new.
    ///
    /// # Panics
    /// If the atom contains a variable.
    pub fn insert(&mut self, atom: Atom) -> (AtomId, bool) {
        assert!(atom.is_ground(), "instance atoms must be ground: {}", atom);
        if let Some(&id) = self.lookup.get(&atom) {
            return (id, false);
        }
        let id = self.atoms.len();
        for n in atom.nulls() {
            if n.0 >= self.next_null {
                self.next_null = n.0 + 1;
            }
        }
        self.by_pred
            .entry(atom.predicate.clone())
            .or_default()
            .push(id);
        for (i, t) in atom.args.iter().enumerate() {
            self.by_arg
                .entry((atom.predicate.clone(), i, t.clone()))
                .or_default()
                .push(id);
        }
        self.lookup.insert(atom.clone(), id);
        self.atoms.push(atom);
        (id, true)
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.lookup.contains_key(atom)
    }

    pub fn id_of(&self, atom: &Atom) -> Option<AtomId> {
        self.lookup.get(atom).copied()
    }

    pub fn get(&self, id: AtomId) -> &Atom {
        &self.atoms[id]
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Atoms in insertion order.
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter()
    }

    /// Ids of the atoms of `predicate`, ascending.
    pub fn atoms_of(&self, predicate: &str) -> &[AtomId] {
        self.by_pred
            .get(predicate)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    fn atoms_with(&self, predicate: &Symbol, index: usize, term: &Term) -> &[AtomId] {
        // Avoids building a key tuple when the predicate is unknown.
        if !self.by_pred.contains_key(predicate) {
            return &[];
        }
        self.by_arg
            .get(&(predicate.clone(), index, term.clone()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// A null id never used in this instance so far.
    pub fn fresh_null(&mut self) -> NullId {
        let id = NullId(self.next_null);
        self.next_null += 1;
        id
    }

    /// All null ids occurring in the instance.
    pub fn null_ids(&self) -> BTreeSet<NullId> {
        self.atoms.iter().flat_map(|a| a.nulls()).collect()
    }
}

impl PartialEq for Instance {
    fn eq(&self, other: &Instance) -> bool {
        self.atoms == other.atoms
    }
}

impl Eq for Instance {}

#[derive(Clone, Debug)]
pub(crate) enum Arg {
    Fixed(Term),
    Slot(usize),
}

#[derive(Clone, Debug)]
pub(crate) struct Pattern {
    pub predicate: Symbol,
    pub args: Vec<Arg>,
}

/// A conjunction with variables replaced by slot numbers.
#[derive(Clone, Debug)]
pub(crate) struct Compiled {
    pub atoms: Vec<Pattern>,
    /// Variable of each slot, in order of first occurrence.
    pub vars: Vec<Symbol>,
}

/// Callback receiving variable slots and premise ids of one match.
pub type Visitor<'a> = dyn FnMut(&[Option<Term>], &[AtomId]) -> bool + 'a;

impl Compiled {
    pub fn new(conj: &[Atom]) -> Compiled {
        Compiled::with_vars(conj, Vec::new())
    }

    /// Compiles with `vars` pre-assigned to the first slots.
    pub fn with_vars(conj: &[Atom], mut vars: Vec<Symbol>) -> Compiled {
        let mut atoms = Vec::with_capacity(conj.len());
        for a in conj {
            let mut args = Vec::with_capacity(a.args.len());
            for t in &a.args {
                match t {
                    Term::Var(v) => {
                        let slot = match vars.iter().position(|w| w == v) {
                            Some(s) => s,
                            None => {
                                vars.push(v.clone());
                                vars.len() - 1
                            }
                        };
                        args.push(Arg::Slot(slot));
                    }
                    other => args.push(Arg::Fixed(other.clone())),
                }
            }
            atoms.push(Pattern {
                predicate: a.predicate.clone(),
                args,
            });
        }
        Compiled { atoms, vars }
    }

    pub fn assignment(&self, slots: &[Option<Term>]) -> Assignment {
        let mut theta = Assignment::new();
        for (v, t) in self.vars.iter().zip(slots) {
            if let Some(t) = t {
                theta.insert(v.clone(), t.clone());
            }
        }
        theta
    }

    /// Enumerates matches depth-first: conjuncts left to right, candidates by ascending id.
    ///
    /// When `pin` is `Some((j, id))`, conjunct `j` may only match atom `id` and
    /// conjuncts before `j` may only match atoms with smaller ids and those after
    /// it atoms with ids up to `id`; this yields
    /// every match whose newest atom is `id` exactly once.
    /// `visit` returns false to stop the search.
    pub fn search(
        &self,
        inst: &Instance,
        slots: &mut Vec<Option<Term>>,
        pin: Option<(usize, AtomId)>,
        visit: &mut Visitor<'_>,
    ) -> bool {
        if slots.len() < self.vars.len() {
            slots.resize(self.vars.len(), None);
        }
        let mut premises = Vec::with_capacity(self.atoms.len());
        self.step(inst, 0, slots, &mut premises, pin, visit)
    }

    fn step(
        &self,
        inst: &Instance,
        depth: usize,
        slots: &mut Vec<Option<Term>>,
        premises: &mut Vec<AtomId>,
        pin: Option<(usize, AtomId)>,
        visit: &mut Visitor<'_>,
    ) -> bool {
        if depth == self.atoms.len() {
            return visit(slots, premises);
        }
        let pat = &self.atoms[depth];
        let pinned_one;
        let candidates: &[AtomId] = match pin {
            Some((j, id)) if j == depth => {
                pinned_one = [id];
                &pinned_one
            }
            _ => self.candidates(inst, pat, slots),
        };
        // Exclusive upper bound on candidate ids.
        let limit = match pin {
            Some((j, id)) if depth < j => Some(id),
            Some((j, id)) if depth > j => Some(id + 1),
            _ => None,
        };
        let mut bound = Vec::new();
        for &id in candidates {
            if limit.is_some_and(|l| id >= l) {
                break;
            }
            let atom = inst.get(id);
            if atom.predicate != pat.predicate || atom.args.len() != pat.args.len() {
                continue;
            }
            bound.clear();
            let mut ok = true;
            for (arg, t) in pat.args.iter().zip(&atom.args) {
                match arg {
                    Arg::Fixed(f) => {
                        if f != t {
                            ok = false;
                            break;
                        }
                    }
                    Arg::Slot(s) => match &slots[*s] {
                        Some(v) => {
                            if v != t {
                                ok = false;
                                break;
                            }
                        }
                        None => {
                            slots[*s] = Some(t.clone());
                            bound.push(*s);
                        }
                    },
                }
            }
            if ok {
                premises.push(id);
                let go_on = self.step(inst, depth + 1, slots, premises, pin, visit);
                premises.pop();
                if !go_on {
                    for &s in &bound {
                        slots[s] = None;
                    }
                    return false;
                }
            }
            for &s in &bound {
                slots[s] = None;
            }
        }
        true
    }

    fn candidates<'a>(
        &self,
        inst: &'a Instance,
        pat: &Pattern,
        slots: &[Option<Term>],
    ) -> &'a [AtomId] {
        let mut best: Option<&'a [AtomId]> = None;
        for (i, arg) in pat.args.iter().enumerate() {
            let term = match arg {
                Arg::Fixed(t) => Some(t),
                Arg::Slot(s) => slots[*s].as_ref(),
            };
            if let Some(t) = term {
                let list = inst.atoms_with(&pat.predicate, i, t);
                if best.is_none_or(|b| list.len() < b.len()) {
                    best = Some(list);
                }
            }
        }
        best.unwrap_or_else(|| inst.atoms_of(&pat.predicate))
    }
}

/// All assignments mapping every conjunct into `inst`, in deterministic order.
pub fn find_homomorphisms(conj: &[Atom], inst: &Instance) -> Vec<Assignment> {
    let compiled = Compiled::new(conj);
    let mut out = Vec::new();
    let mut slots = Vec::new();
    compiled.search(inst, &mut slots, None, &mut |s, _| {
        out.push(compiled.assignment(s));
        true
    });
    out
}

/// Answers of `query` over `inst`; tuples holding a null are dropped.
///
/// A Boolean query yields the empty tuple when it holds and nothing otherwise.
pub fn evaluate_query(query: &ConjunctiveQuery, inst: &Instance) -> BTreeSet<Vec<Symbol>> {
    let compiled = Compiled::with_vars(&query.body, query.answer_vars.clone());
    let n = query.answer_vars.len();
    let mut out = BTreeSet::new();
    let mut slots = Vec::new();
    compiled.search(inst, &mut slots, None, &mut |s, _| {
        let mut tuple = Vec::with_capacity(n);
        for t in &s[..n] {
            match t {
                Some(Term::Const(c)) => tuple.push(c.clone()),
                _ => return true,
            }
        }
        out.insert(tuple);
        // A Boolean query needs a single witness.
        n > 0
    });
    out
}

/// An argument of an atom's isomorphism class key.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KeyTerm {
    Const(Symbol),
    Frozen(NullId),
    /// The n-th distinct non-frozen null, by first occurrence.
    Slot(u32),
}

/// Key such that two atoms are isomorphic iff their keys are equal.
pub type IsoKey = (Symbol, Vec<KeyTerm>);

/// Computes the isomorphism key of `atom` given which nulls are frozen.
pub fn iso_key(atom: &Atom, frozen: &BTreeSet<NullId>) -> IsoKey {
    let mut seen: Vec<NullId> = Vec::new();
    let args = atom
        .args
        .iter()
        .map(|t| match t {
            Term::Null(n) if frozen.contains(n) => KeyTerm::Frozen(*n),
            Term::Null(n) => {
                let k = match seen.iter().position(|m| m == n) {
                    Some(k) => k,
                    None => {
                        seen.push(*n);
                        seen.len() - 1
                    }
                };
                KeyTerm::Slot(k as u32)
            }
            Term::Const(c) => KeyTerm::Const(c.clone()),
            Term::Var(v) => KeyTerm::Const(v.clone()),
        })
        .collect();
    (atom.predicate.clone(), args)
}

/// True when `a` and `b` have the same predicate and a bijection between their
/// non-frozen nulls, fixing constants and the nulls in `frozen`, maps one onto the other.
/// Pass an empty set for the plain (not frozen-aware) test.
pub fn atoms_isomorphic(a: &Atom, b: &Atom, frozen: &BTreeSet<NullId>) -> bool {
    a.arity() == b.arity() && iso_key(a, frozen) == iso_key(b, frozen)
}
