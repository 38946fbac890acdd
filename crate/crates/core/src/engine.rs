//! Compiled rules and delta-driven trigger discovery shared by the chase and SChQA.

use alloc::vec::Vec;

use crate::instance::{Arg, AtomId, Compiled, Instance, Pattern};
use crate::program::Rule;
use crate::term::{Assignment, Atom, Symbol, Term};

#[derive(Clone, Debug)]
pub(crate) enum HeadArg {
    Fixed(Term),
    Body(usize),
    Exist(usize),
}

#[derive(Clone, Debug)]
pub(crate) struct CompiledRule {
    pub body: Compiled,
    pub head_predicate: Symbol,
    pub head: Vec<HeadArg>,
    pub n_exist: usize,
}

impl CompiledRule {
    pub fn new(rule: &Rule) -> CompiledRule {
        let body = Compiled::new(&rule.body);
        let mut exist: Vec<Symbol> = Vec::new();
        let head = rule
            .head
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => match body.vars.iter().position(|w| w == v) {
                    Some(s) => HeadArg::Body(s),
                    None => {
                        let k = match exist.iter().position(|w| w == v) {
                            Some(k) => k,
                            None => {
                                exist.push(v.clone());
                                exist.len() - 1
                            }
                        };
                        HeadArg::Exist(k)
                    }
                },
                other => HeadArg::Fixed(other.clone()),
            })
            .collect();
        CompiledRule {
            body,
            head_predicate: rule.head.predicate.clone(),
            head,
            n_exist: exist.len(),
        }
    }

    pub fn assignment(&self, values: &[Term]) -> Assignment {
        let mut theta = Assignment::new();
        for (v, t) in self.body.vars.iter().zip(values) {
            theta.insert(v.clone(), t.clone());
        }
        theta
    }

    /// Values of the body variables that reach the head, in head order.
    pub fn frontier_values(&self, values: &[Term]) -> Vec<Term> {
        self.head
            .iter()
            .filter_map(|h| match h {
                HeadArg::Body(s) => Some(values[*s].clone()),
                _ => None,
            })
            .collect()
    }

    /// The head under the body values, with `fresh[k]` for the k-th existential variable.
    pub fn head_atom(&self, values: &[Term], fresh: &[Term]) -> Atom {
        Atom {
            predicate: self.head_predicate.clone(),
            args: self
                .head
                .iter()
                .map(|h| match h {
                    HeadArg::Fixed(t) => t.clone(),
                    HeadArg::Body(s) => values[*s].clone(),
                    HeadArg::Exist(k) => fresh[*k].clone(),
                })
                .collect(),
        }
    }

    /// True when some extension of the body values maps the head into `inst`.
    pub fn head_satisfied(&self, inst: &Instance, values: &[Term]) -> bool {
        let pattern = Pattern {
            predicate: self.head_predicate.clone(),
            args: self
                .head
                .iter()
                .map(|h| match h {
                    HeadArg::Fixed(t) => Arg::Fixed(t.clone()),
                    HeadArg::Body(s) => Arg::Fixed(values[*s].clone()),
                    HeadArg::Exist(k) => Arg::Slot(*k),
                })
                .collect(),
        };
        let probe = Compiled {
            atoms: alloc::vec![pattern],
            vars: (0..self.n_exist).map(|_| Symbol::from("")).collect(),
        };
        let mut found = false;
        let mut slots = Vec::new();
        probe.search(inst, &mut slots, None, &mut |_, _| {
            found = true;
            false
        });
        found
    }
}

/// Every body match of every rule whose newest premise is atom `id`,
/// by rule order, then pinned conjunct, then candidate order.
pub(crate) fn discover(
    rules: &[CompiledRule],
    inst: &Instance,
    id: AtomId,
    found: &mut dyn FnMut(usize, Vec<Term>, Vec<AtomId>),
) {
    let atom = inst.get(id);
    let mut slots = Vec::new();
    for (ri, r) in rules.iter().enumerate() {
        for (j, pat) in r.body.atoms.iter().enumerate() {
            if pat.predicate != atom.predicate || pat.args.len() != atom.args.len() {
                continue;
            }
            slots.clear();
            r.body
                .search(inst, &mut slots, Some((j, id)), &mut |s, premises| {
                    let values = s.iter().map(|t| t.clone().unwrap()).collect();
                    found(ri, values, premises.to_vec());
                    true
                });
        }
    }
}
