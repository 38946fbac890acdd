//! Text rendering of programs, instances and answers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use stickychase_core::term::write_constant;
use stickychase_core::{Atom, NullId, Program, Symbol, Term};

/// Renders facts, then rules. Rules split from one multi-atom head are
/// preceded by a `% from rule N` comment.
pub fn render_program(p: &Program) -> String {
    let mut out = String::new();
    for f in &p.facts {
        writeln!(out, "{}.", f).unwrap();
    }
    if !p.facts.is_empty() && !p.rules.is_empty() {
        out.push('\n');
    }
    let mut last_origin = None;
    for r in &p.rules {
        if let Some(o) = r.origin.filter(|_| r.origin != last_origin) {
            writeln!(out, "% from rule {}", o).unwrap();
        }
        last_origin = r.origin;
        writeln!(out, "{}", r).unwrap();
    }
    out
}

/// Renumbers nulls as ζ1, ζ2, ... in order of first appearance.
#[derive(Debug, Default)]
pub struct NullNames {
    map: BTreeMap<NullId, u32>,
}

impl NullNames {
    pub fn new() -> NullNames {
        NullNames::default()
    }

    /// Registers the nulls of `atoms` in order.
    pub fn scan<'a>(&mut self, atoms: impl IntoIterator<Item = &'a Atom>) {
        for a in atoms {
            for n in a.nulls() {
                let next = self.map.len() as u32 + 1;
                self.map.entry(n).or_insert(next);
            }
        }
    }

    pub fn term(&mut self, t: &Term) -> String {
        match t {
            Term::Null(n) => {
                let next = self.map.len() as u32 + 1;
                format!("ζ{}", self.map.entry(*n).or_insert(next))
            }
            Term::Const(c) => constant(c),
            Term::Var(v) => v.to_string(),
        }
    }

    pub fn atom(&mut self, a: &Atom) -> String {
        if a.args.is_empty() {
            return a.predicate.to_string();
        }
        let args: Vec<String> = a.args.iter().map(|t| self.term(t)).collect();
        format!("{}({})", a.predicate, args.join(","))
    }
}

pub fn constant(c: &Symbol) -> String {
    let mut s = String::new();
    write_constant(&mut s, c).unwrap();
    s
}

/// One answer tuple as comma-separated constants.
pub fn tuple(t: &[Symbol]) -> String {
    t.iter().map(constant).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renumbers_by_first_appearance() {
        let atoms = [
            Atom::new("r", vec![Term::null(7), Term::null(3)]),
            Atom::new("r", vec![Term::null(3), Term::constant("a b")]),
        ];
        let mut names = NullNames::new();
        names.scan(&atoms);
        assert_eq!(names.atom(&atoms[0]), "r(ζ1,ζ2)");
        assert_eq!(names.atom(&atoms[1]), "r(ζ2,\"a b\")");
    }
}
