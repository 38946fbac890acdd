//! Test helpers: a terse term syntax, random program generators and
//! brute-force oracles that share no code with the library algorithms.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use stickychase_core::{
    is_jws, is_weakly_acyclic, make_program, Assignment, Atom, ConjunctiveQuery, Position, Program,
    Rule, Symbol, Term,
};

pub use rand::SeedableRng;

/// Fixed-seed proptest configuration so runs are reproducible.
pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases: n,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x57c4_a5e0),
        failure_persistence: None,
        ..proptest::test_runner::Config::default()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn term(s: &str) -> Term {
    let s = s.trim();
    match s.chars().next() {
        Some(c) if c.is_ascii_uppercase() || c == '_' => Term::var(s),
        Some('ζ') => Term::null(s['ζ'.len_utf8()..].parse().expect("null id")),
        _ => Term::constant(s),
    }
}

/// `p(X,a)`; bare `p` is 0-ary; `ζ3` is a null.
pub fn atom(s: &str) -> Atom {
    let s = s.trim();
    match s.find('(') {
        None => Atom::new(s, vec![]),
        Some(i) => {
            let inner = s[i + 1..].strip_suffix(')').expect("closing paren");
            let args = if inner.trim().is_empty() {
                vec![]
            } else {
                inner.split(',').map(term).collect()
            };
            Atom::new(&s[..i], args)
        }
    }
}

/// Comma-separated atoms.
pub fn atoms(s: &str) -> Vec<Atom> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(atom(&s[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    if !s[start..].trim().is_empty() {
        out.push(atom(&s[start..]));
    }
    out
}

/// `body -> head`; head variables missing from the body are existential.
pub fn rule(id: usize, s: &str) -> Rule {
    let (b, h) = s.split_once("->").expect("arrow");
    Rule::new(id, atoms(b), atom(h))
}

/// Rules numbered from 1.
pub fn rules(src: &[&str]) -> Vec<Rule> {
    src.iter()
        .enumerate()
        .map(|(i, s)| rule(i + 1, s))
        .collect()
}

pub fn program(src: &[&str], facts: &str) -> Program {
    make_program(rules(src), atoms(facts)).expect("valid program")
}

pub fn query(answer: &[&str], body: &str) -> ConjunctiveQuery {
    ConjunctiveQuery::new(
        answer.iter().map(|v| Symbol::from(*v)).collect(),
        atoms(body),
    )
    .expect("valid query")
}

pub fn sym(s: &str) -> Symbol {
    Symbol::from(s)
}

pub fn pos(p: &str, i: usize) -> Position {
    Position::of(p, i)
}

pub fn tuples(rows: &[&[&str]]) -> BTreeSet<Vec<Symbol>> {
    rows.iter()
        .map(|r| r.iter().map(|c| sym(c)).collect())
        .collect()
}

// Worked examples used across test files.

pub const EXAMPLE1: [&str; 2] = ["r(X,Y) -> r(Y,Z)", "r(X,Y), r(Y,Z) -> s(X,Y,Z)"];
pub const P1: [&str; 3] = [
    "r(X,Y), r(Y,Z) -> p(Y,Z)",
    "p(X,Y) -> s(X,Y,Z)",
    "s(X,Y,Z) -> u(Y)",
];
pub const P2: [&str; 2] = ["r(X,Y), r(Y,Z) -> p(Y,Z)", "p(X,Y) -> s(X,Y,Z)"];
pub const EXAMPLE5: [&str; 3] = [
    "r(X,Y), p(X,Z) -> s(X,Y,Z)",
    "s(X,Y,Z) -> u(Y)",
    "u(X) -> r(Y,X)",
];
pub const EXAMPLE8: [&str; 2] = ["u(Y), r(X,Y) -> r(Y,Z)", "r(X1,Y1), r(Y1,Z1) -> p(X1,Z1)"];
pub const EXAMPLE9: [&str; 3] = [
    "s(X,Y,Z) -> s(Y,Z,W)",
    "u(X) -> s(X,Y,Z)",
    "s(X,Y,Z), v(X), s(Y,Z,W) -> p(Y,Z)",
];
pub const EXAMPLE9_FACTS: &str = "s(a,b,c), v(b), u(c)";
pub const EXAMPLE13: [&str; 3] = [
    "r(X,Y) -> r(Y,Z)",
    "r(X,Y) -> r(Z,X)",
    "r(X,Y), r(Y,Z), v(Y) -> r(Y,X)",
];

// Random programs.

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub max_rules: usize,
    pub n_preds: usize,
    pub max_arity: usize,
    pub max_body: usize,
    pub exist_prob: f64,
    pub const_prob: f64,
    pub max_facts: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_rules: 6,
            n_preds: 4,
            max_arity: 3,
            max_body: 3,
            exist_prob: 0.25,
            const_prob: 0.05,
            max_facts: 8,
        }
    }
}

const VARS: [&str; 4] = ["X", "Y", "Z", "W"];
const CONSTS: [&str; 4] = ["a", "b", "c", "d"];

pub fn gen_schema(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Vec<(String, usize)> {
    (0..cfg.n_preds)
        .map(|i| (format!("p{}", i), rng.gen_range(1..=cfg.max_arity)))
        .collect()
}

pub fn gen_rules_with(
    rng: &mut ChaCha8Rng,
    cfg: &GenConfig,
    schema: &[(String, usize)],
) -> Vec<Rule> {
    let n = rng.gen_range(1..=cfg.max_rules);
    let mut out = Vec::new();
    for id in 1..=n {
        let body_len = rng.gen_range(1..=cfg.max_body);
        let mut body = Vec::new();
        for _ in 0..body_len {
            let (p, k) = schema.choose(rng).unwrap();
            let args = (0..*k)
                .map(|_| {
                    if rng.gen_bool(cfg.const_prob) {
                        Term::constant(CONSTS[rng.gen_range(0..2)])
                    } else {
                        Term::var(VARS[rng.gen_range(0..VARS.len())])
                    }
                })
                .collect();
            body.push(Atom::new(p, args));
        }
        let body_vars: Vec<Symbol> = {
            let mut v: Vec<Symbol> = Vec::new();
            for a in &body {
                for x in a.vars() {
                    if !v.contains(&x) {
                        v.push(x);
                    }
                }
            }
            v
        };
        let (p, k) = schema.choose(rng).unwrap();
        let args = (0..*k)
            .map(|_| {
                if body_vars.is_empty() || rng.gen_bool(cfg.exist_prob) {
                    Term::var(["E1", "E2"][rng.gen_range(0..2)])
                } else {
                    Term::Var(body_vars.choose(rng).unwrap().clone())
                }
            })
            .collect();
        out.push(Rule::new(id, body, Atom::new(p, args)));
    }
    out
}

pub fn gen_facts(rng: &mut ChaCha8Rng, cfg: &GenConfig, schema: &[(String, usize)]) -> Vec<Atom> {
    let n = rng.gen_range(0..=cfg.max_facts);
    (0..n)
        .map(|_| {
            let (p, k) = schema.choose(rng).unwrap();
            Atom::new(
                p,
                (0..*k)
                    .map(|_| Term::constant(CONSTS[rng.gen_range(0..CONSTS.len())]))
                    .collect(),
            )
        })
        .collect()
}

pub fn gen_program(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Program {
    let schema = gen_schema(rng, cfg);
    let rules = gen_rules_with(rng, cfg, &schema);
    let facts = gen_facts(rng, cfg, &schema);
    make_program(rules, facts).expect("generated programs are valid")
}

/// Rejection-samples a weakly acyclic program.
pub fn gen_wa_program(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Program {
    loop {
        let p = gen_program(rng, cfg);
        if is_weakly_acyclic(&p.rules).0 {
            return p;
        }
    }
}

/// Rejection-samples a JWS program that has at least one existential rule.
pub fn gen_jws_program(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> Program {
    loop {
        let p = gen_program(rng, cfg);
        if p.rules.iter().any(|r| !r.existential_vars.is_empty()) && is_jws(&p.rules).0 {
            return p;
        }
    }
}

/// A query of up to `max_atoms` atoms over the program's predicates.
pub fn gen_query(
    rng: &mut ChaCha8Rng,
    p: &Program,
    max_atoms: usize,
    const_prob: f64,
) -> ConjunctiveQuery {
    let schema: Vec<(&Symbol, &usize)> = p.schema.iter().collect();
    loop {
        let n = rng.gen_range(1..=max_atoms);
        let body: Vec<Atom> = (0..n)
            .map(|_| {
                let (pred, k) = schema.choose(rng).unwrap();
                let args = (0..**k)
                    .map(|_| {
                        if rng.gen_bool(const_prob) {
                            Term::constant(CONSTS[rng.gen_range(0..CONSTS.len())])
                        } else {
                            Term::var(["Q1", "Q2", "Q3"][rng.gen_range(0..3)])
                        }
                    })
                    .collect();
                Atom::new(pred, args)
            })
            .collect();
        let mut vars: Vec<Symbol> = Vec::new();
        for a in &body {
            for v in a.vars() {
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
        }
        let answer: Vec<Symbol> = vars.into_iter().filter(|_| rng.gen_bool(0.5)).collect();
        if let Ok(q) = ConjunctiveQuery::new(answer, body) {
            return q;
        }
    }
}

/// An atomic query with exactly one constant when the arity allows it.
pub fn gen_atomic_query(rng: &mut ChaCha8Rng, p: &Program) -> ConjunctiveQuery {
    let schema: Vec<(&Symbol, &usize)> = p.schema.iter().collect();
    let (pred, k) = schema.choose(rng).unwrap();
    let c = rng.gen_range(0..**k);
    let args: Vec<Term> = (0..**k)
        .map(|i| {
            if i == c {
                Term::constant(CONSTS[rng.gen_range(0..CONSTS.len())])
            } else {
                Term::var(["Q1", "Q2", "Q3"][i % 3])
            }
        })
        .collect();
    let body = vec![Atom::new(pred, args)];
    let answer = body[0].vars();
    ConjunctiveQuery::new(answer, body).unwrap()
}

// Oracles.

/// Every total map from the conjunction's variables into the instance's terms
/// that sends each conjunct into the instance.
pub fn brute_homomorphisms(conj: &[Atom], inst: &[Atom]) -> BTreeSet<Assignment> {
    let mut vars: Vec<Symbol> = Vec::new();
    for a in conj {
        for v in a.vars() {
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
    }
    let domain: Vec<Term> = inst
        .iter()
        .flat_map(|a| a.args.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let set: BTreeSet<&Atom> = inst.iter().collect();
    let mut out = BTreeSet::new();
    if domain.is_empty() && !vars.is_empty() {
        return out;
    }
    let mut idx = vec![0usize; vars.len()];
    loop {
        let mut theta = Assignment::new();
        for (v, &i) in vars.iter().zip(&idx) {
            theta.insert(v.clone(), domain[i].clone());
        }
        let ok = conj.iter().all(|a| {
            let img = Atom {
                predicate: a.predicate.clone(),
                args: a
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) => theta.get(v).unwrap().clone(),
                        t => t.clone(),
                    })
                    .collect(),
            };
            set.contains(&img)
        });
        if ok {
            out.insert(theta);
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < domain.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Backtracking matcher over a plain atom list; `fuel` bounds the candidates tried.
fn naive_matches(
    conj: &[Atom],
    inst: &[Atom],
    theta: &mut BTreeMap<Symbol, Term>,
    out: &mut Vec<BTreeMap<Symbol, Term>>,
    fuel: &mut usize,
) {
    let Some((first, rest)) = conj.split_first() else {
        out.push(theta.clone());
        return;
    };
    for cand in inst {
        if *fuel == 0 {
            return;
        }
        *fuel -= 1;
        if cand.predicate != first.predicate || cand.args.len() != first.args.len() {
            continue;
        }
        let mut added = Vec::new();
        let mut ok = true;
        for (t, v) in first.args.iter().zip(&cand.args) {
            match t {
                Term::Var(x) => match theta.get(x) {
                    Some(w) if w != v => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        theta.insert(x.clone(), v.clone());
                        added.push(x.clone());
                    }
                },
                t if t != v => {
                    ok = false;
                    break;
                }
                _ => {}
            }
        }
        if ok {
            naive_matches(rest, inst, theta, out, fuel);
        }
        for x in added {
            theta.remove(&x);
        }
    }
}

/// Oblivious chase, round by round; `None` when it grows past `max_atoms`
/// or the matcher runs out of fuel.
pub fn oblivious_chase(p: &Program, max_atoms: usize) -> Option<Vec<Atom>> {
    let mut fuel = 5_000_000usize;
    let mut inst: Vec<Atom> = Vec::new();
    let mut seen: BTreeSet<Atom> = BTreeSet::new();
    for f in &p.facts {
        if seen.insert(f.clone()) {
            inst.push(f.clone());
        }
    }
    let mut fired: BTreeSet<(usize, Vec<(Symbol, Term)>)> = BTreeSet::new();
    let mut next_null = 1_000_000u32;
    loop {
        let mut new_atoms = Vec::new();
        for (ri, r) in p.rules.iter().enumerate() {
            let mut ms = Vec::new();
            naive_matches(&r.body, &inst, &mut BTreeMap::new(), &mut ms, &mut fuel);
            if fuel == 0 {
                return None;
            }
            for m in ms {
                let key = (ri, m.clone().into_iter().collect::<Vec<_>>());
                if !fired.insert(key) {
                    continue;
                }
                let mut fresh: BTreeMap<Symbol, Term> = BTreeMap::new();
                let head = Atom {
                    predicate: r.head.predicate.clone(),
                    args: r
                        .head
                        .args
                        .iter()
                        .map(|t| match t {
                            Term::Var(v) => match m.get(v) {
                                Some(x) => x.clone(),
                                None => fresh
                                    .entry(v.clone())
                                    .or_insert_with(|| {
                                        next_null += 1;
                                        Term::null(next_null)
                                    })
                                    .clone(),
                            },
                            t => t.clone(),
                        })
                        .collect(),
                };
                new_atoms.push(head);
            }
        }
        if new_atoms.is_empty() {
            return Some(inst);
        }
        for a in new_atoms {
            if seen.insert(a.clone()) {
                inst.push(a);
            }
        }
        if inst.len() > max_atoms {
            return None;
        }
    }
}

/// Constant-only answers of `q` over a plain atom list.
pub fn naive_answers(q: &ConjunctiveQuery, inst: &[Atom]) -> BTreeSet<Vec<Symbol>> {
    let mut ms = Vec::new();
    let mut fuel = usize::MAX;
    naive_matches(&q.body, inst, &mut BTreeMap::new(), &mut ms, &mut fuel);
    let mut out = BTreeSet::new();
    for m in ms {
        let row: Option<Vec<Symbol>> = q
            .answer_vars
            .iter()
            .map(|v| match m.get(v) {
                Some(Term::Const(c)) => Some(c.clone()),
                _ => None,
            })
            .collect();
        if let Some(row) = row {
            out.insert(row);
        }
    }
    out
}

/// Dependency-graph edges straight from the definition: (from, to, special).
pub fn oracle_dependency_edges(rules: &[Rule]) -> BTreeSet<(Position, Position, bool)> {
    let mut out = BTreeSet::new();
    for r in rules {
        let body_vars: BTreeSet<Symbol> = r.body.iter().flat_map(|a| a.vars()).collect();
        for (i, t) in r.head.args.iter().enumerate() {
            let Term::Var(x) = t else { continue };
            if !body_vars.contains(x) {
                continue;
            }
            for a in &r.body {
                for (j, s) in a.args.iter().enumerate() {
                    if s == t {
                        let from = Position::new(a.predicate.clone(), j + 1);
                        out.insert((
                            from.clone(),
                            Position::new(r.head.predicate.clone(), i + 1),
                            false,
                        ));
                        for (k, u) in r.head.args.iter().enumerate() {
                            if let Term::Var(z) = u {
                                if !body_vars.contains(z) {
                                    out.insert((
                                        from.clone(),
                                        Position::new(r.head.predicate.clone(), k + 1),
                                        true,
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Rank by dynamic programming over walks of bounded length: `None` is infinite.
///
/// A finite rank is at most the node count; an infinite one exceeds it on a
/// walk of length n^2 + 3n (reach a special cycle, go round it n+1 times, leave).
pub fn oracle_ranks(
    nodes: &BTreeSet<Position>,
    edges: &BTreeSet<(Position, Position, bool)>,
) -> BTreeMap<Position, Option<usize>> {
    let nodes: Vec<&Position> = nodes.iter().collect();
    let n = nodes.len();
    let idx: BTreeMap<&Position, usize> = nodes.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    // best[v]: most special edges on a walk of length <= k ending at v.
    let mut best = vec![0usize; n];
    for _ in 0..(n * n + 3 * n) {
        let mut next = best.clone();
        for (a, b, s) in edges {
            let cand = best[idx[a]] + usize::from(*s);
            let slot = &mut next[idx[b]];
            if cand > *slot {
                *slot = cand;
            }
        }
        best = next;
    }
    nodes
        .iter()
        .enumerate()
        .map(|(i, p)| ((*p).clone(), if best[i] > n { None } else { Some(best[i]) }))
        .collect()
}

/// Marking by repeating full passes until nothing changes.
pub fn oracle_marking(rules: &[Rule]) -> BTreeSet<(usize, Symbol)> {
    let mut marked: BTreeSet<(usize, Symbol)> = BTreeSet::new();
    for r in rules {
        let head_vars = r.head.vars();
        for a in &r.body {
            for v in a.vars() {
                if !head_vars.contains(&v) {
                    marked.insert((r.id, v));
                }
            }
        }
    }
    loop {
        let mut marked_pos: BTreeSet<Position> = BTreeSet::new();
        for r in rules {
            for a in &r.body {
                for (i, t) in a.args.iter().enumerate() {
                    if let Term::Var(v) = t {
                        if marked.contains(&(r.id, v.clone())) {
                            marked_pos.insert(Position::new(a.predicate.clone(), i + 1));
                        }
                    }
                }
            }
        }
        let before = marked.len();
        for r in rules {
            let body_vars: BTreeSet<Symbol> = r.body.iter().flat_map(|a| a.vars()).collect();
            for (i, t) in r.head.args.iter().enumerate() {
                if let Term::Var(v) = t {
                    if body_vars.contains(v)
                        && marked_pos.contains(&Position::new(r.head.predicate.clone(), i + 1))
                    {
                        marked.insert((r.id, v.clone()));
                    }
                }
            }
        }
        if marked.len() == before {
            return marked;
        }
    }
}

/// Null renaming test by search for a bijection.
pub fn same_up_to_null_renaming(a: &[Atom], b: &[Atom]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let sa: BTreeSet<&Atom> = a.iter().collect();
    let sb: BTreeSet<&Atom> = b.iter().collect();
    if sa.len() != sb.len() {
        return false;
    }
    let av: Vec<&Atom> = sa.into_iter().collect();
    let bv: Vec<&Atom> = sb.iter().copied().collect();
    fn go(
        i: usize,
        av: &[&Atom],
        bv: &[&Atom],
        used: &mut Vec<bool>,
        fwd: &mut BTreeMap<Term, Term>,
        bwd: &mut BTreeMap<Term, Term>,
    ) -> bool {
        if i == av.len() {
            return true;
        }
        for j in 0..bv.len() {
            if used[j] || av[i].predicate != bv[j].predicate || av[i].args.len() != bv[j].args.len()
            {
                continue;
            }
            let (f0, b0) = (fwd.clone(), bwd.clone());
            let mut ok = true;
            for (s, t) in av[i].args.iter().zip(&bv[j].args) {
                match (s, t) {
                    (Term::Null(_), Term::Null(_)) => {
                        if fwd.get(s).is_some_and(|x| x != t) || bwd.get(t).is_some_and(|x| x != s)
                        {
                            ok = false;
                            break;
                        }
                        fwd.insert(s.clone(), t.clone());
                        bwd.insert(t.clone(), s.clone());
                    }
                    _ if s == t => {}
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                used[j] = true;
                if go(i + 1, av, bv, used, fwd, bwd) {
                    return true;
                }
                used[j] = false;
            }
            *fwd = f0;
            *bwd = b0;
        }
        false
    }
    go(
        0,
        &av,
        &bv,
        &mut vec![false; bv.len()],
        &mut BTreeMap::new(),
        &mut BTreeMap::new(),
    )
}
