//! Dependency graph, position ranks and the existential dependency graph.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::program::{Rule, RuleId};
use crate::term::{Position, Symbol};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: Position,
    pub to: Position,
    pub special: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DependencyGraph {
    pub nodes: BTreeSet<Position>,
    pub edges: BTreeSet<Edge>,
}

/// Positions of every predicate occurring in `rules`.
pub fn rule_positions(rules: &[Rule]) -> BTreeSet<Position> {
    let mut out = BTreeSet::new();
    for r in rules {
        for a in r.body.iter().chain(core::iter::once(&r.head)) {
            for i in 0..a.arity() {
                out.insert(a.position(i));
            }
        }
    }
    out
}

pub fn build_dependency_graph(rules: &[Rule]) -> DependencyGraph {
    let mut edges = BTreeSet::new();
    for r in rules {
        let exist_targets: Vec<Position> = r
            .existential_vars
            .iter()
            .flat_map(|z| r.head_positions(z))
            .collect();
        for x in r.frontier() {
            let heads = r.head_positions(&x);
            for from in r.body_positions(&x) {
                for to in &heads {
                    edges.insert(Edge {
                        from: from.clone(),
                        to: to.clone(),
                        special: false,
                    });
                }
                for to in &exist_targets {
                    edges.insert(Edge {
                        from: from.clone(),
                        to: to.clone(),
                        special: true,
                    });
                }
            }
        }
    }
    DependencyGraph {
        nodes: rule_positions(rules),
        edges,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rank {
    Finite(usize),
    Infinite,
}

impl Rank {
    pub fn is_finite(self) -> bool {
        matches!(self, Rank::Finite(_))
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rank::Finite(n) => write!(f, "{}", n),
            Rank::Infinite => f.write_str("INFINITE"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RankTable {
    pub ranks: BTreeMap<Position, Rank>,
}

impl RankTable {
    pub fn get(&self, p: &Position) -> Option<Rank> {
        self.ranks.get(p).copied()
    }

    /// The finite-rank positions.
    pub fn finite(&self) -> BTreeSet<Position> {
        self.ranks
            .iter()
            .filter(|(_, r)| r.is_finite())
            .map(|(p, _)| p.clone())
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.ranks.values().all(|r| r.is_finite())
    }
}

/// Strongly connected components of a graph on `0..n`.
///
/// Components are numbered in the order Tarjan's algorithm completes them, so
/// every edge between distinct components goes from a higher to a lower number.
pub(crate) fn scc(n: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    // Explicit call stack of (node, next child offset).
    let mut calls: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        calls.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&(v, child)) = calls.last() {
            if let Some(&w) = adj[v].get(child) {
                calls.last_mut().unwrap().1 += 1;
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    calls.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            calls.pop();
            if let Some(&(parent, _)) = calls.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                while let Some(w) = stack.pop() {
                    on_stack[w] = false;
                    comp[w] = next_comp;
                    if w == v {
                        break;
                    }
                }
                next_comp += 1;
            }
        }
    }
    comp
}

/// Ranks every node of `g`.
pub fn finite_rank_positions(g: &DependencyGraph) -> RankTable {
    let nodes: Vec<&Position> = g.nodes.iter().collect();
    let idx: BTreeMap<&Position, usize> = nodes.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let n = nodes.len();
    let mut adj = vec![Vec::new(); n];
    let mut incoming: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    for e in &g.edges {
        let (Some(&u), Some(&v)) = (idx.get(&e.from), idx.get(&e.to)) else {
            continue;
        };
        adj[u].push(v);
        incoming[v].push((u, e.special));
    }
    let comp = scc(n, &adj);
    let ncomp = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut members = vec![Vec::new(); ncomp];
    for (v, &c) in comp.iter().enumerate() {
        members[c].push(v);
    }
    let mut infinite = vec![false; ncomp];
    let mut rank = vec![0usize; ncomp];
    // Highest component number first is a topological order of the condensation.
    for c in (0..ncomp).rev() {
        for &v in &members[c] {
            for &(u, special) in &incoming[v] {
                let cu = comp[u];
                if cu == c {
                    if special {
                        infinite[c] = true;
                    }
                } else if infinite[cu] {
                    infinite[c] = true;
                } else {
                    rank[c] = rank[c].max(rank[cu] + usize::from(special));
                }
            }
        }
    }
    let ranks = nodes
        .iter()
        .enumerate()
        .map(|(v, p)| {
            let c = comp[v];
            let r = if infinite[c] {
                Rank::Infinite
            } else {
                Rank::Finite(rank[c])
            };
            ((*p).clone(), r)
        })
        .collect();
    RankTable { ranks }
}

/// An existential variable identified by its rule.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExVar {
    pub rule: RuleId,
    pub var: Symbol,
}

impl fmt::Display for ExVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.var, self.rule)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExistentialDependencyGraph {
    pub nodes: BTreeSet<ExVar>,
    pub edges: BTreeSet<(ExVar, ExVar)>,
    pub targets: BTreeMap<ExVar, BTreeSet<Position>>,
}

impl ExistentialDependencyGraph {
    /// Nodes lying on some cycle, self-loops included.
    pub fn cyclic_nodes(&self) -> BTreeSet<ExVar> {
        let nodes: Vec<&ExVar> = self.nodes.iter().collect();
        let idx: BTreeMap<&ExVar, usize> = nodes.iter().enumerate().map(|(i, z)| (*z, i)).collect();
        let mut adj = vec![Vec::new(); nodes.len()];
        let mut self_loop = vec![false; nodes.len()];
        for (a, b) in &self.edges {
            let (u, v) = (idx[a], idx[b]);
            adj[u].push(v);
            if u == v {
                self_loop[u] = true;
            }
        }
        let comp = scc(nodes.len(), &adj);
        let mut size = BTreeMap::new();
        for &c in &comp {
            *size.entry(c).or_insert(0usize) += 1;
        }
        nodes
            .iter()
            .enumerate()
            .filter(|(v, _)| self_loop[*v] || size[&comp[*v]] > 1)
            .map(|(_, z)| (*z).clone())
            .collect()
    }
}

/// Body and head positions of one (rule, variable) pair.
struct VarSpan {
    body: BTreeSet<Position>,
    head: BTreeSet<Position>,
}

fn var_spans(rules: &[Rule]) -> Vec<(RuleId, Vec<(Symbol, VarSpan)>)> {
    rules
        .iter()
        .map(|r| {
            let spans = r
                .body_vars()
                .into_iter()
                .map(|x| {
                    let span = VarSpan {
                        body: r.body_positions(&x).into_iter().collect(),
                        head: r.head_positions(&x).into_iter().collect(),
                    };
                    (x, span)
                })
                .collect();
            (r.id, spans)
        })
        .collect()
}

/// The least set containing `seed` and closed under adding H(X) whenever B(X) is inside it.
fn target_closure(
    seed: BTreeSet<Position>,
    spans: &[(RuleId, Vec<(Symbol, VarSpan)>)],
) -> BTreeSet<Position> {
    let mut t = seed;
    loop {
        let mut grew = false;
        for (_, vars) in spans {
            for (_, s) in vars {
                if !s.head.is_subset(&t) && s.body.is_subset(&t) {
                    t.extend(s.head.iter().cloned());
                    grew = true;
                }
            }
        }
        if !grew {
            return t;
        }
    }
}

/// Builds the existential dependency graph. Variables are scoped per rule,
/// which standardizes the rules apart.
pub fn build_edg(rules: &[Rule]) -> ExistentialDependencyGraph {
    let spans = var_spans(rules);
    let mut g = ExistentialDependencyGraph::default();
    for r in rules {
        for z in &r.existential_vars {
            let zv = ExVar {
                rule: r.id,
                var: z.clone(),
            };
            let seed = r.head_positions(z).into_iter().collect();
            g.targets.insert(zv.clone(), target_closure(seed, &spans));
            g.nodes.insert(zv);
        }
    }
    for (z, t) in &g.targets {
        for r in rules {
            if r.existential_vars.is_empty() {
                continue;
            }
            let (_, vars) = spans.iter().find(|(id, _)| *id == r.id).unwrap();
            if vars.iter().any(|(_, s)| s.body.is_subset(t)) {
                for z2 in &r.existential_vars {
                    g.edges.insert((
                        z.clone(),
                        ExVar {
                            rule: r.id,
                            var: z2.clone(),
                        },
                    ));
                }
            }
        }
    }
    g
}

/// Positions outside the targets of every existential variable on an EDG cycle.
pub fn finite_existential_positions(rules: &[Rule]) -> BTreeSet<Position> {
    let g = build_edg(rules);
    let mut out = rule_positions(rules);
    for z in g.cyclic_nodes() {
        for p in &g.targets[&z] {
            out.remove(p);
        }
    }
    out
}
