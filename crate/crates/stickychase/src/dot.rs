//! Graphviz export of the dependency graph.

use std::fmt::Write as _;

use stickychase_core::DependencyGraph;

/// Normal edges are solid, special edges dashed.
pub fn dependency_graph_dot(g: &DependencyGraph) -> String {
    let mut out = String::from("digraph dependency {\n");
    for n in &g.nodes {
        writeln!(out, "  \"{}\";", n).unwrap();
    }
    for e in &g.edges {
        let style = if e.special { " [style=dashed]" } else { "" };
        writeln!(out, "  \"{}\" -> \"{}\"{};", e.from, e.to, style).unwrap();
    }
    out.push_str("}\n");
    out
}
