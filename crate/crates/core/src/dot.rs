//! Graphviz output. Parallel edges are drawn once per vertex pair and
//! labelled with their multiplicity.

use std::fmt::Write as _;

use crate::graph::Graph;

pub(crate) fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn to_dot(g: &Graph) -> String {
    let mut out = String::from("digraph G {\n");
    for v in g.vertices() {
        writeln!(out, "  \"{}\";", escape(v.as_str())).unwrap();
    }
    for i in 0..g.len() {
        for j in g.successors(i) {
            writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                escape(g.vertex(i).as_str()),
                escape(g.vertex(j).as_str()),
                g.entry(i, j)
            )
            .unwrap();
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;

    #[test]
    fn bundled_edges() {
        let dot = to_dot(&g5());
        assert!(dot.contains("\"v\" -> \"w\" [label=\"∞\"];"));
        assert!(dot.contains("\"w\" -> \"w\" [label=\"1\"];"));
        assert_eq!(dot.matches("->").count(), 2);
    }
}
