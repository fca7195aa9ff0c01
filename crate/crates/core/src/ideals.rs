//! Admissible pairs `(H, S)`, the subgraphs they cut out, and the lattice
//! they form.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::ext_nat::ExtNat;
use crate::graph::{Graph, VertexSet};

/// Largest vertex count accepted by [`admissible_pairs`].
pub const DEFAULT_MAX_VERTICES: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AdmissiblePair {
    #[serde(rename = "H")]
    pub h: VertexSet,
    #[serde(rename = "S")]
    pub s: VertexSet,
}

impl AdmissiblePair {
    /// `(H₁,S₁) ≤ (H₂,S₂)` iff `H₁ ⊆ H₂` and `S₁ ⊆ H₂ ∪ S₂`.
    pub fn le(&self, other: &AdmissiblePair) -> bool {
        self.h.is_subset(&other.h) && self.s.iter().all(|v| other.h.contains(v) || other.s.contains(v))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdealLattice {
    pub nodes: Vec<AdmissiblePair>,
    /// Every `(i, j)` with `nodes[i] ≤ nodes[j]`.
    pub order: Vec<(usize, usize)>,
}

impl IdealLattice {
    pub fn le(&self, i: usize, j: usize) -> bool {
        self.nodes[i].le(&self.nodes[j])
    }

    /// Cover relations of the order.
    pub fn hasse_edges(&self) -> Vec<(usize, usize)> {
        self.order
            .iter()
            .copied()
            .filter(|&(i, j)| i != j)
            .filter(|&(i, j)| {
                !(0..self.nodes.len()).any(|k| k != i && k != j && self.le(i, k) && self.le(k, j))
            })
            .collect()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph ideals {\n  rankdir=BT;\n");
        for (i, p) in self.nodes.iter().enumerate() {
            let label = format!("H={}\\nS={}", set_label(&p.h), set_label(&p.s));
            writeln!(out, "  n{i} [label=\"{label}\"];").unwrap();
        }
        for (i, j) in self.hasse_edges() {
            writeln!(out, "  n{i} -> n{j};").unwrap();
        }
        out.push_str("}\n");
        out
    }
}

fn set_label(s: &VertexSet) -> String {
    let names: Vec<String> = s.iter().map(|v| super::dot::escape(v.as_str())).collect();
    format!("{{{}}}", names.join(","))
}

/// Successor sets as bitmasks.
fn successor_masks(g: &Graph) -> Vec<u64> {
    (0..g.len()).map(|v| g.successors(v).fold(0u64, |m, w| m | (1 << w))).collect()
}

fn mask_of(g: &Graph, set: &VertexSet) -> Result<u64> {
    let mut m = 0u64;
    for v in set {
        m |= 1 << g.index_of(v.as_str())?;
    }
    Ok(m)
}

fn set_of(g: &Graph, mask: u64) -> VertexSet {
    (0..g.len()).filter(|&i| mask >> i & 1 == 1).map(|i| g.vertex(i).clone()).collect()
}

fn is_hereditary(succ: &[u64], h: u64) -> bool {
    (0..succ.len()).all(|v| h >> v & 1 == 0 || succ[v] & !h == 0)
}

fn is_saturated(g: &Graph, succ: &[u64], h: u64) -> bool {
    (0..succ.len()).all(|v| h >> v & 1 == 1 || !g.is_regular(v) || succ[v] & !h != 0)
}

fn breaking_mask(g: &Graph, h: u64) -> u64 {
    let mut out = 0u64;
    for v in (0..g.len()).filter(|&v| g.is_infinite_emitter(v)) {
        let leaving: ExtNat = (0..g.len()).filter(|&w| h >> w & 1 == 0).map(|w| g.entry(v, w)).sum();
        if leaving.is_finite() && leaving.is_positive() {
            out |= 1 << v;
        }
    }
    out
}

fn check_size(g: &Graph, max_vertices: usize) -> Result<()> {
    if g.len() > max_vertices.min(63) {
        bail!(Domain, "{} vertices exceed the enumeration limit of {}", g.len(), max_vertices.min(63));
    }
    Ok(())
}

/// Infinite emitters emitting finitely, but at least once, outside `H`.
pub fn breaking_vertices(g: &Graph, h: &VertexSet) -> Result<VertexSet> {
    check_size(g, 63)?;
    let succ = successor_masks(g);
    let hm = mask_of(g, h)?;
    if !is_hereditary(&succ, hm) || !is_saturated(g, &succ, hm) {
        bail!(Domain, "H is not hereditary and saturated");
    }
    Ok(set_of(g, breaking_mask(g, hm)))
}

pub fn admissible_pairs(g: &Graph) -> Result<IdealLattice> {
    admissible_pairs_bounded(g, DEFAULT_MAX_VERTICES)
}

/// Enumerates every admissible pair by filtering all vertex subsets.
pub fn admissible_pairs_bounded(g: &Graph, max_vertices: usize) -> Result<IdealLattice> {
    check_size(g, max_vertices)?;
    let succ = successor_masks(g);
    let mut nodes = Vec::new();
    for h in 0..(1u64 << g.len()) {
        if !is_hereditary(&succ, h) || !is_saturated(g, &succ, h) {
            continue;
        }
        let b = breaking_mask(g, h);
        // Every submask of b, including b and 0.
        let mut s = b;
        loop {
            nodes.push(AdmissiblePair { h: set_of(g, h), s: set_of(g, s) });
            if s == 0 {
                break;
            }
            s = (s - 1) & b;
        }
    }
    nodes.sort_by(|a, b| (a.h.len() + a.s.len(), a).cmp(&(b.h.len() + b.s.len(), b)));
    let order = (0..nodes.len())
        .flat_map(|i| (0..nodes.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| nodes[i].le(&nodes[j]))
        .collect();
    Ok(IdealLattice { nodes, order })
}

/// The subgraph on `H ∪ S` with every edge out of `H` and the edges from
/// `S` into `H`.
pub fn restriction_graph(g: &Graph, pair: &AdmissiblePair) -> Result<Graph> {
    check_size(g, 63)?;
    let succ = successor_masks(g);
    let hm = mask_of(g, &pair.h)?;
    let sm = mask_of(g, &pair.s)?;
    if !is_hereditary(&succ, hm) || !is_saturated(g, &succ, hm) {
        bail!(Domain, "H is not hereditary and saturated");
    }
    if sm & !breaking_mask(g, hm) != 0 {
        bail!(Domain, "S contains a vertex that is not breaking for H");
    }
    let keep: Vec<usize> = (0..g.len()).filter(|&i| (hm | sm) >> i & 1 == 1).collect();
    let mut out = g.induced(&keep);
    for (a, &x) in keep.iter().enumerate() {
        if sm >> x & 1 == 1 {
            for (b, &y) in keep.iter().enumerate() {
                if hm >> y & 1 == 0 {
                    out.set(a, b, ExtNat::ZERO);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::graph::VertexId;

    fn set(names: &[&str]) -> VertexSet {
        names.iter().map(|&s| VertexId::from(s)).collect()
    }

    fn pair(h: &[&str], s: &[&str]) -> AdmissiblePair {
        AdmissiblePair { h: set(h), s: set(s) }
    }

    #[test]
    fn breaking_examples() {
        assert_eq!(breaking_vertices(&g5(), &set(&["w"])).unwrap(), set(&[]));
        let b = g(&["v", "w", "z"], &[&[0, I, 2], &[0, 1, 0], &[0, 0, 1]]);
        assert_eq!(breaking_vertices(&b, &set(&["w"])).unwrap(), set(&["v"]));
        assert_eq!(breaking_vertices(&b, &set(&["v", "w", "z"])).unwrap(), set(&[]));
        assert!(breaking_vertices(&g3(), &set(&["a"])).is_err());
    }

    #[test]
    fn pair_counts() {
        let l = admissible_pairs(&g3()).unwrap();
        assert_eq!(l.nodes, vec![pair(&[], &[]), pair(&["a", "b"], &[])]);
        let l = admissible_pairs(&g5()).unwrap();
        assert_eq!(l.nodes, vec![pair(&[], &[]), pair(&["w"], &[]), pair(&["v", "w"], &[])]);
        assert_eq!(admissible_pairs(&g1()).unwrap().nodes.len(), 2);

        let b = g(&["v", "w", "z"], &[&[0, I, 2], &[0, 1, 0], &[0, 0, 1]]);
        let l = admissible_pairs(&b).unwrap();
        assert!(l.nodes.contains(&pair(&["w"], &["v"])));
        assert!(l.le(
            l.nodes.iter().position(|p| *p == pair(&["w"], &["v"])).unwrap(),
            l.nodes.iter().position(|p| *p == pair(&["v", "w", "z"], &[])).unwrap()
        ));
    }

    #[test]
    fn restrictions() {
        let r = restriction_graph(&g5(), &pair(&["w"], &[])).unwrap();
        assert_eq!(r, g(&["w"], &[&[1]]));
        assert_eq!(restriction_graph(&g6(), &pair(&["v", "w"], &[])).unwrap(), g6());
        assert!(restriction_graph(&g5(), &pair(&[], &[])).unwrap().is_empty());
        let b = g(&["v", "w", "z"], &[&[0, I, 2], &[0, 1, 0], &[0, 0, 1]]);
        let r = restriction_graph(&b, &pair(&["w"], &["v"])).unwrap();
        assert_eq!(r, g(&["v", "w"], &[&[0, I], &[0, 1]]));
        assert!(restriction_graph(&g5(), &pair(&["v"], &[])).is_err());
    }

    #[test]
    fn hasse_diagram() {
        let l = admissible_pairs(&g5()).unwrap();
        assert_eq!(l.hasse_edges(), vec![(0, 1), (1, 2)]);
        assert!(l.to_dot().contains("n0 -> n1"));
    }

    #[test]
    fn size_guard() {
        let big = Graph::new((0..20).map(|i| format!("x{i}")), vec![vec![ExtNat::ZERO; 20]; 20]).unwrap();
        assert!(admissible_pairs(&big).is_err());
    }
}
