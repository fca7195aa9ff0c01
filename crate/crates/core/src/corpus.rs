//! Seeded random graphs and moves for property checks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use std::collections::BTreeSet;

use crate::canonical::canonicalize;
use crate::ext_nat::{ExtNat, INF};
use crate::graph::{EdgeRef, Graph, VertexId};
use crate::moves::{EdgeClass, Move, Partition};
use crate::projcalc::{CoefficientSystem, ProjectionSequence};

pub type CorpusRng = ChaCha8Rng;

pub fn rng(seed: u64) -> CorpusRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// An entry drawn from `{0, 1, 2, ∞}`, zero half of the time.
pub fn random_entry<R: Rng>(rng: &mut R) -> ExtNat {
    match rng.gen_range(0..20) {
        0..=9 => ExtNat::ZERO,
        10..=13 => ExtNat::ONE,
        14..=16 => ExtNat::Fin(2),
        _ => INF,
    }
}

/// A graph with `1..=max_vertices` vertices named `v0, v1, …`.
pub fn random_graph<R: Rng>(rng: &mut R, max_vertices: usize) -> Graph {
    let n = rng.gen_range(1..=max_vertices.max(1));
    let names = (0..n).map(|i| format!("v{i}"));
    let adjacency = (0..n).map(|_| (0..n).map(|_| random_entry(rng)).collect()).collect();
    Graph::new(names, adjacency).expect("square matrix with distinct names")
}

pub fn random_graphs(seed: u64, count: usize, max_vertices: usize) -> Vec<Graph> {
    let mut r = rng(seed);
    (0..count).map(|_| random_graph(&mut r, max_vertices)).collect()
}

/// A uniformly chosen applicable move, or `None` when no move applies.
pub fn random_move<R: Rng>(rng: &mut R, g: &Graph) -> Option<Move> {
    let n = g.len();
    let id = |i: usize| g.vertex(i).clone();
    let mut kinds: Vec<Vec<Move>> = Vec::new();

    let splittable: Vec<usize> = (0..n).filter(|&u| !g.is_sink(u)).collect();
    if let Some(&u) = splittable.choose(rng) {
        kinds.push(vec![Move::OutSplit { vertex: id(u), partition: random_partition(rng, g, u) }]);
    }
    kinds.push(
        (0..n)
            .filter(|&u| g.is_regular(u) && g.is_source(u))
            .map(|u| Move::RemoveSource { vertex: id(u) })
            .collect(),
    );
    kinds.push(
        (0..n)
            .filter(|&u| g.is_regular(u) && !g.has_loop(u) && !g.is_source(u))
            .map(|u| Move::Collapse { vertex: id(u) })
            .collect(),
    );
    kinds.push(
        (0..n)
            .flat_map(|u| (0..n).map(move |v| (u, v)))
            .filter(|&(u, v)| {
                u != v
                    && g.entry(u, v).is_positive()
                    && !g.is_source(u)
                    && g.out_degree(u) >= ExtNat::Fin(2)
            })
            .map(|(u, v)| Move::ColumnAdd { from: id(u), to: id(v) })
            .collect(),
    );
    kinds.push(
        (0..n)
            .filter(|&u| g.is_infinite_emitter(u))
            .map(|u| Move::BreakSplit { vertex: id(u) })
            .collect(),
    );
    let starts: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (0..n).map(move |v| (u, v)))
        .filter(|&(u, v)| g.entry(u, v).is_inf())
        .collect();
    if let Some(&(a, b)) = starts.choose(rng) {
        let mut path = vec![a, b];
        for _ in 0..rng.gen_range(0..3) {
            let next: Vec<usize> = g.successors(*path.last().unwrap()).collect();
            match next.choose(rng) {
                Some(&x) => path.push(x),
                None => break,
            }
        }
        kinds.push(vec![Move::MoveT { path: path.into_iter().map(id).collect() }]);
    }

    kinds.retain(|k| !k.is_empty());
    let kind = kinds.choose(rng)?;
    kind.choose(rng).cloned()
}

/// Random out-split partition of `s⁻¹(u)`: finite edges are scattered over
/// up to three classes, and everything with infinitely many parallels stays
/// in the remainder.
fn random_partition<R: Rng>(rng: &mut R, g: &Graph, u: usize) -> Partition {
    let k = rng.gen_range(1..=3);
    let mut classes: Vec<Vec<EdgeRef>> = vec![Vec::new(); k];
    for y in 0..g.len() {
        if let Some(count) = g.entry(u, y).finite() {
            for index in 0..count.min(8) {
                classes[rng.gen_range(0..k)].push(EdgeRef::new(g.vertex(u).clone(), g.vertex(y).clone(), index));
            }
        }
    }
    let remainder_nonempty = !classes[0].is_empty()
        || (0..g.len()).any(|y| g.entry(u, y).is_inf() || g.entry(u, y) > ExtNat::Fin(8));
    let mut out = Vec::new();
    if remainder_nonempty {
        out.push(EdgeClass::Remainder);
    }
    out.extend(
        classes
            .into_iter()
            .skip(1)
            .filter(|c| !c.is_empty())
            .map(|c| EdgeClass::Edges(c.into_iter().collect())),
    );
    Partition::new(out)
}

/// Random subset of the vertices.
pub fn random_subset<R: Rng>(rng: &mut R, g: &Graph) -> Vec<VertexId> {
    g.vertices().iter().filter(|_| rng.gen_bool(0.5)).cloned().collect()
}

/// Canonical form of a random graph, retried until nonempty.
pub fn random_stably_complete<R: Rng>(rng: &mut R, max_vertices: usize) -> Graph {
    loop {
        let g = canonicalize(&random_graph(rng, max_vertices)).expect("canonicalization is total").graph;
        if !g.is_empty() {
            return g;
        }
    }
}

/// Random edges out of `v`, with indices below 6 (or below the
/// multiplicity when finite).
pub fn random_edges<R: Rng>(rng: &mut R, g: &Graph, v: usize, max: usize) -> BTreeSet<EdgeRef> {
    let targets: Vec<usize> = g.successors(v).collect();
    let mut out = BTreeSet::new();
    if targets.is_empty() {
        return out;
    }
    for _ in 0..rng.gen_range(0..=max) {
        let y = *targets.choose(rng).unwrap();
        let bound = g.entry(v, y).finite().unwrap_or(6).min(6);
        out.insert(EdgeRef::new(g.vertex(v).clone(), g.vertex(y).clone(), rng.gen_range(0..bound)));
    }
    out
}

/// A valid system with up to `max_terms` terms; edge sets appear only at
/// infinite emitters.
pub fn random_system<R: Rng>(rng: &mut R, g: &Graph, max_terms: usize) -> CoefficientSystem {
    let mut c = CoefficientSystem::new();
    for _ in 0..rng.gen_range(1..=max_terms.max(1)) {
        let v = rng.gen_range(0..g.len());
        let t = if g.is_infinite_emitter(v) { random_edges(rng, g, v, 3) } else { BTreeSet::new() };
        c.add(g.vertex(v).clone(), t, rng.gen_range(1..=3));
    }
    c
}

/// A random sequence, with a tail a third of the time, made full by adding
/// plain terms to the first system where needed.
pub fn random_full_sequence<R: Rng>(rng: &mut R, g: &Graph) -> ProjectionSequence {
    let head = (0..rng.gen_range(1..=3)).map(|_| random_system(rng, g, 3)).collect();
    let tail = rng.gen_bool(1.0 / 3.0).then(|| {
        let mut t = random_system(rng, g, 2);
        // Tail edges need infinitely many parallels.
        let keep: Vec<_> = t
            .iter()
            .filter(|(_, e, _)| e.iter().all(|e| g.get(e.src.as_str(), e.dst.as_str()).is_ok_and(|m| m.is_inf())))
            .map(|(v, e, n)| (v.clone(), e.clone(), n))
            .collect();
        t = CoefficientSystem::new();
        for (v, e, n) in keep {
            t.add(v, e, n);
        }
        t
    });
    let mut s = ProjectionSequence { head, tail };
    for v in 0..g.len() {
        let support = s.support();
        let closure = g.hereditary_closure(&support).expect("support names vertices");
        if closure.len() == g.len() {
            break;
        }
        if !closure.contains(g.vertex(v)) {
            s.head[0].add_plain(g.vertex(v), 1);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        assert_eq!(random_graphs(7, 20, 6), random_graphs(7, 20, 6));
        assert_ne!(random_graphs(7, 20, 6), random_graphs(8, 20, 6));
    }

    #[test]
    fn moves_apply() {
        let mut r = rng(3);
        for _ in 0..300 {
            let g = random_graph(&mut r, 5);
            if let Some(m) = random_move(&mut r, &g) {
                assert!(m.apply(&g).is_ok(), "{m:?} on {g:?}");
            }
        }
    }
}
