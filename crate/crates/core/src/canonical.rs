//! Stably complete graphs and a move sequence that reaches one from any
//! graph with finitely many vertices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::ext_nat::ExtNat;
use crate::graph::{CycleCount, EdgeRef, Graph, VertexId};
use crate::moves::{self, EdgeClass, Move, MoveRecord, Partition};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Which of the six conditions fails.
    pub condition: u8,
    pub witnesses: Vec<VertexId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StablyCompleteReport {
    pub satisfied: bool,
    pub violations: Vec<Violation>,
}

/// Checks the six conditions:
///
/// 1. finitely many vertices;
/// 2. every regular vertex supports a loop;
/// 3. a vertex with two distinct simple cycles supports two loops;
/// 4. an infinite emitter emits infinitely to every vertex it dominates;
/// 5. `v ⪰ w` implies an edge `v → w`;
/// 6. a looped infinite emitter `v` has a regular `w` with `v ⪰ w ⪰ v`.
pub fn is_stably_complete(g: &Graph) -> StablyCompleteReport {
    let n = g.len();
    let dom = g.domination_matrix();
    let name = |i: usize| g.vertex(i).clone();
    let mut violations = Vec::new();
    for v in 0..n {
        if g.is_regular(v) && !g.has_loop(v) {
            violations.push(Violation { condition: 2, witnesses: vec![name(v)] });
        }
    }
    for v in 0..n {
        if g.simple_cycle_count_idx(v) == CycleCount::TwoOrMore && g.entry(v, v) < ExtNat::Fin(2) {
            violations.push(Violation { condition: 3, witnesses: vec![name(v)] });
        }
    }
    for v in (0..n).filter(|&v| g.is_infinite_emitter(v)) {
        for w in (0..n).filter(|&w| dom[v][w] && !g.entry(v, w).is_inf()) {
            violations.push(Violation { condition: 4, witnesses: vec![name(v), name(w)] });
        }
    }
    for v in 0..n {
        for w in (0..n).filter(|&w| dom[v][w] && !g.entry(v, w).is_positive()) {
            violations.push(Violation { condition: 5, witnesses: vec![name(v), name(w)] });
        }
    }
    for v in (0..n).filter(|&v| g.is_infinite_emitter(v) && g.has_loop(v)) {
        if !has_regular_companion(g, &dom, v) {
            violations.push(Violation { condition: 6, witnesses: vec![name(v)] });
        }
    }
    StablyCompleteReport { satisfied: violations.is_empty(), violations }
}

fn has_regular_companion(g: &Graph, dom: &[Vec<bool>], v: usize) -> bool {
    (0..g.len()).any(|w| g.is_regular(w) && dom[v][w] && dom[w][v])
}

#[derive(Clone, Debug, Default)]
pub struct CanonicalOptions {
    /// Column-operation attempts allowed per violating pair; `None` means
    /// `|V|²` of the graph entering that stage.
    pub fuel: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Canonical {
    pub graph: Graph,
    pub trace: Vec<MoveRecord>,
}

pub fn canonicalize(g: &Graph) -> Result<Canonical> {
    canonicalize_with(g, &CanonicalOptions::default())
}

struct Run {
    graph: Graph,
    trace: Vec<MoveRecord>,
}

impl Run {
    fn step(&mut self, mv: Move) -> Result<()> {
        let (next, rec) = moves::apply(&self.graph, mv)?;
        self.graph = next;
        self.trace.push(rec);
        Ok(())
    }

    fn index(&self, v: &VertexId) -> usize {
        self.graph.index_of(v.as_str()).expect("vertex tracked by the pipeline")
    }
}

/// Runs the pipeline; inputs that are already stably complete come back
/// unchanged with an empty trace.
pub fn canonicalize_with(g: &Graph, opts: &CanonicalOptions) -> Result<Canonical> {
    if is_stably_complete(g).satisfied {
        return Ok(Canonical { graph: g.clone(), trace: Vec::new() });
    }
    let mut run = Run { graph: g.clone(), trace: Vec::new() };

    // Breaking parts of infinite emitters become separate finite emitters.
    let emitters: Vec<VertexId> =
        (0..g.len()).filter(|&v| g.is_infinite_emitter(v)).map(|v| g.vertex(v).clone()).collect();
    for v in emitters {
        if moves::split_breaking(&run.graph, v.as_str())? != run.graph {
            run.step(Move::BreakSplit { vertex: v })?;
        }
    }

    // Infinite emitters now emit only infinitely; extend that to every
    // dominated vertex.
    loop {
        let cur = &run.graph;
        let dom = cur.domination_matrix();
        let target = (0..cur.len())
            .filter(|&v| cur.is_infinite_emitter(v))
            .flat_map(|v| (0..cur.len()).map(move |w| (v, w)))
            .find(|&(v, w)| dom[v][w] && !cur.entry(v, w).is_inf());
        let Some((v, w)) = target else { break };
        let path = cur.shortest_path(v, w).expect("dominated vertices are reachable");
        let path = path.into_iter().map(|i| cur.vertex(i).clone()).collect();
        run.step(Move::MoveT { path })?;
    }

    for v in moves::regular_source_order(&run.graph) {
        run.step(Move::RemoveSource { vertex: v })?;
    }

    // Every regular vertex gets a loop.
    loop {
        let cur = &run.graph;
        let Some(v) = (0..cur.len()).find(|&v| cur.is_regular(v) && !cur.has_loop(v)) else {
            break;
        };
        let vertex = cur.vertex(v).clone();
        if cur.is_source(v) {
            run.step(Move::RemoveSource { vertex })?;
        } else {
            run.step(Move::Collapse { vertex })?;
        }
    }

    // Looped infinite emitters without a regular companion get one.
    let cur = run.graph.clone();
    let dom = cur.domination_matrix();
    for v in (0..cur.len()).filter(|&v| cur.is_infinite_emitter(v) && cur.has_loop(v)) {
        if !has_regular_companion(&cur, &dom, v) {
            let vertex = cur.vertex(v).clone();
            let vi = run.index(&vertex);
            run.step(Move::OutSplit { partition: companion_partition(&run.graph, vi), vertex })?;
        }
    }

    loop {
        column_stage(&mut run, opts)?;
        let cur = &run.graph;
        let dom = cur.domination_matrix();
        let lonely = (0..cur.len())
            .find(|&v| cur.is_infinite_emitter(v) && cur.has_loop(v) && !has_regular_companion(cur, &dom, v));
        let Some(v) = lonely else { break };
        let vertex = cur.vertex(v).clone();
        let partition = companion_partition(cur, v);
        run.step(Move::OutSplit { partition, vertex })?;
        run.trace.last_mut().unwrap().note =
            Some("extra split: looped infinite emitter had no regular companion".into());
    }

    let report = is_stably_complete(&run.graph);
    if !report.satisfied {
        bail!(Internal, "canonical form check failed: {:?}", report.violations);
    }
    Ok(Canonical { graph: run.graph, trace: run.trace })
}

/// One edge to each dominated vertex, lowest index first, against the rest.
fn companion_partition(g: &Graph, v: usize) -> Partition {
    let dom = g.dominated_by(v);
    let chosen = (0..g.len())
        .filter(|&w| dom[w])
        .map(|w| EdgeRef::new(g.vertex(v).clone(), g.vertex(w).clone(), 0))
        .collect();
    Partition::new(vec![EdgeClass::Edges(chosen), EdgeClass::Remainder])
}

/// Column operations along paths until conditions (3) and (5) hold at
/// every regular vertex.
fn column_stage(run: &mut Run, opts: &CanonicalOptions) -> Result<()> {
    let n = run.graph.len();
    let fuel = opts.fuel.unwrap_or(n * n).max(1);
    let mut spent: BTreeMap<(VertexId, VertexId), usize> = BTreeMap::new();
    loop {
        let cur = &run.graph;
        let Some(path) = next_column_path(cur) else { return Ok(()) };
        let key = (cur.vertex(path[0]).clone(), cur.vertex(*path.last().unwrap()).clone());
        let count = spent.entry(key.clone()).or_default();
        *count += 1;
        if *count > fuel {
            bail!(Internal, "column operations for ({}, {}) exceeded fuel {fuel}", key.0, key.1);
        }
        let path: Vec<VertexId> = path.into_iter().map(|i| cur.vertex(i).clone()).collect();
        let (next, recs) = moves::column_ops_along_path_traced(cur, &path)?;
        run.graph = next;
        run.trace.extend(recs);
    }
}

fn next_column_path(g: &Graph) -> Option<Vec<usize>> {
    let n = g.len();
    let dom = g.domination_matrix();
    for v in (0..n).filter(|&v| g.is_regular(v)) {
        for w in (0..n).filter(|&w| dom[v][w] && !g.entry(v, w).is_positive()) {
            return g.shortest_path(v, w);
        }
    }
    for v in (0..n).filter(|&v| g.is_regular(v)) {
        if g.entry(v, v) == ExtNat::ONE && g.simple_cycle_count_idx(v) == CycleCount::TwoOrMore {
            return shortest_long_cycle(g, v);
        }
    }
    None
}

/// Shortest closed path `v x ⋯ v` with `x ≠ v` that visits `v` only at its
/// ends.
fn shortest_long_cycle(g: &Graph, v: usize) -> Option<Vec<usize>> {
    g.successors(v)
        .filter(|&x| x != v)
        .filter_map(|x| {
            g.shortest_path(x, v).map(|tail| {
                let mut p = vec![v];
                p.extend(tail);
                p
            })
        })
        .min_by_key(Vec::len)
}
