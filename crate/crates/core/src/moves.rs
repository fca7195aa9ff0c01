//! Elementary graph moves. Each move is a pure function `Graph → Graph`;
//! [`Move`] packages one together with its parameters so that it can be
//! recorded in a trace and replayed.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{bail, Error, Result};
use crate::ext_nat::{ExtNat, INF};
use crate::graph::{EdgeRef, Graph, VertexId};

/// One block of an out-split partition of `s⁻¹(u)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeClass {
    /// Finitely many explicitly named edges.
    Edges(BTreeSet<EdgeRef>),
    /// Every edge from `u` into each listed vertex.
    AllTo(BTreeSet<VertexId>),
    /// Every edge not claimed by another class.
    Remainder,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub classes: Vec<EdgeClass>,
}

impl Partition {
    pub fn new(classes: Vec<EdgeClass>) -> Self {
        Partition { classes }
    }

    /// The partition with a single class.
    pub fn trivial() -> Self {
        Partition { classes: vec![EdgeClass::Remainder] }
    }

    /// `counts[i][y]` is the number of edges of class `i` ending at `y`.
    fn counts(&self, g: &Graph, u: usize) -> Result<Vec<Vec<ExtNat>>> {
        let n = g.len();
        let row = &g.adjacency()[u];
        if self.classes.is_empty() {
            bail!(Move, "empty partition");
        }
        if self.classes.iter().filter(|c| **c == EdgeClass::Remainder).count() > 1 {
            bail!(Move, "more than one remainder class");
        }
        let mut claimed_finite = vec![0u64; n];
        let mut claimed_all = vec![false; n];
        let mut seen_edges = BTreeSet::new();
        let mut counts = vec![vec![ExtNat::ZERO; n]; self.classes.len()];
        for (i, class) in self.classes.iter().enumerate() {
            match class {
                EdgeClass::Edges(edges) => {
                    if edges.is_empty() {
                        bail!(Move, "class {i} is empty");
                    }
                    for e in edges {
                        if e.src != *g.vertex(u) {
                            bail!(Move, "edge {e} does not start at {}", g.vertex(u));
                        }
                        let y = g.index_of(e.dst.as_str()).map_err(|_| {
                            Error::Move(format!("edge {e} ends outside the graph"))
                        })?;
                        if ExtNat::Fin(e.index) >= row[y] {
                            bail!(Move, "edge {e} does not exist");
                        }
                        if !seen_edges.insert(e) {
                            bail!(Move, "edge {e} listed twice");
                        }
                        claimed_finite[y] += 1;
                        counts[i][y] = counts[i][y] + ExtNat::ONE;
                    }
                }
                EdgeClass::AllTo(targets) => {
                    if targets.is_empty() {
                        bail!(Move, "class {i} is empty");
                    }
                    for t in targets {
                        let y = g.index_of(t.as_str())
                            .map_err(|_| Error::Move(format!("target {t} is not a vertex")))?;
                        if !row[y].is_positive() {
                            bail!(Move, "{} emits no edge to {t}", g.vertex(u));
                        }
                        if claimed_all[y] {
                            bail!(Move, "edges to {t} claimed twice");
                        }
                        claimed_all[y] = true;
                        counts[i][y] = row[y];
                    }
                }
                EdgeClass::Remainder => {}
            }
        }
        for y in 0..n {
            if claimed_all[y] && claimed_finite[y] > 0 {
                bail!(Move, "edges to {} claimed twice", g.vertex(y));
            }
        }
        let rest: Vec<ExtNat> = (0..n)
            .map(|y| {
                if claimed_all[y] {
                    ExtNat::ZERO
                } else {
                    row[y].sub_fin(claimed_finite[y]).expect("claims are bounded by the row")
                }
            })
            .collect();
        match self.classes.iter().position(|c| *c == EdgeClass::Remainder) {
            Some(r) => {
                if rest.iter().all(|x| !x.is_positive()) {
                    bail!(Move, "remainder class is empty");
                }
                counts[r] = rest;
            }
            None => {
                if let Some(y) = (0..n).find(|&y| rest[y].is_positive()) {
                    bail!(Move, "edges to {} are not covered by the partition", g.vertex(y));
                }
            }
        }
        let infinite = counts.iter().filter(|c| c.iter().copied().sum::<ExtNat>().is_inf()).count();
        if infinite > 1 {
            bail!(Move, "{infinite} infinite classes; at most one is allowed");
        }
        Ok(counts)
    }
}

fn overflow() -> Error {
    Error::Move("edge multiplicity overflow".into())
}

fn add(a: ExtNat, b: ExtNat) -> Result<ExtNat> {
    a.checked_add(b).ok_or_else(overflow)
}

fn mul(a: ExtNat, b: ExtNat) -> Result<ExtNat> {
    a.checked_mul(b).ok_or_else(overflow)
}

/// Splits `u` into one vertex per partition class. Vertex `uⁱ` emits the
/// edges of class `i` and receives a copy of every edge into `u`.
pub fn out_split(g: &Graph, u: &str, partition: &Partition) -> Result<Graph> {
    let ui = g.index_of(u)?;
    if g.is_sink(ui) {
        bail!(Move, "{u} is a sink");
    }
    let counts = partition.counts(g, ui)?;
    let k = counts.len();
    let n = g.len();

    let mut used: BTreeSet<String> = g.vertices().iter().map(|v| v.to_string()).collect();
    let mut new_names = Vec::with_capacity(k);
    for i in 1..=k {
        let mut name = format!("{u}.{i}");
        while used.contains(&name) {
            name.push('\'');
        }
        used.insert(name.clone());
        new_names.push(VertexId::from(name));
    }
    let mut names = Vec::with_capacity(n + k - 1);
    // old index → list of new indices
    let mut image: Vec<Vec<usize>> = Vec::with_capacity(n);
    for (x, v) in g.vertices().iter().enumerate() {
        if x == ui {
            image.push((names.len()..names.len() + k).collect());
            names.extend(new_names.iter().cloned());
        } else {
            image.push(vec![names.len()]);
            names.push(v.clone());
        }
    }
    let m = names.len();
    let mut adj = vec![vec![ExtNat::ZERO; m]; m];
    for x in 0..n {
        for y in 0..n {
            for (xi, &nx) in image[x].iter().enumerate() {
                for &ny in &image[y] {
                    adj[nx][ny] = if x == ui { counts[xi][y] } else { g.entry(x, y) };
                }
            }
        }
    }
    Graph::new(names, adj)
}

/// Removes a regular vertex without loops, replacing each two-step path
/// `x → u → y` by an edge `x → y`.
pub fn collapse(g: &Graph, u: &str) -> Result<Graph> {
    let ui = g.index_of(u)?;
    if !g.is_regular(ui) {
        bail!(Move, "{u} is not regular");
    }
    if g.has_loop(ui) {
        bail!(Move, "{u} supports a loop");
    }
    if g.is_source(ui) {
        bail!(Move, "{u} is a source");
    }
    let mut out = g.without_vertex(ui);
    let keep: Vec<usize> = (0..g.len()).filter(|&x| x != ui).collect();
    for (a, &x) in keep.iter().enumerate() {
        for (b, &y) in keep.iter().enumerate() {
            let via = mul(g.entry(x, ui), g.entry(ui, y))?;
            out.set(a, b, add(g.entry(x, y), via)?);
        }
    }
    Ok(out)
}

/// Deletes one regular source.
pub fn remove_source(g: &Graph, u: &str) -> Result<Graph> {
    let ui = g.index_of(u)?;
    if !g.is_regular(ui) || !g.is_source(ui) {
        bail!(Move, "{u} is not a regular source");
    }
    Ok(g.without_vertex(ui))
}

/// Regular sources of `g` that are deleted, in order, by iterated removal.
pub fn regular_source_order(g: &Graph) -> Vec<VertexId> {
    let mut cur = g.clone();
    let mut order = Vec::new();
    while let Some(i) = (0..cur.len()).find(|&i| cur.is_regular(i) && cur.is_source(i)) {
        order.push(cur.vertex(i).clone());
        cur = cur.without_vertex(i);
    }
    order
}

/// Deletes regular sources until none remain.
pub fn remove_regular_sources(g: &Graph) -> Graph {
    let mut cur = g.clone();
    while let Some(i) = (0..cur.len()).find(|&i| cur.is_regular(i) && cur.is_source(i)) {
        cur = cur.without_vertex(i);
    }
    cur
}

fn path_indices(g: &Graph, path: &[VertexId]) -> Result<Vec<usize>> {
    path.iter().map(|v| g.index_of(v.as_str())).collect()
}

/// Adds infinitely many copies of the path `v₀ ⋯ vₙ`, whose first step
/// must already be infinite, as edges `v₀ → vₙ`.
pub fn move_t(g: &Graph, path: &[VertexId]) -> Result<Graph> {
    let idx = path_indices(g, path)?;
    if idx.len() < 2 {
        bail!(Move, "a path needs at least one edge");
    }
    for w in idx.windows(2) {
        if !g.entry(w[0], w[1]).is_positive() {
            bail!(Move, "no edge {} → {}", g.vertex(w[0]), g.vertex(w[1]));
        }
    }
    if !g.entry(idx[0], idx[1]).is_inf() {
        bail!(Move, "first step {} → {} is not infinite", g.vertex(idx[0]), g.vertex(idx[1]));
    }
    let mut out = g.clone();
    out.set(idx[0], *idx.last().unwrap(), INF);
    Ok(out)
}

/// The column operation `A − I ↦ (A − I)·E(u,v)`: column `u` is added to
/// column `v`, then one edge `u → v` is dropped.
///
/// Legal exactly when it can be realized as an out-split of `u` that
/// isolates one edge `u → v`, followed by collapsing that piece: `u ≠ v`,
/// `A(u,v) ≥ 1`, `u` is not a source, and `u` emits at least two edges.
pub fn column_add(g: &Graph, u: &str, v: &str) -> Result<Graph> {
    let (ui, vi) = (g.index_of(u)?, g.index_of(v)?);
    if ui == vi {
        bail!(Move, "column addition needs distinct vertices");
    }
    if !g.entry(ui, vi).is_positive() {
        bail!(Move, "no edge {u} → {v}");
    }
    if g.is_source(ui) {
        bail!(Move, "{u} is a source");
    }
    if g.out_degree(ui) < ExtNat::Fin(2) {
        bail!(Move, "{u} emits a single edge");
    }
    let mut out = g.clone();
    for x in 0..g.len() {
        let mut value = add(g.entry(x, vi), g.entry(x, ui))?;
        if x == ui {
            value = value.dec()?;
        }
        out.set(x, vi, value);
    }
    Ok(out)
}

/// `column_add(vᵢ, vᵢ₊₁)` for consecutive vertices of `v₀ ⋯ vₙ`, starting at
/// `v₁`. The net effect adds at least one edge `v₀ → vₙ`.
pub fn column_ops_along_path(g: &Graph, path: &[VertexId]) -> Result<Graph> {
    Ok(column_path_trace(g, path)?.0)
}

fn column_path_trace(g: &Graph, path: &[VertexId]) -> Result<(Graph, Vec<MoveRecord>)> {
    let idx = path_indices(g, path)?;
    if idx.len() < 3 {
        bail!(Move, "column operations need a path of length at least two");
    }
    let closed = idx[0] == *idx.last().unwrap();
    let body = if closed { &idx[..idx.len() - 1] } else { &idx[..] };
    let distinct: BTreeSet<usize> = body.iter().copied().collect();
    if distinct.len() != body.len() {
        bail!(Move, "path vertices must be distinct");
    }
    for w in idx.windows(2) {
        if !g.entry(w[0], w[1]).is_positive() {
            bail!(Move, "no edge {} → {}", g.vertex(w[0]), g.vertex(w[1]));
        }
    }
    let mut cur = g.clone();
    let mut trace = Vec::new();
    for w in path[1..].windows(2) {
        let (next, rec) = apply(&cur, Move::ColumnAdd { from: w[0].clone(), to: w[1].clone() })?;
        cur = next;
        trace.push(rec);
    }
    Ok((cur, trace))
}

/// Out-splits an infinite emitter into a part that emits only edges with
/// infinitely many parallels and a finite emitter.
pub fn split_breaking(g: &Graph, u: &str) -> Result<Graph> {
    match breaking_partition(g, u)? {
        None => Ok(g.clone()),
        Some(p) => out_split(g, u, &p),
    }
}

fn breaking_partition(g: &Graph, u: &str) -> Result<Option<Partition>> {
    let ui = g.index_of(u)?;
    if !g.is_infinite_emitter(ui) {
        bail!(Move, "{u} is not an infinite emitter");
    }
    let row = &g.adjacency()[ui];
    let infinite: BTreeSet<VertexId> =
        (0..g.len()).filter(|&y| row[y].is_inf()).map(|y| g.vertex(y).clone()).collect();
    if row.iter().all(|a| a.is_inf() || !a.is_positive()) {
        return Ok(None);
    }
    Ok(Some(Partition::new(vec![EdgeClass::AllTo(infinite), EdgeClass::Remainder])))
}

/// A move with its parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum Move {
    #[serde(rename = "O")]
    OutSplit { vertex: VertexId, partition: Partition },
    #[serde(rename = "S")]
    RemoveSource { vertex: VertexId },
    #[serde(rename = "T")]
    MoveT { path: Vec<VertexId> },
    #[serde(rename = "COLLAPSE")]
    Collapse { vertex: VertexId },
    #[serde(rename = "COLADD")]
    ColumnAdd { from: VertexId, to: VertexId },
    #[serde(rename = "BREAKSPLIT")]
    BreakSplit { vertex: VertexId },
}

impl Move {
    pub fn apply(&self, g: &Graph) -> Result<Graph> {
        match self {
            Move::OutSplit { vertex, partition } => out_split(g, vertex.as_str(), partition),
            Move::RemoveSource { vertex } => remove_source(g, vertex.as_str()),
            Move::MoveT { path } => move_t(g, path),
            Move::Collapse { vertex } => collapse(g, vertex.as_str()),
            Move::ColumnAdd { from, to } => column_add(g, from.as_str(), to.as_str()),
            Move::BreakSplit { vertex } => split_breaking(g, vertex.as_str()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Move::OutSplit { .. } => "O",
            Move::RemoveSource { .. } => "S",
            Move::MoveT { .. } => "T",
            Move::Collapse { .. } => "COLLAPSE",
            Move::ColumnAdd { .. } => "COLADD",
            Move::BreakSplit { .. } => "BREAKSPLIT",
        }
    }
}

/// SHA-256 of the graph's JSON form, hex encoded.
pub fn graph_hash(g: &Graph) -> String {
    let digest = Sha256::digest(g.to_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// One step of a trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveRecord {
    #[serde(flatten)]
    pub step: Move,
    pub input_hash: String,
    pub output_hash: String,
    pub pre_vertices: Vec<VertexId>,
    pub post_vertices: Vec<VertexId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl MoveRecord {
    /// Re-applies the move to `input`, checking both hashes.
    pub fn replay(&self, input: &Graph) -> Result<Graph> {
        if graph_hash(input) != self.input_hash {
            bail!(Validation, "input does not match the recorded {} move", self.step.kind());
        }
        let out = self.step.apply(input)?;
        if graph_hash(&out) != self.output_hash {
            bail!(Internal, "{} move replayed to a different graph", self.step.kind());
        }
        Ok(out)
    }
}

/// Applies a move and records it.
pub fn apply(g: &Graph, step: Move) -> Result<(Graph, MoveRecord)> {
    let out = step.apply(g)?;
    let rec = MoveRecord {
        input_hash: graph_hash(g),
        output_hash: graph_hash(&out),
        pre_vertices: g.vertices().to_vec(),
        post_vertices: out.vertices().to_vec(),
        note: None,
        step,
    };
    Ok((out, rec))
}

/// Replays a whole trace starting from `g`.
pub fn replay_trace(g: &Graph, trace: &[MoveRecord]) -> Result<Graph> {
    trace.iter().try_fold(g.clone(), |cur, rec| rec.replay(&cur))
}

/// [`remove_regular_sources`] with one `S` record per deleted vertex.
pub fn remove_regular_sources_traced(g: &Graph) -> Result<(Graph, Vec<MoveRecord>)> {
    let mut cur = g.clone();
    let mut trace = Vec::new();
    for v in regular_source_order(g) {
        let (next, rec) = apply(&cur, Move::RemoveSource { vertex: v })?;
        cur = next;
        trace.push(rec);
    }
    Ok((cur, trace))
}

/// [`column_ops_along_path`] with one `COLADD` record per step.
pub fn column_ops_along_path_traced(g: &Graph, path: &[VertexId]) -> Result<(Graph, Vec<MoveRecord>)> {
    column_path_trace(g, path)
}
