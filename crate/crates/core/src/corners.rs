//! Corner graphs between a graph and its stabilization, and the spike and
//! star graphs `E(H)` and `Ẽ(H)`.
//!
//! The stabilization `SE` hangs an infinite head `… → v² → v¹ → v⁰ = v` on
//! every vertex. A [`CornerGraph`] keeps the base graph and the length of
//! each head, so infinite heads stay finite data.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};
use crate::ext_nat::{ExtNat, INF};
use crate::graph::{EdgeRef, Graph, VertexId, VertexSet};
use crate::projcalc::MultiplicityVector;

/// Upper limit on explicitly enumerated paths in [`build_eh`].
pub const MAX_PATHS: usize = 100_000;

#[derive(Deserialize)]
struct RawCorner {
    base: Graph,
    heads: BTreeMap<VertexId, ExtNat>,
}

impl TryFrom<RawCorner> for CornerGraph {
    type Error = Error;

    fn try_from(raw: RawCorner) -> Result<Self> {
        CornerGraph::new(raw.base, raw.heads)
    }
}

/// The subgraph of `SE` on `{vⁱ : i ≤ h_v}` for head lengths `h_v`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCorner")]
pub struct CornerGraph {
    base: Graph,
    heads: BTreeMap<VertexId, ExtNat>,
}

impl CornerGraph {
    /// Requires a head length for exactly the base vertices.
    pub fn new(base: Graph, heads: BTreeMap<VertexId, ExtNat>) -> Result<Self> {
        if let Some(v) = heads.keys().find(|v| !base.contains(v.as_str())) {
            bail!(Validation, "head given for unknown vertex {v}");
        }
        if let Some(v) = base.vertices().iter().find(|v| !heads.contains_key(*v)) {
            bail!(Validation, "no head length for {v}");
        }
        Ok(CornerGraph { base, heads })
    }

    pub fn base(&self) -> &Graph {
        &self.base
    }

    pub fn heads(&self) -> &BTreeMap<VertexId, ExtNat> {
        &self.heads
    }

    pub fn head(&self, v: &str) -> Option<ExtNat> {
        self.heads.iter().find(|(u, _)| u.as_str() == v).map(|(_, &h)| h)
    }

    /// `Σ h_v`, the number of paths from the heads into the base.
    pub fn spike_count(&self) -> ExtNat {
        self.heads.values().copied().sum()
    }

    pub fn heads_finite(&self) -> bool {
        self.heads.values().all(|h| h.is_finite())
    }
}

/// `SE` itself: every head infinite.
pub fn stabilize(g: &Graph) -> CornerGraph {
    let heads = g.vertices().iter().map(|v| (v.clone(), INF)).collect();
    CornerGraph { base: g.clone(), heads }
}

/// The corner `T = {vⁱ : i < n_v}`, so `h_v = n_v − 1`.
pub fn corner_graph(g: &Graph, m: &MultiplicityVector) -> Result<CornerGraph> {
    let mut heads = BTreeMap::new();
    for v in g.vertices() {
        let Some(&n) = m.get(v) else {
            bail!(Domain, "no multiplicity for {v}");
        };
        match n.dec() {
            Ok(h) if n.is_positive() => heads.insert(v.clone(), h),
            _ => bail!(Domain, "multiplicity of {v} is zero"),
        };
    }
    if let Some(v) = m.keys().find(|v| !g.contains(v.as_str())) {
        bail!(Domain, "multiplicity given for unknown vertex {v}");
    }
    Ok(CornerGraph { base: g.clone(), heads })
}

/// Writes the heads out as chains `v^h → … → v^1 → v`.
pub fn realize(cg: &CornerGraph) -> Result<Graph> {
    let base = &cg.base;
    let mut names: Vec<VertexId> = base.vertices().to_vec();
    let mut taken: BTreeSet<String> = names.iter().map(|v| v.as_str().to_owned()).collect();
    // (new vertex, the vertex it points to)
    let mut chain: Vec<(usize, usize)> = Vec::new();
    for (vi, v) in base.vertices().iter().enumerate() {
        let Some(h) = cg.heads[v].finite() else {
            bail!(CannotRealize, "head at {v} is infinite");
        };
        let mut below = vi;
        for i in 1..=h {
            let mut name = format!("{v}^{i}");
            while taken.contains(&name) {
                name.push('\'');
            }
            taken.insert(name.clone());
            names.push(VertexId::new(name));
            chain.push((names.len() - 1, below));
            below = names.len() - 1;
        }
    }
    let n = names.len();
    let mut adjacency = vec![vec![ExtNat::ZERO; n]; n];
    for (i, row) in base.adjacency().iter().enumerate() {
        adjacency[i][..row.len()].copy_from_slice(row);
    }
    for (from, to) in chain {
        adjacency[from][to] = ExtNat::ONE;
    }
    Graph::new(names, adjacency)
}

/// Paths `e₁⋯eₙ` that stay outside `H` until the last edge lands in `H`,
/// as `(source, target, edges)`.
type Path = (usize, usize, Vec<EdgeRef>);

fn check_eh(g: &Graph, h: &[bool]) -> Result<()> {
    if !g.is_hereditary_mask(h) {
        bail!(Domain, "H is not hereditary");
    }
    let outside: Vec<usize> = (0..g.len()).filter(|&v| !h[v]).collect();
    if let Some(&v) = outside.iter().find(|&&v| !g.is_regular(v)) {
        bail!(Domain, "{} is outside H but not regular", g.vertex(v));
    }
    let dom = g.domination_matrix();
    if let Some(&v) = outside.iter().find(|&&v| !(0..g.len()).any(|w| h[w] && dom[v][w])) {
        bail!(Domain, "{} does not reach H", g.vertex(v));
    }
    // Longest path inside the complement, by repeatedly peeling off vertices
    // with no successor left in it; a leftover vertex lies on a cycle.
    let mut depth = vec![0usize; g.len()];
    let mut remaining: BTreeSet<usize> = outside.iter().copied().collect();
    while !remaining.is_empty() {
        let peel: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&v| g.successors(v).all(|w| h[w] || !remaining.contains(&w)))
            .collect();
        if peel.is_empty() {
            bail!(Domain, "the complement of H has a cycle");
        }
        for &v in &peel {
            depth[v] = g.successors(v).filter(|&w| !h[w]).map(|w| depth[w] + 1).max().unwrap_or(0);
            remaining.remove(&v);
        }
    }
    debug_assert!(outside.iter().all(|&v| depth[v] < g.len()));
    Ok(())
}

fn paths_into(g: &Graph, h: &[bool]) -> Result<Vec<Path>> {
    fn walk(g: &Graph, h: &[bool], start: usize, at: usize, prefix: &mut Vec<EdgeRef>, out: &mut Vec<Path>) -> Result<()> {
        for y in g.successors(at).collect::<Vec<_>>() {
            let count = g.entry(at, y).finite().expect("vertices outside H are regular");
            for i in 0..count {
                prefix.push(EdgeRef::new(g.vertex(at).clone(), g.vertex(y).clone(), i));
                if h[y] {
                    out.push((start, y, prefix.clone()));
                    if out.len() > MAX_PATHS {
                        bail!(Domain, "more than {MAX_PATHS} paths into H");
                    }
                } else {
                    walk(g, h, start, y, prefix, out)?;
                }
                prefix.pop();
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    for v in (0..g.len()).filter(|&v| !h[v]) {
        walk(g, h, v, v, &mut Vec::new(), &mut out)?;
    }
    Ok(out)
}

fn path_name(edges: &[EdgeRef]) -> String {
    edges
        .iter()
        .map(|e| format!("e({}→{},{})", e.src, e.dst, e.index))
        .collect::<Vec<_>>()
        .join("·")
}

fn h_part(g: &Graph, set: &VertexSet) -> Result<(Vec<bool>, Vec<usize>)> {
    let mask = g.to_mask(set)?;
    let keep = (0..g.len()).filter(|&v| mask[v]).collect();
    Ok((mask, keep))
}

/// `E(H)`: `H` with its outgoing edges, plus one vertex per path `α` into
/// `H` carrying a single edge to `r(α)`.
pub fn build_eh(g: &Graph, h: &VertexSet) -> Result<Graph> {
    let (mask, keep) = h_part(g, h)?;
    check_eh(g, &mask)?;
    let paths = paths_into(g, &mask)?;
    let core = g.induced(&keep);
    let mut names: Vec<VertexId> = core.vertices().to_vec();
    for (_, _, edges) in &paths {
        let mut name = path_name(edges);
        while names.iter().any(|v| v.as_str() == name) {
            name.push('\'');
        }
        names.push(VertexId::new(name));
    }
    let n = names.len();
    let mut adjacency = vec![vec![ExtNat::ZERO; n]; n];
    for (i, row) in core.adjacency().iter().enumerate() {
        adjacency[i][..row.len()].copy_from_slice(row);
    }
    for (k, (_, target, _)) in paths.iter().enumerate() {
        let t = keep.iter().position(|&v| v == *target).unwrap();
        adjacency[keep.len() + k][t] = ExtNat::ONE;
    }
    Graph::new(names, adjacency)
}

/// `Ẽ(H)`: `H` with its outgoing edges, plus one vertex `⋆` emitting one
/// edge per path into `H`.
pub fn build_tilde_eh(g: &Graph, h: &VertexSet) -> Result<Graph> {
    let (mask, keep) = h_part(g, h)?;
    check_eh(g, &mask)?;
    let paths = paths_into(g, &mask)?;
    let mut star = vec![ExtNat::ZERO; keep.len()];
    for (_, target, _) in &paths {
        let t = keep.iter().position(|&v| v == *target).unwrap();
        star[t] = star[t] + ExtNat::ONE;
    }
    with_star(&g.induced(&keep), star)
}

fn with_star(core: &Graph, star: Vec<ExtNat>) -> Result<Graph> {
    let mut names = core.vertices().to_vec();
    names.push(core.fresh_name("⋆"));
    let mut adjacency: Vec<Vec<ExtNat>> =
        core.adjacency().iter().map(|r| r.iter().copied().chain([ExtNat::ZERO]).collect()).collect();
    adjacency.push(star.into_iter().chain([ExtNat::ZERO]).collect());
    Graph::new(names, adjacency)
}

/// `Ẽ(H)` of a corner graph with `H` its base: the head at `v` contributes
/// `h_v` paths ending at `v`, so `⋆` emits `h_v` edges to `v`.
pub fn unitize(cg: &CornerGraph) -> Result<Graph> {
    let star = cg.base.vertices().iter().map(|v| cg.heads[v]).collect();
    with_star(&cg.base, star)
}
