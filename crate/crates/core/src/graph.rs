//! Directed graphs with finitely many vertices and multiplicities in `ℕ ∪ {∞}`.
//!
//! A [`Graph`] stores an ordered vertex list and a square adjacency matrix
//! `A(u, v) = |s⁻¹(u) ∩ r⁻¹(v)|`. Parallel edges are not materialized; an
//! individual edge is addressed positionally by an [`EdgeRef`]
//! `(src, dst, index)`, which keeps finite edge sets meaningful even at
//! infinite emitters. Every traversal treats `A(u, v) ≥ 1` as "an edge
//! exists" and never enumerates infinite families.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};
use crate::ext_nat::ExtNat;

/// Opaque vertex name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(String);

impl VertexId {
    pub fn new(name: impl Into<String>) -> Self {
        VertexId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VertexId {
    fn from(s: &str) -> Self {
        VertexId(s.to_owned())
    }
}

impl From<String> for VertexId {
    fn from(s: String) -> Self {
        VertexId(s)
    }
}

impl From<&VertexId> for VertexId {
    fn from(v: &VertexId) -> Self {
        v.clone()
    }
}

impl std::borrow::Borrow<str> for VertexId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

pub type VertexSet = BTreeSet<VertexId>;

/// The `index`-th parallel edge from `src` to `dst`. Serialized as
/// `[src, dst, index]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(VertexId, VertexId, u64)", into = "(VertexId, VertexId, u64)")]
pub struct EdgeRef {
    pub src: VertexId,
    pub dst: VertexId,
    pub index: u64,
}

impl EdgeRef {
    pub fn new(src: impl Into<VertexId>, dst: impl Into<VertexId>, index: u64) -> Self {
        EdgeRef { src: src.into(), dst: dst.into(), index }
    }
}

impl From<(VertexId, VertexId, u64)> for EdgeRef {
    fn from((src, dst, index): (VertexId, VertexId, u64)) -> Self {
        EdgeRef { src, dst, index }
    }
}

impl From<EdgeRef> for (VertexId, VertexId, u64) {
    fn from(e: EdgeRef) -> Self {
        (e.src, e.dst, e.index)
    }
}

impl fmt::Display for EdgeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}→{},{})", self.src, self.dst, self.index)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexKind {
    Regular,
    Sink,
    InfiniteEmitter,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexClass {
    pub kind: VertexKind,
    pub is_source: bool,
    pub supports_loop: bool,
    pub loop_count: ExtNat,
}

/// Number of simple cycles based at a vertex, truncated at two.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CycleCount {
    Zero,
    One,
    TwoOrMore,
}

#[derive(Deserialize)]
struct RawGraph {
    vertices: Vec<VertexId>,
    adjacency: Vec<Vec<ExtNat>>,
}

impl TryFrom<RawGraph> for Graph {
    type Error = Error;

    fn try_from(raw: RawGraph) -> Result<Graph> {
        Graph::new(raw.vertices, raw.adjacency)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawGraph")]
pub struct Graph {
    vertices: Vec<VertexId>,
    adjacency: Vec<Vec<ExtNat>>,
}

impl Graph {
    /// Validates and builds a graph: the matrix must be square of the
    /// vertex count, and vertex names unique.
    pub fn new<I, V>(vertices: I, adjacency: Vec<Vec<ExtNat>>) -> Result<Graph>
    where
        I: IntoIterator<Item = V>,
        V: Into<VertexId>,
    {
        let vertices: Vec<VertexId> = vertices.into_iter().map(Into::into).collect();
        let n = vertices.len();
        if adjacency.len() != n {
            bail!(Validation, "adjacency has {} rows for {} vertices", adjacency.len(), n);
        }
        if let Some((i, row)) = adjacency.iter().enumerate().find(|(_, r)| r.len() != n) {
            bail!(Validation, "row {} has {} entries, expected {}", i, row.len(), n);
        }
        let mut seen = BTreeSet::new();
        for v in &vertices {
            if !seen.insert(v) {
                bail!(Validation, "duplicate vertex {v}");
            }
        }
        Ok(Graph { vertices, adjacency })
    }

    /// Convenience constructor from finite entries, `u64::MAX` meaning ∞.
    pub fn from_counts<V: Into<VertexId>>(
        vertices: impl IntoIterator<Item = V>,
        rows: &[&[u64]],
    ) -> Result<Graph> {
        let adjacency = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&x| if x == u64::MAX { ExtNat::Inf } else { ExtNat::Fin(x) })
                    .collect()
            })
            .collect();
        Graph::new(vertices, adjacency)
    }

    pub fn empty() -> Graph {
        Graph { vertices: Vec::new(), adjacency: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &VertexId {
        &self.vertices[i]
    }

    pub fn adjacency(&self) -> &[Vec<ExtNat>] {
        &self.adjacency
    }

    pub fn index_of(&self, v: &str) -> Result<usize> {
        self.vertices
            .iter()
            .position(|x| x.as_str() == v)
            .ok_or_else(|| Error::NotFound(v.to_owned()))
    }

    pub fn contains(&self, v: &str) -> bool {
        self.vertices.iter().any(|x| x.as_str() == v)
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> ExtNat {
        self.adjacency[i][j]
    }

    pub fn get(&self, u: &str, v: &str) -> Result<ExtNat> {
        Ok(self.entry(self.index_of(u)?, self.index_of(v)?))
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, value: ExtNat) {
        self.adjacency[i][j] = value;
    }

    pub fn out_degree(&self, i: usize) -> ExtNat {
        self.adjacency[i].iter().copied().sum()
    }

    pub fn in_degree(&self, i: usize) -> ExtNat {
        self.adjacency.iter().map(|r| r[i]).sum()
    }

    pub fn kind(&self, i: usize) -> VertexKind {
        match self.out_degree(i) {
            ExtNat::Fin(0) => VertexKind::Sink,
            ExtNat::Fin(_) => VertexKind::Regular,
            ExtNat::Inf => VertexKind::InfiniteEmitter,
        }
    }

    pub fn is_regular(&self, i: usize) -> bool {
        self.kind(i) == VertexKind::Regular
    }

    pub fn is_sink(&self, i: usize) -> bool {
        self.kind(i) == VertexKind::Sink
    }

    pub fn is_infinite_emitter(&self, i: usize) -> bool {
        self.kind(i) == VertexKind::InfiniteEmitter
    }

    pub fn is_source(&self, i: usize) -> bool {
        self.adjacency.iter().all(|r| r[i] == ExtNat::ZERO)
    }

    pub fn has_loop(&self, i: usize) -> bool {
        self.adjacency[i][i].is_positive()
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[i].iter().enumerate().filter(|(_, a)| a.is_positive()).map(|(j, _)| j)
    }

    pub fn predecessors(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.adjacency[i][j].is_positive())
    }

    pub fn class_at(&self, i: usize) -> VertexClass {
        VertexClass {
            kind: self.kind(i),
            is_source: self.is_source(i),
            supports_loop: self.has_loop(i),
            loop_count: self.entry(i, i),
        }
    }

    pub fn vertex_class(&self, v: &str) -> Result<VertexClass> {
        Ok(self.class_at(self.index_of(v)?))
    }

    pub fn to_set(&self, mask: &[bool]) -> VertexSet {
        mask.iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| self.vertices[i].clone())
            .collect()
    }

    pub fn to_mask(&self, set: &VertexSet) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.len()];
        for v in set {
            mask[self.index_of(v.as_str())?] = true;
        }
        Ok(mask)
    }

    /// Vertices reachable from `i` by a path of nonzero length.
    pub fn dominated_by(&self, i: usize) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut queue: VecDeque<usize> = self.successors(i).collect();
        for &j in &queue {
            seen[j] = true;
        }
        while let Some(x) = queue.pop_front() {
            for y in self.successors(x) {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        seen
    }

    /// `dom[v][w]` holds iff `v ⪰ w`.
    pub fn domination_matrix(&self) -> Vec<Vec<bool>> {
        (0..self.len()).map(|i| self.dominated_by(i)).collect()
    }

    /// `v ⪰ w`: a path of nonzero length from `v` to `w`.
    pub fn dominates(&self, v: &str, w: &str) -> Result<bool> {
        let (i, j) = (self.index_of(v)?, self.index_of(w)?);
        Ok(self.dominated_by(i)[j])
    }

    /// `v ≥ w`: a path, possibly of length zero, from `v` to `w`.
    pub fn reaches(&self, v: &str, w: &str) -> Result<bool> {
        let (i, j) = (self.index_of(v)?, self.index_of(w)?);
        Ok(i == j || self.dominated_by(i)[j])
    }

    /// Shortest path of nonzero length from `from` to `to`, as a vertex
    /// sequence starting at `from`.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let n = self.len();
        let mut parent = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for j in self.successors(from) {
            if j == to {
                return Some(vec![from, to]);
            }
            if !seen[j] {
                seen[j] = true;
                parent[j] = from;
                queue.push_back(j);
            }
        }
        while let Some(x) = queue.pop_front() {
            for y in self.successors(x) {
                if y == to {
                    let mut path = vec![to, x];
                    let mut cur = x;
                    while parent[cur] != from {
                        cur = parent[cur];
                        path.push(cur);
                    }
                    path.push(from);
                    path.reverse();
                    return Some(path);
                }
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = x;
                    queue.push_back(y);
                }
            }
        }
        None
    }

    pub fn hereditary_closure_mask(&self, mask: &[bool]) -> Vec<bool> {
        let mut out = mask.to_vec();
        let mut queue: VecDeque<usize> = (0..self.len()).filter(|&i| mask[i]).collect();
        while let Some(x) = queue.pop_front() {
            for y in self.successors(x) {
                if !out[y] {
                    out[y] = true;
                    queue.push_back(y);
                }
            }
        }
        out
    }

    /// Smallest hereditary superset of `set`.
    pub fn hereditary_closure(&self, set: &VertexSet) -> Result<VertexSet> {
        Ok(self.to_set(&self.hereditary_closure_mask(&self.to_mask(set)?)))
    }

    pub fn saturate_mask(&self, mask: &[bool]) -> Vec<bool> {
        let mut out = mask.to_vec();
        loop {
            let mut changed = false;
            for v in 0..self.len() {
                if !out[v] && self.is_regular(v) && self.successors(v).all(|w| out[w]) {
                    out[v] = true;
                    changed = true;
                }
            }
            if !changed {
                return out;
            }
        }
    }

    /// Smallest saturated superset of `set`.
    pub fn saturate(&self, set: &VertexSet) -> Result<VertexSet> {
        Ok(self.to_set(&self.saturate_mask(&self.to_mask(set)?)))
    }

    pub fn is_hereditary_mask(&self, mask: &[bool]) -> bool {
        self.hereditary_closure_mask(mask) == mask
    }

    pub fn is_saturated_mask(&self, mask: &[bool]) -> bool {
        self.saturate_mask(mask) == mask
    }

    /// Counts the simple cycles based at `v`, i.e. cycles `e₁⋯eₙ` whose
    /// range returns to `v` only at the last edge. Intermediate vertices may
    /// repeat, so a cycle through the middle section yields infinitely many.
    /// Parallel edges count separately.
    pub fn simple_cycle_count_idx(&self, v: usize) -> CycleCount {
        let n = self.len();
        // Vertices on some return path: reachable from v without passing
        // through v, and reaching v without passing through v.
        let mut fwd = vec![false; n];
        let mut queue: VecDeque<usize> = self.successors(v).filter(|&x| x != v).collect();
        for &x in &queue {
            fwd[x] = true;
        }
        while let Some(x) = queue.pop_front() {
            for y in self.successors(x) {
                if y != v && !fwd[y] {
                    fwd[y] = true;
                    queue.push_back(y);
                }
            }
        }
        let mut mid = vec![false; n];
        let mut queue: VecDeque<usize> = self.predecessors(v).filter(|&x| x != v && fwd[x]).collect();
        for &x in &queue {
            mid[x] = true;
        }
        while let Some(y) = queue.pop_front() {
            for x in self.predecessors(y) {
                if x != v && fwd[x] && !mid[x] {
                    mid[x] = true;
                    queue.push_back(x);
                }
            }
        }

        // Kahn's algorithm over the middle section; leftover vertices mean a
        // cycle there, hence infinitely many return paths.
        let mut indeg = vec![0usize; n];
        for x in (0..n).filter(|&x| mid[x]) {
            for y in self.successors(x).filter(|&y| mid[y]) {
                indeg[y] += 1;
            }
        }
        let mut order = Vec::new();
        let mut ready: Vec<usize> = (0..n).filter(|&x| mid[x] && indeg[x] == 0).collect();
        while let Some(x) = ready.pop() {
            order.push(x);
            for y in self.successors(x).filter(|&y| mid[y]) {
                indeg[y] -= 1;
                if indeg[y] == 0 {
                    ready.push(y);
                }
            }
        }
        if order.len() < mid.iter().filter(|&&b| b).count() {
            return CycleCount::TwoOrMore;
        }

        const CAP: u64 = 2;
        let cap = |x: u64| x.min(CAP);
        let mut paths = vec![0u64; n];
        for &x in &order {
            let mut count = self.entry(v, x).capped(CAP);
            for y in self.predecessors(x).filter(|&y| mid[y]) {
                count = cap(count + cap(paths[y] * self.entry(y, x).capped(CAP)));
            }
            paths[x] = count;
        }
        let mut total = self.entry(v, v).capped(CAP);
        for &x in &order {
            total = cap(total + cap(paths[x] * self.entry(x, v).capped(CAP)));
        }
        match total {
            0 => CycleCount::Zero,
            1 => CycleCount::One,
            _ => CycleCount::TwoOrMore,
        }
    }

    pub fn simple_cycle_count_at(&self, v: &str) -> Result<CycleCount> {
        Ok(self.simple_cycle_count_idx(self.index_of(v)?))
    }

    /// Every vertex is the base of no cycle or of at least two simple cycles.
    pub fn condition_k(&self) -> bool {
        (0..self.len()).all(|v| self.simple_cycle_count_idx(v) != CycleCount::One)
    }

    /// Picks a name derived from `base` that is not already a vertex.
    pub fn fresh_name(&self, base: &str) -> VertexId {
        let mut name = base.to_owned();
        while self.contains(&name) {
            name.push('\'');
        }
        VertexId(name)
    }

    /// Deletes vertex `i` with its row and column.
    pub fn without_vertex(&self, i: usize) -> Graph {
        let keep: Vec<usize> = (0..self.len()).filter(|&j| j != i).collect();
        self.induced(&keep)
    }

    /// Subgraph on the given vertex indices, in the given order.
    pub fn induced(&self, keep: &[usize]) -> Graph {
        Graph {
            vertices: keep.iter().map(|&i| self.vertices[i].clone()).collect(),
            adjacency: keep
                .iter()
                .map(|&i| keep.iter().map(|&j| self.adjacency[i][j]).collect())
                .collect(),
        }
    }

    pub fn renamed(&self, i: usize, name: VertexId) -> Result<Graph> {
        let mut vertices = self.vertices.clone();
        vertices[i] = name;
        Graph::new(vertices, self.adjacency.clone())
    }

    /// Graph isomorphism ignoring vertex names.
    pub fn is_isomorphic(&self, other: &Graph) -> bool {
        let n = self.len();
        if n != other.len() {
            return false;
        }
        let signature = |g: &Graph, i: usize| {
            let mut row: Vec<ExtNat> = g.adjacency[i].clone();
            let mut col: Vec<ExtNat> = g.adjacency.iter().map(|r| r[i]).collect();
            row.sort();
            col.sort();
            (g.entry(i, i), row, col)
        };
        let sa: Vec<_> = (0..n).map(|i| signature(self, i)).collect();
        let sb: Vec<_> = (0..n).map(|i| signature(other, i)).collect();
        let mut ka = sa.clone();
        let mut kb = sb.clone();
        ka.sort();
        kb.sort();
        if ka != kb {
            return false;
        }

        fn extend(
            a: &Graph,
            b: &Graph,
            sa: &[(ExtNat, Vec<ExtNat>, Vec<ExtNat>)],
            sb: &[(ExtNat, Vec<ExtNat>, Vec<ExtNat>)],
            map: &mut Vec<usize>,
            used: &mut [bool],
        ) -> bool {
            let i = map.len();
            if i == a.len() {
                return true;
            }
            for j in 0..b.len() {
                if used[j] || sa[i] != sb[j] {
                    continue;
                }
                let consistent = map.iter().enumerate().all(|(k, &mk)| {
                    a.entry(i, k) == b.entry(j, mk) && a.entry(k, i) == b.entry(mk, j)
                });
                if !consistent {
                    continue;
                }
                map.push(j);
                used[j] = true;
                if extend(a, b, sa, sb, map, used) {
                    return true;
                }
                map.pop();
                used[j] = false;
            }
            false
        }

        extend(self, other, &sa, &sb, &mut Vec::with_capacity(n), &mut vec![false; n])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialization cannot fail")
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.vertices.iter().enumerate() {
            write!(f, "{v}:")?;
            for a in &self.adjacency[i] {
                write!(f, " {a}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
