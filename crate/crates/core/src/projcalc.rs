//! Coefficient systems for projections in the stabilized graph algebra.
//!
//! A [`CoefficientSystem`] `{n_(v,T)}` stands for the projection
//! `⊕ n_(v,T) (p_v − Σ_{e∈T} s_e s_e*)`. A [`ProjectionSequence`] is a finite
//! head of systems followed, optionally, by a template repeated countably
//! often with fresh parallel edges in every repetition. The rewrites here
//! turn a full sequence over a stably complete graph into a multiplicity
//! vector `n_v ∈ ℕ ∪ {∞}`, which in turn determines a corner graph.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::canonical::is_stably_complete;
use crate::error::{bail, Error, Result};
use crate::ext_nat::{ExtNat, INF};
use crate::graph::{EdgeRef, Graph, VertexId, VertexSet};
use crate::{K0Class, K0Reducer};

type Key = (VertexId, BTreeSet<EdgeRef>);

#[derive(Serialize, Deserialize)]
struct TermRepr {
    v: VertexId,
    #[serde(rename = "T", default)]
    t: BTreeSet<EdgeRef>,
    n: u64,
}

/// Finitely many terms `(v, T) ↦ n` with `n ≥ 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "Vec<TermRepr>", try_from = "Vec<TermRepr>")]
pub struct CoefficientSystem {
    terms: BTreeMap<Key, u64>,
}

impl From<CoefficientSystem> for Vec<TermRepr> {
    fn from(c: CoefficientSystem) -> Self {
        c.terms.into_iter().map(|((v, t), n)| TermRepr { v, t, n }).collect()
    }
}

impl TryFrom<Vec<TermRepr>> for CoefficientSystem {
    type Error = Error;

    fn try_from(terms: Vec<TermRepr>) -> Result<Self> {
        let mut c = CoefficientSystem::default();
        for t in terms {
            if t.n == 0 {
                bail!(Validation, "multiplicity of ({}, …) must be positive", t.v);
            }
            c.add(t.v, t.t, t.n);
        }
        Ok(c)
    }
}

impl CoefficientSystem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a system from `(v, T, n)` triples.
    pub fn from_terms<I, V>(terms: I) -> Self
    where
        I: IntoIterator<Item = (V, Vec<EdgeRef>, u64)>,
        V: Into<VertexId>,
    {
        let mut c = Self::default();
        for (v, t, n) in terms {
            c.add(v.into(), t.into_iter().collect(), n);
        }
        c
    }

    /// Adds `n` copies of `(v, T)`; zero is a no-op.
    pub fn add(&mut self, v: VertexId, t: BTreeSet<EdgeRef>, n: u64) {
        if n > 0 {
            *self.terms.entry((v, t)).or_insert(0) += n;
        }
    }

    pub fn add_plain(&mut self, v: &VertexId, n: u64) {
        self.add(v.clone(), BTreeSet::new(), n);
    }

    pub fn get(&self, v: &str, t: &BTreeSet<EdgeRef>) -> u64 {
        self.terms
            .iter()
            .find(|((u, s), _)| u.as_str() == v && s == t)
            .map_or(0, |(_, &n)| n)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VertexId, &BTreeSet<EdgeRef>, u64)> {
        self.terms.iter().map(|((v, t), &n)| (v, t, n))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn support(&self) -> VertexSet {
        self.terms.keys().map(|(v, _)| v.clone()).collect()
    }

    pub fn merge(&mut self, other: &CoefficientSystem) {
        for ((v, t), &n) in &other.terms {
            self.add(v.clone(), t.clone(), n);
        }
    }

    /// Checks edge membership and that only infinite emitters carry edges.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        for ((v, t), _) in &self.terms {
            let vi = g.index_of(v.as_str())?;
            if !t.is_empty() && !g.is_infinite_emitter(vi) {
                bail!(Validation, "{v} carries edges but is not an infinite emitter");
            }
            for e in t {
                if e.src != *v {
                    bail!(Validation, "edge {e} does not start at {v}");
                }
                let y = g.index_of(e.dst.as_str())?;
                if ExtNat::Fin(e.index) >= g.entry(vi, y) {
                    bail!(Validation, "edge {e} does not exist");
                }
            }
        }
        Ok(())
    }

    /// `Σ n (χ_v − Σ_{e∈T} χ_{r(e)})` as an integer vector over the vertices.
    pub fn class_vector(&self, g: &Graph) -> Result<Vec<BigInt>> {
        let mut x = vec![BigInt::from(0); g.len()];
        for ((v, t), &n) in &self.terms {
            let n = BigInt::from(n);
            x[g.index_of(v.as_str())?] += &n;
            for e in t {
                x[g.index_of(e.dst.as_str())?] -= &n;
            }
        }
        Ok(x)
    }
}

/// `q₁, q₂, …` as explicit head systems followed by an optional template
/// that repeats forever.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionSequence {
    pub head: Vec<CoefficientSystem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<CoefficientSystem>,
}

impl ProjectionSequence {
    pub fn finite(head: Vec<CoefficientSystem>) -> Self {
        ProjectionSequence { head, tail: None }
    }

    pub fn single(c: CoefficientSystem) -> Self {
        Self::finite(vec![c])
    }

    pub fn with_tail(head: Vec<CoefficientSystem>, tail: CoefficientSystem) -> Self {
        ProjectionSequence { head, tail: Some(tail) }
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        for c in &self.head {
            c.validate(g)?;
        }
        if let Some(t) = &self.tail {
            t.validate(g)?;
            for (_, edges, _) in t.iter() {
                for e in edges {
                    if !g.get(e.src.as_str(), e.dst.as_str())?.is_inf() {
                        bail!(Validation, "tail edge {e} has only finitely many parallels");
                    }
                }
            }
        }
        Ok(())
    }

    pub fn support(&self) -> VertexSet {
        let mut s: VertexSet = self.head.iter().flat_map(|c| c.support()).collect();
        if let Some(t) = &self.tail {
            s.extend(t.support());
        }
        s
    }

    fn head_indices(&self) -> BTreeMap<(VertexId, VertexId), BTreeSet<u64>> {
        let mut used: BTreeMap<(VertexId, VertexId), BTreeSet<u64>> = BTreeMap::new();
        for c in &self.head {
            for (_, t, _) in c.iter() {
                for e in t {
                    used.entry((e.src.clone(), e.dst.clone())).or_default().insert(e.index);
                }
            }
        }
        used
    }

    /// Repetition `r` (from 0) of the tail with concrete edges. On each pair
    /// `(v, y)` the template's `m` edges occupy slots `0..m`; slot `j` of
    /// repetition `r` becomes index `b + 2(r·m + j)`, where `b` is the least
    /// even index above every head index on that pair.
    pub fn tail_repetition(&self, r: u64) -> Option<CoefficientSystem> {
        let tail = self.tail.as_ref()?;
        let used = self.head_indices();
        let mut slots: BTreeMap<(VertexId, VertexId), Vec<u64>> = BTreeMap::new();
        for (_, t, _) in tail.iter() {
            for e in t {
                slots.entry((e.src.clone(), e.dst.clone())).or_default().push(e.index);
            }
        }
        for s in slots.values_mut() {
            s.sort_unstable();
            s.dedup();
        }
        let concrete = |e: &EdgeRef| {
            let pair = (e.src.clone(), e.dst.clone());
            let base = used.get(&pair).and_then(|s| s.last()).map_or(0, |&m| (m + 2) & !1);
            let s = &slots[&pair];
            let j = s.binary_search(&e.index).expect("template edge has a slot") as u64;
            EdgeRef { index: base + 2 * (r * s.len() as u64 + j), ..e.clone() }
        };
        let mut out = CoefficientSystem::new();
        for (v, t, n) in tail.iter() {
            out.add(v.clone(), t.iter().map(concrete).collect(), n);
        }
        Some(out)
    }

    /// Sum of the head systems as one system.
    pub fn head_total(&self) -> CoefficientSystem {
        let mut c = CoefficientSystem::new();
        for h in &self.head {
            c.merge(h);
        }
        c
    }
}

/// `n_v` for every vertex.
pub type MultiplicityVector = BTreeMap<VertexId, ExtNat>;

fn require_stably_complete(g: &Graph) -> Result<()> {
    let report = is_stably_complete(g);
    if !report.satisfied {
        bail!(Domain, "graph is not stably complete: {:?}", report.violations);
    }
    Ok(())
}

pub fn k0_class_of(g: &Graph, c: &CoefficientSystem) -> Result<K0Class> {
    Ok(K0Reducer::new(g).reduce(&c.class_vector(g)?))
}

/// Class of the sum of all head systems.
pub fn head_class(g: &Graph, s: &ProjectionSequence) -> Result<K0Class> {
    k0_class_of(g, &s.head_total())
}

fn closure_is_everything(g: &Graph, support: &VertexSet) -> Result<bool> {
    let h = g.hereditary_closure(support)?;
    Ok(g.saturate(&h)?.len() == g.len())
}

/// The saturated hereditary set generated by the support is everything.
pub fn is_full(g: &Graph, s: &ProjectionSequence) -> Result<bool> {
    require_stably_complete(g)?;
    closure_is_everything(g, &s.support())
}

/// Rewrites the sequence so that its first system has a term at every
/// vertex: a prefix is merged until the first system alone is full, then
/// terms are pushed along edges one vertex at a time.
pub fn fullify(g: &Graph, s: &ProjectionSequence) -> Result<ProjectionSequence> {
    require_stably_complete(g)?;
    s.validate(g)?;
    if !closure_is_everything(g, &s.support())? {
        bail!(Domain, "sequence is not full");
    }
    let mut out = s.clone();
    if out.head.is_empty() {
        out.head.push(CoefficientSystem::new());
    }
    if out.head[0].support().len() == g.len() {
        return Ok(out);
    }
    while !closure_is_everything(g, &out.head[0].support())? && out.head.len() > 1 {
        let next = out.head.remove(1);
        out.head[0].merge(&next);
    }
    if !closure_is_everything(g, &out.head[0].support())? {
        let rep = out.tail_repetition(0).expect("fullness comes from the tail");
        out.head[0].merge(&rep);
    }

    let first = &mut out.head[0];
    loop {
        let support = first.support();
        if support.len() == g.len() {
            break;
        }
        let inside: Vec<usize> = (0..g.len()).filter(|&i| support.contains(g.vertex(i))).collect();
        let (v, w) = (0..g.len())
            .filter(|&v| !support.contains(g.vertex(v)))
            .find_map(|v| inside.iter().find(|&&w| g.entry(w, v).is_positive()).map(|&w| (v, w)))
            .expect("the closure of a full support is everything");
        let (vid, wid) = (g.vertex(v).clone(), g.vertex(w).clone());
        if g.is_regular(w) {
            // p_w ~ p_w ⊕ p_v ⊕ ⊕_{e ∉ {f, f'}} p_{r(e)}
            first.add_plain(&vid, 1);
            for y in 0..g.len() {
                let count = g.entry(w, y).finite().expect("regular rows are finite")
                    - u64::from(y == v)
                    - u64::from(y == w);
                first.add_plain(g.vertex(y), count);
            }
        } else {
            let (t, n) = first
                .terms
                .iter()
                .find(|((u, _), _)| *u == wid)
                .map(|((_, t), &n)| (t.clone(), n))
                .expect("w is in the support");
            let taken: BTreeSet<u64> = t.iter().filter(|e| e.dst == vid).map(|e| e.index).collect();
            let index = (0..).find(|i| !taken.contains(i)).unwrap();
            if ExtNat::Fin(index) >= g.entry(w, v) {
                bail!(Domain, "no free edge {wid} → {vid}");
            }
            first.terms.remove(&(wid.clone(), t.clone()));
            let mut grown = t;
            grown.insert(EdgeRef::new(wid.clone(), vid.clone(), index));
            first.add(wid, grown, n);
            first.add_plain(&vid, n);
        }
    }
    Ok(out)
}

fn allocate(
    g: &Graph,
    used: &mut BTreeMap<(VertexId, VertexId), BTreeSet<u64>>,
    e: &EdgeRef,
) -> Result<EdgeRef> {
    let pair = (e.src.clone(), e.dst.clone());
    let mult = g.get(e.src.as_str(), e.dst.as_str())?;
    let taken = used.entry(pair).or_default();
    let index = if mult.is_inf() {
        if e.index % 2 == 0 && !taken.contains(&e.index) {
            e.index
        } else {
            (0..).step_by(2).find(|i| !taken.contains(i)).unwrap()
        }
    } else if !taken.contains(&e.index) {
        e.index
    } else {
        let limit = mult.finite().unwrap();
        match (0..limit).find(|i| !taken.contains(i)) {
            Some(i) => i,
            None => bail!(Domain, "edges {} → {} exhausted", e.src, e.dst),
        }
    };
    taken.insert(index);
    Ok(EdgeRef { index, ..e.clone() })
}

fn partition_system(
    g: &Graph,
    c: &CoefficientSystem,
    used: &mut BTreeMap<(VertexId, VertexId), BTreeSet<u64>>,
) -> Result<CoefficientSystem> {
    let mut out = CoefficientSystem::new();
    for ((v, t), &n) in &c.terms {
        let mut fresh = BTreeSet::new();
        for e in t {
            fresh.insert(allocate(g, used, e)?);
        }
        out.add(v.clone(), fresh, n);
    }
    Ok(out)
}

/// Reassigns parallel edges so that distinct terms use disjoint edge sets
/// and only even indices are used on infinite pairs.
pub fn make_partitioned(g: &Graph, s: &ProjectionSequence) -> Result<ProjectionSequence> {
    s.validate(g)?;
    let mut used = BTreeMap::new();
    let head = s.head.iter().map(|c| partition_system(g, c, &mut used)).collect::<Result<_>>()?;
    let tail = match &s.tail {
        Some(t) => Some(partition_system(g, t, &mut BTreeMap::new())?),
        None => None,
    };
    Ok(ProjectionSequence { head, tail })
}

/// Checks both partition clauses on the head and the first `repetitions`
/// tail repetitions: distinct terms share no edge, and no odd index is used
/// on an infinite pair, which leaves infinitely many parallels free.
pub fn check_partitioned(g: &Graph, s: &ProjectionSequence, repetitions: u64) -> Result<(), String> {
    let mut systems: Vec<CoefficientSystem> = s.head.clone();
    if s.tail.is_some() {
        systems.extend((0..repetitions).filter_map(|r| s.tail_repetition(r)));
    }
    let mut owner: BTreeMap<&EdgeRef, (usize, &Key)> = BTreeMap::new();
    for (k, c) in systems.iter().enumerate() {
        for key in c.terms.keys() {
            for e in &key.1 {
                if let Some((k0, key0)) = owner.insert(e, (k, key)) {
                    if k0 != k || key0 != key {
                        return Err(format!("edge {e} is shared by two terms"));
                    }
                }
                let inf = g
                    .get(e.src.as_str(), e.dst.as_str())
                    .map_err(|err| err.to_string())?
                    .is_inf();
                if inf && e.index % 2 == 1 {
                    return Err(format!("edge {e} uses an odd index on an infinite pair"));
                }
            }
        }
    }
    Ok(())
}

/// How the edge sets at one vertex spread over the sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeSpread {
    Empty,
    Finite,
    Infinite,
}

pub fn edge_spread(s: &ProjectionSequence, v: &VertexId) -> EdgeSpread {
    let carries = |c: &CoefficientSystem| c.iter().any(|(u, t, _)| u == v && !t.is_empty());
    if s.tail.as_ref().is_some_and(carries) {
        EdgeSpread::Infinite
    } else if s.head.iter().any(carries) {
        EdgeSpread::Finite
    } else {
        EdgeSpread::Empty
    }
}

/// Replaces `n (p_v − Σ_T s_e s_e*)` using a regular `w` with loop `l` and
/// edges `gᵢ : w → r(eᵢ)`: the result is `n p_v` plus, for each `eᵢ`, one
/// `p_{r(e)}` for every `e ∈ s⁻¹(w) ∖ {l, gᵢ}`.
fn absorb_through(g: &Graph, c: &CoefficientSystem, v: &VertexId, w: usize) -> Result<CoefficientSystem> {
    let mut out = CoefficientSystem::new();
    for ((u, t), &n) in &c.terms {
        if u != v || t.is_empty() {
            out.add(u.clone(), t.clone(), n);
            continue;
        }
        out.add_plain(v, n);
        for e in t {
            let y = g.index_of(e.dst.as_str())?;
            // gᵢ must differ from the loop l; when r(eᵢ) = w it is a second loop.
            let needed = if y == w { 2 } else { 1 };
            if g.entry(w, y) < ExtNat::Fin(needed) {
                bail!(Domain, "{} has no spare edge to {}", g.vertex(w), e.dst);
            }
            for z in 0..g.len() {
                let a = g.entry(w, z).finite().expect("regular rows are finite");
                let count = a - u64::from(z == w) - u64::from(z == y);
                out.add_plain(g.vertex(z), n * count);
            }
        }
    }
    Ok(out)
}

fn emitter_index(g: &Graph, v: &str) -> Result<usize> {
    let vi = g.index_of(v)?;
    if !g.is_infinite_emitter(vi) {
        bail!(Domain, "{v} is not an infinite emitter");
    }
    Ok(vi)
}

/// Removes every nonempty `T` at an infinite emitter supporting a loop.
pub fn eliminate_loop_emitter(g: &Graph, s: &ProjectionSequence, v: &str) -> Result<ProjectionSequence> {
    require_stably_complete(g)?;
    s.validate(g)?;
    let vi = emitter_index(g, v)?;
    if !g.has_loop(vi) {
        bail!(Domain, "{v} does not support a loop");
    }
    let dom = g.domination_matrix();
    let Some(w) = (0..g.len()).find(|&w| g.is_regular(w) && dom[vi][w] && dom[w][vi]) else {
        bail!(Domain, "{v} has no regular companion");
    };
    let vid = g.vertex(vi).clone();
    let head = s.head.iter().map(|c| absorb_through(g, c, &vid, w)).collect::<Result<_>>()?;
    let tail = s.tail.as_ref().map(|c| absorb_through(g, c, &vid, w)).transpose()?;
    Ok(ProjectionSequence { head, tail })
}

/// Removes the finitely many nonempty `T` at a loopless infinite emitter
/// dominated by a regular vertex. The head is first merged up to the last
/// system carrying such a `T`.
pub fn eliminate_dominated_emitter(g: &Graph, s: &ProjectionSequence, v: &str) -> Result<ProjectionSequence> {
    require_stably_complete(g)?;
    s.validate(g)?;
    let vi = emitter_index(g, v)?;
    if g.has_loop(vi) {
        bail!(Domain, "{v} supports a loop");
    }
    let vid = g.vertex(vi).clone();
    if edge_spread(s, &vid) == EdgeSpread::Infinite {
        bail!(Domain, "{v} carries infinitely many edges");
    }
    let dom = g.domination_matrix();
    let dominators: Vec<usize> = (0..g.len()).filter(|&w| g.is_regular(w) && dom[w][vi]).collect();
    if dominators.is_empty() {
        bail!(Domain, "no regular vertex dominates {v}");
    }
    let carries = |c: &CoefficientSystem| c.iter().any(|(u, t, _)| *u == vid && !t.is_empty());
    let Some(last) = s.head.iter().rposition(carries) else {
        return Ok(s.clone());
    };
    let mut merged = CoefficientSystem::new();
    for c in &s.head[..=last] {
        merged.merge(c);
    }
    let empty = BTreeSet::new();
    let Some(&w) = dominators.iter().find(|&&w| merged.get(g.vertex(w).as_str(), &empty) > 0) else {
        bail!(Domain, "no regular dominator of {v} appears in the merged prefix");
    };
    let mut head = vec![absorb_through(g, &merged, &vid, w)?];
    head.extend(s.head[last + 1..].iter().cloned());
    Ok(ProjectionSequence { head, tail: s.tail.clone() })
}

fn push_past(
    g: &Graph,
    c: &CoefficientSystem,
    v: &VertexId,
    t_v: &BTreeSet<EdgeRef>,
    used: &mut BTreeMap<(VertexId, VertexId), BTreeSet<u64>>,
) -> Result<CoefficientSystem> {
    let mut out = CoefficientSystem::new();
    for ((u, t), &n) in &c.terms {
        if u == v {
            out.add_plain(v, n);
            for e in t_v.difference(t) {
                out.add_plain(&e.dst, n);
            }
            continue;
        }
        let into_v = t.iter().filter(|e| e.dst == *v).count();
        if into_v == 0 {
            out.add(u.clone(), t.clone(), n);
            continue;
        }
        let mut grown = t.clone();
        for _ in 0..into_v {
            for f in t_v {
                if !g.get(u.as_str(), f.dst.as_str())?.is_inf() {
                    bail!(Domain, "{u} does not emit infinitely to {}", f.dst);
                }
                let taken = used.entry((u.clone(), f.dst.clone())).or_default();
                let index = (0..).step_by(2).find(|i| !taken.contains(i)).unwrap();
                taken.insert(index);
                grown.insert(EdgeRef::new(u.clone(), f.dst.clone(), index));
            }
        }
        out.add(u.clone(), grown, n);
    }
    Ok(out)
}

/// Applies the automorphism that empties `T_v` at a loopless infinite
/// emitter no regular vertex dominates. Terms `(u, U)` with edges into `v`
/// gain fresh parallels of `T_v`; terms `(v, T')` become `p_v` plus one
/// `p_{r(e)}` for each `e ∈ T_v ∖ T'`.
///
/// This changes the `K₀` class of the head: `x ↦ x + c_v(x) Σ_{f∈T_v} χ_{r(f)}`
/// where `c_v(x)` is the coefficient of `χ_v`.
pub fn eliminate_undominated_emitter(g: &Graph, s: &ProjectionSequence, v: &str) -> Result<ProjectionSequence> {
    require_stably_complete(g)?;
    s.validate(g)?;
    let vi = emitter_index(g, v)?;
    if g.has_loop(vi) {
        bail!(Domain, "{v} supports a loop");
    }
    let vid = g.vertex(vi).clone();
    if edge_spread(s, &vid) == EdgeSpread::Infinite {
        bail!(Domain, "{v} carries infinitely many edges");
    }
    let dom = g.domination_matrix();
    if (0..g.len()).any(|w| g.is_regular(w) && dom[w][vi]) {
        bail!(Domain, "a regular vertex dominates {v}");
    }
    let t_v: BTreeSet<EdgeRef> = s
        .head
        .iter()
        .flat_map(|c| c.iter().filter(|(u, _, _)| **u == vid).flat_map(|(_, t, _)| t.iter().cloned()))
        .collect();
    if t_v.is_empty() {
        return Ok(s.clone());
    }
    let mut used = s.head_indices();
    let head = s.head.iter().map(|c| push_past(g, c, &vid, &t_v, &mut used)).collect::<Result<_>>()?;
    let tail = match &s.tail {
        Some(c) => {
            let mut local = BTreeMap::new();
            for (_, t, _) in c.iter() {
                for e in t {
                    local.entry((e.src.clone(), e.dst.clone())).or_insert_with(BTreeSet::new).insert(e.index);
                }
            }
            Some(push_past(g, c, &vid, &t_v, &mut local)?)
        }
        None => None,
    };
    Ok(ProjectionSequence { head, tail })
}

/// Reads off `n_v` once nonempty edge sets survive only below vertices
/// carrying infinitely many of them.
pub fn to_multiplicities(g: &Graph, s: &ProjectionSequence) -> Result<MultiplicityVector> {
    require_stably_complete(g)?;
    s.validate(g)?;
    let n = g.len();
    let dom = g.domination_matrix();
    let reaches = |w: usize, v: usize| w == v || dom[w][v];
    let spread: Vec<EdgeSpread> = (0..n).map(|v| edge_spread(s, g.vertex(v))).collect();
    let mut out = MultiplicityVector::new();
    for v in 0..n {
        let vid = g.vertex(v);
        if spread[v] != EdgeSpread::Empty
            && !(0..n).any(|w| reaches(w, v) && spread[w] == EdgeSpread::Infinite)
        {
            bail!(Domain, "{vid} carries finitely many edges with nothing infinite above it");
        }
        let above_empty = (0..n).filter(|&w| w != v && reaches(w, v)).all(|w| spread[w] == EdgeSpread::Empty);
        let value = if above_empty && spread[v] == EdgeSpread::Empty {
            let empty = BTreeSet::new();
            let in_tail = s.tail.as_ref().is_some_and(|t| t.get(vid.as_str(), &empty) > 0);
            if in_tail {
                INF
            } else {
                ExtNat::Fin(s.head.iter().map(|c| c.get(vid.as_str(), &empty)).sum())
            }
        } else if above_empty && spread[v] == EdgeSpread::Infinite {
            INF
        } else {
            ExtNat::ONE
        };
        out.insert(vid.clone(), value);
    }
    Ok(out)
}

/// Sets `n_v = 1` below every vertex with `n_w = ∞`; the projection class
/// does not change.
pub fn normalize_multiplicities(g: &Graph, m: &MultiplicityVector) -> Result<MultiplicityVector> {
    let dom = g.domination_matrix();
    let mut out = m.clone();
    for v in 0..g.len() {
        let below_inf = (0..g.len())
            .filter(|&w| w != v && dom[w][v])
            .any(|w| m.get(g.vertex(w)).is_some_and(|x| x.is_inf()));
        if below_inf {
            out.insert(g.vertex(v).clone(), ExtNat::ONE);
        }
    }
    Ok(out)
}

/// One named stage of [`corner_pipeline_traced`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub step: String,
    pub sequence: ProjectionSequence,
}

pub fn corner_pipeline(g: &Graph, s: &ProjectionSequence) -> Result<MultiplicityVector> {
    Ok(corner_pipeline_traced(g, s)?.0)
}

/// Fullify, partition, eliminate at looped, then dominated, then
/// undominated infinite emitters, and read off multiplicities.
pub fn corner_pipeline_traced(g: &Graph, s: &ProjectionSequence) -> Result<(MultiplicityVector, Vec<Stage>)> {
    require_stably_complete(g)?;
    let mut stages = Vec::new();
    let mut cur = fullify(g, s)?;
    stages.push(Stage { step: "fullify".into(), sequence: cur.clone() });
    cur = make_partitioned(g, &cur)?;
    stages.push(Stage { step: "partition".into(), sequence: cur.clone() });

    let dom = g.domination_matrix();
    let emitters: Vec<usize> = (0..g.len()).filter(|&v| g.is_infinite_emitter(v)).collect();
    for &v in emitters.iter().filter(|&&v| g.has_loop(v)) {
        if edge_spread(&cur, g.vertex(v)) != EdgeSpread::Empty {
            cur = eliminate_loop_emitter(g, &cur, g.vertex(v).as_str())?;
            stages.push(Stage { step: format!("loop {}", g.vertex(v)), sequence: cur.clone() });
        }
    }
    let regular_above = |v: usize| (0..g.len()).any(|w| g.is_regular(w) && dom[w][v]);
    for &v in emitters.iter().filter(|&&v| !g.has_loop(v) && regular_above(v)) {
        if edge_spread(&cur, g.vertex(v)) == EdgeSpread::Finite {
            cur = eliminate_dominated_emitter(g, &cur, g.vertex(v).as_str())?;
            stages.push(Stage { step: format!("dominated {}", g.vertex(v)), sequence: cur.clone() });
        }
    }
    for &v in emitters.iter().filter(|&&v| !g.has_loop(v) && !regular_above(v)) {
        if edge_spread(&cur, g.vertex(v)) == EdgeSpread::Finite {
            cur = eliminate_undominated_emitter(g, &cur, g.vertex(v).as_str())?;
            stages.push(Stage { step: format!("undominated {}", g.vertex(v)), sequence: cur.clone() });
        }
    }
    Ok((to_multiplicities(g, &cur)?, stages))
}
