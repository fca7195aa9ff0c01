use std::collections::BTreeSet;

use graphck::corners::{corner_graph, realize, unitize};
use graphck::corpus::{random_full_sequence, random_stably_complete, rng};
use graphck::projcalc::*;
use graphck::{k0_reduce, k_groups, EdgeRef, ExtNat, Graph};
use num_bigint::BigInt;

fn edges_at(s: &ProjectionSequence, v: &str) -> BTreeSet<EdgeRef> {
    s.head
        .iter()
        .flat_map(|c| c.iter().filter(|(u, _, _)| u.as_str() == v).flat_map(|(_, t, _)| t.clone()))
        .collect()
}

/// `x ↦ x + c_v(x) Σ_{f∈T} χ_{r(f)}`.
fn pushed_class(g: &Graph, x: &[BigInt], v: usize, t: &BTreeSet<EdgeRef>) -> Vec<BigInt> {
    let mut y = x.to_vec();
    for f in t {
        let r = g.index_of(f.dst.as_str()).unwrap();
        y[r] += &x[v];
    }
    y
}

#[test]
fn pipeline_stages_over_corpus() {
    let mut r = rng(21);
    let (mut infinite_heads, mut realized) = (0, 0);
    for _ in 0..300 {
        let g = random_stably_complete(&mut r, 5);
        let s = random_full_sequence(&mut r, &g);
        // fullify pulls one tail repetition into the head when the head
        // alone is not full.
        let head_support = s.head_total().support();
        let head_full = g.hereditary_closure(&head_support).unwrap().len() == g.len();
        let mut x = s.head_total().class_vector(&g).unwrap();
        if !head_full {
            for (a, b) in x.iter_mut().zip(s.tail.as_ref().unwrap().class_vector(&g).unwrap()) {
                *a += b;
            }
        }
        let class = k0_reduce(&g, &x);

        let (m, stages) = corner_pipeline_traced(&g, &s).unwrap_or_else(|e| panic!("{e}\n{g}\n{s:?}"));
        let full = &stages[0].sequence;
        assert_eq!(full.head[0].support().len(), g.len());
        assert_eq!(head_class(&g, full).unwrap(), class);
        let part = &stages[1].sequence;
        check_partitioned(&g, part, 4).unwrap();
        assert_eq!(head_class(&g, part).unwrap(), class);

        for pair in stages[1..].windows(2) {
            let (before, after) = (&pair[0].sequence, &pair[1].sequence);
            let x = before.head_total().class_vector(&g).unwrap();
            let y = after.head_total().class_vector(&g).unwrap();
            let step = &pair[1].step;
            let expected = match step.strip_prefix("undominated ") {
                Some(v) => pushed_class(&g, &x, g.index_of(v).unwrap(), &edges_at(before, v)),
                None => x,
            };
            assert_eq!(k0_reduce(&g, &y), k0_reduce(&g, &expected), "{step}\n{g}");
        }

        assert!(m.values().all(|n| n.is_positive()));
        let cg = corner_graph(&g, &m).unwrap();
        if !cg.heads_finite() {
            infinite_heads += 1;
        } else if cg.spike_count() <= ExtNat::Fin(30) {
            assert_eq!(k_groups(&realize(&cg).unwrap()), k_groups(&g));
            realized += 1;
        }
        let u = unitize(&cg).unwrap();
        assert_eq!(u.len(), g.len() + 1);
        assert_eq!(u.is_regular(g.len()), cg.heads_finite() && cg.spike_count().is_positive());
    }
    assert!(infinite_heads > 0 && realized > 50, "{infinite_heads} {realized}");
}

#[test]
fn partitioning_is_idempotent() {
    let mut r = rng(4);
    for _ in 0..200 {
        let g = random_stably_complete(&mut r, 5);
        let s = random_full_sequence(&mut r, &g);
        let p = make_partitioned(&g, &s).unwrap();
        assert_eq!(make_partitioned(&g, &p).unwrap(), p);
        check_partitioned(&g, &p, 4).unwrap();
    }
}

#[test]
fn sequences_round_trip_through_json() {
    let mut r = rng(9);
    for _ in 0..50 {
        let g = random_stably_complete(&mut r, 5);
        let s = random_full_sequence(&mut r, &g);
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<ProjectionSequence>(&text).unwrap(), s);
    }
}
