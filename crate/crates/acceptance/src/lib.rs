//! Brute-force oracles, written without the library's algorithms, used to
//! cross-check it.

use graphck::{ExtNat, Graph};

/// Entries capped at 2, with ∞ counted as 2.
fn capped(g: &Graph) -> Vec<Vec<u64>> {
    let n = g.len();
    (0..n).map(|i| (0..n).map(|j| g.entry(i, j).capped(2)).collect()).collect()
}

/// Number of first-return cycles at `v`, capped at 2.
///
/// Walks of length `k` leaving and re-entering `v` only at the ends are
/// counted by `A[v,·] Bᵏ⁻² A[·,v]`, where `B` is `A` with `v` deleted. If
/// there are at least two, two of them have length at most `2n + 1`.
pub fn first_return_cycles(g: &Graph, v: usize) -> u64 {
    let a = capped(g);
    let n = g.len();
    let mut total = a[v][v];
    // row[x] = number of walks v → … → x of the current length avoiding v
    let mut row: Vec<u64> = (0..n).map(|x| if x == v { 0 } else { a[v][x] }).collect();
    for _ in 2..=2 * n + 1 {
        total += (0..n).filter(|&x| x != v).map(|x| row[x] * a[x][v]).sum::<u64>();
        if total >= 2 {
            return 2;
        }
        let mut next = vec![0u64; n];
        for x in (0..n).filter(|&x| x != v) {
            for y in (0..n).filter(|&y| y != v) {
                next[y] = (next[y] + row[x] * a[x][y]).min(2);
            }
        }
        row = next;
    }
    total.min(2)
}

pub fn condition_k(g: &Graph) -> bool {
    (0..g.len()).all(|v| first_return_cycles(g, v) != 1)
}

fn is_inf_emitter(g: &Graph, v: usize) -> bool {
    (0..g.len()).any(|w| g.entry(v, w).is_inf())
}

fn is_regular(g: &Graph, v: usize) -> bool {
    !is_inf_emitter(g, v) && (0..g.len()).any(|w| g.entry(v, w).is_positive())
}

pub fn hereditary(g: &Graph, h: &[bool]) -> bool {
    let n = g.len();
    (0..n).all(|u| !h[u] || (0..n).all(|w| h[w] || !g.entry(u, w).is_positive()))
}

pub fn saturated(g: &Graph, h: &[bool]) -> bool {
    let n = g.len();
    (0..n).all(|v| h[v] || !is_regular(g, v) || (0..n).any(|w| !h[w] && g.entry(v, w).is_positive()))
}

pub fn breaking(g: &Graph, h: &[bool]) -> Vec<bool> {
    let n = g.len();
    (0..n)
        .map(|v| {
            let out: ExtNat = (0..n).filter(|&w| !h[w]).map(|w| g.entry(v, w)).sum();
            is_inf_emitter(g, v) && out.is_finite() && out.is_positive()
        })
        .collect()
}

fn bits(mask: u32, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

/// Every admissible pair as `(H, S)` bitmasks, sorted.
pub fn admissible_pairs(g: &Graph) -> Vec<(u32, u32)> {
    let n = g.len();
    let mut out = Vec::new();
    for hm in 0..1u32 << n {
        let h = bits(hm, n);
        if !hereditary(g, &h) || !saturated(g, &h) {
            continue;
        }
        let b = breaking(g, &h);
        for sm in 0..1u32 << n {
            if bits(sm, n).iter().zip(&b).all(|(&s, &b)| !s || b) {
                out.push((hm, sm));
            }
        }
    }
    out.sort_unstable();
    out
}

/// `(H₁,S₁) ≤ (H₂,S₂)` on bitmasks.
pub fn pair_le(a: (u32, u32), b: (u32, u32)) -> bool {
    a.0 & !b.0 == 0 && a.1 & !(b.0 | b.1) == 0
}
