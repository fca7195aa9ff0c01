//! Integer-matrix K-theory of graphs.
//!
//! For a graph with vertex set `V` and regular vertices `V_reg`, the matrix
//! `R` has one column per regular `v`, equal to `A(v,·)ᵗ − χ_v`. Then
//! `K₀ = coker R` and `K₁ = ker R`. Both are read off a Smith normal form.
//! Everything here is generic over the integer scalar; the crate root fixes
//! it to [`num_bigint::BigInt`] because column operations can grow entries.

use std::fmt;

use num_integer::Integer;
use num_traits::{FromPrimitive, Signed};
use serde::{Deserialize, Serialize};

use crate::graph::Graph;

/// Integer scalars usable by the Smith normal form.
pub trait Scalar: Integer + Signed + Clone + fmt::Debug + fmt::Display + FromPrimitive {}

impl<T> Scalar for T where T: Integer + Signed + Clone + fmt::Debug + fmt::Display + FromPrimitive {}

/// Dense row-major matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| T::from_i64(x).expect("scalar too narrow")).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Matrix::<T>::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a.clone() * other[(k, j)].clone();
                    out[(i, j)] = out[(i, j)].clone() + prod;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// row[dst] += k · row[src]
    fn add_row(&mut self, dst: usize, src: usize, k: &T) {
        for j in 0..self.cols {
            let v = self[(src, j)].clone() * k.clone();
            self[(dst, j)] = self[(dst, j)].clone() + v;
        }
    }

    /// col[dst] += k · col[src]
    fn add_col(&mut self, dst: usize, src: usize, k: &T) {
        for i in 0..self.rows {
            let v = self[(i, src)].clone() * k.clone();
            self[(i, dst)] = self[(i, dst)].clone() + v;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            self[(i, j)] = -self[(i, j)].clone();
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:?}", self.data[i * self.cols + j])?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn determinant<T: Scalar>(m: &Matrix<T>) -> T {
    assert_eq!(m.rows, m.cols, "determinant of a non-square matrix");
    let n = m.rows;
    let mut a = m.clone();
    let mut sign = T::one();
    let mut prev = T::one();
    for k in 0..n {
        if a[(k, k)].is_zero() {
            match (k + 1..n).find(|&i| !a[(i, k)].is_zero()) {
                Some(i) => {
                    a.swap_rows(i, k);
                    sign = -sign;
                }
                None => return T::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = a[(i, j)].clone() * a[(k, k)].clone() - a[(i, k)].clone() * a[(k, j)].clone();
                a[(i, j)] = num / prev.clone();
            }
        }
        prev = a[(k, k)].clone();
    }
    if n == 0 {
        T::one()
    } else {
        sign * a[(n - 1, n - 1)].clone()
    }
}

/// `s = u · m · v` with `s` diagonal, nonnegative, and each diagonal entry
/// dividing the next; `u` and `v` are unimodular.
#[derive(Clone, Debug)]
pub struct SmithForm<T> {
    pub s: Matrix<T>,
    pub u: Matrix<T>,
    pub v: Matrix<T>,
}

impl<T: Scalar> SmithForm<T> {
    pub fn diagonal(&self) -> Vec<T> {
        (0..self.s.rows.min(self.s.cols)).map(|i| self.s[(i, i)].clone()).collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().iter().filter(|d| !d.is_zero()).count()
    }

    /// Checks every defining property against the original matrix.
    pub fn is_valid_for(&self, m: &Matrix<T>) -> bool {
        if self.u.mul(m).mul(&self.v) != self.s {
            return false;
        }
        if !determinant(&self.u).abs().is_one() || !determinant(&self.v).abs().is_one() {
            return false;
        }
        for i in 0..self.s.rows {
            for j in 0..self.s.cols {
                if i != j && !self.s[(i, j)].is_zero() {
                    return false;
                }
            }
        }
        let d = self.diagonal();
        d.iter().all(|x| !x.is_negative())
            && d.windows(2).all(|w| {
                if w[0].is_zero() {
                    w[1].is_zero()
                } else {
                    w[1].is_multiple_of(&w[0])
                }
            })
    }
}

/// Smith normal form with transforms. The result is checked against `m`
/// before it is returned.
pub fn smith_normal_form<T: Scalar>(m: &Matrix<T>) -> SmithForm<T> {
    let (rows, cols) = (m.rows, m.cols);
    let mut s = m.clone();
    let mut u = Matrix::identity(rows);
    let mut v = Matrix::identity(cols);

    for t in 0..rows.min(cols) {
        loop {
            // Pivot: smallest nonzero magnitude in the trailing block.
            let mut pivot: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    let x = &s[(i, j)];
                    if !x.is_zero() && pivot.map_or(true, |(pi, pj)| x.abs() < s[(pi, pj)].abs()) {
                        pivot = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = pivot else {
                return finish(m, s, u, v);
            };
            s.swap_rows(t, pi);
            u.swap_rows(t, pi);
            s.swap_cols(t, pj);
            v.swap_cols(t, pj);

            let mut dirty = false;
            for i in t + 1..rows {
                let q = s[(i, t)].div_floor(&s[(t, t)]);
                if !q.is_zero() {
                    let k = -q;
                    s.add_row(i, t, &k);
                    u.add_row(i, t, &k);
                }
                dirty |= !s[(i, t)].is_zero();
            }
            for j in t + 1..cols {
                let q = s[(t, j)].div_floor(&s[(t, t)]);
                if !q.is_zero() {
                    let k = -q;
                    s.add_col(j, t, &k);
                    v.add_col(j, t, &k);
                }
                dirty |= !s[(t, j)].is_zero();
            }
            if dirty {
                continue;
            }
            // Divisibility: fold an offending row into the pivot row.
            let offender = (t + 1..rows)
                .find(|&i| (t + 1..cols).any(|j| !s[(i, j)].is_multiple_of(&s[(t, t)])));
            match offender {
                Some(i) => {
                    let one = T::one();
                    s.add_row(t, i, &one);
                    u.add_row(t, i, &one);
                }
                None => break,
            }
        }
        if s[(t, t)].is_negative() {
            s.negate_row(t);
            u.negate_row(t);
        }
    }
    finish(m, s, u, v)
}

fn finish<T: Scalar>(m: &Matrix<T>, s: Matrix<T>, u: Matrix<T>, v: Matrix<T>) -> SmithForm<T> {
    let form = SmithForm { s, u, v };
    assert!(form.is_valid_for(m), "Smith normal form failed its own check");
    form
}

/// `K₀` as `ℤ^free ⊕ ⨁ ℤ/dᵢ` together with the rank of `K₁ ≅ ℤ^k1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KGroups<T> {
    pub k0_invariant_factors: Vec<T>,
    pub k0_free_rank: usize,
    pub k1_free_rank: usize,
}

impl<T: fmt::Display> fmt::Display for KGroups<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if self.k0_free_rank > 0 {
            parts.push(power("ℤ", self.k0_free_rank));
        }
        parts.extend(self.k0_invariant_factors.iter().map(|d| format!("ℤ/{d}")));
        let k0 = if parts.is_empty() { "0".to_owned() } else { parts.join(" ⊕ ") };
        let k1 = if self.k1_free_rank == 0 { "0".to_owned() } else { power("ℤ", self.k1_free_rank) };
        write!(f, "K0 = {k0}, K1 = {k1}")
    }
}

fn power(base: &str, n: usize) -> String {
    if n == 1 {
        base.to_owned()
    } else {
        format!("{base}^{n}")
    }
}

/// The matrix whose cokernel is `K₀`: rows are all vertices, columns are the
/// regular vertices.
pub fn reg_matrix_in<T: Scalar>(g: &Graph) -> Matrix<T> {
    let regular: Vec<usize> = (0..g.len()).filter(|&v| g.is_regular(v)).collect();
    let mut m = Matrix::zeros(g.len(), regular.len());
    for (c, &v) in regular.iter().enumerate() {
        for x in 0..g.len() {
            let a = g.entry(v, x).finite().expect("regular rows are finite");
            let mut entry = T::from_u64(a).expect("scalar too narrow");
            if x == v {
                entry = entry - T::one();
            }
            m[(x, c)] = entry;
        }
    }
    m
}

pub fn k_groups_in<T: Scalar>(g: &Graph) -> KGroups<T> {
    let m = reg_matrix_in::<T>(g);
    let snf = smith_normal_form(&m);
    let rank = snf.rank();
    KGroups {
        k0_invariant_factors: snf.diagonal().into_iter().filter(|d| !d.is_zero() && !d.is_one()).collect(),
        k0_free_rank: m.rows - rank,
        k1_free_rank: m.cols - rank,
    }
}

/// A `K₀` element in the coordinates of the Smith presentation: torsion
/// coordinates are reduced to `0 ≤ x < dᵢ`, free coordinates are kept.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct K0ClassOf<T> {
    pub coords: Vec<T>,
}

impl<T: Scalar> K0ClassOf<T> {
    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }
}

/// Reduces vectors over the vertices of one graph to canonical `K₀`
/// residues. Build once per graph when reducing many vectors.
#[derive(Clone, Debug)]
pub struct K0Reducer<T> {
    u: Matrix<T>,
    diagonal: Vec<T>,
}

impl<T: Scalar> K0Reducer<T> {
    pub fn new(g: &Graph) -> Self {
        let snf = smith_normal_form(&reg_matrix_in::<T>(g));
        let mut diagonal = snf.diagonal();
        diagonal.resize(g.len(), T::zero());
        K0Reducer { u: snf.u, diagonal }
    }

    pub fn reduce(&self, x: &[T]) -> K0ClassOf<T> {
        let y = self.u.mul_vec(x);
        let coords = y
            .into_iter()
            .zip(&self.diagonal)
            .map(|(yi, d)| if d.is_zero() { yi } else { yi.mod_floor(d) })
            .collect();
        K0ClassOf { coords }
    }

    /// Adds two reduced classes and reduces again.
    pub fn add(&self, a: &K0ClassOf<T>, b: &K0ClassOf<T>) -> K0ClassOf<T> {
        let coords = a
            .coords
            .iter()
            .zip(&b.coords)
            .zip(&self.diagonal)
            .map(|((x, y), d)| {
                let s = x.clone() + y.clone();
                if d.is_zero() {
                    s
                } else {
                    s.mod_floor(d)
                }
            })
            .collect();
        K0ClassOf { coords }
    }
}

pub fn k0_reduce_in<T: Scalar>(g: &Graph, x: &[T]) -> K0ClassOf<T> {
    K0Reducer::new(g).reduce(x)
}
