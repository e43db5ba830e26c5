//! Dense exact vectors and matrices with the elimination routines the rest of
//! the crate is built on.

use std::fmt;
use std::ops::Index;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::rational::{common_denominator, format_rational, int, Rational};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RatVector(Vec<Rational>);

impl RatVector {
    pub fn new(entries: Vec<Rational>) -> Self {
        RatVector(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        RatVector(vec![Rational::zero(); dim])
    }

    pub fn unit(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[k] = Rational::one();
        v
    }

    pub fn from_ints(values: &[i64]) -> Self {
        RatVector(values.iter().map(|&v| int(v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Rational> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rational> {
        self.0.iter()
    }

    pub fn set(&mut self, k: usize, value: Rational) {
        self.0[k] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn dot(&self, other: &RatVector) -> Rational {
        assert_eq!(self.dim(), other.dim(), "dot: dimension mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .fold(Rational::zero(), |acc, (a, b)| acc + a * b)
    }

    pub fn add(&self, other: &RatVector) -> RatVector {
        assert_eq!(self.dim(), other.dim(), "add: dimension mismatch");
        RatVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &RatVector) -> RatVector {
        assert_eq!(self.dim(), other.dim(), "sub: dimension mismatch");
        RatVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, c: &Rational) -> RatVector {
        RatVector(self.0.iter().map(|a| a * c).collect())
    }

    pub fn neg(&self) -> RatVector {
        RatVector(self.0.iter().map(|a| -a).collect())
    }

    /// `self + c * other`
    pub fn axpy(&self, c: &Rational, other: &RatVector) -> RatVector {
        assert_eq!(self.dim(), other.dim(), "axpy: dimension mismatch");
        RatVector(self.0.iter().zip(&other.0).map(|(a, b)| a + c * b).collect())
    }

    pub fn concat(&self, other: &RatVector) -> RatVector {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        RatVector(v)
    }

    pub fn slice(&self, start: usize, end: usize) -> RatVector {
        RatVector(self.0[start..end].to_vec())
    }

    pub fn norm_l1(&self) -> Rational {
        self.0.iter().fold(Rational::zero(), |acc, a| acc + a.abs())
    }

    pub fn norm_inf(&self) -> Rational {
        self.0
            .iter()
            .map(|a| a.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Positive multiple with coprime integer entries; the zero vector is
    /// returned unchanged.
    pub fn primitive(&self) -> RatVector {
        if self.is_zero() {
            return self.clone();
        }
        let den = common_denominator(self.0.iter());
        let ints: Vec<BigInt> = self
            .0
            .iter()
            .map(|a| (a * Rational::from_integer(den.clone())).to_integer())
            .collect();
        let g = ints
            .iter()
            .filter(|x| !x.is_zero())
            .fold(BigInt::zero(), |acc, x| acc.gcd(x));
        RatVector(
            ints.into_iter()
                .map(|x| Rational::from_integer(x / &g))
                .collect(),
        )
    }
}

impl Index<usize> for RatVector {
    type Output = Rational;
    fn index(&self, k: usize) -> &Rational {
        &self.0[k]
    }
}

impl From<Vec<Rational>> for RatVector {
    fn from(v: Vec<Rational>) -> Self {
        RatVector(v)
    }
}

impl FromIterator<Rational> for RatVector {
    fn from_iter<T: IntoIterator<Item = Rational>>(iter: T) -> Self {
        RatVector(iter.into_iter().collect())
    }
}

impl fmt::Debug for RatVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, a) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", format_rational(a))?;
        }
        write!(f, ")")
    }
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

/// Reduced row-echelon form with its pivot columns.
#[derive(Clone, Debug)]
pub struct Rref {
    pub matrix: RatMatrix,
    pub pivots: Vec<usize>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for k in 0..n {
            m.set(k, k, Rational::one());
        }
        m
    }

    /// Stacks `rows` (all of length `cols`) into a matrix.
    pub fn from_rows(rows: &[RatVector], cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.dim(), cols, "from_rows: ragged rows");
            data.extend(r.iter().cloned());
        }
        RatMatrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_cols(cols: &[RatVector], rows: usize) -> Self {
        Self::from_rows(cols, rows).transpose()
    }

    pub fn from_ints(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let vs: Vec<RatVector> = rows.iter().map(|r| RatVector::from_ints(r)).collect();
        Self::from_rows(&vs, cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Rational) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> RatVector {
        RatVector::new(self.data[i * self.cols..(i + 1) * self.cols].to_vec())
    }

    pub fn col(&self, j: usize) -> RatVector {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn row_vectors(&self) -> Vec<RatVector> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn col_vectors(&self) -> Vec<RatVector> {
        (0..self.cols).map(|j| self.col(j)).collect()
    }

    pub fn transpose(&self) -> RatMatrix {
        let mut t = RatMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &RatVector) -> RatVector {
        assert_eq!(self.cols, v.dim(), "mul_vec: dimension mismatch");
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(Rational::zero(), |acc, j| acc + self.get(i, j) * &v[j])
            })
            .collect()
    }

    pub fn mul(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.cols, other.rows, "mul: dimension mismatch");
        let mut out = RatMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> RatMatrix {
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    /// `(M + Mᵀ) / 2`
    pub fn symmetrized(&self) -> RatMatrix {
        assert_eq!(self.rows, self.cols, "symmetrized: not square");
        let half = Rational::new(1.into(), 2.into());
        self.add(&self.transpose()).scale(&half)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Drops every row at index `>= keep`.
    pub fn top_rows(&self, keep: usize) -> RatMatrix {
        let rows: Vec<RatVector> = (0..keep).map(|i| self.row(i)).collect();
        RatMatrix::from_rows(&rows, self.cols)
    }

    pub fn hstack(&self, other: &RatMatrix) -> RatMatrix {
        assert_eq!(self.rows, other.rows, "hstack: row mismatch");
        let rows: Vec<RatVector> = (0..self.rows)
            .map(|i| self.row(i).concat(&other.row(i)))
            .collect();
        RatMatrix::from_rows(&rows, self.cols + other.cols)
    }

    pub fn rref(&self) -> Rref {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            m.swap_rows(r, p);
            let inv = m.get(r, c).recip();
            for j in c..m.cols {
                let v = m.get(r, j) * &inv;
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i == r || m.get(i, c).is_zero() {
                    continue;
                }
                let f = m.get(i, c).clone();
                for j in c..m.cols {
                    let v = m.get(i, j) - &f * m.get(r, j);
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        Rref { matrix: m, pivots }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().pivots.len()
    }

    /// Basis of `{v : Mv = 0}`, one vector per free column of the RREF.
    pub fn kernel_basis(&self) -> Vec<RatVector> {
        let Rref { matrix, pivots } = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = RatVector::zeros(self.cols);
                v.set(f, Rational::one());
                for (row, &pc) in pivots.iter().enumerate() {
                    v.set(pc, -matrix.get(row, f));
                }
                v
            })
            .collect()
    }

    pub fn determinant(&self) -> Rational {
        assert_eq!(self.rows, self.cols, "determinant: not square");
        let mut m = self.clone();
        let mut det = Rational::one();
        for c in 0..m.cols {
            let Some(p) = (c..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                return Rational::zero();
            };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let piv = m.get(c, c).clone();
            det *= &piv;
            for i in c + 1..m.rows {
                if m.get(i, c).is_zero() {
                    continue;
                }
                let f = m.get(i, c) / &piv;
                for j in c..m.cols {
                    let v = m.get(i, j) - &f * m.get(c, j);
                    m.set(i, j, v);
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<RatMatrix> {
        assert_eq!(self.rows, self.cols, "inverse: not square");
        let n = self.rows;
        let aug = self.hstack(&RatMatrix::identity(n));
        let Rref { matrix, pivots } = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let rows: Vec<RatVector> = (0..n).map(|i| matrix.row(i).slice(n, 2 * n)).collect();
        Some(RatMatrix::from_rows(&rows, n))
    }

    /// One solution of `Mx = b`, or `None` when inconsistent.
    pub fn solve(&self, b: &RatVector) -> Option<RatVector> {
        assert_eq!(self.rows, b.dim(), "solve: dimension mismatch");
        let bcol = RatMatrix::from_cols(std::slice::from_ref(b), self.rows);
        let Rref { matrix, pivots } = self.hstack(&bcol).rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = RatVector::zeros(self.cols);
        for (row, &pc) in pivots.iter().enumerate() {
            x.set(pc, matrix.get(row, self.cols).clone());
        }
        Some(x)
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Canonical basis of `span(gens)`: the nonzero rows of the RREF.
pub fn span_basis(gens: &[RatVector], dim: usize) -> Vec<RatVector> {
    if gens.is_empty() {
        return Vec::new();
    }
    let Rref { matrix, pivots } = RatMatrix::from_rows(gens, dim).rref();
    (0..pivots.len()).map(|i| matrix.row(i)).collect()
}

pub fn rank_of(gens: &[RatVector], dim: usize) -> usize {
    span_basis(gens, dim).len()
}

pub fn in_span(v: &RatVector, gens: &[RatVector]) -> bool {
    if v.is_zero() {
        return true;
    }
    let dim = v.dim();
    let mut all = gens.to_vec();
    let r = rank_of(&all, dim);
    all.push(v.clone());
    rank_of(&all, dim) == r
}

pub fn same_span(a: &[RatVector], b: &[RatVector], dim: usize) -> bool {
    span_basis(a, dim) == span_basis(b, dim)
}

/// Basis of the kernel of the matrix whose rows are `rows`.
pub fn kernel_basis(m: &RatMatrix) -> Vec<RatVector> {
    m.kernel_basis()
}

/// Basis of `{y : ⟨y, g⟩ = 0 for every generator g}` in `R^dim`.
pub fn orthogonal_complement(gens: &[RatVector], dim: usize) -> Vec<RatVector> {
    if gens.is_empty() {
        return (0..dim).map(|k| RatVector::unit(dim, k)).collect();
    }
    RatMatrix::from_rows(gens, dim).kernel_basis()
}

/// Basis of `span(a) ∩ span(b)`.
pub fn span_intersection(a: &[RatVector], b: &[RatVector], dim: usize) -> Vec<RatVector> {
    let mut perp = orthogonal_complement(a, dim);
    perp.extend(orthogonal_complement(b, dim));
    orthogonal_complement(&perp, dim)
}

/// Pairwise-orthogonal basis of `span(gens)` (Gram–Schmidt without
/// normalization, each vector scaled to primitive integers).
pub fn orthogonal_basis(gens: &[RatVector], dim: usize) -> Vec<RatVector> {
    let mut out: Vec<RatVector> = Vec::new();
    for g in span_basis(gens, dim) {
        let mut v = g;
        for q in &out {
            let c = v.dot(q) / q.dot(q);
            v = v.axpy(&-c, q);
        }
        out.push(v.primitive());
    }
    out
}
