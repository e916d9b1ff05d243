//! Exact linear algebra: matrices over GF(q) for the geometry and integer
//! matrices for eigenfunction kernels.
//!
//! A subspace is always represented by the nonzero rows of its reduced row
//! echelon form, so two subspaces are equal iff their bases compare equal.

use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::gf::{FieldElem, FieldSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("system has no solution")]
    NoSolution,
}

#[derive(Clone)]
pub struct MatGF {
    field: FieldSpec,
    rows: usize,
    cols: usize,
    data: Vec<FieldElem>,
}

impl fmt::Debug for MatGF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<u32>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(|e| e.0).collect())
            .collect();
        write!(f, "MatGF{rows:?}")
    }
}

impl PartialEq for MatGF {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data == other.data
    }
}

impl Eq for MatGF {}

impl Hash for MatGF {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rows.hash(state);
        self.cols.hash(state);
        self.data.hash(state);
    }
}

/// Output of [`MatGF::rref`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rref {
    pub matrix: MatGF,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

impl MatGF {
    pub fn zeros(field: &FieldSpec, rows: usize, cols: usize) -> Self {
        MatGF {
            field: field.clone(),
            rows,
            cols,
            data: vec![FieldElem::ZERO; rows * cols],
        }
    }

    pub fn identity(field: &FieldSpec, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, FieldElem::ONE);
        }
        m
    }

    /// Builds a matrix from rows of equal length `cols`.
    pub fn from_rows<R: AsRef<[FieldElem]>>(field: &FieldSpec, cols: usize, rows: &[R]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        MatGF {
            field: field.clone(),
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// Convenience for tests and examples: rows of raw element indices.
    pub fn from_indices(field: &FieldSpec, rows: &[&[u32]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let rows: Vec<Vec<FieldElem>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| FieldElem(x)).collect())
            .collect();
        Self::from_rows(field, cols, &rows)
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> FieldElem {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: FieldElem) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[FieldElem] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<FieldElem>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn data(&self) -> &[FieldElem] {
        &self.data
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn stack(&self, other: &MatGF) -> Result<MatGF, LinalgError> {
        if self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{} vs {} columns",
                self.cols, other.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(MatGF {
            field: self.field.clone(),
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn push_row(&mut self, row: &[FieldElem]) {
        assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn mul(&self, other: &MatGF) -> Result<MatGF, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = &self.field;
        let mut out = MatGF::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = f.add(out.get(i, j), f.mul(a, other.get(l, j)));
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product `self * x`.
    pub fn apply(&self, x: &[FieldElem]) -> Vec<FieldElem> {
        assert_eq!(x.len(), self.cols);
        let f = &self.field;
        (0..self.rows)
            .map(|i| dot(f, self.row(i), x))
            .collect()
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    fn reduce(&mut self) -> Vec<usize> {
        let f = self.field.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(pr) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            if pr != r {
                for j in 0..self.cols {
                    self.data.swap(pr * self.cols + j, r * self.cols + j);
                }
            }
            let inv = f.inv(self.get(r, c));
            for j in c..self.cols {
                let v = f.mul(self.get(r, j), inv);
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let factor = self.get(i, c);
                if factor.is_zero() {
                    continue;
                }
                for j in c..self.cols {
                    let v = f.sub(self.get(i, j), f.mul(factor, self.get(r, j)));
                    self.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rref(&self) -> Rref {
        let mut m = self.clone();
        let pivots = m.reduce();
        Rref {
            rank: pivots.len(),
            matrix: m,
            pivots,
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank
    }

    /// Canonical basis of the row space: the nonzero rows of the RREF.
    pub fn row_space(&self) -> MatGF {
        let Rref { mut matrix, rank, .. } = self.rref();
        matrix.data.truncate(rank * matrix.cols);
        matrix.rows = rank;
        matrix
    }

    /// Basis (as canonical RREF rows) of `{x : self * x = 0}`.
    pub fn kernel(&self) -> MatGF {
        let Rref { matrix, pivots, .. } = self.rref();
        let f = &self.field;
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = MatGF::zeros(f, 0, self.cols);
        for &fc in &free {
            let mut v = vec![FieldElem::ZERO; self.cols];
            v[fc] = FieldElem::ONE;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = f.neg(matrix.get(r, fc));
            }
            basis.push_row(&v);
        }
        basis.row_space()
    }

    /// One solution of `self * x = rhs` (free variables set to zero).
    pub fn solve(&self, rhs: &[FieldElem]) -> Result<Vec<FieldElem>, LinalgError> {
        if rhs.len() != self.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "{} rows vs rhs of length {}",
                self.rows,
                rhs.len()
            )));
        }
        let mut aug = MatGF::zeros(&self.field, self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, self.cols, rhs[i]);
        }
        let pivots = aug.reduce();
        if pivots.last() == Some(&self.cols) {
            return Err(LinalgError::NoSolution);
        }
        let mut x = vec![FieldElem::ZERO; self.cols];
        for (r, &pc) in pivots.iter().enumerate() {
            x[pc] = aug.get(r, self.cols);
        }
        Ok(x)
    }

    pub fn transpose(&self) -> MatGF {
        let mut t = MatGF::zeros(&self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }
}

pub fn dot(f: &FieldSpec, a: &[FieldElem], b: &[FieldElem]) -> FieldElem {
    a.iter()
        .zip(b)
        .fold(FieldElem::ZERO, |acc, (&x, &y)| f.add(acc, f.mul(x, y)))
}

fn check_cols(a: &MatGF, b: &MatGF) -> Result<(), LinalgError> {
    if a.cols != b.cols {
        return Err(LinalgError::DimensionMismatch(format!(
            "{} vs {} columns",
            a.cols, b.cols
        )));
    }
    Ok(())
}

/// Canonical basis of `rowspace(a) + rowspace(b)`.
pub fn rowspace_sum(a: &MatGF, b: &MatGF) -> Result<MatGF, LinalgError> {
    check_cols(a, b)?;
    Ok(a.stack(b)?.row_space())
}

/// Canonical basis of `rowspace(a) ∩ rowspace(b)`.
///
/// Solves `x·A = y·B` through the kernel of the stacked system `[A; -B]^T`;
/// each kernel vector `(x, y)` contributes the intersection vector `x·A`.
pub fn rowspace_intersect(a: &MatGF, b: &MatGF) -> Result<MatGF, LinalgError> {
    check_cols(a, b)?;
    let f = a.field.clone();
    let a = a.row_space();
    let b = b.row_space();
    let mut neg_b = b.clone();
    for v in neg_b.data.iter_mut() {
        *v = f.neg(*v);
    }
    let system = a.stack(&neg_b)?.transpose();
    let ker = system.kernel();
    let mut out = MatGF::zeros(&f, 0, a.cols);
    for i in 0..ker.rows {
        let coeffs = &ker.row(i)[..a.rows];
        let mut v = vec![FieldElem::ZERO; a.cols];
        for (r, &c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (j, slot) in v.iter_mut().enumerate() {
                *slot = f.add(*slot, f.mul(c, a.get(r, j)));
            }
        }
        out.push_row(&v);
    }
    Ok(out.row_space())
}

/// Dense integer matrix with arbitrary-precision entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatZ {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl MatZ {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatZ {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged rows");
            for (j, &x) in r.iter().enumerate() {
                m.data[i * cols + j] = BigInt::from(x);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn apply(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.get(i, j) * &v[j])
                    .fold(BigInt::zero(), |a, b| a + b)
            })
            .collect()
    }

    /// Bareiss fraction-free elimination to row echelon form.
    /// Returns the echelon matrix and its pivot columns.
    fn bareiss(&self) -> (MatZ, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut prev = BigInt::one();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            if pr != r {
                for j in 0..m.cols {
                    m.data.swap(pr * m.cols + j, r * m.cols + j);
                }
            }
            let pivot = m.get(r, c).clone();
            for i in r + 1..m.rows {
                let lead = m.get(i, c).clone();
                for j in c..m.cols {
                    let v = (&pivot * m.get(i, j) - &lead * m.get(r, j)) / &prev;
                    m.set(i, j, v);
                }
                // entries left of c in row i are already zero
            }
            prev = pivot;
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }
}

/// Scales an integer vector to be primitive with positive leading entry.
pub fn normalize_primitive(v: &mut [BigInt]) {
    let g = v.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if g.is_zero() {
        return;
    }
    let lead_negative = v.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative());
    for x in v.iter_mut() {
        *x = &*x / &g;
        if lead_negative {
            *x = -&*x;
        }
    }
}

/// Integer basis of `{v : m·v = 0}`: one primitive vector per free column.
pub fn rational_kernel(m: &MatZ) -> Vec<Vec<BigInt>> {
    let (e, pivots) = m.bareiss();
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    let mut basis = Vec::with_capacity(free.len());
    for &fc in &free {
        let mut x = vec![BigRational::zero(); m.cols];
        x[fc] = BigRational::one();
        for (r, &pc) in pivots.iter().enumerate().rev() {
            let mut s = BigRational::zero();
            for j in pc + 1..m.cols {
                if !x[j].is_zero() && !e.get(r, j).is_zero() {
                    s += BigRational::from_integer(e.get(r, j).clone()) * &x[j];
                }
            }
            x[pc] = -s / BigRational::from_integer(e.get(r, pc).clone());
        }
        let lcm = x
            .iter()
            .fold(BigInt::one(), |l, v| l.lcm(v.denom()));
        let mut v: Vec<BigInt> = x
            .iter()
            .map(|v| v.numer() * (&lcm / v.denom()))
            .collect();
        normalize_primitive(&mut v);
        basis.push(v);
    }
    basis
}

/// Nullity of an i64 matrix modulo a prime (`p < 2^31`).
///
/// Over the rationals the nullity can only be smaller, so a zero result
/// certifies a trivial rational kernel.
pub fn nullity_mod_prime(data: &[i64], rows: usize, cols: usize, p: u64) -> usize {
    let mut m: Vec<u64> = data
        .iter()
        .map(|&x| x.rem_euclid(p as i64) as u64)
        .collect();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| m[i * cols + c] != 0) else {
            continue;
        };
        if pr != r {
            for j in 0..cols {
                m.swap(pr * cols + j, r * cols + j);
            }
        }
        let inv = pow_mod(m[r * cols + c], p - 2, p);
        for j in c..cols {
            m[r * cols + j] = m[r * cols + j] * inv % p;
        }
        for i in r + 1..rows {
            let factor = m[i * cols + c];
            if factor == 0 {
                continue;
            }
            for j in c..cols {
                let sub = factor * m[r * cols + j] % p;
                m[i * cols + j] = (m[i * cols + j] + p - sub) % p;
            }
        }
        r += 1;
    }
    cols - r
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}
