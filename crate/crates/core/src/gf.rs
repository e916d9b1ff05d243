//! Arithmetic in GF(p^k).
//!
//! Elements are addressed by their base-p index: the element with
//! representative polynomial `a_0 + a_1 x + ... + a_{k-1} x^{k-1}` has index
//! `a_0 + a_1 p + ... + a_{k-1} p^{k-1}`. Index 0 is zero and index 1 is one.
//! That integer order is the total order every canonical form downstream
//! relies on.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

/// Default upper bound on the field order accepted by [`FieldSpec::new`].
pub const DEFAULT_ORDER_LIMIT: u64 = 1 << 20;

/// Largest order for which full addition and multiplication tables are kept.
const TABLE_LIMIT: u32 = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("{0} is not prime")]
    NonPrime(u64),
    #[error("extension degree must be at least 1")]
    InvalidDegree,
    #[error("field order {p}^{k} exceeds the configured limit {limit}")]
    LimitExceeded { p: u64, k: u32, limit: u64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("element index {index} does not belong to GF({q})")]
    MixedFields { index: u32, q: u32 },
    #[error("operation {0:?} needs a field element as second operand")]
    BadOperand(ArithOp),
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
}

/// A field element, identified by its base-p index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct FieldElem(pub u32);

impl FieldElem {
    pub const ZERO: FieldElem = FieldElem(0);
    pub const ONE: FieldElem = FieldElem(1);

    #[inline]
    pub fn index(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Inv,
    Pow,
}

/// Second operand of [`FieldSpec::arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operand {
    Elem(FieldElem),
    Exp(i64),
    None,
}

struct Tables {
    add: Vec<u32>,
    mul: Vec<u32>,
}

struct Inner {
    p: u32,
    k: u32,
    q: u32,
    modulus: Vec<u32>,
    neg: Vec<u32>,
    inv: Vec<u32>,
    tables: Option<Tables>,
}

/// GF(p^k) together with its defining modulus. Cloning is cheap.
#[derive(Clone)]
pub struct FieldSpec(Arc<Inner>);

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("p", &self.0.p)
            .field("k", &self.0.k)
            .field("modulus", &self.0.modulus)
            .finish()
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p && self.0.modulus == other.0.modulus)
    }
}

impl Eq for FieldSpec {}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl FieldSpec {
    /// Builds GF(q) for a prime power q.
    pub fn of_order(q: u64) -> Result<Self, GfError> {
        let p = (2..=q).find(|d| q % d == 0).ok_or(GfError::NotPrimePower(q))?;
        let mut k = 0;
        let mut rest = q;
        while rest % p == 0 {
            rest /= p;
            k += 1;
        }
        if rest != 1 {
            return Err(GfError::NotPrimePower(q));
        }
        Self::new(p, k)
    }

    /// Builds GF(p^k) with the default order limit.
    pub fn new(p: u64, k: u32) -> Result<Self, GfError> {
        Self::with_limit(p, k, DEFAULT_ORDER_LIMIT)
    }

    /// Builds GF(p^k). The modulus is the monic irreducible polynomial of
    /// degree k whose lower coefficients, read as a base-p integer
    /// (low degree first), are smallest.
    pub fn with_limit(p: u64, k: u32, limit: u64) -> Result<Self, GfError> {
        if !is_prime(p) {
            return Err(GfError::NonPrime(p));
        }
        if k == 0 {
            return Err(GfError::InvalidDegree);
        }
        let q = p
            .checked_pow(k)
            .filter(|&q| q <= limit && q <= u32::MAX as u64)
            .ok_or(GfError::LimitExceeded { p, k, limit })?;
        let p32 = p as u32;
        let modulus = smallest_irreducible(p32, k as usize);
        let mut inner = Inner {
            p: p32,
            k,
            q: q as u32,
            modulus,
            neg: Vec::new(),
            inv: Vec::new(),
            tables: None,
        };
        inner.neg = (0..inner.q).map(|a| inner.slow_neg(a)).collect();
        if inner.q <= TABLE_LIMIT {
            let qq = inner.q as usize;
            let mut add = vec![0; qq * qq];
            let mut mul = vec![0; qq * qq];
            for a in 0..inner.q {
                for b in 0..inner.q {
                    add[a as usize * qq + b as usize] = inner.slow_add(a, b);
                    mul[a as usize * qq + b as usize] = inner.slow_mul(a, b);
                }
            }
            inner.tables = Some(Tables { add, mul });
        }
        let mut inv = vec![0; inner.q as usize];
        for a in 1..inner.q {
            if inv[a as usize] != 0 {
                continue;
            }
            let b = inner.slow_pow(a, inner.q as u64 - 2);
            inv[a as usize] = b;
            inv[b as usize] = a;
        }
        inner.inv = inv;
        Ok(FieldSpec(Arc::new(inner)))
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.0.p
    }

    #[inline]
    pub fn k(&self) -> u32 {
        self.0.k
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.0.q
    }

    /// Modulus coefficients, low degree first, including the leading 1.
    pub fn modulus(&self) -> &[u32] {
        &self.0.modulus
    }

    /// All q elements in increasing index order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElem> + Clone {
        (0..self.0.q).map(FieldElem)
    }

    pub fn nonzero(&self) -> impl Iterator<Item = FieldElem> + Clone {
        (1..self.0.q).map(FieldElem)
    }

    pub fn elem(&self, index: u32) -> Result<FieldElem, GfError> {
        if index < self.0.q {
            Ok(FieldElem(index))
        } else {
            Err(GfError::MixedFields { index, q: self.0.q })
        }
    }

    /// Element given by its coefficient list (low degree first).
    pub fn from_coeffs(&self, coeffs: &[u32]) -> FieldElem {
        let mut idx = 0u32;
        for &c in coeffs.iter().take(self.0.k as usize).rev() {
            idx = idx * self.0.p + c % self.0.p;
        }
        FieldElem(idx)
    }

    pub fn coeffs(&self, a: FieldElem) -> Vec<u32> {
        self.0.digits(a.0)
    }

    #[inline]
    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        match &self.0.tables {
            Some(t) => FieldElem(t.add[(a.0 * self.0.q + b.0) as usize]),
            None => FieldElem(self.0.slow_add(a.0, b.0)),
        }
    }

    #[inline]
    pub fn neg(&self, a: FieldElem) -> FieldElem {
        FieldElem(self.0.neg[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        match &self.0.tables {
            Some(t) => FieldElem(t.mul[(a.0 * self.0.q + b.0) as usize]),
            None => FieldElem(self.0.slow_mul(a.0, b.0)),
        }
    }

    /// Multiplicative inverse. Panics on zero; see [`FieldSpec::try_inv`].
    #[inline]
    pub fn inv(&self, a: FieldElem) -> FieldElem {
        assert!(!a.is_zero(), "inverse of zero");
        FieldElem(self.0.inv[a.0 as usize])
    }

    pub fn try_inv(&self, a: FieldElem) -> Result<FieldElem, GfError> {
        if a.is_zero() {
            Err(GfError::DivisionByZero)
        } else {
            Ok(FieldElem(self.0.inv[a.0 as usize]))
        }
    }

    #[inline]
    pub fn div(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.mul(a, self.inv(b))
    }

    /// `a^e`; negative exponents invert first. `0^0 = 1`.
    pub fn pow(&self, a: FieldElem, e: i64) -> Result<FieldElem, GfError> {
        let base = if e < 0 { self.try_inv(a)? } else { a };
        let mut e = e.unsigned_abs();
        let mut acc = FieldElem::ONE;
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            e >>= 1;
        }
        Ok(acc)
    }

    /// Checked entry point: validates membership and division by zero.
    pub fn arith(&self, op: ArithOp, a: FieldElem, b: Operand) -> Result<FieldElem, GfError> {
        self.elem(a.0)?;
        let rhs = || match b {
            Operand::Elem(e) => self.elem(e.0),
            _ => Err(GfError::BadOperand(op)),
        };
        match op {
            ArithOp::Add => Ok(self.add(a, rhs()?)),
            ArithOp::Sub => Ok(self.sub(a, rhs()?)),
            ArithOp::Mul => Ok(self.mul(a, rhs()?)),
            ArithOp::Div => {
                let d = rhs()?;
                Ok(self.mul(a, self.try_inv(d)?))
            }
            ArithOp::Neg => Ok(self.neg(a)),
            ArithOp::Inv => self.try_inv(a),
            ArithOp::Pow => match b {
                Operand::Exp(e) => self.pow(a, e),
                _ => Err(GfError::BadOperand(op)),
            },
        }
    }
}

impl Inner {
    fn digits(&self, mut idx: u32) -> Vec<u32> {
        let mut out = vec![0; self.k as usize];
        for d in out.iter_mut() {
            *d = idx % self.p;
            idx /= self.p;
        }
        out
    }

    fn encode(&self, digits: &[u32]) -> u32 {
        digits.iter().rev().fold(0, |acc, &d| acc * self.p + d)
    }

    fn slow_add(&self, a: u32, b: u32) -> u32 {
        let (da, db) = (self.digits(a), self.digits(b));
        let sum: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % self.p).collect();
        self.encode(&sum)
    }

    fn slow_neg(&self, a: u32) -> u32 {
        let d: Vec<u32> = self.digits(a).iter().map(|&x| (self.p - x) % self.p).collect();
        self.encode(&d)
    }

    fn slow_mul(&self, a: u32, b: u32) -> u32 {
        let prod = poly_mul(&self.digits(a), &self.digits(b), self.p);
        let mut r = poly_rem(&prod, &self.modulus, self.p);
        r.resize(self.k as usize, 0);
        self.encode(&r)
    }

    fn slow_pow(&self, a: u32, mut e: u64) -> u32 {
        let mut acc = 1;
        let mut b = a;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.slow_mul(acc, b);
            }
            b = self.slow_mul(b, b);
            e >>= 1;
        }
        acc
    }
}

// Polynomials over GF(p): coefficient vectors, low degree first, trimmed.

fn trim(mut a: Vec<u32>) -> Vec<u32> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn mul_mod(a: u32, b: u32, p: u32) -> u32 {
    ((a as u64 * b as u64) % p as u64) as u32
}

fn inv_mod(a: u32, p: u32) -> u32 {
    // Fermat
    let mut acc = 1u32;
    let mut b = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, p);
        }
        b = mul_mod(b, b, p);
        e >>= 1;
    }
    acc
}

fn poly_mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x as u64 * y as u64) % p as u64;
        }
    }
    trim(out.into_iter().map(|c| c as u32).collect())
}

fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let m = trim(m.to_vec());
    let mut r = trim(a.to_vec());
    let dm = m.len() - 1;
    let lead_inv = inv_mod(m[dm], p);
    while r.len() > dm {
        let shift = r.len() - 1 - dm;
        let c = mul_mod(*r.last().unwrap(), lead_inv, p);
        for (i, &mc) in m.iter().enumerate() {
            let sub = mul_mod(c, mc, p);
            r[i + shift] = (r[i + shift] + p - sub) % p;
        }
        r = trim(r);
    }
    r
}

fn poly_sub(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let n = a.len().max(b.len());
    let out = (0..n)
        .map(|i| {
            let x = a.get(i).copied().unwrap_or(0);
            let y = b.get(i).copied().unwrap_or(0);
            (x + p - y) % p
        })
        .collect();
    trim(out)
}

fn poly_gcd(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
    while !b.is_empty() {
        let r = poly_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

fn poly_powmod(base: &[u32], mut e: u64, m: &[u32], p: u32) -> Vec<u32> {
    let mut acc = vec![1];
    let mut b = poly_rem(base, m, p);
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_rem(&poly_mul(&acc, &b, p), m, p);
        }
        b = poly_rem(&poly_mul(&b, &b, p), m, p);
        e >>= 1;
    }
    acc
}

/// Rabin-style test: a degree-k polynomial f is irreducible iff
/// gcd(x^{p^i} - x, f) = 1 for every i <= k/2.
pub(crate) fn is_irreducible(f: &[u32], p: u32) -> bool {
    let f = trim(f.to_vec());
    let k = f.len() - 1;
    if k == 0 {
        return false;
    }
    if k == 1 {
        return true;
    }
    let x = vec![0, 1];
    let mut h = x.clone();
    for _ in 0..k / 2 {
        h = poly_powmod(&h, p as u64, &f, p);
        let g = poly_gcd(&poly_sub(&h, &x, p), &f, p);
        if g.len() > 1 {
            return false;
        }
    }
    true
}

fn smallest_irreducible(p: u32, k: usize) -> Vec<u32> {
    let count = (p as u64).pow(k as u32);
    for value in 0..count {
        let mut coeffs = Vec::with_capacity(k + 1);
        let mut v = value;
        for _ in 0..k {
            coeffs.push((v % p as u64) as u32);
            v /= p as u64;
        }
        coeffs.push(1);
        if is_irreducible(&coeffs, p) {
            return coeffs;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Oracle: a polynomial of degree 2 or 3 is irreducible iff it has no root.
    fn has_root(f: &[u32], p: u32) -> bool {
        (0..p).any(|x| {
            f.iter()
                .rev()
                .fold(0u64, |acc, &c| (acc * x as u64 + c as u64) % p as u64)
                == 0
        })
    }

    #[test]
    fn prime_fields_use_x() {
        for p in [2u64, 3, 5, 7] {
            let f = FieldSpec::new(p, 1).unwrap();
            assert_eq!(f.q() as u64, p);
            assert_eq!(f.modulus(), &[0, 1]);
        }
    }

    #[test]
    fn gf4_modulus_by_root_search() {
        // exhaust monic degree-2 polynomials over GF(2) in base-p order
        let first = (0u32..4)
            .map(|v| vec![v % 2, v / 2, 1])
            .find(|f| !has_root(f, 2))
            .unwrap();
        assert_eq!(first, vec![1, 1, 1]);
        let f = FieldSpec::new(2, 2).unwrap();
        assert_eq!(f.q(), 4);
        assert_eq!(f.modulus(), first.as_slice());
    }

    #[test]
    fn low_degree_moduli_match_root_oracle() {
        for (p, k) in [(2u32, 3usize), (3, 2), (3, 3), (5, 2), (7, 2), (2, 2)] {
            let oracle = (0..p.pow(k as u32))
                .map(|mut v| {
                    let mut c: Vec<u32> = (0..k)
                        .map(|_| {
                            let d = v % p;
                            v /= p;
                            d
                        })
                        .collect();
                    c.push(1);
                    c
                })
                .find(|f| !has_root(f, p))
                .unwrap();
            let f = FieldSpec::new(p as u64, k as u32).unwrap();
            assert_eq!(f.modulus(), oracle.as_slice(), "GF({p}^{k})");
        }
    }

    #[test]
    fn reducible_quartic_without_roots_is_rejected() {
        // (x^2+x+1)^2 = x^4 + x^2 + 1 over GF(2) has no roots but is reducible
        assert!(!is_irreducible(&[1, 0, 1, 0, 1], 2));
        assert!(is_irreducible(&[1, 1, 0, 0, 1], 2));
    }

    #[test]
    fn small_examples() {
        let f2 = FieldSpec::new(2, 1).unwrap();
        assert_eq!(f2.add(FieldElem(1), FieldElem(1)), FieldElem(0));
        let f3 = FieldSpec::new(3, 1).unwrap();
        assert_eq!(f3.mul(FieldElem(2), FieldElem(2)), FieldElem(1));
        let f4 = FieldSpec::new(2, 2).unwrap();
        let x = f4.from_coeffs(&[0, 1]);
        let x1 = f4.from_coeffs(&[1, 1]);
        assert_eq!((x.0, x1.0), (2, 3));
        assert_eq!(f4.mul(x, x1), FieldElem::ONE);
        let idx: Vec<u32> = f4.elements().map(|e| e.0).collect();
        assert_eq!(idx, vec![0, 1, 2, 3]);
        assert_eq!(f4.coeffs(FieldElem(3)), vec![1, 1]);
    }

    #[test]
    fn of_order() {
        assert_eq!(FieldSpec::of_order(9).unwrap().p(), 3);
        assert_eq!(FieldSpec::of_order(8).unwrap().k(), 3);
        assert_eq!(FieldSpec::of_order(6).unwrap_err(), GfError::NotPrimePower(6));
        assert_eq!(FieldSpec::of_order(1).unwrap_err(), GfError::NotPrimePower(1));
    }

    #[test]
    fn errors() {
        assert_eq!(FieldSpec::new(4, 1).unwrap_err(), GfError::NonPrime(4));
        assert!(matches!(
            FieldSpec::new(2, 21).unwrap_err(),
            GfError::LimitExceeded { .. }
        ));
        assert!(FieldSpec::with_limit(3, 3, 26).is_err());
        let f = FieldSpec::new(5, 1).unwrap();
        assert_eq!(
            f.arith(ArithOp::Div, FieldElem(3), Operand::Elem(FieldElem(0))),
            Err(GfError::DivisionByZero)
        );
        assert_eq!(f.arith(ArithOp::Inv, FieldElem(0), Operand::None), Err(GfError::DivisionByZero));
        assert!(matches!(
            f.arith(ArithOp::Add, FieldElem(7), Operand::Elem(FieldElem(1))),
            Err(GfError::MixedFields { index: 7, q: 5 })
        ));
        assert_eq!(
            f.arith(ArithOp::Pow, FieldElem(2), Operand::Exp(-1)),
            Ok(FieldElem(3))
        );
    }

    #[test]
    fn deterministic_and_large_field_without_tables() {
        let a = FieldSpec::new(3, 5).unwrap();
        let b = FieldSpec::new(3, 5).unwrap();
        assert_eq!(a.modulus(), b.modulus());
        assert_eq!(a, b);
        // GF(3^5) = 243 keeps tables, GF(2^9) does not
        let big = FieldSpec::new(2, 9).unwrap();
        for x in big.nonzero().step_by(37) {
            assert_eq!(big.mul(x, big.inv(x)), FieldElem::ONE);
            assert_eq!(big.pow(x, 511).unwrap(), FieldElem::ONE);
        }
    }

    #[test]
    fn axioms_exhaustive_small_fields() {
        for (p, k) in [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2)] {
            let f = FieldSpec::new(p, k).unwrap();
            let q = f.q() as i64;
            for a in f.elements() {
                assert_eq!(f.add(a, f.neg(a)), FieldElem::ZERO);
                if !a.is_zero() {
                    assert_eq!(f.mul(a, f.inv(a)), FieldElem::ONE);
                    assert_eq!(f.pow(a, q - 1).unwrap(), FieldElem::ONE);
                }
                for b in f.elements() {
                    assert_eq!(f.add(a, b), f.add(b, a));
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    for c in f.elements() {
                        assert_eq!(
                            f.mul(a, f.add(b, c)),
                            f.add(f.mul(a, b), f.mul(a, c))
                        );
                        assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn fermat_up_to_64() {
        for (p, k) in [(2, 4), (2, 5), (2, 6), (11, 1), (13, 1), (5, 2), (3, 3), (7, 2)] {
            let f = FieldSpec::new(p, k).unwrap();
            let q = f.q() as i64;
            for a in f.nonzero() {
                assert_eq!(f.pow(a, q - 1).unwrap(), FieldElem::ONE);
            }
        }
    }

    proptest! {
        #[test]
        fn distributive_random_triples(pk in prop::sample::select(vec![(2u64,4u32),(3,2),(5,2),(2,7),(17,1),(3,4)]),
                                       a in 0u32..1<<20, b in 0u32..1<<20, c in 0u32..1<<20) {
            let f = FieldSpec::new(pk.0, pk.1).unwrap();
            let q = f.q();
            let (a, b, c) = (FieldElem(a % q), FieldElem(b % q), FieldElem(c % q));
            prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
            prop_assert_eq!(f.sub(f.add(a, b), b), a);
            if !b.is_zero() {
                prop_assert_eq!(f.mul(f.div(a, b), b), a);
            }
        }
    }
}
