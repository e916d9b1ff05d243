//! Points, lines, planes and hyperplanes of PG(n,q) and AG(n,q).
//!
//! Every object has a single canonical representation, and the derived
//! `Ord` on that representation is the enumeration order:
//! * projective points: coordinate vector with first nonzero entry 1;
//! * projective lines: 2x(n+1) RREF basis, row-major;
//! * affine lines: `(dir, base)` with `dir` normalised like a projective
//!   point and `base` the lexicographically smallest point of the line
//!   (equivalently, zero at the pivot of `dir`);
//! * affine flats: RREF direction basis plus base reduced at its pivots.

use serde::Serialize;
use thiserror::Error;

use crate::gf::{FieldElem, FieldSpec};
use crate::linalg::{dot, rowspace_intersect, rowspace_sum, MatGF};

/// Upper bound on the size of any enumeration.
pub const DEFAULT_ENUM_LIMIT: u64 = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("dimension {0} is too small")]
    DimensionTooSmall(usize),
    #[error("enumeration of {what} would produce {count} items (limit {limit})")]
    LimitExceeded { what: &'static str, count: u64, limit: u64 },
    #[error("the two points are equal")]
    EqualPoints,
    #[error("the line lies inside the hyperplane")]
    LineInsideHyperplane,
    #[error("the point lies on the hyperplane")]
    PointOnHyperplane,
    #[error("object does not belong to this space: {0}")]
    WrongSpace(String),
    #[error("empty input")]
    Empty,
}

type Vector = Vec<FieldElem>;

fn pivot(v: &[FieldElem]) -> Option<usize> {
    v.iter().position(|x| !x.is_zero())
}

/// Scales `v` so that its first nonzero entry is 1. Returns `None` for zero.
pub fn normalize(f: &FieldSpec, v: &[FieldElem]) -> Option<Vector> {
    let p = pivot(v)?;
    let inv = f.inv(v[p]);
    Some(v.iter().map(|&x| f.mul(x, inv)).collect())
}

fn axpy(f: &FieldSpec, a: FieldElem, x: &[FieldElem], y: &[FieldElem]) -> Vector {
    x.iter().zip(y).map(|(&xi, &yi)| f.add(f.mul(a, xi), yi)).collect()
}

fn sub_vec(f: &FieldSpec, x: &[FieldElem], y: &[FieldElem]) -> Vector {
    x.iter().zip(y).map(|(&a, &b)| f.sub(a, b)).collect()
}

/// All vectors of length `n` over the field, in lexicographic order.
fn all_vectors(f: &FieldSpec, n: usize) -> Vec<Vector> {
    let q = f.q() as usize;
    let total = q.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            let mut v = vec![FieldElem::ZERO; n];
            for slot in v.iter_mut().rev() {
                *slot = FieldElem((idx % q) as u32);
                idx /= q;
            }
            v
        })
        .collect()
}

/// Normalised representatives of all 1-dimensional subspaces of GF(q)^n.
fn normalized_vectors(f: &FieldSpec, n: usize) -> Vec<Vector> {
    let mut out = Vec::new();
    for lead in 0..n {
        for tail in all_vectors(f, n - lead - 1) {
            let mut v = vec![FieldElem::ZERO; n];
            v[lead] = FieldElem::ONE;
            v[lead + 1..].copy_from_slice(&tail);
            out.push(v);
        }
    }
    out.sort();
    out
}

/// All 2-dimensional subspaces of GF(q)^n as row-major RREF bases.
fn rref_2dim(f: &FieldSpec, n: usize) -> Vec<Vector> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            // row0: 1 at i, 0 at j, free after i; row1: 1 at j, free after j
            let free0: Vec<usize> = (i + 1..n).filter(|&c| c != j).collect();
            let free1: Vec<usize> = (j + 1..n).collect();
            for t0 in all_vectors(f, free0.len()) {
                for t1 in all_vectors(f, free1.len()) {
                    let mut m = vec![FieldElem::ZERO; 2 * n];
                    m[i] = FieldElem::ONE;
                    m[n + j] = FieldElem::ONE;
                    for (&c, &x) in free0.iter().zip(&t0) {
                        m[c] = x;
                    }
                    for (&c, &x) in free1.iter().zip(&t1) {
                        m[n + c] = x;
                    }
                    out.push(m);
                }
            }
        }
    }
    out.sort();
    out
}

fn check_limit(what: &'static str, count: u64, limit: u64) -> Result<(), GeometryError> {
    if count > limit {
        Err(GeometryError::LimitExceeded { what, count, limit })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation<P> {
    Equal,
    Meet(P),
    Parallel,
    Skew,
}

// ---------------------------------------------------------------- projective

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ProjPoint(Vector);

impl ProjPoint {
    pub fn coords(&self) -> &[FieldElem] {
        &self.0
    }

    pub fn to_ints(&self) -> Vec<u32> {
        self.0.iter().map(|e| e.0).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ProjLine(Vector);

impl ProjLine {
    /// The two RREF basis rows.
    pub fn rows(&self) -> (&[FieldElem], &[FieldElem]) {
        let m = self.0.len() / 2;
        (&self.0[..m], &self.0[m..])
    }

    pub fn to_ints(&self) -> Vec<u32> {
        self.0.iter().map(|e| e.0).collect()
    }

    fn basis(&self, f: &FieldSpec) -> MatGF {
        let (a, b) = self.rows();
        MatGF::from_rows(f, a.len(), &[a, b])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Hyperplane(Vector);

impl Hyperplane {
    pub fn normal(&self) -> &[FieldElem] {
        &self.0
    }
}

/// A flat of PG(n,q) given by a canonical basis of its vector subspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjFlat {
    pub basis: MatGF,
}

impl ProjFlat {
    /// Projective dimension (vector dimension minus one).
    pub fn dimension(&self) -> isize {
        self.basis.rows() as isize - 1
    }

    pub fn contains_point(&self, p: &ProjPoint) -> bool {
        let f = self.basis.field();
        let m = MatGF::from_rows(f, p.0.len(), &[&p.0]);
        rowspace_sum(&self.basis, &m).unwrap().rows() == self.basis.rows()
    }

    pub fn contains_line(&self, l: &ProjLine) -> bool {
        let (a, b) = l.rows();
        let f = self.basis.field();
        let m = MatGF::from_rows(f, a.len(), &[a, b]);
        rowspace_sum(&self.basis, &m).unwrap().rows() == self.basis.rows()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjSpace {
    n: usize,
    field: FieldSpec,
}

impl ProjSpace {
    pub fn new(n: usize, field: &FieldSpec) -> Result<Self, GeometryError> {
        if n < 2 {
            return Err(GeometryError::DimensionTooSmall(n));
        }
        Ok(ProjSpace { n, field: field.clone() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn q(&self) -> u64 {
        self.field.q() as u64
    }

    pub fn point_count(&self) -> u64 {
        let q = self.q();
        (q.pow(self.n as u32 + 1) - 1) / (q - 1)
    }

    pub fn line_count(&self) -> u64 {
        let q = self.q();
        let n1 = self.n as u32 + 1;
        (q.pow(n1) - 1) * (q.pow(n1) - q) / ((q * q - 1) * (q * q - q))
    }

    pub fn points(&self) -> Result<Vec<ProjPoint>, GeometryError> {
        check_limit("points", self.point_count(), DEFAULT_ENUM_LIMIT)?;
        Ok(normalized_vectors(&self.field, self.n + 1)
            .into_iter()
            .map(ProjPoint)
            .collect())
    }

    pub fn lines(&self) -> Result<Vec<ProjLine>, GeometryError> {
        check_limit("lines", self.line_count(), DEFAULT_ENUM_LIMIT)?;
        Ok(rref_2dim(&self.field, self.n + 1).into_iter().map(ProjLine).collect())
    }

    pub fn hyperplanes(&self) -> Result<Vec<Hyperplane>, GeometryError> {
        check_limit("hyperplanes", self.point_count(), DEFAULT_ENUM_LIMIT)?;
        Ok(normalized_vectors(&self.field, self.n + 1)
            .into_iter()
            .map(Hyperplane)
            .collect())
    }

    fn check_len(&self, v: &[FieldElem]) -> Result<(), GeometryError> {
        if v.len() != self.n + 1 || v.iter().any(|x| x.0 >= self.field.q()) {
            return Err(GeometryError::WrongSpace(format!("{v:?}")));
        }
        Ok(())
    }

    pub fn point(&self, coords: &[FieldElem]) -> Result<ProjPoint, GeometryError> {
        self.check_len(coords)?;
        normalize(&self.field, coords)
            .map(ProjPoint)
            .ok_or(GeometryError::WrongSpace("zero vector".into()))
    }

    pub fn point_from_ints(&self, coords: &[u32]) -> Result<ProjPoint, GeometryError> {
        let v: Vector = coords.iter().map(|&x| FieldElem(x)).collect();
        self.point(&v)
    }

    pub fn hyperplane(&self, normal: &[FieldElem]) -> Result<Hyperplane, GeometryError> {
        self.check_len(normal)?;
        normalize(&self.field, normal)
            .map(Hyperplane)
            .ok_or(GeometryError::WrongSpace("zero normal".into()))
    }

    pub fn hyperplane_from_ints(&self, normal: &[u32]) -> Result<Hyperplane, GeometryError> {
        let v: Vector = normal.iter().map(|&x| FieldElem(x)).collect();
        self.hyperplane(&v)
    }

    /// Canonical line spanned by two independent vectors.
    pub fn line_from_vectors(
        &self,
        a: &[FieldElem],
        b: &[FieldElem],
    ) -> Result<ProjLine, GeometryError> {
        self.check_len(a)?;
        self.check_len(b)?;
        let m = MatGF::from_rows(&self.field, self.n + 1, &[a, b]).row_space();
        if m.rows() != 2 {
            return Err(GeometryError::EqualPoints);
        }
        Ok(ProjLine(m.data().to_vec()))
    }

    pub fn line_from_ints(&self, a: &[u32], b: &[u32]) -> Result<ProjLine, GeometryError> {
        let a: Vector = a.iter().map(|&x| FieldElem(x)).collect();
        let b: Vector = b.iter().map(|&x| FieldElem(x)).collect();
        self.line_from_vectors(&a, &b)
    }

    pub fn line_through(&self, p1: &ProjPoint, p2: &ProjPoint) -> Result<ProjLine, GeometryError> {
        if p1 == p2 {
            return Err(GeometryError::EqualPoints);
        }
        self.line_from_vectors(&p1.0, &p2.0)
    }

    /// The q+1 points of a line, sorted.
    pub fn line_points(&self, l: &ProjLine) -> Vec<ProjPoint> {
        let f = &self.field;
        let (a, b) = l.rows();
        let mut pts: Vec<ProjPoint> = f
            .elements()
            .map(|c| ProjPoint(normalize(f, &axpy(f, c, b, a)).unwrap()))
            .collect();
        pts.push(ProjPoint(b.to_vec()));
        pts.sort();
        pts
    }

    pub fn line_contains(&self, l: &ProjLine, p: &ProjPoint) -> bool {
        let m = l.basis(&self.field);
        let pm = MatGF::from_rows(&self.field, self.n + 1, &[&p.0]);
        rowspace_sum(&m, &pm).unwrap().rows() == 2
    }

    pub fn hyperplane_contains_point(&self, h: &Hyperplane, p: &ProjPoint) -> bool {
        dot(&self.field, &h.0, &p.0).is_zero()
    }

    pub fn hyperplane_contains_line(&self, h: &Hyperplane, l: &ProjLine) -> bool {
        let (a, b) = l.rows();
        dot(&self.field, &h.0, a).is_zero() && dot(&self.field, &h.0, b).is_zero()
    }

    pub fn relation(&self, l1: &ProjLine, l2: &ProjLine) -> Relation<ProjPoint> {
        if l1 == l2 {
            return Relation::Equal;
        }
        let a = l1.basis(&self.field);
        let b = l2.basis(&self.field);
        let meet = rowspace_intersect(&a, &b).unwrap();
        match meet.rows() {
            0 => Relation::Skew,
            1 => Relation::Meet(ProjPoint(meet.row(0).to_vec())),
            _ => Relation::Equal,
        }
    }

    pub fn meets(&self, l1: &ProjLine, l2: &ProjLine) -> bool {
        matches!(self.relation(l1, l2), Relation::Meet(_))
    }

    /// Smallest flat containing all the lines.
    pub fn span_of_lines(&self, lines: &[ProjLine]) -> Result<ProjFlat, GeometryError> {
        if lines.is_empty() {
            return Err(GeometryError::Empty);
        }
        let mut m = MatGF::zeros(&self.field, 0, self.n + 1);
        for l in lines {
            let (a, b) = l.rows();
            m.push_row(a);
            m.push_row(b);
        }
        Ok(ProjFlat { basis: m.row_space() })
    }

    pub fn span_of_points(&self, points: &[ProjPoint]) -> ProjFlat {
        let mut m = MatGF::zeros(&self.field, 0, self.n + 1);
        for p in points {
            m.push_row(&p.0);
        }
        ProjFlat { basis: m.row_space() }
    }

    /// Intersection of a flat with a hyperplane.
    pub fn flat_meet_hyperplane(&self, flat: &ProjFlat, h: &Hyperplane) -> ProjFlat {
        let perp = MatGF::from_rows(&self.field, self.n + 1, &[&h.0]).kernel();
        ProjFlat {
            basis: rowspace_intersect(&flat.basis, &perp).unwrap(),
        }
    }
}

// -------------------------------------------------------------------- affine

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AffPoint(Vector);

impl AffPoint {
    pub fn coords(&self) -> &[FieldElem] {
        &self.0
    }

    pub fn to_ints(&self) -> Vec<u32> {
        self.0.iter().map(|e| e.0).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AffLine {
    dir: Vector,
    base: Vector,
}

impl AffLine {
    pub fn dir(&self) -> &[FieldElem] {
        &self.dir
    }

    pub fn base(&self) -> &[FieldElem] {
        &self.base
    }

    /// `[dir..., base...]` as raw indices.
    pub fn to_ints(&self) -> Vec<u32> {
        self.dir.iter().chain(&self.base).map(|e| e.0).collect()
    }
}

/// An affine flat: a coset `base + span(dirs)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AffFlat {
    dirs: Vec<Vector>,
    base: Vector,
}

impl AffFlat {
    pub fn dimension(&self) -> usize {
        self.dirs.len()
    }

    pub fn dirs(&self) -> &[Vector] {
        &self.dirs
    }

    pub fn base(&self) -> &[FieldElem] {
        &self.base
    }
}

pub type AffPlane = AffFlat;

/// The q lines of a plane sharing one direction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ParallelClass {
    pub dir: Vector,
    pub lines: Vec<AffLine>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffSpace {
    n: usize,
    field: FieldSpec,
}

impl AffSpace {
    pub fn new(n: usize, field: &FieldSpec) -> Result<Self, GeometryError> {
        if n < 2 {
            return Err(GeometryError::DimensionTooSmall(n));
        }
        Ok(AffSpace { n, field: field.clone() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn q(&self) -> u64 {
        self.field.q() as u64
    }

    pub fn point_count(&self) -> u64 {
        self.q().pow(self.n as u32)
    }

    pub fn line_count(&self) -> u64 {
        let q = self.q();
        q.pow(self.n as u32 - 1) * (q.pow(self.n as u32) - 1) / (q - 1)
    }

    /// Integer encoding of a point: coordinates read as base-q digits,
    /// first coordinate most significant. Agrees with the point order.
    pub fn encode_point(&self, p: &AffPoint) -> u64 {
        let q = self.q();
        p.0.iter().fold(0, |acc, x| acc * q + x.0 as u64)
    }

    pub fn points(&self) -> Result<Vec<AffPoint>, GeometryError> {
        check_limit("points", self.point_count(), DEFAULT_ENUM_LIMIT)?;
        Ok(all_vectors(&self.field, self.n).into_iter().map(AffPoint).collect())
    }

    pub fn lines(&self) -> Result<Vec<AffLine>, GeometryError> {
        check_limit("lines", self.line_count(), DEFAULT_ENUM_LIMIT)?;
        let mut out = Vec::new();
        for dir in normalized_vectors(&self.field, self.n) {
            let piv = pivot(&dir).unwrap();
            for tail in all_vectors(&self.field, self.n - 1) {
                let mut base = tail;
                base.insert(piv, FieldElem::ZERO);
                out.push(AffLine { dir: dir.clone(), base });
            }
        }
        out.sort();
        Ok(out)
    }

    fn check_len(&self, v: &[FieldElem]) -> Result<(), GeometryError> {
        if v.len() != self.n || v.iter().any(|x| x.0 >= self.field.q()) {
            return Err(GeometryError::WrongSpace(format!("{v:?}")));
        }
        Ok(())
    }

    pub fn point(&self, coords: &[FieldElem]) -> Result<AffPoint, GeometryError> {
        self.check_len(coords)?;
        Ok(AffPoint(coords.to_vec()))
    }

    pub fn point_from_ints(&self, coords: &[u32]) -> Result<AffPoint, GeometryError> {
        let v: Vector = coords.iter().map(|&x| FieldElem(x)).collect();
        self.point(&v)
    }

    /// Canonical line `{point + c·dir}`.
    pub fn line(&self, dir: &[FieldElem], point: &[FieldElem]) -> Result<AffLine, GeometryError> {
        self.check_len(dir)?;
        self.check_len(point)?;
        let f = &self.field;
        let dir = normalize(f, dir).ok_or(GeometryError::EqualPoints)?;
        let piv = pivot(&dir).unwrap();
        let base = axpy(f, f.neg(point[piv]), &dir, point);
        Ok(AffLine { dir, base })
    }

    pub fn line_from_ints(&self, dir: &[u32], point: &[u32]) -> Result<AffLine, GeometryError> {
        let d: Vector = dir.iter().map(|&x| FieldElem(x)).collect();
        let p: Vector = point.iter().map(|&x| FieldElem(x)).collect();
        self.line(&d, &p)
    }

    pub fn line_through(&self, p1: &AffPoint, p2: &AffPoint) -> Result<AffLine, GeometryError> {
        if p1 == p2 {
            return Err(GeometryError::EqualPoints);
        }
        let d = sub_vec(&self.field, &p2.0, &p1.0);
        self.line(&d, &p1.0)
    }

    pub fn line_points(&self, l: &AffLine) -> Vec<AffPoint> {
        let f = &self.field;
        let mut pts: Vec<AffPoint> = f
            .elements()
            .map(|c| AffPoint(axpy(f, c, &l.dir, &l.base)))
            .collect();
        pts.sort();
        pts
    }

    pub fn line_contains(&self, l: &AffLine, p: &AffPoint) -> bool {
        let piv = pivot(&l.dir).unwrap();
        let c = p.0[piv];
        axpy(&self.field, c, &l.dir, &l.base) == p.0
    }

    pub fn relation(&self, l1: &AffLine, l2: &AffLine) -> Relation<AffPoint> {
        let f = &self.field;
        if l1.dir == l2.dir {
            return if l1.base == l2.base {
                Relation::Equal
            } else {
                Relation::Parallel
            };
        }
        // base1 + a·d1 = base2 + b·d2
        let neg_d2: Vector = l2.dir.iter().map(|&x| f.neg(x)).collect();
        let m = MatGF::from_rows(f, self.n, &[&l1.dir, &neg_d2]).transpose();
        let rhs = sub_vec(f, &l2.base, &l1.base);
        match m.solve(&rhs) {
            Ok(x) => Relation::Meet(AffPoint(axpy(f, x[0], &l1.dir, &l1.base))),
            Err(_) => Relation::Skew,
        }
    }

    pub fn meets(&self, l1: &AffLine, l2: &AffLine) -> bool {
        matches!(self.relation(l1, l2), Relation::Meet(_))
    }

    /// Canonical flat `base + span(dirs)`.
    pub fn flat(&self, base: &[FieldElem], dirs: &[Vector]) -> AffFlat {
        let f = &self.field;
        let m = if dirs.is_empty() {
            MatGF::zeros(f, 0, self.n)
        } else {
            MatGF::from_rows(f, self.n, dirs).row_space()
        };
        let mut base = base.to_vec();
        for r in 0..m.rows() {
            let row = m.row(r);
            let piv = pivot(row).unwrap();
            base = axpy(f, f.neg(base[piv]), row, &base);
        }
        AffFlat {
            dirs: m.row_vecs(),
            base,
        }
    }

    pub fn flat_contains_point(&self, flat: &AffFlat, p: &AffPoint) -> bool {
        let mut dirs = flat.dirs.clone();
        dirs.push(sub_vec(&self.field, &p.0, &flat.base));
        self.flat(&flat.base, &dirs).dirs.len() == flat.dirs.len()
    }

    pub fn flat_contains_line(&self, flat: &AffFlat, l: &AffLine) -> bool {
        let mut dirs = flat.dirs.clone();
        dirs.push(l.dir.clone());
        dirs.push(sub_vec(&self.field, &l.base, &flat.base));
        self.flat(&flat.base, &dirs).dirs.len() == flat.dirs.len()
    }

    /// Smallest flat containing all the lines.
    pub fn span_of_lines(&self, lines: &[AffLine]) -> Result<AffFlat, GeometryError> {
        let first = lines.first().ok_or(GeometryError::Empty)?;
        let mut dirs = Vec::new();
        for l in lines {
            dirs.push(l.dir.clone());
            dirs.push(sub_vec(&self.field, &l.base, &first.base));
        }
        dirs.retain(|d| pivot(d).is_some());
        Ok(self.flat(&first.base, &dirs))
    }

    /// All 2-flats.
    pub fn planes(&self) -> Result<Vec<AffPlane>, GeometryError> {
        let q = self.q();
        let n = self.n as u32;
        // Gaussian binomial [n choose 2]_q times q^{n-2} cosets
        let count = (q.pow(n) - 1) * (q.pow(n - 1) - 1) / ((q * q - 1) * (q - 1)) * q.pow(n - 2);
        check_limit("planes", count, DEFAULT_ENUM_LIMIT)?;
        let mut out = Vec::new();
        for m in rref_2dim(&self.field, self.n) {
            let dirs = vec![m[..self.n].to_vec(), m[self.n..].to_vec()];
            let p0 = pivot(&dirs[0]).unwrap();
            let p1 = pivot(&dirs[1]).unwrap();
            for tail in all_vectors(&self.field, self.n - 2) {
                let mut base = Vec::with_capacity(self.n);
                let mut it = tail.into_iter();
                for c in 0..self.n {
                    base.push(if c == p0 || c == p1 {
                        FieldElem::ZERO
                    } else {
                        it.next().unwrap()
                    });
                }
                out.push(AffFlat { dirs: dirs.clone(), base });
            }
        }
        out.sort();
        Ok(out)
    }

    pub fn flat_points(&self, flat: &AffFlat) -> Vec<AffPoint> {
        let f = &self.field;
        let mut pts = Vec::new();
        for coeffs in all_vectors(f, flat.dirs.len()) {
            let mut p = flat.base.clone();
            for (c, d) in coeffs.iter().zip(&flat.dirs) {
                p = axpy(f, *c, d, &p);
            }
            pts.push(AffPoint(p));
        }
        pts.sort();
        pts
    }

    /// The q+1 parallel classes of a plane, each holding q lines.
    pub fn parallel_classes(&self, plane: &AffPlane) -> Vec<ParallelClass> {
        assert_eq!(plane.dimension(), 2, "parallel classes need a plane");
        let f = &self.field;
        let mut dirs: Vec<Vector> = f
            .elements()
            .map(|c| normalize(f, &axpy(f, c, &plane.dirs[1], &plane.dirs[0])).unwrap())
            .collect();
        dirs.push(plane.dirs[1].clone());
        dirs.sort();
        let pts = self.flat_points(plane);
        dirs.into_iter()
            .map(|dir| {
                let mut lines: Vec<AffLine> =
                    pts.iter().map(|p| self.line(&dir, &p.0).unwrap()).collect();
                lines.sort();
                lines.dedup();
                ParallelClass { dir, lines }
            })
            .collect()
    }
}

// -------------------------------------------------- closure and restriction

/// Embedding of AG(n,q) into PG(n,q) by `x -> (1 : x)` with the hyperplane
/// at infinity `{x_0 = 0}`.
#[derive(Debug, Clone)]
pub struct ProjectiveClosure {
    pub aspace: AffSpace,
    pub pspace: ProjSpace,
    pub infinity: Hyperplane,
}

pub fn projective_closure(aspace: &AffSpace) -> ProjectiveClosure {
    let pspace = ProjSpace::new(aspace.n, &aspace.field).unwrap();
    let mut normal = vec![FieldElem::ZERO; aspace.n + 1];
    normal[0] = FieldElem::ONE;
    ProjectiveClosure {
        aspace: aspace.clone(),
        pspace,
        infinity: Hyperplane(normal),
    }
}

impl ProjectiveClosure {
    pub fn point(&self, p: &AffPoint) -> ProjPoint {
        let mut v = Vec::with_capacity(p.0.len() + 1);
        v.push(FieldElem::ONE);
        v.extend_from_slice(&p.0);
        ProjPoint(v)
    }

    pub fn infinite_point(&self, l: &AffLine) -> ProjPoint {
        let mut v = Vec::with_capacity(l.dir.len() + 1);
        v.push(FieldElem::ZERO);
        v.extend_from_slice(&l.dir);
        ProjPoint(v)
    }

    pub fn line(&self, l: &AffLine) -> ProjLine {
        let a = self.point(&AffPoint(l.base.clone()));
        let b = self.infinite_point(l);
        self.pspace.line_through(&a, &b).unwrap()
    }

    pub fn point_map(&self) -> Result<Vec<(AffPoint, ProjPoint)>, GeometryError> {
        Ok(self
            .aspace
            .points()?
            .into_iter()
            .map(|p| {
                let img = self.point(&p);
                (p, img)
            })
            .collect())
    }

    pub fn line_map(&self) -> Result<Vec<(AffLine, ProjLine)>, GeometryError> {
        Ok(self
            .aspace
            .lines()?
            .into_iter()
            .map(|l| {
                let img = self.line(&l);
                (l, img)
            })
            .collect())
    }
}

/// Affine space `PG(n,q) \ H` with explicit coordinates.
///
/// The change of basis `y = M x` has first row the normal of `H` and the
/// remaining rows the unit vectors `e_j` for every `j` except the pivot of
/// the normal, in increasing order. So `H` becomes `{y_0 = 0}`, and for
/// `H = {x_0 = 0}` the map is the identity (inverse of [`projective_closure`]).
#[derive(Debug, Clone)]
pub struct AffineRestriction {
    pub pspace: ProjSpace,
    pub aspace: AffSpace,
    pub hyperplane: Hyperplane,
    change: MatGF,
    inverse: MatGF,
}

pub fn affine_restriction(pspace: &ProjSpace, h: &Hyperplane) -> AffineRestriction {
    let f = &pspace.field;
    let dim = pspace.n + 1;
    let piv = pivot(&h.0).unwrap();
    let mut change = MatGF::from_rows(f, dim, &[&h.0]);
    for j in (0..dim).filter(|&j| j != piv) {
        let mut e = vec![FieldElem::ZERO; dim];
        e[j] = FieldElem::ONE;
        change.push_row(&e);
    }
    // inverse via RREF of [M | I]
    let mut aug = MatGF::zeros(f, dim, 2 * dim);
    for i in 0..dim {
        for j in 0..dim {
            aug.set(i, j, change.get(i, j));
        }
        aug.set(i, dim + i, FieldElem::ONE);
    }
    let r = aug.rref().matrix;
    let mut inverse = MatGF::zeros(f, dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            inverse.set(i, j, r.get(i, dim + j));
        }
    }
    AffineRestriction {
        pspace: pspace.clone(),
        aspace: AffSpace::new(pspace.n, f).unwrap(),
        hyperplane: h.clone(),
        change,
        inverse,
    }
}

impl AffineRestriction {
    pub fn point(&self, p: &ProjPoint) -> Result<AffPoint, GeometryError> {
        let f = &self.pspace.field;
        let y = self.change.apply(&p.0);
        if y[0].is_zero() {
            return Err(GeometryError::PointOnHyperplane);
        }
        let inv = f.inv(y[0]);
        Ok(AffPoint(y[1..].iter().map(|&c| f.mul(c, inv)).collect()))
    }

    pub fn line(&self, l: &ProjLine) -> Result<AffLine, GeometryError> {
        if self.pspace.hyperplane_contains_line(&self.hyperplane, l) {
            return Err(GeometryError::LineInsideHyperplane);
        }
        let finite: Vec<AffPoint> = self
            .pspace
            .line_points(l)
            .iter()
            .filter_map(|p| self.point(p).ok())
            .take(2)
            .collect();
        self.aspace.line_through(&finite[0], &finite[1])
    }

    pub fn lift_point(&self, p: &AffPoint) -> ProjPoint {
        let mut y = Vec::with_capacity(p.0.len() + 1);
        y.push(FieldElem::ONE);
        y.extend_from_slice(&p.0);
        let x = self.inverse.apply(&y);
        ProjPoint(normalize(&self.pspace.field, &x).unwrap())
    }

    pub fn lift_line(&self, l: &AffLine) -> ProjLine {
        let pts = self.aspace.line_points(l);
        let a = self.lift_point(&pts[0]);
        let b = self.lift_point(&pts[1]);
        self.pspace.line_through(&a, &b).unwrap()
    }

    /// Every projective line outside the hyperplane with its affine image.
    pub fn line_map(&self) -> Result<Vec<(ProjLine, AffLine)>, GeometryError> {
        Ok(self
            .pspace
            .lines()?
            .into_iter()
            .filter_map(|l| self.line(&l).ok().map(|a| (l, a)))
            .collect())
    }
}
