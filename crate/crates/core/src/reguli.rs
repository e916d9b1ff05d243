//! Transversals, projective reguli and affine reguli.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::designs::{affine_design_over, block_graph, projective_design_over, DesignError};
use crate::geometry::{
    affine_restriction, projective_closure, AffFlat, AffLine, AffSpace, GeometryError, Hyperplane,
    ProjLine, ProjPoint, ProjSpace, Relation,
};
use crate::gf::FieldElem;
use crate::graph::{Bitset, Graph};
use crate::linalg::{rowspace_intersect, MatGF};

/// Largest q for which the regulus enumerations run.
pub const MAX_ENUM_Q: u64 = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegulusError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error("the point lies on one of the lines")]
    PointOnLine,
    #[error("the two lines are not skew")]
    LinesNotSkew,
    #[error("the lines are not pairwise skew")]
    NotSkew,
    #[error("the lines do not span a 3-dimensional flat")]
    NotCoplanar3Flat,
    #[error("the vectors are linearly dependent")]
    DependentVectors,
    #[error("wrong number of lines: {0}")]
    WrongCount(usize),
    #[error("need a 3-dimensional space, got dimension {0}")]
    NotThreeDimensional(usize),
    #[error("axiom violated: {0}")]
    Axiom(String),
}

fn line_basis(space: &ProjSpace, l: &ProjLine) -> MatGF {
    let (a, b) = l.rows();
    MatGF::from_rows(space.field(), a.len(), &[a, b])
}

fn pairwise_proj_skew(space: &ProjSpace, lines: &[ProjLine]) -> bool {
    lines.iter().enumerate().all(|(i, a)| {
        lines[i + 1..]
            .iter()
            .all(|b| space.relation(a, b) == Relation::Skew)
    })
}

fn pairwise_aff_skew(space: &AffSpace, lines: &[AffLine]) -> bool {
    lines.iter().enumerate().all(|(i, a)| {
        lines[i + 1..]
            .iter()
            .all(|b| space.relation(a, b) == Relation::Skew)
    })
}

/// The unique line through `t` meeting both skew lines, if any.
pub fn transversal_through(
    space: &ProjSpace,
    l1: &ProjLine,
    l2: &ProjLine,
    t: &ProjPoint,
) -> Result<Option<ProjLine>, RegulusError> {
    if space.line_contains(l1, t) || space.line_contains(l2, t) {
        return Err(RegulusError::PointOnLine);
    }
    if space.relation(l1, l2) != Relation::Skew {
        return Err(RegulusError::LinesNotSkew);
    }
    let mut p1 = line_basis(space, l1);
    p1.push_row(t.coords());
    let mut p2 = line_basis(space, l2);
    p2.push_row(t.coords());
    let m = rowspace_intersect(&p1, &p2).unwrap();
    if m.rows() == 2 {
        Ok(Some(space.line_from_vectors(m.row(0), m.row(1))?))
    } else {
        Ok(None)
    }
}

/// All lines meeting every input line in exactly one point, sorted.
pub fn common_transversals(space: &ProjSpace, lines: &[ProjLine]) -> Result<Vec<ProjLine>, RegulusError> {
    if lines.len() < 2 {
        return Err(RegulusError::WrongCount(lines.len()));
    }
    if !pairwise_proj_skew(space, lines) {
        return Err(RegulusError::NotSkew);
    }
    let mut out = Vec::new();
    for p in space.line_points(&lines[0]) {
        for p2 in space.line_points(&lines[1]) {
            let t = space.line_through(&p, &p2)?;
            if lines[2..].iter().all(|l| matches!(space.relation(&t, l), Relation::Meet(_))) {
                out.push(t);
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// A regulus together with its opposite regulus, both sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegulusPair {
    pub r: Vec<ProjLine>,
    pub r_opp: Vec<ProjLine>,
    #[serde(skip)]
    pub ambient: ProjSpace,
}

impl PartialOrd for RegulusPair {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RegulusPair {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.r, &self.r_opp).cmp(&(&other.r, &other.r_opp))
    }
}

impl RegulusPair {
    pub fn opposite(&self) -> RegulusPair {
        RegulusPair {
            r: self.r_opp.clone(),
            r_opp: self.r.clone(),
            ambient: self.ambient.clone(),
        }
    }

    /// The 3-flat containing every line.
    pub fn flat(&self) -> Result<crate::geometry::ProjFlat, RegulusError> {
        let all: Vec<ProjLine> = self.r.iter().chain(&self.r_opp).cloned().collect();
        Ok(self.ambient.span_of_lines(&all)?)
    }

    /// The `(q+1)^2` intersection points of the grid.
    pub fn grid_points(&self) -> Vec<ProjPoint> {
        let mut pts = BTreeSet::new();
        for a in &self.r {
            for b in &self.r_opp {
                if let Relation::Meet(p) = self.ambient.relation(a, b) {
                    pts.insert(p);
                }
            }
        }
        pts.into_iter().collect()
    }

    /// Checks the grid: two families of q+1 pairwise skew lines, every
    /// cross pair meeting, all in one 3-flat. Inside a 3-flat this forces
    /// each family to be the full transversal set of the other.
    pub fn verify(&self) -> Result<(), RegulusError> {
        let s = &self.ambient;
        let q1 = s.q() as usize + 1;
        for fam in [&self.r, &self.r_opp] {
            if fam.len() != q1 {
                return Err(RegulusError::WrongCount(fam.len()));
            }
            if fam.windows(2).any(|w| w[0] >= w[1]) {
                return Err(RegulusError::Axiom("family not sorted and distinct".into()));
            }
            if !pairwise_proj_skew(s, fam) {
                return Err(RegulusError::NotSkew);
            }
        }
        if self.grid_points().len() != q1 * q1 {
            return Err(RegulusError::Axiom("lines of the two families do not form a full grid".into()));
        }
        if self.flat()?.dimension() != 3 {
            return Err(RegulusError::NotCoplanar3Flat);
        }
        Ok(())
    }
}

/// The unique regulus through three pairwise skew lines of a 3-flat.
pub fn regulus_through(
    space: &ProjSpace,
    l1: &ProjLine,
    l2: &ProjLine,
    l3: &ProjLine,
) -> Result<RegulusPair, RegulusError> {
    let three = [l1.clone(), l2.clone(), l3.clone()];
    if !pairwise_proj_skew(space, &three) {
        return Err(RegulusError::NotSkew);
    }
    if space.span_of_lines(&three)?.dimension() != 3 {
        return Err(RegulusError::NotCoplanar3Flat);
    }
    let mut r_opp = Vec::new();
    for t in space.line_points(l1) {
        r_opp.push(transversal_through(space, l2, l3, &t)?.ok_or(RegulusError::NotCoplanar3Flat)?);
    }
    r_opp.sort();
    let r = common_transversals(space, &r_opp[..3])?;
    let pair = RegulusPair {
        r,
        r_opp,
        ambient: space.clone(),
    };
    pair.verify()?;
    if three.iter().any(|l| pair.r.binary_search(l).is_err()) {
        return Err(RegulusError::Axiom("regulus misses an input line".into()));
    }
    Ok(pair)
}

fn check_enum_q(q: u64) -> Result<(), RegulusError> {
    if q > MAX_ENUM_Q {
        return Err(GeometryError::LimitExceeded {
            what: "reguli (q)",
            count: q,
            limit: MAX_ENUM_Q,
        }
        .into());
    }
    Ok(())
}

fn and_rows(g: &Graph, idx: &[usize]) -> Bitset {
    let mut b = Bitset::full(g.vertex_count());
    for &i in idx {
        b.and_with(g.row(i));
    }
    b
}

/// Every ordered regulus pair of PG(3,q), once per orientation, sorted.
///
/// Works on the line-intersection graph: the transversals of a skew triple
/// are the common neighbours of its three lines.
pub fn enumerate_reguli(space: &ProjSpace) -> Result<Vec<RegulusPair>, RegulusError> {
    if space.n() != 3 {
        return Err(RegulusError::NotThreeDimensional(space.n()));
    }
    check_enum_q(space.q())?;
    let bg = block_graph(projective_design_over(space)?);
    let lines = bg.design.projective_lines().unwrap().1;
    let idx = enumerate_regulus_indices(&bg.graph, space.q() as usize)?;
    let mut out: Vec<RegulusPair> = idx
        .into_iter()
        .map(|(r, o)| RegulusPair {
            r: r.iter().map(|&i| lines[i].clone()).collect(),
            r_opp: o.iter().map(|&i| lines[i].clone()).collect(),
            ambient: space.clone(),
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Regulus pairs of the Grassmann graph J_q(4,2) as sorted vertex lists.
pub fn enumerate_regulus_indices(g: &Graph, q: usize) -> Result<Vec<(Vec<usize>, Vec<usize>)>, RegulusError> {
    let v = g.vertex_count();
    let mut found: Vec<(Vec<usize>, Vec<usize>)> = (0..v)
        .into_par_iter()
        .flat_map_iter(|a| {
            let mut out = Vec::new();
            let mut skew_a = Bitset::full(v);
            skew_a.and_not_with(g.row(a));
            for b in skew_a.iter_above(a) {
                let mut skew_ab = skew_a.clone();
                skew_ab.and_not_with(g.row(b));
                for c in skew_ab.iter_above(b) {
                    let t: Vec<usize> = and_rows(g, &[a, b, c]).iter().collect();
                    if t.len() < 3 {
                        continue;
                    }
                    let r: Vec<usize> = and_rows(g, &t[..3]).iter().collect();
                    if r.len() != q + 1 || r[..3] != [a, b, c] {
                        continue;
                    }
                    out.push((r, t));
                }
            }
            out
        })
        .collect();
    found.sort();
    for (r, o) in &found {
        let grid = r.len() == q + 1
            && o.len() == q + 1
            && g.is_independent(r)
            && g.is_independent(o)
            && r.iter().all(|&a| o.iter().all(|&b| g.adjacent(a, b)))
            && and_rows(g, r).iter().eq(o.iter().copied())
            && and_rows(g, o).iter().eq(r.iter().copied());
        if !grid {
            return Err(RegulusError::Axiom(format!("regulus check failed for {r:?} / {o:?}")));
        }
    }
    Ok(found)
}

// -------------------------------------------------------------------- affine

/// An ordered pair (S, S_opp) of opposite affine reguli, both sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AffineRegulusPair {
    pub s: Vec<AffLine>,
    pub s_opp: Vec<AffLine>,
    #[serde(skip)]
    pub ambient: AffSpace,
}

impl PartialOrd for AffineRegulusPair {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AffineRegulusPair {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.s, &self.s_opp).cmp(&(&other.s, &other.s_opp))
    }
}

fn inf_join(space: &ProjSpace, pts: &[ProjPoint]) -> Result<ProjLine, RegulusError> {
    let flat = space.span_of_points(pts);
    if flat.dimension() != 1 {
        return Err(RegulusError::Axiom("infinite points are not collinear".into()));
    }
    Ok(space.line_from_vectors(flat.basis.row(0), flat.basis.row(1))?)
}

impl AffineRegulusPair {
    pub fn opposite(&self) -> AffineRegulusPair {
        AffineRegulusPair {
            s: self.s_opp.clone(),
            s_opp: self.s.clone(),
            ambient: self.ambient.clone(),
        }
    }

    /// The projective regulus pair in the closure `PG(n,q) ⊃ AG(n,q)`: each
    /// family gains the line at infinity through the infinite points of the
    /// other family.
    pub fn lift(&self) -> Result<RegulusPair, RegulusError> {
        let c = projective_closure(&self.ambient);
        let inf_s: Vec<ProjPoint> = self.s.iter().map(|l| c.infinite_point(l)).collect();
        let inf_o: Vec<ProjPoint> = self.s_opp.iter().map(|l| c.infinite_point(l)).collect();
        let mut r: Vec<ProjLine> = self.s.iter().map(|l| c.line(l)).collect();
        r.push(inf_join(&c.pspace, &inf_o)?);
        let mut r_opp: Vec<ProjLine> = self.s_opp.iter().map(|l| c.line(l)).collect();
        r_opp.push(inf_join(&c.pspace, &inf_s)?);
        r.sort();
        r_opp.sort();
        Ok(RegulusPair {
            r,
            r_opp,
            ambient: c.pspace,
        })
    }

    /// The 3-flat spanned by all lines.
    pub fn flat(&self) -> Result<AffFlat, RegulusError> {
        let all: Vec<AffLine> = self.s.iter().chain(&self.s_opp).cloned().collect();
        Ok(self.ambient.span_of_lines(&all)?)
    }

    /// Checks sizes, skewness, full cross incidence, the common 3-flat, both
    /// affine-regulus axioms for each family, and the projective lift.
    pub fn verify(&self) -> Result<(), RegulusError> {
        let a = &self.ambient;
        let q = a.q() as usize;
        for fam in [&self.s, &self.s_opp] {
            if fam.len() != q {
                return Err(RegulusError::WrongCount(fam.len()));
            }
            if fam.windows(2).any(|w| w[0] >= w[1]) {
                return Err(RegulusError::Axiom("family not sorted and distinct".into()));
            }
            if !pairwise_aff_skew(a, fam) {
                return Err(RegulusError::NotSkew);
            }
        }
        if !self
            .s
            .iter()
            .all(|x| self.s_opp.iter().all(|y| a.meets(x, y)))
        {
            return Err(RegulusError::Axiom("a cross pair does not meet".into()));
        }
        if self.flat()?.dimension() != 3 {
            return Err(RegulusError::NotCoplanar3Flat);
        }
        for fam in [&self.s, &self.s_opp] {
            if !is_affine_regulus(a, fam) {
                return Err(RegulusError::Axiom("family fails the affine-regulus axioms".into()));
            }
        }
        let lifted = self.lift()?;
        lifted.verify()
    }
}

/// All affine lines meeting every line of a skew family (at least two lines).
pub fn affine_transversals(space: &AffSpace, lines: &[AffLine]) -> Vec<AffLine> {
    if lines.len() < 2 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for p in space.line_points(&lines[0]) {
        for p2 in space.line_points(&lines[1]) {
            let t = space.line_through(&p, &p2).unwrap();
            if lines[2..].iter().all(|l| space.meets(&t, l)) {
                out.push(t);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// The defining axioms: pairwise skew, every point of every line lies on a
/// transversal, every point of every transversal lies on a line of the set.
pub fn is_affine_regulus(space: &AffSpace, lines: &[AffLine]) -> bool {
    if lines.len() < 2 || !pairwise_aff_skew(space, lines) {
        return false;
    }
    let ts = affine_transversals(space, lines);
    let covered: BTreeSet<_> = ts.iter().flat_map(|t| space.line_points(t)).collect();
    let on_family: BTreeSet<_> = lines.iter().flat_map(|l| space.line_points(l)).collect();
    on_family.is_subset(&covered)
        && ts
            .iter()
            .all(|t| space.line_points(t).iter().all(|p| on_family.contains(p)))
}

/// The two families of the coset construction from independent v1, v2, v3:
/// `S = {c·v2 + <c·v3 + v1>}` and `S_opp = {c·v1 + <c·v3 + v2>}`.
pub fn affine_regulus_construct(
    space: &AffSpace,
    v1: &[FieldElem],
    v2: &[FieldElem],
    v3: &[FieldElem],
) -> Result<AffineRegulusPair, RegulusError> {
    let f = space.field();
    let n = space.n();
    if [v1, v2, v3].iter().any(|v| v.len() != n) {
        return Err(GeometryError::WrongSpace("vector length".into()).into());
    }
    if MatGF::from_rows(f, n, &[v1, v2, v3]).rank() != 3 {
        return Err(RegulusError::DependentVectors);
    }
    let comb = |c: FieldElem, x: &[FieldElem], y: &[FieldElem]| -> Vec<FieldElem> {
        x.iter().zip(y).map(|(&a, &b)| f.add(f.mul(c, a), b)).collect()
    };
    let scale = |c: FieldElem, x: &[FieldElem]| -> Vec<FieldElem> { x.iter().map(|&a| f.mul(c, a)).collect() };
    let mut s = Vec::new();
    let mut s_opp = Vec::new();
    for c in f.elements() {
        s.push(space.line(&comb(c, v3, v1), &scale(c, v2))?);
        s_opp.push(space.line(&comb(c, v3, v2), &scale(c, v1))?);
    }
    s.sort();
    s_opp.sort();
    let pair = AffineRegulusPair {
        s,
        s_opp,
        ambient: space.clone(),
    };
    pair.verify()?;
    let span = space.flat(&vec![FieldElem::ZERO; n], &[v1.to_vec(), v2.to_vec(), v3.to_vec()]);
    if pair.flat()? != span {
        return Err(RegulusError::Axiom("pair is not inside <v1,v2,v3>".into()));
    }
    for fam in [&pair.s, &pair.s_opp] {
        let planes = parallel_plane_class(space, fam).ok_or_else(|| {
            RegulusError::Axiom("family is not embedded in a class of parallel planes".into())
        })?;
        if planes.iter().any(|p| !planes_in(space, &span, p)) {
            return Err(RegulusError::Axiom("parallel planes leave the 3-flat".into()));
        }
    }
    Ok(pair)
}

fn planes_in(space: &AffSpace, outer: &AffFlat, inner: &AffFlat) -> bool {
    space
        .flat_points(inner)
        .iter()
        .all(|p| space.flat_contains_point(outer, p))
}

/// If all directions of a skew family span a 2-space W, the distinct
/// planes `l + W` (one per line, sorted). Otherwise `None`.
pub fn parallel_plane_class(space: &AffSpace, lines: &[AffLine]) -> Option<Vec<AffFlat>> {
    let f = space.field();
    let dirs: Vec<Vec<FieldElem>> = lines.iter().map(|l| l.dir().to_vec()).collect();
    let w = MatGF::from_rows(f, space.n(), &dirs).row_space();
    if w.rows() != 2 {
        return None;
    }
    let w = w.row_vecs();
    let planes: BTreeSet<AffFlat> = lines.iter().map(|l| space.flat(l.base(), &w)).collect();
    (planes.len() == lines.len()).then(|| planes.into_iter().collect())
}

/// Outcome of [`classify_skew_family`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum SkewFamilyClass {
    /// Infinite points collinear; every affine regulus pair extending the
    /// lines (one, except for two lines at q = 2 where there are two).
    Case1(Vec<AffineRegulusPair>),
    /// Infinite points not collinear; no extension exists.
    Case2,
}

/// Decides whether skew lines of AG(3,q) extend to an affine regulus.
pub fn classify_skew_family(space: &AffSpace, lines: &[AffLine]) -> Result<SkewFamilyClass, RegulusError> {
    if space.n() != 3 {
        return Err(RegulusError::NotThreeDimensional(space.n()));
    }
    let q = space.q() as usize;
    let ok_count = if q == 2 {
        lines.len() == 2
    } else {
        (3..=q).contains(&lines.len())
    };
    if !ok_count {
        return Err(RegulusError::WrongCount(lines.len()));
    }
    if !pairwise_aff_skew(space, lines) {
        return Err(RegulusError::NotSkew);
    }
    let c = projective_closure(space);
    let ps = &c.pspace;
    let inf: Vec<ProjPoint> = lines.iter().map(|l| c.infinite_point(l)).collect();
    let collinear = ps.span_of_points(&inf).dimension() <= 1;
    let closed: Vec<ProjLine> = lines.iter().map(|l| c.line(l)).collect();

    let mut candidates = Vec::new();
    if lines.len() >= 3 {
        candidates.push(regulus_through(ps, &closed[0], &closed[1], &closed[2])?);
    } else {
        for m in ps.lines()? {
            if ps.hyperplane_contains_line(&c.infinity, &m) && inf.iter().all(|p| !ps.line_contains(&m, p)) {
                candidates.push(regulus_through(ps, &closed[0], &closed[1], &m)?);
            }
        }
    }
    let back = affine_restriction(ps, &c.infinity);
    let mut found = BTreeSet::new();
    for rp in candidates {
        if closed.iter().any(|l| rp.r.binary_search(l).is_err()) {
            continue;
        }
        let at_inf = |fam: &[ProjLine]| fam.iter().filter(|l| ps.hyperplane_contains_line(&c.infinity, l)).count();
        if at_inf(&rp.r) != 1 || at_inf(&rp.r_opp) != 1 {
            continue;
        }
        let restrict = |fam: &[ProjLine]| -> Vec<AffLine> {
            let mut v: Vec<AffLine> = fam.iter().filter_map(|l| back.line(l).ok()).collect();
            v.sort();
            v
        };
        let pair = AffineRegulusPair {
            s: restrict(&rp.r),
            s_opp: restrict(&rp.r_opp),
            ambient: space.clone(),
        };
        pair.verify()?;
        found.insert(pair);
    }
    match (collinear, found.is_empty()) {
        (true, false) => Ok(SkewFamilyClass::Case1(found.into_iter().collect())),
        (false, true) => Ok(SkewFamilyClass::Case2),
        _ => Err(RegulusError::Axiom(
            "collinearity of infinite points disagrees with extendability".into(),
        )),
    }
}

/// Counts of affine reguli in AG(3,q) under the three conventions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AffineReguliCount {
    /// Ordered pairs (S, S_opp).
    pub ordered_pairs: usize,
    /// Distinct line sets S satisfying the axioms.
    pub families: usize,
    /// Unordered pairs {S, S_opp}, one per affine part of a hyperbolic quadric.
    pub quadrics: usize,
    /// `q^4 (q^3 - 1)(q + 1)`.
    pub formula: u64,
}

#[derive(Debug, Clone)]
pub struct AffineReguliEnumeration {
    pub pairs: Vec<AffineRegulusPair>,
    pub counts: AffineReguliCount,
}

pub fn affine_reguli_formula(q: u64) -> u64 {
    q.pow(4) * (q.pow(3) - 1) * (q + 1)
}

/// Every ordered affine regulus pair of AG(3,q), from the axioms.
///
/// Families come from skew pairs (q = 2) or skew triples closed under
/// double transversals (q >= 3); each family is checked against the axioms
/// on the point incidence, then paired with every skew q-subset of its
/// transversals that covers it. Each pair is re-verified geometrically,
/// including the projective lift.
pub fn enumerate_affine_reguli(space: &AffSpace) -> Result<AffineReguliEnumeration, RegulusError> {
    if space.n() != 3 {
        return Err(RegulusError::NotThreeDimensional(space.n()));
    }
    let q = space.q() as usize;
    check_enum_q(q as u64)?;
    let bg = block_graph(affine_design_over(space)?);
    let g = &bg.graph;
    let lines = bg.design.affine_lines().unwrap().1.to_vec();
    let blocks = bg.design.blocks().to_vec();
    let v = g.vertex_count();
    let npts = bg.design.n_points();
    let point_sets: Vec<Bitset> = blocks
        .iter()
        .map(|b| {
            let mut s = Bitset::new(npts);
            b.iter().for_each(|&x| s.insert(x as usize));
            s
        })
        .collect();
    let skew_rows: Vec<Bitset> = (0..v)
        .map(|a| {
            let mut s = Bitset::full(v);
            s.and_not_with(g.row(a));
            for b in 0..v {
                if lines[a].dir() == lines[b].dir() {
                    s.remove(b);
                }
            }
            s
        })
        .collect();
    let union_points = |fam: &[usize]| -> Bitset {
        let mut s = Bitset::new(npts);
        for &i in fam {
            for x in point_sets[i].iter() {
                s.insert(x);
            }
        }
        s
    };
    let is_skew_set = |fam: &[usize]| {
        fam.iter()
            .enumerate()
            .all(|(i, &a)| fam[i + 1..].iter().all(|&b| skew_rows[a].contains(b)))
    };
    let axioms = |fam: &[usize]| -> bool {
        if fam.len() < 2 || !is_skew_set(fam) {
            return false;
        }
        let ts: Vec<usize> = and_rows(g, fam).iter().collect();
        let on_fam = union_points(fam);
        let on_ts = union_points(&ts);
        let mut missing = on_fam.clone();
        missing.and_not_with(on_ts.words());
        let mut outside = on_ts;
        outside.and_not_with(on_fam.words());
        missing.is_empty() && outside.is_empty()
    };

    let families: Vec<Vec<usize>> = (0..v)
        .into_par_iter()
        .flat_map_iter(|a| {
            let mut out = Vec::new();
            for b in skew_rows[a].iter_above(a) {
                if q == 2 {
                    out.push(vec![a, b]);
                    continue;
                }
                let mut ab = skew_rows[a].clone();
                ab.and_with(skew_rows[b].words());
                for c in ab.iter_above(b) {
                    let ts: Vec<usize> = and_rows(g, &[a, b, c]).iter().collect();
                    if ts.len() != q {
                        continue;
                    }
                    let fam: Vec<usize> = and_rows(g, &ts).iter().collect();
                    if fam.len() == q && fam[..3] == [a, b, c] {
                        out.push(fam);
                    }
                }
            }
            out
        })
        .filter(|fam| axioms(fam))
        .collect();

    let mut idx_pairs: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for fam in &families {
        let ts: Vec<usize> = and_rows(g, fam).iter().collect();
        let cover = union_points(fam);
        for opp in skew_subsets(&ts, q, &skew_rows) {
            let mut got = union_points(&opp);
            got.and_with(cover.words());
            if got == cover && axioms(&opp) {
                idx_pairs.push((fam.clone(), opp));
            }
        }
    }
    idx_pairs.sort();
    idx_pairs.dedup();

    let pairs: Vec<AffineRegulusPair> = idx_pairs
        .par_iter()
        .map(|(s, o)| {
            let pair = AffineRegulusPair {
                s: s.iter().map(|&i| lines[i].clone()).collect(),
                s_opp: o.iter().map(|&i| lines[i].clone()).collect(),
                ambient: space.clone(),
            };
            pair.verify().map(|_| pair)
        })
        .collect::<Result<_, _>>()?;

    let fams: BTreeSet<&Vec<usize>> = idx_pairs.iter().map(|(s, _)| s).collect();
    let quads: BTreeSet<(&Vec<usize>, &Vec<usize>)> = idx_pairs
        .iter()
        .map(|(s, o)| if s <= o { (s, o) } else { (o, s) })
        .collect();
    let counts = AffineReguliCount {
        ordered_pairs: pairs.len(),
        families: fams.len(),
        quadrics: quads.len(),
        formula: affine_reguli_formula(q as u64),
    };
    Ok(AffineReguliEnumeration { pairs, counts })
}

fn skew_subsets(pool: &[usize], size: usize, skew_rows: &[Bitset]) -> Vec<Vec<usize>> {
    fn rec(pool: &[usize], size: usize, skew: &[Bitset], start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..pool.len() {
            let x = pool[i];
            if cur.iter().all(|&y| skew[y].contains(x)) {
                cur.push(x);
                rec(pool, size, skew, i + 1, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(pool, size, skew_rows, 0, &mut Vec::new(), &mut out);
    out
}

/// The (q+1) + (q+1) affine lines left when a hyperplane avoids every line
/// of a regulus pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WdbPlus2Config {
    pub r_prime: Vec<AffLine>,
    pub opp_prime: Vec<AffLine>,
    #[serde(skip)]
    pub ambient: AffSpace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Restriction {
    Affine(AffineRegulusPair),
    WdbPlus2(WdbPlus2Config),
    NotRestrictable(String),
}

/// Deletes a hyperplane from the ambient space of a regulus pair.
pub fn regulus_restriction(rp: &RegulusPair, h: &Hyperplane) -> Result<Restriction, RegulusError> {
    let ps = &rp.ambient;
    let flat = rp.flat()?;
    let plane = ps.flat_meet_hyperplane(&flat, h);
    if plane.dimension() != 2 {
        return Ok(Restriction::NotRestrictable(
            "the hyperplane contains the 3-flat of the regulus".into(),
        ));
    }
    let inside = |fam: &[ProjLine]| fam.iter().filter(|l| ps.hyperplane_contains_line(h, l)).count();
    let (in_r, in_o) = (inside(&rp.r), inside(&rp.r_opp));
    let res = affine_restriction(ps, h);
    let restrict = |fam: &[ProjLine]| -> Vec<AffLine> {
        let mut v: Vec<AffLine> = fam.iter().filter_map(|l| res.line(l).ok()).collect();
        v.sort();
        v
    };
    match (in_r, in_o) {
        (1, 1) => {
            let pair = AffineRegulusPair {
                s: restrict(&rp.r),
                s_opp: restrict(&rp.r_opp),
                ambient: res.aspace.clone(),
            };
            pair.verify()?;
            Ok(Restriction::Affine(pair))
        }
        (0, 0) => Ok(Restriction::WdbPlus2(WdbPlus2Config {
            r_prime: restrict(&rp.r),
            opp_prime: restrict(&rp.r_opp),
            ambient: res.aspace.clone(),
        })),
        (a, b) => Ok(Restriction::NotRestrictable(format!(
            "the plane contains {a} line(s) of the regulus and {b} of its opposite"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::FieldSpec;

    fn pg(n: usize, q: u64) -> ProjSpace {
        ProjSpace::new(n, &FieldSpec::of_order(q).unwrap()).unwrap()
    }

    fn ag(n: usize, q: u64) -> AffSpace {
        AffSpace::new(n, &FieldSpec::of_order(q).unwrap()).unwrap()
    }

    fn e(n: usize, i: usize) -> Vec<u32> {
        let mut v = vec![0; n];
        v[i] = 1;
        v
    }

    fn fe(v: &[u32]) -> Vec<FieldElem> {
        v.iter().map(|&x| FieldElem(x)).collect()
    }

    fn example_regulus() -> (ProjSpace, [ProjLine; 3]) {
        let s = pg(3, 2);
        let l1 = s.line_from_ints(&[1, 0, 0, 0], &[0, 1, 0, 0]).unwrap();
        let l2 = s.line_from_ints(&[0, 0, 1, 0], &[0, 0, 0, 1]).unwrap();
        let l3 = s.line_from_ints(&[1, 0, 1, 0], &[0, 1, 0, 1]).unwrap();
        (s, [l1, l2, l3])
    }

    #[test]
    fn transversal_examples() {
        let (s, [l1, l2, _]) = example_regulus();
        let t = s.point_from_ints(&[1, 0, 1, 0]).unwrap();
        let got = transversal_through(&s, &l1, &l2, &t).unwrap().unwrap();
        assert_eq!(got, s.line_from_ints(&[1, 0, 0, 0], &[0, 0, 1, 0]).unwrap());
        let on = s.point_from_ints(&[1, 0, 0, 0]).unwrap();
        assert_eq!(transversal_through(&s, &l1, &l2, &on), Err(RegulusError::PointOnLine));

        let s4 = pg(4, 2);
        let m1 = s4.line_from_ints(&[1, 0, 0, 0, 0], &[0, 1, 0, 0, 0]).unwrap();
        let m2 = s4.line_from_ints(&[0, 0, 1, 0, 0], &[0, 0, 0, 1, 0]).unwrap();
        let t5 = s4.point_from_ints(&[0, 0, 0, 0, 1]).unwrap();
        assert_eq!(transversal_through(&s4, &m1, &m2, &t5).unwrap(), None);
        let ts = common_transversals(&s4, &[m1.clone(), m2.clone()]).unwrap();
        assert_eq!(ts.len(), 9);
        let flat = s4.span_of_lines(&[m1, m2]).unwrap();
        assert!(ts.iter().all(|t| flat.contains_line(t)));
    }

    #[test]
    fn common_transversals_of_two_lines() {
        let (s, [l1, l2, _]) = example_regulus();
        let ts = common_transversals(&s, &[l1.clone(), l2.clone()]).unwrap();
        assert_eq!(ts.len(), 9);
        // one per point pair
        let mut pairs = BTreeSet::new();
        for t in &ts {
            let a = s.line_points(t).into_iter().find(|p| s.line_contains(&l1, p)).unwrap();
            let b = s.line_points(t).into_iter().find(|p| s.line_contains(&l2, p)).unwrap();
            pairs.insert((a, b));
        }
        assert_eq!(pairs.len(), 9);
        assert_eq!(common_transversals(&s, &[l1.clone(), l1]), Err(RegulusError::NotSkew));
    }

    #[test]
    fn regulus_through_example() {
        let (s, [l1, l2, l3]) = example_regulus();
        let rp = regulus_through(&s, &l1, &l2, &l3).unwrap();
        let mut want_r = vec![l1.clone(), l2.clone(), l3.clone()];
        want_r.sort();
        assert_eq!(rp.r, want_r);
        let mut want_o = vec![
            s.line_from_ints(&[1, 0, 0, 0], &[0, 0, 1, 0]).unwrap(),
            s.line_from_ints(&[0, 1, 0, 0], &[0, 0, 0, 1]).unwrap(),
            s.line_from_ints(&[1, 1, 0, 0], &[0, 0, 1, 1]).unwrap(),
        ];
        want_o.sort();
        assert_eq!(rp.r_opp, want_o);
        assert_eq!(regulus_through(&s, &l3, &l1, &l2).unwrap(), rp);
        let o = &rp.r_opp;
        assert_eq!(regulus_through(&s, &o[2], &o[0], &o[1]).unwrap(), rp.opposite());
        assert_eq!(common_transversals(&s, &rp.r).unwrap(), rp.r_opp);
        assert_eq!(rp.grid_points().len(), 9);
    }

    #[test]
    fn regulus_errors() {
        let (s, [l1, l2, _]) = example_regulus();
        let meets = s.line_from_ints(&[1, 0, 0, 0], &[0, 0, 1, 0]).unwrap();
        assert_eq!(regulus_through(&s, &l1, &l2, &meets), Err(RegulusError::NotSkew));
        let s5 = pg(5, 2);
        let a = s5.line_from_ints(&e(6, 0), &e(6, 1)).unwrap();
        let b = s5.line_from_ints(&e(6, 2), &e(6, 3)).unwrap();
        let c = s5.line_from_ints(&e(6, 4), &e(6, 5)).unwrap();
        assert_eq!(regulus_through(&s5, &a, &b, &c), Err(RegulusError::NotCoplanar3Flat));
    }

    #[test]
    fn enumerate_reguli_q2_matches_triple_scan() {
        let s = pg(3, 2);
        let all = enumerate_reguli(&s).unwrap();
        assert_eq!(all.len(), 560);
        let unordered: BTreeSet<_> = all
            .iter()
            .map(|p| if p.r <= p.r_opp { (p.r.clone(), p.r_opp.clone()) } else { (p.r_opp.clone(), p.r.clone()) })
            .collect();
        assert_eq!(unordered.len(), 280);
        // independent oracle: regulus_through on every skew triple
        let lines = s.lines().unwrap();
        let mut oracle = BTreeSet::new();
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                if s.relation(&lines[i], &lines[j]) != Relation::Skew {
                    continue;
                }
                for k in j + 1..lines.len() {
                    if let Ok(rp) = regulus_through(&s, &lines[i], &lines[j], &lines[k]) {
                        oracle.insert(rp);
                    }
                }
            }
        }
        assert_eq!(oracle.into_iter().collect::<Vec<_>>(), all);
        assert!(all.iter().all(|p| p.verify().is_ok()));
    }

    #[test]
    fn enumerate_reguli_q3_count() {
        let s = pg(3, 3);
        let all = enumerate_reguli(&s).unwrap();
        // q^4 (q^2 + 1)(q^3 - 1)
        assert_eq!(all.len(), 81 * 10 * 26);
        for rp in all.iter().step_by(997) {
            rp.verify().unwrap();
            assert_eq!(regulus_through(&s, &rp.r[0], &rp.r[1], &rp.r[2]).unwrap(), *rp);
        }
        assert!(matches!(enumerate_reguli(&pg(4, 2)), Err(RegulusError::NotThreeDimensional(4))));
    }

    #[test]
    fn construct_example_q2() {
        let a = ag(3, 2);
        let p = affine_regulus_construct(&a, &fe(&e(3, 0)), &fe(&e(3, 1)), &fe(&e(3, 2))).unwrap();
        let mut s = vec![
            a.line_from_ints(&[1, 0, 0], &[0, 0, 0]).unwrap(),
            a.line_from_ints(&[1, 0, 1], &[0, 1, 0]).unwrap(),
        ];
        s.sort();
        let mut o = vec![
            a.line_from_ints(&[0, 1, 0], &[0, 0, 0]).unwrap(),
            a.line_from_ints(&[0, 1, 1], &[1, 0, 0]).unwrap(),
        ];
        o.sort();
        assert_eq!((p.s.clone(), p.s_opp.clone()), (s, o));
        let mut pts: Vec<Vec<u32>> = p
            .s
            .iter()
            .flat_map(|x| p.s_opp.iter().map(move |y| (x, y)))
            .map(|(x, y)| match a.relation(x, y) {
                Relation::Meet(pt) => pt.to_ints(),
                other => panic!("{other:?}"),
            })
            .collect();
        pts.sort();
        assert_eq!(pts, vec![vec![0, 0, 0], vec![0, 1, 0], vec![1, 0, 0], vec![1, 1, 1]]);
        let dep = affine_regulus_construct(&a, &fe(&e(3, 0)), &fe(&e(3, 1)), &fe(&[1, 1, 0]));
        assert_eq!(dep, Err(RegulusError::DependentVectors));
    }

    #[test]
    fn construct_in_ag4() {
        let a = ag(4, 2);
        let p = affine_regulus_construct(&a, &fe(&e(4, 0)), &fe(&e(4, 1)), &fe(&e(4, 3))).unwrap();
        let want = a.flat(&fe(&[0, 0, 0, 0]), &[fe(&e(4, 0)), fe(&e(4, 1)), fe(&e(4, 3))]);
        assert_eq!(p.flat().unwrap(), want);
        // c = 0 lines pass through the origin
        let origin = a.point_from_ints(&[0, 0, 0, 0]).unwrap();
        assert!(p.s.iter().any(|l| a.line_contains(l, &origin)));
        assert!(p.s_opp.iter().any(|l| a.line_contains(l, &origin)));
    }

    #[test]
    fn classify_examples() {
        let a = ag(3, 3);
        let p = affine_regulus_construct(&a, &fe(&e(3, 0)), &fe(&e(3, 1)), &fe(&e(3, 2))).unwrap();
        assert_eq!(
            classify_skew_family(&a, &p.s).unwrap(),
            SkewFamilyClass::Case1(vec![p.clone()])
        );
        let ls = vec![
            a.line_from_ints(&[1, 0, 0], &[0, 0, 0]).unwrap(),
            a.line_from_ints(&[0, 1, 0], &[0, 0, 1]).unwrap(),
            a.line_from_ints(&[0, 0, 1], &[1, 1, 0]).unwrap(),
        ];
        assert_eq!(classify_skew_family(&a, &ls).unwrap(), SkewFamilyClass::Case2);
        let meeting = [ls[0].clone(), ls[1].clone(), a.line_from_ints(&[0, 0, 1], &[1, 0, 0]).unwrap()];
        assert_eq!(classify_skew_family(&a, &meeting), Err(RegulusError::NotSkew));
        assert_eq!(classify_skew_family(&a, &ls[..2]), Err(RegulusError::WrongCount(2)));

        let a2 = ag(3, 2);
        let p2 = affine_regulus_construct(&a2, &fe(&e(3, 0)), &fe(&e(3, 1)), &fe(&e(3, 2))).unwrap();
        match classify_skew_family(&a2, &p2.s).unwrap() {
            SkewFamilyClass::Case1(v) => {
                assert_eq!(v.len(), 2);
                assert!(v.contains(&p2));
                assert!(v.iter().all(|x| x.s == p2.s));
                let ts = affine_transversals(&a2, &p2.s);
                assert_eq!(ts.len(), 4);
                let union: BTreeSet<_> = v.iter().flat_map(|x| x.s_opp.clone()).collect();
                assert_eq!(union.into_iter().collect::<Vec<_>>(), ts);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn affine_enumeration_q2() {
        let a = ag(3, 2);
        let en = enumerate_affine_reguli(&a).unwrap();
        assert_eq!(en.counts.ordered_pairs, 336);
        assert_eq!(en.counts.formula, 336);
        assert_eq!(en.counts.families, 168);
        assert_eq!(en.counts.quadrics, 168);
        // oracle: every ordered pair comes from a projective regulus with one
        // line of each family at infinity
        let c = projective_closure(&a);
        let lifted: BTreeSet<_> = en.pairs.iter().map(|p| p.lift().unwrap()).collect();
        let direct: BTreeSet<_> = enumerate_reguli(&c.pspace)
            .unwrap()
            .into_iter()
            .filter(|rp| {
                let at = |f: &[ProjLine]| f.iter().filter(|l| c.pspace.hyperplane_contains_line(&c.infinity, l)).count();
                at(&rp.r) == 1 && at(&rp.r_opp) == 1
            })
            .collect();
        assert_eq!(lifted, direct);
    }

    #[test]
    fn restriction_cases() {
        let (s, [l1, l2, l3]) = example_regulus();
        let rp = regulus_through(&s, &l1, &l2, &l3).unwrap();
        // plane <e1,e2,e3> = {x3 = 0}
        let h = s.hyperplane_from_ints(&[0, 0, 0, 1]).unwrap();
        match regulus_restriction(&rp, &h).unwrap() {
            Restriction::Affine(p) => assert_eq!((p.s.len(), p.s_opp.len()), (2, 2)),
            other => panic!("{other:?}"),
        }
        let mut avoiding = 0;
        for h in s.hyperplanes().unwrap() {
            let hit = rp.r.iter().chain(&rp.r_opp).any(|l| s.hyperplane_contains_line(&h, l));
            match regulus_restriction(&rp, &h).unwrap() {
                Restriction::WdbPlus2(c) => {
                    assert!(!hit);
                    assert_eq!((c.r_prime.len(), c.opp_prime.len()), (3, 3));
                    avoiding += 1;
                }
                Restriction::Affine(_) => assert!(hit),
                Restriction::NotRestrictable(r) => panic!("{r}"),
            }
        }
        // 15 planes, 9 tangent planes (one per grid point)
        assert_eq!(avoiding, 6);
        // in PG(4,q) a hyperplane can contain the whole 3-flat
        let s4 = pg(4, 2);
        let up = |l: &ProjLine| {
            let (a, b) = l.rows();
            let ext = |v: &[FieldElem]| -> Vec<u32> { v.iter().map(|x| x.0).chain([0]).collect() };
            s4.line_from_ints(&ext(a), &ext(b)).unwrap()
        };
        let rp4 = regulus_through(&s4, &up(&l1), &up(&l2), &up(&l3)).unwrap();
        let h4 = s4.hyperplane_from_ints(&[0, 0, 0, 0, 1]).unwrap();
        assert!(matches!(regulus_restriction(&rp4, &h4).unwrap(), Restriction::NotRestrictable(_)));
    }
}
