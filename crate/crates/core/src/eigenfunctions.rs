//! Eigenfunctions of block graphs: verification, the optimal constructions,
//! enumeration of induced complete bipartite subgraphs, decoding back to
//! geometry, and exhaustive minimum-support search.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::designs::{srg_params_brute, wdb, BlockGraph, DesignError, SrgError};
use crate::geometry::{AffFlat, AffLine, GeometryError, Hyperplane, ParallelClass, ProjLine};
use crate::graph::{Bitset, Graph};
use crate::linalg::{normalize_primitive, nullity_mod_prime, rational_kernel, MatZ};
use crate::reguli::{regulus_restriction, regulus_through, AffineRegulusPair, RegulusError, RegulusPair, Restriction};

/// Default vertex limit for [`enumerate_complete_bipartite`].
pub const DEFAULT_VERTEX_LIMIT: usize = 1024;

const PRIME: u64 = 2_147_483_647;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EigenError {
    #[error("the function is identically zero")]
    ZeroFunction,
    #[error("vertex {0} is out of range")]
    VertexOutOfRange(usize),
    #[error("not an eigenfunction: {0}")]
    NotAnEigenfunction(Witness),
    #[error("the two parts are not disjoint")]
    PartsNotDisjoint,
    #[error("parts of different size: {0} and {1}")]
    UnequalParts(usize, usize),
    #[error("the two parallel classes coincide")]
    EqualClasses,
    #[error("the parallel class does not belong to the plane")]
    ClassNotInPlane,
    #[error("a line is not a vertex of the graph")]
    LineNotInGraph,
    #[error("graph has the wrong kind of design")]
    WrongGraph,
    #[error("the hyperplane contains a line of the regulus pair")]
    HyperplaneHitsLine,
    #[error("not optimal: {0}")]
    NotOptimal(String),
    #[error("eigenvalues differ: {0} and {1}")]
    ThetaMismatch(i64, i64),
    #[error("{what} has {count} items (limit {limit})")]
    LimitExceeded { what: &'static str, count: u64, limit: u64 },
    #[error("search budget exhausted after {} candidates; resume from vertex {}", .0.examined, .0.next_first)]
    SearchLimit(Box<Checkpoint>),
    #[error("checkpoint does not match this search")]
    CheckpointMismatch,
    #[error(transparent)]
    Regulus(#[from] RegulusError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Srg(#[from] SrgError),
}

/// A vertex where `θ·f(u) ≠ Σ_{w~u} f(w)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub vertex: usize,
    pub lhs: String,
    pub rhs: String,
}

impl std::fmt::Display for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "at vertex {}: theta*f(u) = {} but neighbour sum = {}", self.vertex, self.lhs, self.rhs)
    }
}

/// A nonzero function on the vertices with exact rational values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "EigenfunctionRepr", try_from = "EigenfunctionRepr")]
pub struct Eigenfunction {
    n_vertices: usize,
    theta: i64,
    values: Vec<(usize, BigRational)>,
}

#[derive(Serialize, Deserialize)]
struct EigenfunctionRepr {
    n_vertices: usize,
    theta: i64,
    support: Vec<usize>,
    values: Vec<String>,
}

impl From<Eigenfunction> for EigenfunctionRepr {
    fn from(f: Eigenfunction) -> Self {
        EigenfunctionRepr {
            n_vertices: f.n_vertices,
            theta: f.theta,
            support: f.support(),
            values: f.values.iter().map(|(_, x)| x.to_string()).collect(),
        }
    }
}

impl TryFrom<EigenfunctionRepr> for Eigenfunction {
    type Error = String;

    fn try_from(r: EigenfunctionRepr) -> Result<Self, String> {
        if r.support.len() != r.values.len() {
            return Err("support and values differ in length".into());
        }
        let vals = r
            .support
            .into_iter()
            .zip(r.values)
            .map(|(u, s)| s.parse::<BigRational>().map(|x| (u, x)).map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        Eigenfunction::new(r.n_vertices, r.theta, vals).map_err(|e| e.to_string())
    }
}

impl Eigenfunction {
    pub fn new(
        n_vertices: usize,
        theta: i64,
        values: impl IntoIterator<Item = (usize, BigRational)>,
    ) -> Result<Self, EigenError> {
        let mut map = std::collections::BTreeMap::new();
        for (u, x) in values {
            if u >= n_vertices {
                return Err(EigenError::VertexOutOfRange(u));
            }
            *map.entry(u).or_insert_with(BigRational::zero) += x;
        }
        let values: Vec<_> = map.into_iter().filter(|(_, x)| !x.is_zero()).collect();
        if values.is_empty() {
            return Err(EigenError::ZeroFunction);
        }
        Ok(Eigenfunction {
            n_vertices,
            theta,
            values,
        })
    }

    pub fn from_ints(n_vertices: usize, theta: i64, values: &[(usize, i64)]) -> Result<Self, EigenError> {
        Self::new(
            n_vertices,
            theta,
            values.iter().map(|&(u, x)| (u, BigRational::from_integer(x.into()))),
        )
    }

    /// +1 on `pos`, -1 on `neg`.
    pub fn signed(n_vertices: usize, theta: i64, pos: &[usize], neg: &[usize]) -> Result<Self, EigenError> {
        let one = BigRational::one();
        Self::new(
            n_vertices,
            theta,
            pos.iter()
                .map(|&u| (u, one.clone()))
                .chain(neg.iter().map(|&u| (u, -one.clone()))),
        )
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn theta(&self) -> i64 {
        self.theta
    }

    pub fn values(&self) -> &[(usize, BigRational)] {
        &self.values
    }

    pub fn support(&self) -> Vec<usize> {
        self.values.iter().map(|(u, _)| *u).collect()
    }

    pub fn support_size(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, u: usize) -> BigRational {
        self.values
            .binary_search_by_key(&u, |(w, _)| *w)
            .map(|i| self.values[i].1.clone())
            .unwrap_or_else(|_| BigRational::zero())
    }

    pub fn positive_support(&self) -> Vec<usize> {
        self.values.iter().filter(|(_, x)| x.is_positive()).map(|(u, _)| *u).collect()
    }

    pub fn negative_support(&self) -> Vec<usize> {
        self.values.iter().filter(|(_, x)| x.is_negative()).map(|(u, _)| *u).collect()
    }

    pub fn neg(&self) -> Eigenfunction {
        Eigenfunction {
            n_vertices: self.n_vertices,
            theta: self.theta,
            values: self.values.iter().map(|(u, x)| (*u, -x)).collect(),
        }
    }

    /// Common-denominator integer values.
    fn scaled_ints(&self) -> (Vec<(usize, BigInt)>, BigInt) {
        let l = self.values.iter().fold(BigInt::one(), |l, (_, x)| l.lcm(x.denom()));
        let ints = self
            .values
            .iter()
            .map(|(u, x)| (*u, x.numer() * (&l / x.denom())))
            .collect();
        (ints, l)
    }

    /// Primitive integer representative with positive first nonzero value.
    pub fn normalized(&self) -> Eigenfunction {
        let (ints, _) = self.scaled_ints();
        let mut v: Vec<BigInt> = ints.iter().map(|(_, x)| x.clone()).collect();
        normalize_primitive(&mut v);
        Eigenfunction {
            n_vertices: self.n_vertices,
            theta: self.theta,
            values: ints
                .iter()
                .zip(v)
                .map(|((u, _), x)| (*u, BigRational::from_integer(x)))
                .collect(),
        }
    }

    /// Integer values if every value is an integer.
    pub fn integer_values(&self) -> Option<Vec<(usize, BigInt)>> {
        self.values
            .iter()
            .map(|(u, x)| x.is_integer().then(|| (*u, x.to_integer())))
            .collect()
    }

    pub fn dense(&self) -> Vec<BigRational> {
        let mut d = vec![BigRational::zero(); self.n_vertices];
        for (u, x) in &self.values {
            d[*u] = x.clone();
        }
        d
    }
}

/// Exact inner product.
pub fn inner_product(f: &Eigenfunction, g: &Eigenfunction) -> BigRational {
    f.values
        .iter()
        .map(|(u, x)| x * g.value(*u))
        .fold(BigRational::zero(), |a, b| a + b)
}

/// `a·f + b·g` for two functions with the same eigenvalue.
pub fn combine(a: &BigInt, f: &Eigenfunction, b: &BigInt, g: &Eigenfunction) -> Result<Eigenfunction, EigenError> {
    if f.theta != g.theta {
        return Err(EigenError::ThetaMismatch(f.theta, g.theta));
    }
    let ra = BigRational::from_integer(a.clone());
    let rb = BigRational::from_integer(b.clone());
    Eigenfunction::new(
        f.n_vertices,
        f.theta,
        f.values
            .iter()
            .map(|(u, x)| (*u, x * &ra))
            .chain(g.values.iter().map(|(u, x)| (*u, x * &rb))),
    )
}

/// Checks `θ·f(u) = Σ_{w~u} f(w)` at every vertex. `Ok(None)` means it
/// holds; otherwise the first violating vertex is returned.
pub fn verify_eigenfunction(g: &Graph, f: &Eigenfunction) -> Result<Option<Witness>, EigenError> {
    if f.values.is_empty() {
        return Err(EigenError::ZeroFunction);
    }
    if f.n_vertices != g.vertex_count() {
        return Err(EigenError::WrongGraph);
    }
    let (ints, l) = f.scaled_ints();
    let mut sums = vec![BigInt::zero(); g.vertex_count()];
    let mut own = vec![BigInt::zero(); g.vertex_count()];
    for (s, x) in &ints {
        own[*s] = x.clone();
        for u in g.neighbors(*s) {
            sums[u] += x;
        }
    }
    let theta = BigInt::from(f.theta);
    for u in 0..g.vertex_count() {
        let lhs = &theta * &own[u];
        if lhs != sums[u] {
            let den = BigRational::from_integer(l.clone());
            return Ok(Some(Witness {
                vertex: u,
                lhs: (BigRational::from_integer(lhs) / &den).to_string(),
                rhs: (BigRational::from_integer(sums[u].clone()) / &den).to_string(),
            }));
        }
    }
    Ok(None)
}

fn require_valid(g: &Graph, f: Eigenfunction) -> Result<Eigenfunction, EigenError> {
    match verify_eigenfunction(g, &f)? {
        None => Ok(f),
        Some(w) => Err(EigenError::NotAnEigenfunction(w)),
    }
}

/// +1 on `t0`, -1 on `t1`, verified.
pub fn from_bipartite_pair(g: &Graph, t0: &[usize], t1: &[usize], theta: i64) -> Result<Eigenfunction, EigenError> {
    if t0.len() != t1.len() {
        return Err(EigenError::UnequalParts(t0.len(), t1.len()));
    }
    let a: BTreeSet<_> = t0.iter().collect();
    if t1.iter().any(|x| a.contains(x)) {
        return Err(EigenError::PartsNotDisjoint);
    }
    require_valid(g, Eigenfunction::signed(g.vertex_count(), theta, t0, t1)?)
}

fn proj_vertices(bg: &BlockGraph, lines: &[ProjLine]) -> Result<Vec<usize>, EigenError> {
    lines
        .iter()
        .map(|l| bg.projective_vertex(l).ok_or(EigenError::LineNotInGraph))
        .collect()
}

fn aff_vertices(bg: &BlockGraph, lines: &[AffLine]) -> Result<Vec<usize>, EigenError> {
    lines
        .iter()
        .map(|l| bg.affine_vertex(l).ok_or(EigenError::LineNotInGraph))
        .collect()
}

/// +1 on R, -1 on R_opp, θ = -(q+1), on the Grassmann graph of lines.
pub fn optimal_from_regulus(bg: &BlockGraph, rp: &RegulusPair) -> Result<Eigenfunction, EigenError> {
    let (space, _) = bg.design.projective_lines().ok_or(EigenError::WrongGraph)?;
    if space.field() != rp.ambient.field() || space.n() != rp.ambient.n() {
        return Err(EigenError::WrongGraph);
    }
    let t0 = proj_vertices(bg, &rp.r)?;
    let t1 = proj_vertices(bg, &rp.r_opp)?;
    from_bipartite_pair(&bg.graph, &t0, &t1, -(space.q() as i64 + 1))
}

/// +1 on one parallel class of a plane, -1 on another, θ = -q.
pub fn optimal_from_parallel_classes(
    bg: &BlockGraph,
    plane: &AffFlat,
    c1: &ParallelClass,
    c2: &ParallelClass,
) -> Result<Eigenfunction, EigenError> {
    let (space, _) = bg.design.affine_lines().ok_or(EigenError::WrongGraph)?;
    if c1.dir == c2.dir {
        return Err(EigenError::EqualClasses);
    }
    let classes = space.parallel_classes(plane);
    if !classes.contains(c1) || !classes.contains(c2) {
        return Err(EigenError::ClassNotInPlane);
    }
    let t0 = aff_vertices(bg, &c1.lines)?;
    let t1 = aff_vertices(bg, &c2.lines)?;
    from_bipartite_pair(&bg.graph, &t0, &t1, -(space.q() as i64))
}

/// +1 on S, -1 on S_opp, θ = -q.
pub fn optimal_from_affine_regulus(bg: &BlockGraph, arp: &AffineRegulusPair) -> Result<Eigenfunction, EigenError> {
    let (space, _) = bg.design.affine_lines().ok_or(EigenError::WrongGraph)?;
    if *space != arp.ambient {
        return Err(EigenError::WrongGraph);
    }
    let t0 = aff_vertices(bg, &arp.s)?;
    let t1 = aff_vertices(bg, &arp.s_opp)?;
    from_bipartite_pair(&bg.graph, &t0, &t1, -(space.q() as i64))
}

/// The ±1 function on the affine remains of a regulus pair after deleting
/// a hyperplane that avoids all of its lines; θ = -q, support 2(q+1).
pub fn wdbplus2_function(bg: &BlockGraph, rp: &RegulusPair, h: &Hyperplane) -> Result<Eigenfunction, EigenError> {
    let (space, _) = bg.design.affine_lines().ok_or(EigenError::WrongGraph)?;
    let cfg = match regulus_restriction(rp, h)? {
        Restriction::WdbPlus2(c) => c,
        _ => return Err(EigenError::HyperplaneHitsLine),
    };
    if *space != cfg.ambient {
        return Err(EigenError::WrongGraph);
    }
    let t0 = aff_vertices(bg, &cfg.r_prime)?;
    let t1 = aff_vertices(bg, &cfg.opp_prime)?;
    let f = from_bipartite_pair(&bg.graph, &t0, &t1, -(space.q() as i64))?;
    let st = support_structure(&bg.graph, &f);
    if st.kind != StructureKind::BipartiteMinusMatching || f.support_size() != 2 * (space.q() as usize + 1) {
        return Err(EigenError::NotOptimal(format!("unexpected support structure {:?}", st.kind)));
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StructureKind {
    CompleteBipartite,
    IsolatedCliquePair,
    BipartiteMinusMatching,
    Other,
}

/// Induced subgraph on the support, split by sign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SupportStructure {
    pub kind: StructureKind,
    pub t0: Vec<usize>,
    pub t1: Vec<usize>,
}

pub fn support_structure(g: &Graph, f: &Eigenfunction) -> SupportStructure {
    let t0 = f.positive_support();
    let t1 = f.negative_support();
    let cross = |a: usize| t1.iter().filter(|&&b| g.adjacent(a, b)).count();
    let cross_rev = |b: usize| t0.iter().filter(|&&a| g.adjacent(a, b)).count();
    let equal = t0.len() == t1.len() && !t0.is_empty();
    let kind = if !equal {
        StructureKind::Other
    } else if g.is_independent(&t0) && g.is_independent(&t1) {
        let m = t1.len();
        if t0.iter().all(|&a| cross(a) == m) {
            StructureKind::CompleteBipartite
        } else if t0.iter().all(|&a| cross(a) + 1 == m) && t1.iter().all(|&b| cross_rev(b) + 1 == m) {
            StructureKind::BipartiteMinusMatching
        } else {
            StructureKind::Other
        }
    } else if g.is_clique(&t0) && g.is_clique(&t1) && t0.iter().all(|&a| cross(a) == 0) {
        StructureKind::IsolatedCliquePair
    } else {
        StructureKind::Other
    };
    SupportStructure { kind, t0, t1 }
}

/// All induced `K_{a,a}` as unordered part pairs `(T0, T1)`, where `T0`
/// holds the smallest vertex; sorted.
pub fn enumerate_complete_bipartite(g: &Graph, a: usize) -> Result<Vec<(Vec<usize>, Vec<usize>)>, EigenError> {
    enumerate_complete_bipartite_limited(g, a, DEFAULT_VERTEX_LIMIT)
}

pub fn enumerate_complete_bipartite_limited(
    g: &Graph,
    a: usize,
    vertex_limit: usize,
) -> Result<Vec<(Vec<usize>, Vec<usize>)>, EigenError> {
    let v = g.vertex_count();
    if v > vertex_limit {
        return Err(EigenError::LimitExceeded {
            what: "graph vertices",
            count: v as u64,
            limit: vertex_limit as u64,
        });
    }
    if a == 0 {
        return Ok(Vec::new());
    }
    let mut out: Vec<(Vec<usize>, Vec<usize>)> = (0..v)
        .into_par_iter()
        .flat_map_iter(|x0| {
            let mut above = Bitset::new(v);
            for u in x0 + 1..v {
                above.insert(u);
            }
            let mut cand0 = above.clone();
            cand0.and_not_with(g.row(x0));
            let mut common = above;
            common.and_with(g.row(x0));
            let mut res = Vec::new();
            let mut t0 = vec![x0];
            grow_t0(g, a, &mut t0, &cand0, &common, &mut res);
            res
        })
        .collect();
    out.sort();
    Ok(out)
}

fn grow_t0(
    g: &Graph,
    a: usize,
    t0: &mut Vec<usize>,
    cand: &Bitset,
    common: &Bitset,
    out: &mut Vec<(Vec<usize>, Vec<usize>)>,
) {
    if common.count() < a {
        return;
    }
    if t0.len() == a {
        let pool: Vec<usize> = common.iter().collect();
        let mut t1 = Vec::new();
        pick_independent(g, a, &pool, 0, &mut t1, &mut |t1| out.push((t0.clone(), t1.to_vec())));
        return;
    }
    let last = *t0.last().unwrap();
    for x in cand.iter_above(last) {
        let mut c2 = cand.clone();
        c2.and_not_with(g.row(x));
        let mut m2 = common.clone();
        m2.and_with(g.row(x));
        t0.push(x);
        grow_t0(g, a, t0, &c2, &m2, out);
        t0.pop();
    }
}

fn pick_independent(
    g: &Graph,
    a: usize,
    pool: &[usize],
    start: usize,
    cur: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]),
) {
    if cur.len() == a {
        emit(cur);
        return;
    }
    for i in start..pool.len() {
        if pool.len() - i < a - cur.len() {
            break;
        }
        let x = pool[i];
        if cur.iter().all(|&y| !g.adjacent(x, y)) {
            cur.push(x);
            pick_independent(g, a, pool, i + 1, cur, emit);
            cur.pop();
        }
    }
}

/// Geometry behind an optimal eigenfunction, with +1 on the first family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum OptimalClass {
    Type1 {
        plane: AffFlat,
        positive: ParallelClass,
        negative: ParallelClass,
    },
    Type2(AffineRegulusPair),
    GrassmannRegulus(RegulusPair),
}

impl OptimalClass {
    pub fn label(&self) -> &'static str {
        match self {
            OptimalClass::Type1 { .. } => "type1",
            OptimalClass::Type2(_) => "type2",
            OptimalClass::GrassmannRegulus(_) => "regulus",
        }
    }
}

/// Decodes the support of an optimal eigenfunction back to geometry.
pub fn classify_optimal(bg: &BlockGraph, f: &Eigenfunction) -> Result<OptimalClass, EigenError> {
    let params = bg.params()?;
    if f.theta() != params.s {
        return Err(EigenError::NotOptimal(format!("eigenvalue {} is not {}", f.theta(), params.s)));
    }
    let bound = wdb(&params, f.theta())? as usize;
    if f.support_size() != bound {
        return Err(EigenError::NotOptimal(format!("support {} differs from {}", f.support_size(), bound)));
    }
    if let Some(w) = verify_eigenfunction(&bg.graph, f)? {
        return Err(EigenError::NotAnEigenfunction(w));
    }
    let st = support_structure(&bg.graph, f);
    if st.kind != StructureKind::CompleteBipartite {
        return Err(EigenError::NotOptimal(format!("support structure {:?}", st.kind)));
    }
    if let Some((space, lines)) = bg.design.projective_lines() {
        let r: Vec<ProjLine> = st.t0.iter().map(|&i| lines[i].clone()).collect();
        let o: Vec<ProjLine> = st.t1.iter().map(|&i| lines[i].clone()).collect();
        let rp = regulus_through(space, &r[0], &r[1], &r[2])?;
        if rp.r != r || rp.r_opp != o {
            return Err(EigenError::NotOptimal("parts are not a regulus and its opposite".into()));
        }
        return Ok(OptimalClass::GrassmannRegulus(rp));
    }
    let (space, lines) = bg.design.affine_lines().ok_or(EigenError::WrongGraph)?;
    let s: Vec<AffLine> = st.t0.iter().map(|&i| lines[i].clone()).collect();
    let o: Vec<AffLine> = st.t1.iter().map(|&i| lines[i].clone()).collect();
    let parallel = |fam: &[AffLine]| fam.iter().all(|l| l.dir() == fam[0].dir());
    match (parallel(&s), parallel(&o)) {
        (true, true) => {
            let all: Vec<AffLine> = s.iter().chain(&o).cloned().collect();
            let plane = space.span_of_lines(&all)?;
            if plane.dimension() != 2 {
                return Err(EigenError::NotOptimal("parallel parts do not span a plane".into()));
            }
            let classes = space.parallel_classes(&plane);
            let find = |fam: &[AffLine]| classes.iter().find(|c| c.lines == fam).cloned();
            match (find(&s), find(&o)) {
                (Some(positive), Some(negative)) => Ok(OptimalClass::Type1 {
                    plane,
                    positive,
                    negative,
                }),
                _ => Err(EigenError::NotOptimal("parts are not parallel classes".into())),
            }
        }
        (false, false) => {
            let pair = AffineRegulusPair {
                s,
                s_opp: o,
                ambient: space.clone(),
            };
            pair.verify()?;
            Ok(OptimalClass::Type2(pair))
        }
        _ => Err(EigenError::NotOptimal("one part parallel, the other not".into())),
    }
}

// ---------------------------------------------------------------- search

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    Exhaustive,
    BranchAndPrune,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    /// Stop after this many candidate supports (checked between shards).
    pub max_candidates: Option<u64>,
    /// Worker threads; 0 means the rayon default.
    pub jobs: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_candidates: None,
            jobs: 0,
        }
    }
}

/// Support whose kernel has dimension at least 2; every nonzero
/// combination of `basis` is an eigenfunction supported inside `support`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Family {
    pub support: Vec<usize>,
    pub basis: Vec<Vec<String>>,
}

/// Resumable state of [`search_min_support`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub graph_digest: String,
    pub theta: i64,
    pub target: usize,
    pub mode: SearchMode,
    /// First support vertex of the next unfinished shard.
    pub next_first: usize,
    pub examined: u64,
    pub functions: Vec<Eigenfunction>,
    pub families: Vec<Family>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchOutcome {
    /// One normalised representative per ray, sorted by support.
    pub functions: Vec<Eigenfunction>,
    pub families: Vec<Family>,
    /// Candidate supports reaching the kernel test or the leaf filter.
    pub examined: u64,
}

struct ShardResult {
    functions: Vec<Eigenfunction>,
    families: Vec<Family>,
    examined: u64,
}

/// All θ-eigenfunctions with support of exactly `target` vertices, up to
/// scaling. Supports are enumerated in lexicographic order and sharded by
/// their first vertex.
pub fn search_min_support(
    g: &Graph,
    theta: i64,
    target: usize,
    mode: SearchMode,
    limits: SearchLimits,
    resume: Option<Checkpoint>,
) -> Result<SearchOutcome, EigenError> {
    let v = g.vertex_count();
    let digest = g.digest();
    let mut state = match resume {
        Some(c) => {
            if c.graph_digest != digest || c.theta != theta || c.target != target || c.mode != mode {
                return Err(EigenError::CheckpointMismatch);
            }
            c
        }
        None => Checkpoint {
            graph_digest: digest,
            theta,
            target,
            mode,
            next_first: 0,
            examined: 0,
            functions: Vec::new(),
            families: Vec::new(),
        },
    };
    let below_bound = match srg_params_brute(g) {
        Ok(p) if theta == p.r || theta == p.s => (target as u64) < wdb(&p, theta)?,
        Ok(_) => return Err(SrgError::NotAnEigenvalue(theta).into()),
        Err(_) => false,
    };
    if target == 0 || target > v || below_bound {
        return Ok(SearchOutcome {
            functions: state.functions,
            families: state.families,
            examined: state.examined,
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(limits.jobs)
        .build()
        .expect("thread pool");
    let chunk = pool.current_num_threads().max(1) * 2;
    let last_first = v - target;
    while state.next_first <= last_first {
        if let Some(max) = limits.max_candidates {
            if state.examined >= max {
                return Err(EigenError::SearchLimit(Box::new(state)));
            }
        }
        let end = (state.next_first + chunk).min(last_first + 1);
        let results: Vec<ShardResult> = pool.install(|| {
            (state.next_first..end)
                .into_par_iter()
                .map(|x0| search_shard(g, theta, target, mode, x0))
                .collect()
        });
        for r in results {
            state.examined += r.examined;
            state.functions.extend(r.functions);
            state.families.extend(r.families);
        }
        state.next_first = end;
    }
    state.functions.sort_by(|a, b| (a.support(), a).cmp(&(b.support(), b)));
    state.functions.dedup();
    state.families.sort();
    state.families.dedup();
    Ok(SearchOutcome {
        functions: state.functions,
        families: state.families,
        examined: state.examined,
    })
}

fn search_shard(g: &Graph, theta: i64, target: usize, mode: SearchMode, x0: usize) -> ShardResult {
    let examined = AtomicU64::new(0);
    let mut res = ShardResult {
        functions: Vec::new(),
        families: Vec::new(),
        examined: 0,
    };
    let mut cur = vec![x0];
    let mut members = Bitset::new(g.vertex_count());
    members.insert(x0);
    extend(g, theta, target, mode, &mut cur, &mut members, &examined, &mut res);
    res.examined = examined.load(Ordering::Relaxed);
    res
}

#[allow(clippy::too_many_arguments)]
fn extend(
    g: &Graph,
    theta: i64,
    target: usize,
    mode: SearchMode,
    cur: &mut Vec<usize>,
    members: &mut Bitset,
    examined: &AtomicU64,
    res: &mut ShardResult,
) {
    let v = g.vertex_count();
    let last = *cur.last().unwrap();
    if mode == SearchMode::BranchAndPrune && theta != 0 && !can_cover(g, cur, members, last) {
        return;
    }
    if cur.len() == target {
        examined.fetch_add(1, Ordering::Relaxed);
        if mode == SearchMode::BranchAndPrune && !leaf_filter(g, members, theta) {
            return;
        }
        test_support(g, theta, cur, res);
        return;
    }
    let need = target - cur.len();
    for x in last + 1..=v - need {
        cur.push(x);
        members.insert(x);
        extend(g, theta, target, mode, cur, members, examined, res);
        members.remove(x);
        cur.pop();
    }
}

/// Every chosen vertex must have a chosen neighbour or a neighbour still
/// available above `last`.
fn can_cover(g: &Graph, cur: &[usize], members: &Bitset, last: usize) -> bool {
    cur.iter().all(|&u| {
        let row = g.row(u);
        if row.iter().zip(members.words()).any(|(a, b)| a & b != 0) {
            return true;
        }
        (last + 1..g.vertex_count()).any(|w| g.adjacent(u, w))
    })
}

/// No support vertex without a support neighbour (θ ≠ 0), and no vertex
/// outside the support with exactly one support neighbour.
fn leaf_filter(g: &Graph, members: &Bitset, theta: i64) -> bool {
    for u in 0..g.vertex_count() {
        let c = crate::graph::and_count(g.row(u), members.words());
        if members.contains(u) {
            if theta != 0 && c == 0 {
                return false;
            }
        } else if c == 1 {
            return false;
        }
    }
    true
}

fn test_support(g: &Graph, theta: i64, support: &[usize], res: &mut ShardResult) {
    let v = g.vertex_count();
    let t = support.len();
    let mut data = vec![0i64; v * t];
    for u in 0..v {
        for (j, &s) in support.iter().enumerate() {
            let mut x = i64::from(g.adjacent(u, s));
            if u == s {
                x -= theta;
            }
            data[u * t + j] = x;
        }
    }
    if nullity_mod_prime(&data, v, t, PRIME) == 0 {
        return;
    }
    let mut m = MatZ::zeros(v, t);
    for u in 0..v {
        for j in 0..t {
            if data[u * t + j] != 0 {
                m.set(u, j, BigInt::from(data[u * t + j]));
            }
        }
    }
    let basis = rational_kernel(&m);
    match basis.len() {
        0 => {}
        1 => {
            let b = &basis[0];
            if b.iter().all(|x| !x.is_zero()) {
                let f = Eigenfunction::new(
                    v,
                    theta,
                    support
                        .iter()
                        .zip(b)
                        .map(|(&u, x)| (u, BigRational::from_integer(x.clone()))),
                )
                .unwrap()
                .normalized();
                debug_assert!(verify_eigenfunction(g, &f).unwrap().is_none());
                res.functions.push(f);
            }
        }
        _ => {
            let somewhere_nonzero = (0..t).all(|j| basis.iter().any(|b| !b[j].is_zero()));
            if somewhere_nonzero {
                res.families.push(Family {
                    support: support.to_vec(),
                    basis: basis
                        .iter()
                        .map(|b| b.iter().map(|x| x.to_string()).collect())
                        .collect(),
                });
            }
        }
    }
}

/// Values as `i64` when they all fit.
pub fn small_values(f: &Eigenfunction) -> Option<Vec<(usize, i64)>> {
    f.integer_values()?
        .into_iter()
        .map(|(u, x)| x.to_i64().map(|y| (u, y)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{affine_design, block_graph, projective_design};
    use crate::geometry::ProjSpace;
    use crate::gf::{FieldElem, FieldSpec};
    use crate::reguli::affine_regulus_construct;

    fn j2() -> BlockGraph {
        block_graph(projective_design(3, 2).unwrap())
    }

    fn x(q: u64) -> BlockGraph {
        block_graph(affine_design(3, q).unwrap())
    }

    fn example_rp(s: &ProjSpace) -> RegulusPair {
        let l1 = s.line_from_ints(&[1, 0, 0, 0], &[0, 1, 0, 0]).unwrap();
        let l2 = s.line_from_ints(&[0, 0, 1, 0], &[0, 0, 0, 1]).unwrap();
        let l3 = s.line_from_ints(&[1, 0, 1, 0], &[0, 1, 0, 1]).unwrap();
        regulus_through(s, &l1, &l2, &l3).unwrap()
    }

    fn fe(v: &[u32]) -> Vec<FieldElem> {
        v.iter().map(|&x| FieldElem(x)).collect()
    }

    #[test]
    fn constant_function_is_principal() {
        let bg = j2();
        let all: Vec<(usize, i64)> = (0..35).map(|u| (u, 1)).collect();
        let f = Eigenfunction::from_ints(35, 18, &all).unwrap();
        assert_eq!(verify_eigenfunction(&bg.graph, &f).unwrap(), None);
        assert_eq!(Eigenfunction::from_ints(35, 1, &[(0, 0)]), Err(EigenError::ZeroFunction));
    }

    #[test]
    fn regulus_function() {
        let bg = j2();
        let (s, _) = bg.design.projective_lines().unwrap();
        let rp = example_rp(s);
        let f = optimal_from_regulus(&bg, &rp).unwrap();
        assert_eq!((f.theta(), f.support_size()), (-3, 6));
        let g = optimal_from_regulus(&bg, &rp.opposite()).unwrap();
        assert_eq!(g, f.neg());
        let wrong = Eigenfunction::new(35, 3, f.values().to_vec()).unwrap();
        let w = verify_eigenfunction(&bg.graph, &wrong).unwrap().unwrap();
        assert_ne!(w.lhs, w.rhs);
        let st = support_structure(&bg.graph, &f);
        assert_eq!(st.kind, StructureKind::CompleteBipartite);
        assert_eq!((st.t0.len(), st.t1.len()), (3, 3));
        assert_eq!(classify_optimal(&bg, &f).unwrap(), OptimalClass::GrassmannRegulus(rp));
    }

    #[test]
    fn regulus_function_q3() {
        let bg = block_graph(projective_design(3, 3).unwrap());
        let (s, _) = bg.design.projective_lines().unwrap();
        let l1 = s.line_from_ints(&[1, 0, 0, 0], &[0, 1, 0, 0]).unwrap();
        let l2 = s.line_from_ints(&[0, 0, 1, 0], &[0, 0, 0, 1]).unwrap();
        let l3 = s.line_from_ints(&[1, 0, 1, 0], &[0, 1, 0, 1]).unwrap();
        let rp = regulus_through(s, &l1, &l2, &l3).unwrap();
        let f = optimal_from_regulus(&bg, &rp).unwrap();
        assert_eq!((f.theta(), f.support_size()), (-4, 8));
    }

    #[test]
    fn bipartite_pairs() {
        let bg = j2();
        let err = from_bipartite_pair(&bg.graph, &[0], &[1], -3).unwrap_err();
        assert!(matches!(err, EigenError::NotAnEigenfunction(_)));
        assert_eq!(from_bipartite_pair(&bg.graph, &[0, 1], &[1, 2], -3), Err(EigenError::PartsNotDisjoint));
        let xs = x(2);
        let kaa = enumerate_complete_bipartite(&xs.graph, 2).unwrap();
        let (t0, t1) = &kaa[0];
        let f = from_bipartite_pair(&xs.graph, t0, t1, -2).unwrap();
        assert_eq!(f.support_size(), 4);
    }

    #[test]
    fn affine_constructions_and_classification() {
        let bg = x(2);
        let (a, _) = bg.design.affine_lines().unwrap();
        let plane = a.flat(&fe(&[0, 0, 0]), &[fe(&[1, 0, 0]), fe(&[0, 1, 0])]);
        let classes = a.parallel_classes(&plane);
        let c1 = classes.iter().find(|c| c.dir == fe(&[1, 0, 0])).unwrap();
        let c2 = classes.iter().find(|c| c.dir == fe(&[0, 1, 0])).unwrap();
        let f = optimal_from_parallel_classes(&bg, &plane, c1, c2).unwrap();
        assert_eq!((f.theta(), f.support_size()), (-2, 4));
        assert_eq!(
            classify_optimal(&bg, &f).unwrap(),
            OptimalClass::Type1 {
                plane: plane.clone(),
                positive: c1.clone(),
                negative: c2.clone()
            }
        );
        assert_eq!(optimal_from_parallel_classes(&bg, &plane, c1, c1), Err(EigenError::EqualClasses));

        let arp = affine_regulus_construct(a, &fe(&[1, 0, 0]), &fe(&[0, 1, 0]), &fe(&[0, 0, 1])).unwrap();
        let g = optimal_from_affine_regulus(&bg, &arp).unwrap();
        assert_eq!(g.support_size(), 4);
        assert_eq!(classify_optimal(&bg, &g).unwrap(), OptimalClass::Type2(arp));
    }

    #[test]
    fn complete_bipartite_counts() {
        assert_eq!(enumerate_complete_bipartite(&j2().graph, 3).unwrap().len(), 280);
        let xs = x(2);
        let all = enumerate_complete_bipartite(&xs.graph, 2).unwrap();
        assert_eq!(all.len(), 210);
        let mut type1 = 0;
        let mut type2 = 0;
        for (t0, t1) in &all {
            let f = from_bipartite_pair(&xs.graph, t0, t1, -2).unwrap();
            match classify_optimal(&xs, &f).unwrap() {
                OptimalClass::Type1 { .. } => type1 += 1,
                OptimalClass::Type2(_) => type2 += 1,
                other => panic!("{other:?}"),
            }
        }
        assert_eq!((type1, type2), (42, 168));
        assert!(enumerate_complete_bipartite(&Graph::complete(6), 2).unwrap().is_empty());
    }

    #[test]
    fn wdbplus2_q2() {
        let bg = x(2);
        let s = ProjSpace::new(3, &FieldSpec::of_order(2).unwrap()).unwrap();
        let rp = example_rp(&s);
        let mut n = 0;
        for h in s.hyperplanes().unwrap() {
            match wdbplus2_function(&bg, &rp, &h) {
                Ok(f) => {
                    assert_eq!((f.theta(), f.support_size()), (-2, 6));
                    let st = support_structure(&bg.graph, &f);
                    let edges: usize = st.t0.iter().map(|&a| st.t1.iter().filter(|&&b| bg.graph.adjacent(a, b)).count()).sum();
                    assert_eq!(edges, 6);
                    n += 1;
                }
                Err(e) => assert_eq!(e, EigenError::HyperplaneHitsLine),
            }
        }
        assert_eq!(n, 6);
    }

    #[test]
    fn isolated_clique_pair_shape() {
        // two disjoint triangles
        let mut g = Graph::empty(6);
        for (a, b) in [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)] {
            g.add_edge(a, b);
        }
        let f = Eigenfunction::signed(6, 2, &[0, 1, 2], &[3, 4, 5]).unwrap();
        assert_eq!(support_structure(&g, &f).kind, StructureKind::IsolatedCliquePair);
    }

    #[test]
    fn linearity_and_orthogonality() {
        let bg = j2();
        let all = enumerate_complete_bipartite(&bg.graph, 3).unwrap();
        let f = from_bipartite_pair(&bg.graph, &all[0].0, &all[0].1, -3).unwrap();
        let g = from_bipartite_pair(&bg.graph, &all[7].0, &all[7].1, -3).unwrap();
        let h = combine(&BigInt::from(3), &f, &BigInt::from(-5), &g).unwrap();
        assert_eq!(verify_eigenfunction(&bg.graph, &h).unwrap(), None);
        // a star is 3-equitable; its (4,-1) indicator is a 3-eigenfunction
        let pencil = bg.design.pencil(0);
        let vals: Vec<(usize, i64)> = (0..35).map(|u| (u, if pencil.contains(&u) { 4 } else { -1 })).collect();
        let r = Eigenfunction::from_ints(35, 3, &vals).unwrap();
        assert_eq!(verify_eigenfunction(&bg.graph, &r).unwrap(), None);
        assert!(inner_product(&r, &f).is_zero());
        assert!(inner_product(&r, &h).is_zero());
    }

    #[test]
    fn serde_round_trip() {
        let f = Eigenfunction::new(
            10,
            -2,
            [(1, BigRational::new(1.into(), 2.into())), (4, BigRational::from_integer((-3).into()))],
        )
        .unwrap();
        let s = serde_json::to_string(&f).unwrap();
        let back: Eigenfunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert_eq!(f.normalized().values()[0].1, BigRational::from_integer(1.into()));
        assert_eq!(f.normalized().values()[1].1, BigRational::from_integer((-6).into()));
    }

    #[test]
    fn search_small_targets() {
        let bg = x(2);
        let g = &bg.graph;
        let ex = search_min_support(g, -2, 4, SearchMode::Exhaustive, SearchLimits::default(), None).unwrap();
        let bp = search_min_support(g, -2, 4, SearchMode::BranchAndPrune, SearchLimits::default(), None).unwrap();
        assert_eq!(ex.functions, bp.functions);
        assert_eq!(ex.functions.len(), 210);
        assert!(ex.families.is_empty());
        assert_eq!(ex.examined, 20475);
        let below = search_min_support(g, -2, 3, SearchMode::Exhaustive, SearchLimits::default(), None).unwrap();
        assert!(below.functions.is_empty());
        assert!(matches!(
            search_min_support(g, 5, 4, SearchMode::Exhaustive, SearchLimits::default(), None),
            Err(EigenError::Srg(SrgError::NotAnEigenvalue(5)))
        ));
    }

    #[test]
    fn search_resume_matches_single_run() {
        let bg = x(2);
        let g = &bg.graph;
        let full = search_min_support(g, -2, 4, SearchMode::BranchAndPrune, SearchLimits::default(), None).unwrap();
        let limits = SearchLimits {
            max_candidates: Some(3000),
            jobs: 1,
        };
        let mut resume = None;
        let mut rounds = 0;
        let out = loop {
            match search_min_support(g, -2, 4, SearchMode::BranchAndPrune, limits, resume.take()) {
                Ok(o) => break o,
                Err(EigenError::SearchLimit(cp)) => {
                    let json = serde_json::to_string(&cp).unwrap();
                    let cp: Checkpoint = serde_json::from_str(&json).unwrap();
                    resume = Some(Checkpoint {
                        examined: 0,
                        ..cp
                    });
                    rounds += 1;
                }
                Err(e) => panic!("{e}"),
            }
        };
        assert!(rounds > 1);
        assert_eq!(out.functions, full.functions);
        let other = x(3);
        let cp = Checkpoint {
            graph_digest: g.digest(),
            theta: -2,
            target: 4,
            mode: SearchMode::Exhaustive,
            next_first: 0,
            examined: 0,
            functions: vec![],
            families: vec![],
        };
        assert_eq!(
            search_min_support(&other.graph, -3, 4, SearchMode::Exhaustive, SearchLimits::default(), Some(cp)),
            Err(EigenError::CheckpointMismatch)
        );
    }
}
