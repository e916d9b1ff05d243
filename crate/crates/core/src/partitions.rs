//! Equitable 2-partitions, their quotient matrices, the correspondence with
//! two-valued eigenfunctions, the balance condition and Cameron-Liebler
//! line classes.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::designs::{block_graph, projective_design_over, BlockGraph, DesignError, SrgParams};
use crate::eigenfunctions::{verify_eigenfunction, EigenError, Eigenfunction, Witness};
use crate::geometry::{Hyperplane, ProjSpace};
use crate::graph::{and_count, Bitset, Graph};
use crate::reguli::{enumerate_regulus_indices, RegulusError, MAX_ENUM_Q};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("a part is empty")]
    EmptyPart,
    #[error("vertex {0} is out of range")]
    VertexOutOfRange(usize),
    #[error("not equitable: {0}")]
    NotEquitable(EquitableWitness),
    #[error("inconsistent quotient matrix {0:?}")]
    Inconsistent(QuotientMatrix),
    #[error("principal partition (no cross edges)")]
    Principal,
    #[error("the function does not take exactly two values")]
    NotTwoValued,
    #[error("the function is not a balanced (1,-1,0)-function")]
    NotSignFunction,
    #[error("bad decomposition: {0}")]
    BadDecomposition(String),
    #[error("eigenvalue {0} of a summand equals k or theta")]
    EigenvalueClash(i64),
    #[error("partition eigenvalue {found} differs from {expected}")]
    WrongEigenvalue { expected: i64, found: i64 },
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Regulus(#[from] RegulusError),
    #[error(transparent)]
    Design(#[from] DesignError),
}

/// Two vertices of one part with different neighbour counts in a part.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquitableWitness {
    pub part: usize,
    pub toward: usize,
    pub u: usize,
    pub w: usize,
    pub count_u: usize,
    pub count_w: usize,
}

impl std::fmt::Display for EquitableWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "vertices {} and {} of V{} have {} and {} neighbours in V{}",
            self.u, self.w, self.part, self.count_u, self.count_w, self.toward
        )
    }
}

/// A split of the vertex set into two nonempty sorted parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition2 {
    pub v1: Vec<usize>,
    pub v2: Vec<usize>,
}

impl Partition2 {
    /// `V1` as given, `V2` its complement in `0..n`.
    pub fn from_part(n: usize, v1: &[usize]) -> Result<Self, PartitionError> {
        let mut inside = vec![false; n];
        for &u in v1 {
            if u >= n {
                return Err(PartitionError::VertexOutOfRange(u));
            }
            inside[u] = true;
        }
        let a: Vec<usize> = (0..n).filter(|&u| inside[u]).collect();
        let b: Vec<usize> = (0..n).filter(|&u| !inside[u]).collect();
        if a.is_empty() || b.is_empty() {
            return Err(PartitionError::EmptyPart);
        }
        Ok(Partition2 { v1: a, v2: b })
    }

    pub fn swap(&self) -> Partition2 {
        Partition2 {
            v1: self.v2.clone(),
            v2: self.v1.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuotientMatrix {
    pub p11: i64,
    pub p12: i64,
    pub p21: i64,
    pub p22: i64,
}

impl QuotientMatrix {
    pub fn rows(&self) -> [[i64; 2]; 2] {
        [[self.p11, self.p12], [self.p21, self.p22]]
    }
}

fn bitset_of(n: usize, xs: &[usize]) -> Bitset {
    let mut b = Bitset::new(n);
    xs.iter().for_each(|&x| b.insert(x));
    b
}

pub fn quotient_matrix(g: &Graph, p: &Partition2) -> Result<QuotientMatrix, PartitionError> {
    let n = g.vertex_count();
    let parts = [bitset_of(n, &p.v1), bitset_of(n, &p.v2)];
    let lists = [&p.v1, &p.v2];
    let mut m = [[0i64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let first = lists[i][0];
            let c0 = and_count(g.row(first), parts[j].words());
            if let Some(&w) = lists[i].iter().find(|&&w| and_count(g.row(w), parts[j].words()) != c0) {
                return Err(PartitionError::NotEquitable(EquitableWitness {
                    part: i + 1,
                    toward: j + 1,
                    u: first,
                    w,
                    count_u: c0,
                    count_w: and_count(g.row(w), parts[j].words()),
                }));
            }
            m[i][j] = c0 as i64;
        }
    }
    Ok(QuotientMatrix {
        p11: m[0][0],
        p12: m[0][1],
        p21: m[1][0],
        p22: m[1][1],
    })
}

/// Non-trivial eigenvalue of a quotient matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PartitionEigenvalue {
    pub theta: i64,
    /// Both parts are unions of components, so θ equals k.
    pub principal: bool,
}

pub fn partition_eigenvalue(q: &QuotientMatrix) -> Result<PartitionEigenvalue, PartitionError> {
    let theta = q.p11 - q.p21;
    if q.p22 - q.p12 != theta || q.p11 + q.p12 != q.p21 + q.p22 {
        return Err(PartitionError::Inconsistent(*q));
    }
    Ok(PartitionEigenvalue {
        theta,
        principal: q.p12 == 0 && q.p21 == 0,
    })
}

/// The function with value `p12/g` on V1 and `-p21/g` on V2, `g = gcd`.
pub fn partition_to_eigenfunction(
    g: &Graph,
    p: &Partition2,
) -> Result<(Eigenfunction, QuotientMatrix), PartitionError> {
    let q = quotient_matrix(g, p)?;
    let ev = partition_eigenvalue(&q)?;
    if ev.principal {
        return Err(PartitionError::Principal);
    }
    let d = q.p12.gcd(&q.p21);
    let (x1, x2) = (q.p12 / d, -q.p21 / d);
    let f = Eigenfunction::new(
        g.vertex_count(),
        ev.theta,
        p.v1
            .iter()
            .map(|&u| (u, BigRational::from_integer(x1.into())))
            .chain(p.v2.iter().map(|&u| (u, BigRational::from_integer(x2.into())))),
    )?;
    if let Some(w) = verify_eigenfunction(g, &f)? {
        return Err(EigenError::NotAnEigenfunction(w).into());
    }
    Ok((f, q))
}

/// Splits a two-valued function into its level sets, larger value first.
pub fn eigenfunction_to_partition(
    g: &Graph,
    f: &Eigenfunction,
) -> Result<(Partition2, QuotientMatrix), PartitionError> {
    let dense = f.dense();
    let mut levels: Vec<&BigRational> = dense.iter().collect();
    levels.sort();
    levels.dedup();
    if levels.len() != 2 {
        return Err(PartitionError::NotTwoValued);
    }
    let (lo, hi) = (levels[0].clone(), levels[1].clone());
    let v1: Vec<usize> = (0..dense.len()).filter(|&u| dense[u] == hi).collect();
    let p = Partition2::from_part(g.vertex_count(), &v1)?;
    let q = quotient_matrix(g, &p)?;
    let ev = partition_eigenvalue(&q)?;
    if ev.theta != f.theta() {
        return Err(PartitionError::WrongEigenvalue {
            expected: f.theta(),
            found: ev.theta,
        });
    }
    // (hi, lo) must be an eigenvector of the quotient matrix for θ
    let t = BigRational::from_integer(ev.theta.into());
    let r = |a: i64| BigRational::from_integer(a.into());
    if r(q.p11) * &hi + r(q.p12) * &lo != &t * &hi || r(q.p21) * &hi + r(q.p22) * &lo != &t * &lo {
        return Err(EigenError::NotAnEigenfunction(Witness {
            vertex: p.v1[0],
            lhs: (&t * &hi).to_string(),
            rhs: (r(q.p11) * &hi + r(q.p12) * &lo).to_string(),
        })
        .into());
    }
    Ok((p, q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BalanceReport {
    pub m_plus: usize,
    pub m_minus: usize,
    pub equal: bool,
}

/// Counts the positive and negative support of `f1` inside `V1`, after
/// checking every hypothesis: `f1` is a balanced sign function, it is the
/// sum of the given verified eigenfunctions, none of which has eigenvalue
/// k or θ, and the partition is θ-equitable.
pub fn balance_check(
    g: &Graph,
    f1: &Eigenfunction,
    decomposition: &[Eigenfunction],
    p: &Partition2,
    theta: i64,
) -> Result<BalanceReport, PartitionError> {
    let one = BigRational::one();
    if f1.values().iter().any(|(_, x)| x.abs() != one) {
        return Err(PartitionError::NotSignFunction);
    }
    let pos = f1.positive_support();
    let neg = f1.negative_support();
    if pos.len() != neg.len() {
        return Err(PartitionError::NotSignFunction);
    }
    if decomposition.is_empty() {
        return Err(PartitionError::BadDecomposition("empty decomposition".into()));
    }
    let k = g.degree(0) as i64;
    let mut sum = vec![BigRational::zero(); g.vertex_count()];
    for fi in decomposition {
        if fi.theta() == k || fi.theta() == theta {
            return Err(PartitionError::EigenvalueClash(fi.theta()));
        }
        if let Some(w) = verify_eigenfunction(g, fi)? {
            return Err(PartitionError::BadDecomposition(format!("summand fails: {w}")));
        }
        for (u, x) in fi.values() {
            sum[*u] += x;
        }
    }
    if sum != f1.dense() {
        return Err(PartitionError::BadDecomposition("summands do not add up to f1".into()));
    }
    let q = quotient_matrix(g, p)?;
    let ev = partition_eigenvalue(&q)?;
    if ev.theta != theta {
        return Err(PartitionError::WrongEigenvalue {
            expected: theta,
            found: ev.theta,
        });
    }
    let v1 = bitset_of(g.vertex_count(), &p.v1);
    let m_plus = pos.iter().filter(|&&u| v1.contains(u)).count();
    let m_minus = neg.iter().filter(|&&u| v1.contains(u)).count();
    Ok(BalanceReport {
        m_plus,
        m_minus,
        equal: m_plus == m_minus,
    })
}

// ------------------------------------------------------- named partitions

/// Lines through a point (vertex indices).
pub fn star(bg: &BlockGraph, point: u32) -> Vec<usize> {
    bg.design.pencil(point)
}

/// Lines of a projective design contained in a hyperplane.
pub fn hyperplane_lines(bg: &BlockGraph, h: &Hyperplane) -> Vec<usize> {
    let Some((space, lines)) = bg.design.projective_lines() else {
        return Vec::new();
    };
    (0..lines.len())
        .filter(|&i| space.hyperplane_contains_line(h, &lines[i]))
        .collect()
}

/// Lines of an affine design with the given (normalised) direction.
pub fn direction_class(bg: &BlockGraph, dir: &[crate::gf::FieldElem]) -> Vec<usize> {
    let Some((_, lines)) = bg.design.affine_lines() else {
        return Vec::new();
    };
    (0..lines.len()).filter(|&i| lines[i].dir() == dir).collect()
}

// --------------------------------------------------------- Cameron-Liebler

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CameronLieblerVerdict {
    /// Every regulus meets the set as often as its opposite.
    pub method_a: bool,
    /// Smallest failing regulus pair (vertex lists) with both counts.
    pub witness_a: Option<(Vec<usize>, Vec<usize>, usize, usize)>,
    /// The set and its complement form an r-equitable partition.
    pub method_b: bool,
    pub quotient: Option<QuotientMatrix>,
    pub agree: bool,
}

/// The Grassmann graph of PG(3,q) with all of its reguli.
#[derive(Debug, Clone)]
pub struct CameronLieblerContext {
    pub graph: BlockGraph,
    pub params: SrgParams,
    pub reguli: Vec<(Vec<usize>, Vec<usize>)>,
}

impl CameronLieblerContext {
    pub fn new(space: &ProjSpace) -> Result<Self, PartitionError> {
        if space.n() != 3 {
            return Err(RegulusError::NotThreeDimensional(space.n()).into());
        }
        if space.q() > MAX_ENUM_Q {
            return Err(RegulusError::Geometry(crate::geometry::GeometryError::LimitExceeded {
                what: "reguli (q)",
                count: space.q(),
                limit: MAX_ENUM_Q,
            })
            .into());
        }
        let graph = block_graph(projective_design_over(space)?);
        let params = graph.params()?;
        let reguli = enumerate_regulus_indices(&graph.graph, space.q() as usize)?;
        Ok(CameronLieblerContext { graph, params, reguli })
    }

    /// Both criteria for a set of line indices. Empty and full sets count as
    /// Cameron-Liebler classes under both methods.
    pub fn check(&self, lines: &[usize]) -> Result<CameronLieblerVerdict, PartitionError> {
        let g = &self.graph.graph;
        let n = g.vertex_count();
        if let Some(&u) = lines.iter().find(|&&u| u >= n) {
            return Err(PartitionError::VertexOutOfRange(u));
        }
        let set = bitset_of(n, lines);
        let witness_a = self.reguli.par_iter().find_map_first(|(r, o)| {
            let a = r.iter().filter(|&&x| set.contains(x)).count();
            let b = o.iter().filter(|&&x| set.contains(x)).count();
            (a != b).then(|| (r.clone(), o.clone(), a, b))
        });
        let method_a = witness_a.is_none();
        let (method_b, quotient) = match Partition2::from_part(n, lines) {
            Err(PartitionError::EmptyPart) => (true, None),
            Err(e) => return Err(e),
            Ok(p) => match quotient_matrix(g, &p) {
                Ok(q) => (partition_eigenvalue(&q)?.theta == self.params.r, Some(q)),
                Err(PartitionError::NotEquitable(_)) => (false, None),
                Err(e) => return Err(e),
            },
        };
        Ok(CameronLieblerVerdict {
            method_a,
            witness_a,
            method_b,
            quotient,
            agree: method_a == method_b,
        })
    }
}

/// Cameron-Liebler test of a line set of PG(3,q) by both methods.
pub fn cameron_liebler_check(space: &ProjSpace, lines: &[usize]) -> Result<CameronLieblerVerdict, PartitionError> {
    CameronLieblerContext::new(space)?.check(lines)
}

/// Integer values `(x1, x2)` of the eigenvector of a quotient matrix.
pub fn quotient_eigenvector(q: &QuotientMatrix) -> Option<(BigInt, BigInt)> {
    let d = q.p12.gcd(&q.p21);
    (d != 0).then(|| (BigInt::from(q.p12 / d), BigInt::from(-q.p21 / d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{affine_design, projective_design};
    use crate::eigenfunctions::optimal_from_regulus;
    use crate::gf::{FieldElem, FieldSpec};
    use crate::reguli::enumerate_reguli;

    fn j2() -> BlockGraph {
        block_graph(projective_design(3, 2).unwrap())
    }

    fn q(p11: i64, p12: i64, p21: i64, p22: i64) -> QuotientMatrix {
        QuotientMatrix { p11, p12, p21, p22 }
    }

    #[test]
    fn quotient_examples() {
        let bg = j2();
        let p = Partition2::from_part(35, &star(&bg, 0)).unwrap();
        assert_eq!(quotient_matrix(&bg.graph, &p).unwrap(), q(6, 12, 3, 15));
        let xs = block_graph(affine_design(3, 2).unwrap());
        let cls = direction_class(&xs, &[FieldElem(1), FieldElem(0), FieldElem(0)]);
        assert_eq!(cls.len(), 4);
        let p = Partition2::from_part(28, &cls).unwrap();
        assert_eq!(quotient_matrix(&xs.graph, &p).unwrap(), q(0, 12, 2, 10));
        let single = Partition2::from_part(35, &[0]).unwrap();
        assert!(matches!(quotient_matrix(&bg.graph, &single), Err(PartitionError::NotEquitable(_))));
        assert_eq!(Partition2::from_part(3, &[0, 1, 2]), Err(PartitionError::EmptyPart));
    }

    #[test]
    fn eigenvalue_examples() {
        assert_eq!(partition_eigenvalue(&q(6, 12, 3, 15)).unwrap().theta, 3);
        assert_eq!(partition_eigenvalue(&q(0, 12, 2, 10)).unwrap().theta, -2);
        let pr = partition_eigenvalue(&q(5, 0, 0, 5)).unwrap();
        assert!(pr.principal && pr.theta == 5);
        assert!(matches!(partition_eigenvalue(&q(1, 2, 3, 4)), Err(PartitionError::Inconsistent(_))));
    }

    #[test]
    fn dictionary_round_trip() {
        let bg = j2();
        let p = Partition2::from_part(35, &star(&bg, 3)).unwrap();
        let (f, qm) = partition_to_eigenfunction(&bg.graph, &p).unwrap();
        assert_eq!(f.theta(), 3);
        assert_eq!(quotient_eigenvector(&qm), Some((4.into(), (-1).into())));
        let (p2, _) = eigenfunction_to_partition(&bg.graph, &f).unwrap();
        assert_eq!(p2, p);

        let xs = block_graph(affine_design(3, 2).unwrap());
        let cls = direction_class(&xs, &[FieldElem(0), FieldElem(1), FieldElem(1)]);
        let p = Partition2::from_part(28, &cls).unwrap();
        let (f, qm) = partition_to_eigenfunction(&xs.graph, &p).unwrap();
        assert_eq!((f.theta(), quotient_eigenvector(&qm)), (-2, Some((6.into(), (-1).into()))));
        assert_eq!(eigenfunction_to_partition(&xs.graph, &f).unwrap().0, p);

        let three = Eigenfunction::from_ints(35, 3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(eigenfunction_to_partition(&bg.graph, &three), Err(PartitionError::NotTwoValued));
    }

    #[test]
    fn named_partitions_are_equitable_q3() {
        let field = FieldSpec::of_order(3).unwrap();
        let s = ProjSpace::new(3, &field).unwrap();
        let bg = block_graph(projective_design_over(&s).unwrap());
        let r = bg.params().unwrap().r;
        for x in [0, 17, 39] {
            let p = Partition2::from_part(130, &star(&bg, x)).unwrap();
            assert_eq!(partition_to_eigenfunction(&bg.graph, &p).unwrap().0.theta(), r);
        }
        for h in s.hyperplanes().unwrap().iter().step_by(7) {
            let p = Partition2::from_part(130, &hyperplane_lines(&bg, h)).unwrap();
            assert_eq!(partition_to_eigenfunction(&bg.graph, &p).unwrap().0.theta(), r);
        }
    }

    #[test]
    fn balance_on_stars_and_planes() {
        let bg = j2();
        let (s, _) = bg.design.projective_lines().unwrap();
        let s = s.clone();
        let mut parts = Vec::new();
        for x in 0..15 {
            parts.push(Partition2::from_part(35, &star(&bg, x)).unwrap());
        }
        for h in s.hyperplanes().unwrap() {
            parts.push(Partition2::from_part(35, &hyperplane_lines(&bg, &h)).unwrap());
        }
        for rp in enumerate_reguli(&s).unwrap().iter().step_by(11) {
            let f = optimal_from_regulus(&bg, rp).unwrap();
            for p in &parts {
                let rep = balance_check(&bg.graph, &f, std::slice::from_ref(&f), p, 3).unwrap();
                assert!(rep.equal && rep.m_plus <= 1, "{rep:?}");
            }
        }
        let f = optimal_from_regulus(&bg, &enumerate_reguli(&s).unwrap()[0]).unwrap();
        assert_eq!(
            balance_check(&bg.graph, &f, std::slice::from_ref(&f), &parts[0], -3),
            Err(PartitionError::EigenvalueClash(-3))
        );
        let half = Eigenfunction::from_ints(35, -3, &[(0, 1)]).unwrap();
        assert!(matches!(
            balance_check(&bg.graph, &f, &[half], &parts[0], 3),
            Err(PartitionError::BadDecomposition(_))
        ));
    }

    #[test]
    fn cameron_liebler_examples() {
        let field = FieldSpec::of_order(2).unwrap();
        let s = ProjSpace::new(3, &field).unwrap();
        let ctx = CameronLieblerContext::new(&s).unwrap();
        let st = star(&ctx.graph, 0);
        let v = ctx.check(&st).unwrap();
        assert!(v.method_a && v.method_b && v.agree);
        assert_eq!(v.quotient, Some(q(6, 12, 3, 15)));
        let all: Vec<usize> = (0..35).collect();
        let v = ctx.check(&all).unwrap();
        assert!(v.method_a && v.method_b);
        let (r0, o0) = &ctx.reguli[0];
        let v = ctx.check(r0).unwrap();
        assert!(!v.method_a && !v.method_b && v.agree);
        let (wr, wo, a, b) = v.witness_a.unwrap();
        assert_eq!((&wr, &wo, a, b), (r0, o0, 3, 0));
    }
}
