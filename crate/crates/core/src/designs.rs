//! Projective and affine Steiner systems, their block graphs, and the
//! strongly regular parameter machinery around them.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{AffLine, AffPoint, AffSpace, GeometryError, ProjLine, ProjPoint, ProjSpace};
use crate::gf::{FieldSpec, GfError};
use crate::graph::Graph;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DesignError {
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("affine designs need n >= 3, got {0}")]
    AffineDimension(usize),
    #[error("2-({n},{m},1) is a symmetric design")]
    SymmetricDesign { n: u64, m: u64 },
    #[error("non-integral parameter: {0}")]
    NonIntegral(String),
    #[error("points {0} and {1} do not lie in exactly one block")]
    NotADesign(u32, u32),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SrgError {
    #[error("not strongly regular: {0}")]
    NotStronglyRegular(SrgWitness),
    #[error("eigenvalues of ({v},{k},{lambda},{mu}) are irrational")]
    IrrationalEigenvalues { v: i64, k: i64, lambda: i64, mu: i64 },
    #[error("imprimitive or degenerate parameters ({v},{k},{lambda},{mu})")]
    Imprimitive { v: i64, k: i64, lambda: i64, mu: i64 },
    #[error("non-integral multiplicity")]
    NonIntegralMultiplicity,
    #[error("{0} is not a non-principal eigenvalue")]
    NotAnEigenvalue(i64),
}

/// Violating vertex pair found by [`srg_params_brute`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SrgWitness {
    pub kind: &'static str,
    pub u: usize,
    pub w: usize,
    pub expected: usize,
    pub found: usize,
}

impl std::fmt::Display for SrgWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} at ({}, {}): expected {}, found {}",
            self.kind, self.u, self.w, self.expected, self.found
        )
    }
}

/// Where the points and blocks of a design came from.
#[derive(Debug, Clone)]
pub enum DesignGeometry {
    Projective {
        space: ProjSpace,
        points: Vec<ProjPoint>,
        lines: Vec<ProjLine>,
    },
    Affine {
        space: AffSpace,
        points: Vec<AffPoint>,
        lines: Vec<AffLine>,
    },
}

/// A 2-(N, M, 1) design. Block `i` is the i-th line in canonical order.
#[derive(Debug, Clone)]
pub struct Design {
    n_points: usize,
    block_size: usize,
    blocks: Vec<Vec<u32>>,
    pair_index: Vec<u32>,
    geometry: DesignGeometry,
}

impl Design {
    fn build(n_points: usize, blocks: Vec<Vec<u32>>, geometry: DesignGeometry) -> Result<Self, DesignError> {
        let block_size = blocks.first().map_or(0, |b| b.len());
        let mut pair_index = vec![u32::MAX; n_points * n_points];
        for (bi, b) in blocks.iter().enumerate() {
            for (i, &x) in b.iter().enumerate() {
                for &y in &b[i + 1..] {
                    let slot = x as usize * n_points + y as usize;
                    if pair_index[slot] != u32::MAX {
                        return Err(DesignError::NotADesign(x, y));
                    }
                    pair_index[slot] = bi as u32;
                    pair_index[y as usize * n_points + x as usize] = bi as u32;
                }
            }
        }
        for x in 0..n_points {
            for y in x + 1..n_points {
                if pair_index[x * n_points + y] == u32::MAX {
                    return Err(DesignError::NotADesign(x as u32, y as u32));
                }
            }
        }
        Ok(Design {
            n_points,
            block_size,
            blocks,
            pair_index,
            geometry,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn blocks(&self) -> &[Vec<u32>] {
        &self.blocks
    }

    pub fn geometry(&self) -> &DesignGeometry {
        &self.geometry
    }

    /// The unique block through two distinct points.
    pub fn block_through(&self, x: usize, y: usize) -> Option<usize> {
        let b = self.pair_index[x * self.n_points + y];
        (b != u32::MAX).then_some(b as usize)
    }

    /// Blocks containing point `x`, ascending.
    pub fn pencil(&self, x: u32) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.binary_search(&x).is_ok())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn projective_lines(&self) -> Option<(&ProjSpace, &[ProjLine])> {
        match &self.geometry {
            DesignGeometry::Projective { space, lines, .. } => Some((space, lines)),
            _ => None,
        }
    }

    pub fn affine_lines(&self) -> Option<(&AffSpace, &[AffLine])> {
        match &self.geometry {
            DesignGeometry::Affine { space, lines, .. } => Some((space, lines)),
            _ => None,
        }
    }

    pub fn projective_points(&self) -> Option<&[ProjPoint]> {
        match &self.geometry {
            DesignGeometry::Projective { points, .. } => Some(points),
            _ => None,
        }
    }

    pub fn affine_points(&self) -> Option<&[AffPoint]> {
        match &self.geometry {
            DesignGeometry::Affine { points, .. } => Some(points),
            _ => None,
        }
    }
}

/// PS(n,q): points and lines of PG(n,q).
pub fn projective_design(n: usize, q: u64) -> Result<Design, DesignError> {
    let field = FieldSpec::of_order(q)?;
    projective_design_over(&ProjSpace::new(n, &field)?)
}

pub fn projective_design_over(space: &ProjSpace) -> Result<Design, DesignError> {
    let points = space.points()?;
    let lines = space.lines()?;
    let blocks = lines
        .iter()
        .map(|l| {
            space
                .line_points(l)
                .iter()
                .map(|p| points.binary_search(p).unwrap() as u32)
                .collect::<Vec<u32>>()
        })
        .map(sorted)
        .collect();
    Design::build(
        points.len(),
        blocks,
        DesignGeometry::Projective {
            space: space.clone(),
            points,
            lines,
        },
    )
}

/// AS(n,q): points and lines of AG(n,q), n >= 3.
pub fn affine_design(n: usize, q: u64) -> Result<Design, DesignError> {
    if n < 3 {
        return Err(DesignError::AffineDimension(n));
    }
    let field = FieldSpec::of_order(q)?;
    affine_design_over(&AffSpace::new(n, &field)?)
}

pub fn affine_design_over(space: &AffSpace) -> Result<Design, DesignError> {
    if space.n() < 3 {
        return Err(DesignError::AffineDimension(space.n()));
    }
    let points = space.points()?;
    let lines = space.lines()?;
    let blocks = lines
        .iter()
        .map(|l| {
            space
                .line_points(l)
                .iter()
                .map(|p| space.encode_point(p) as u32)
                .collect::<Vec<u32>>()
        })
        .map(sorted)
        .collect();
    Design::build(
        points.len(),
        blocks,
        DesignGeometry::Affine {
            space: space.clone(),
            points,
            lines,
        },
    )
}

fn sorted(mut v: Vec<u32>) -> Vec<u32> {
    v.sort_unstable();
    v
}

/// Block graph of a design: blocks adjacent iff they intersect.
#[derive(Debug, Clone)]
pub struct BlockGraph {
    pub design: Arc<Design>,
    pub graph: Graph,
}

impl BlockGraph {
    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    /// Vertex of a projective line, if the design is projective.
    pub fn projective_vertex(&self, l: &ProjLine) -> Option<usize> {
        self.design.projective_lines()?.1.binary_search(l).ok()
    }

    pub fn affine_vertex(&self, l: &AffLine) -> Option<usize> {
        self.design.affine_lines()?.1.binary_search(l).ok()
    }

    /// Parameters from the design's point count and block size.
    pub fn params(&self) -> Result<SrgParams, DesignError> {
        srg_params_formula(self.design.n_points() as u64, self.design.block_size() as u64)
    }
}

pub fn block_graph(d: Design) -> BlockGraph {
    let v = d.blocks.len();
    let mut graph = Graph::empty(v);
    // blocks through each point form a clique
    let mut pencils: Vec<Vec<usize>> = vec![Vec::new(); d.n_points];
    for (bi, b) in d.blocks.iter().enumerate() {
        for &x in b {
            pencils[x as usize].push(bi);
        }
    }
    for pencil in &pencils {
        for (i, &a) in pencil.iter().enumerate() {
            for &b in &pencil[i + 1..] {
                graph.add_edge(a, b);
            }
        }
    }
    BlockGraph {
        design: Arc::new(d),
        graph,
    }
}

/// Strongly regular parameters with the integer spectrum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SrgParams {
    pub v: i64,
    pub k: i64,
    pub lambda: i64,
    pub mu: i64,
    pub r: i64,
    pub s: i64,
    pub delta: i64,
    pub m_r: i64,
    pub m_s: i64,
    /// Rows `(1, k, v-1-k)`, `(m_r, r, -1-r)`, `(m_s, s, -1-s)`.
    pub modified_matrix: [[i64; 3]; 3],
}

impl SrgParams {
    pub fn eigenvalues(&self) -> [i64; 3] {
        [self.k, self.r, self.s]
    }

    /// Parameters of the complement graph.
    pub fn complement(&self) -> Result<SrgParams, SrgError> {
        let (v, k, l, m) = (self.v, self.k, self.lambda, self.mu);
        srg_spectrum(v, v - 1 - k, v - 2 - 2 * k + m, v - 2 * k + l)
    }
}

fn isqrt(n: i64) -> Option<i64> {
    if n < 0 {
        return None;
    }
    let r = (n as f64).sqrt() as i64;
    (r.saturating_sub(1)..=r + 1).find(|&x| x * x == n)
}

fn exact_div(a: i64, b: i64, what: &str) -> Result<i64, DesignError> {
    if b == 0 || a % b != 0 {
        Err(DesignError::NonIntegral(format!("{what} = {a}/{b}")))
    } else {
        Ok(a / b)
    }
}

/// Spectrum of a primitive strongly regular graph with integer eigenvalues.
pub fn srg_spectrum(v: i64, k: i64, lambda: i64, mu: i64) -> Result<SrgParams, SrgError> {
    if mu <= 0 || mu >= k || k >= v - 1 {
        return Err(SrgError::Imprimitive { v, k, lambda, mu });
    }
    let disc = (lambda - mu).pow(2) + 4 * (k - mu);
    let delta = isqrt(disc).ok_or(SrgError::IrrationalEigenvalues { v, k, lambda, mu })?;
    let r = (lambda - mu + delta) / 2;
    let s = (lambda - mu - delta) / 2;
    let num_r = -((v - 1) * s + k);
    let num_s = (v - 1) * r + k;
    if num_r % (r - s) != 0 || num_s % (r - s) != 0 {
        return Err(SrgError::NonIntegralMultiplicity);
    }
    let (m_r, m_s) = (num_r / (r - s), num_s / (r - s));
    Ok(SrgParams {
        v,
        k,
        lambda,
        mu,
        r,
        s,
        delta,
        m_r,
        m_s,
        modified_matrix: [[1, k, v - 1 - k], [m_r, r, -1 - r], [m_s, s, -1 - s]],
    })
}

/// Parameters of the block graph of a 2-(N,M,1) design from N and M alone.
pub fn srg_params_formula(n: u64, m: u64) -> Result<SrgParams, DesignError> {
    let (n, m) = (n as i64, m as i64);
    if m < 2 || n <= m {
        return Err(DesignError::NonIntegral(format!("degenerate design 2-({n},{m},1)")));
    }
    if n == m * m - m + 1 {
        return Err(DesignError::SymmetricDesign { n: n as u64, m: m as u64 });
    }
    let v = exact_div(n * (n - 1), m * (m - 1), "v")?;
    let k = exact_div(m * (n - m), m - 1, "k")?;
    let lambda = (m - 1).pow(2) + exact_div(n - 1, m - 1, "r_design")? - 2;
    let mu = m * m;
    let params = srg_spectrum(v, k, lambda, mu)
        .map_err(|e| DesignError::NonIntegral(e.to_string()))?;
    if params.s != -m {
        return Err(DesignError::NonIntegral(format!(
            "smallest eigenvalue {} differs from -M = {}",
            params.s, -m
        )));
    }
    Ok(params)
}

/// Parameters by exhaustive pair scan.
pub fn srg_params_brute(g: &Graph) -> Result<SrgParams, SrgError> {
    let v = g.vertex_count();
    if v < 2 {
        return Err(SrgError::Imprimitive { v: v as i64, k: 0, lambda: 0, mu: 0 });
    }
    let k = g.degree(0);
    if let Some(u) = (1..v).find(|&u| g.degree(u) != k) {
        return Err(SrgError::NotStronglyRegular(SrgWitness {
            kind: "degree",
            u: 0,
            w: u,
            expected: k,
            found: g.degree(u),
        }));
    }
    let first_edge = (1..v).find(|&w| g.adjacent(0, w));
    let first_non = (1..v).find(|&w| !g.adjacent(0, w));
    let lambda = first_edge.map(|w| g.common_neighbors(0, w));
    let mu = first_non.map(|w| g.common_neighbors(0, w));
    let witness = (0..v).into_par_iter().find_map_first(|u| {
        (u + 1..v).find_map(|w| {
            let c = g.common_neighbors(u, w);
            let (kind, expected) = if g.adjacent(u, w) {
                ("lambda", lambda?)
            } else {
                ("mu", mu?)
            };
            (c != expected).then_some(SrgWitness { kind, u, w, expected, found: c })
        })
    });
    if let Some(w) = witness {
        return Err(SrgError::NotStronglyRegular(w));
    }
    let (v, k) = (v as i64, k as i64);
    match (lambda, mu) {
        (Some(l), Some(m)) => srg_spectrum(v, k, l as i64, m as i64),
        (l, m) => Err(SrgError::Imprimitive {
            v,
            k,
            lambda: l.map_or(-1, |x| x as i64),
            mu: m.map_or(-1, |x| x as i64),
        }),
    }
}

/// Weight-distribution bound `1 + |θ| + |((θ-λ)θ - k)/μ|` for a
/// non-principal eigenvalue θ, cross-checked against the closed forms
/// `-2s` and `2(r+1)`.
pub fn wdb(params: &SrgParams, theta: i64) -> Result<u64, SrgError> {
    if theta != params.r && theta != params.s {
        return Err(SrgError::NotAnEigenvalue(theta));
    }
    let num = (theta - params.lambda) * theta - params.k;
    if num % params.mu != 0 {
        return Err(SrgError::NonIntegralMultiplicity);
    }
    let bound = 1 + theta.abs() + (num / params.mu).abs();
    let closed = if theta == params.s {
        -2 * params.s
    } else {
        2 * (params.r + 1)
    };
    assert_eq!(bound, closed, "weight-distribution bound disagrees with its closed form");
    Ok(bound as u64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DelsarteReport {
    /// `1 + k/(-s)`; `None` if not an integer.
    pub bound: Option<i64>,
    pub pencil_sizes: Vec<usize>,
    pub pencils_meet_bound: bool,
}

/// Checks that every point pencil is a clique of Delsarte-Hoffman size.
pub fn delsarte_check(bg: &BlockGraph, params: &SrgParams) -> DelsarteReport {
    let bound = (params.k % -params.s == 0).then(|| 1 + params.k / -params.s);
    let mut sizes = Vec::with_capacity(bg.design.n_points());
    let mut ok = bound.is_some();
    for x in 0..bg.design.n_points() as u32 {
        let pencil = bg.design.pencil(x);
        ok &= bg.graph.is_clique(&pencil) && Some(pencil.len() as i64) == bound;
        sizes.push(pencil.len());
    }
    sizes.sort_unstable();
    sizes.dedup();
    DelsarteReport {
        bound,
        pencil_sizes: sizes,
        pencils_meet_bound: ok,
    }
}

pub fn complement(g: &Graph) -> Graph {
    g.complement()
}
