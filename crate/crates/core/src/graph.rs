//! Simple undirected graphs with bitset adjacency rows.
//!
//! Common-neighbour counts are popcounts of ANDed rows; the exhaustive
//! scans in this crate spend most of their time here.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bitset {
    words: Vec<u64>,
}

impl fmt::Debug for Bitset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Bitset {
    pub fn new(len: usize) -> Self {
        Bitset {
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut b = Self::new(len);
        for i in 0..len {
            b.insert(i);
        }
        b
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn and_with(&mut self, other: &[u64]) {
        for (a, b) in self.words.iter_mut().zip(other) {
            *a &= b;
        }
    }

    pub fn and_not_with(&mut self, other: &[u64]) {
        for (a, b) in self.words.iter_mut().zip(other) {
            *a &= !b;
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Members in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// Members strictly greater than `i`.
    pub fn iter_above(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.iter().skip_while(move |&x| x <= i)
    }
}

#[inline]
pub fn and_count(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    v: usize,
    words: usize,
    adj: Vec<u64>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(v={}, edges={})", self.v, self.edge_count())
    }
}

impl Graph {
    pub fn empty(v: usize) -> Self {
        let words = v.div_ceil(64).max(1);
        Graph {
            v,
            words,
            adj: vec![0; v * words],
        }
    }

    pub fn from_edges(v: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::empty(v);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn complete(v: usize) -> Self {
        let mut g = Self::empty(v);
        for a in 0..v {
            for b in a + 1..v {
                g.add_edge(a, b);
            }
        }
        g
    }

    pub fn path(v: usize) -> Self {
        let edges: Vec<_> = (1..v).map(|i| (i - 1, i)).collect();
        Self::from_edges(v, &edges)
    }

    pub fn cycle(v: usize) -> Self {
        let edges: Vec<_> = (0..v).map(|i| (i, (i + 1) % v)).collect();
        Self::from_edges(v, &edges)
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        assert!(a != b, "loops are not allowed");
        self.adj[a * self.words + b / 64] |= 1 << (b % 64);
        self.adj[b * self.words + a / 64] |= 1 << (a % 64);
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.v
    }

    #[inline]
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    #[inline]
    pub fn row(&self, u: usize) -> &[u64] {
        &self.adj[u * self.words..(u + 1) * self.words]
    }

    pub fn row_bitset(&self, u: usize) -> Bitset {
        Bitset {
            words: self.row(u).to_vec(),
        }
    }

    pub fn degree(&self, u: usize) -> usize {
        self.row(u).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        let v = self.v;
        self.row(u).iter().enumerate().flat_map(move |(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
            .filter(move |&x| x < v)
        })
    }

    #[inline]
    pub fn common_neighbors(&self, a: usize, b: usize) -> usize {
        and_count(self.row(a), self.row(b))
    }

    pub fn edge_count(&self) -> usize {
        (0..self.v).map(|u| self.degree(u)).sum::<usize>() / 2
    }

    pub fn complement(&self) -> Graph {
        let mut g = Graph::empty(self.v);
        for a in 0..self.v {
            for b in a + 1..self.v {
                if !self.adjacent(a, b) {
                    g.add_edge(a, b);
                }
            }
        }
        g
    }

    /// Raw adjacency words, `vertex_count() * words_per_row()` of them.
    pub fn raw_words(&self) -> &[u64] {
        &self.adj
    }

    pub fn words_per_row(&self) -> usize {
        self.words
    }

    pub fn from_raw(v: usize, adj: Vec<u64>) -> Option<Self> {
        let words = v.div_ceil(64).max(1);
        (adj.len() == v * words).then_some(Graph { v, words, adj })
    }

    /// SHA-256 of the vertex count and adjacency words, hex encoded.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update((self.v as u64).to_le_bytes());
        for w in &self.adj {
            h.update(w.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter()
            .enumerate()
            .all(|(i, &a)| set[i + 1..].iter().all(|&b| !self.adjacent(a, b)))
    }

    pub fn is_clique(&self, set: &[usize]) -> bool {
        set.iter()
            .enumerate()
            .all(|(i, &a)| set[i + 1..].iter().all(|&b| self.adjacent(a, b)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bitset_basics() {
        let mut b = Bitset::new(130);
        for i in [0, 63, 64, 129] {
            b.insert(i);
        }
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![0, 63, 64, 129]);
        assert_eq!(b.iter_above(63).collect::<Vec<_>>(), vec![64, 129]);
        b.remove(63);
        assert_eq!(b.count(), 3);
        assert!(!b.contains(63));
    }

    #[test]
    fn graph_basics() {
        let g = Graph::cycle(5);
        assert!((0..5).all(|u| g.degree(u) == 2));
        assert_eq!(g.neighbors(0).collect::<Vec<_>>(), vec![1, 4]);
        assert_eq!(g.common_neighbors(0, 2), 1);
        let c = g.complement();
        assert_eq!(c, Graph::cycle(5).complement());
        assert_eq!(c.complement(), g);
        assert_eq!(Graph::complete(4).edge_count(), 6);
        assert!(Graph::complete(4).is_clique(&[0, 1, 3]));
        assert!(Graph::path(3).is_independent(&[0, 2]));
        let wide = Graph::complete(70);
        assert_eq!(wide.degree(69), 69);
        assert_eq!(wide.common_neighbors(0, 69), 68);
    }
}
