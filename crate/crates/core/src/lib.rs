//! Exact finite geometries PG(n,q) and AG(n,q), the block graphs of their
//! Steiner systems, and tools for constructing, enumerating and verifying
//! minimum-support eigenfunctions of those graphs.

pub mod gf;
pub mod linalg;
pub mod geometry;
pub mod graph;
pub mod designs;
pub mod reguli;
pub mod eigenfunctions;
pub mod partitions;
pub mod cli;
