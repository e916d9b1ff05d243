//! C ABI for steiner-core.
//!
//! Objects are opaque handles created by `*_new` and released by `*_free`.
//! Every fallible call returns a [`SteinerStatus`]; on failure the message
//! is kept per thread and can be read with [`steiner_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use steiner_core::designs::{affine_design, block_graph, projective_design, wdb, BlockGraph};
use steiner_core::eigenfunctions::{enumerate_complete_bipartite_limited, verify_eigenfunction, EigenError, Eigenfunction};
use steiner_core::gf::{ArithOp, FieldElem, FieldSpec, GfError, Operand};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteinerStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    CheckFailed = 3,
    LimitExceeded = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteinerOp {
    Add = 0,
    Sub = 1,
    Mul = 2,
    Div = 3,
    Neg = 4,
    Inv = 5,
    Pow = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteinerSpace {
    Projective = 0,
    Affine = 1,
}

/// Strongly regular parameters and spectrum.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SteinerSrgParams {
    pub v: i64,
    pub k: i64,
    pub lambda: i64,
    pub mu: i64,
    pub r: i64,
    pub s: i64,
    pub m_r: i64,
    pub m_s: i64,
}

/// Opaque finite field handle.
pub struct SteinerField(FieldSpec);

/// Opaque block graph handle.
pub struct SteinerBlockGraph(BlockGraph);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: SteinerStatus, msg: impl Into<String>) -> SteinerStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> SteinerStatus) -> SteinerStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(SteinerStatus::Panic, msg)
        }
    }
}

fn gf_status(e: GfError) -> SteinerStatus {
    match e {
        GfError::LimitExceeded { .. } => fail(SteinerStatus::LimitExceeded, e.to_string()),
        _ => fail(SteinerStatus::InvalidArgument, e.to_string()),
    }
}

fn eigen_status(e: EigenError) -> SteinerStatus {
    match e {
        EigenError::LimitExceeded { .. } | EigenError::SearchLimit(_) => {
            fail(SteinerStatus::LimitExceeded, e.to_string())
        }
        _ => fail(SteinerStatus::InvalidArgument, e.to_string()),
    }
}

/// Length in bytes of the last error message of this thread, 0 if none.
#[no_mangle]
pub extern "C" fn steiner_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |s| s.as_bytes().len()))
}

/// Copies the last error message (NUL-terminated, truncated to fit) into
/// `buf`. Returns the number of bytes written without the NUL.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn steiner_last_error_message(buf: *mut c_char, len: usize) -> usize {
    if buf.is_null() || len == 0 {
        return 0;
    }
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[][..], |s| s.as_bytes());
        let n = bytes.len().min(len - 1);
        std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
        *buf.add(n) = 0;
        n
    })
}

// -------------------------------------------------------------------- field

/// Creates GF(q) for a prime power `q`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn steiner_field_new(q: u64, out: *mut *mut SteinerField) -> SteinerStatus {
    guard(|| {
        if out.is_null() {
            return fail(SteinerStatus::NullPointer, "out is null");
        }
        match FieldSpec::of_order(q) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(SteinerField(f)));
                SteinerStatus::Ok
            }
            Err(e) => gf_status(e),
        }
    })
}

/// # Safety
/// `field` must come from [`steiner_field_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn steiner_field_free(field: *mut SteinerField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Field order, 0 for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn steiner_field_order(field: *const SteinerField) -> u32 {
    field.as_ref().map_or(0, |f| f.0.q())
}

/// `a op b` on element indices. `b` is ignored for `Neg` and `Inv` and is
/// the exponent for `Pow`.
///
/// # Safety
/// `field` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn steiner_field_arith(
    field: *const SteinerField,
    op: SteinerOp,
    a: u32,
    b: i64,
    out: *mut u32,
) -> SteinerStatus {
    guard(|| {
        let (Some(f), false) = (field.as_ref(), out.is_null()) else {
            return fail(SteinerStatus::NullPointer, "null argument");
        };
        let op = match op {
            SteinerOp::Add => ArithOp::Add,
            SteinerOp::Sub => ArithOp::Sub,
            SteinerOp::Mul => ArithOp::Mul,
            SteinerOp::Div => ArithOp::Div,
            SteinerOp::Neg => ArithOp::Neg,
            SteinerOp::Inv => ArithOp::Inv,
            SteinerOp::Pow => ArithOp::Pow,
        };
        let rhs = match op {
            ArithOp::Pow => Operand::Exp(b),
            ArithOp::Neg | ArithOp::Inv => Operand::None,
            _ => match u32::try_from(b) {
                Ok(i) => Operand::Elem(FieldElem(i)),
                Err(_) => return fail(SteinerStatus::InvalidArgument, format!("bad element index {b}")),
            },
        };
        match f.0.arith(op, FieldElem(a), rhs) {
            Ok(x) => {
                *out = x.index();
                SteinerStatus::Ok
            }
            Err(e) => gf_status(e),
        }
    })
}

// -------------------------------------------------------------- block graph

/// Block graph of the projective or affine Steiner system of lines of
/// dimension `n` over GF(q).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn steiner_blockgraph_new(
    space: SteinerSpace,
    n: usize,
    q: u64,
    out: *mut *mut SteinerBlockGraph,
) -> SteinerStatus {
    guard(|| {
        if out.is_null() {
            return fail(SteinerStatus::NullPointer, "out is null");
        }
        let d = match space {
            SteinerSpace::Projective => projective_design(n, q),
            SteinerSpace::Affine => affine_design(n, q),
        };
        match d {
            Ok(d) => {
                *out = Box::into_raw(Box::new(SteinerBlockGraph(block_graph(d))));
                SteinerStatus::Ok
            }
            Err(e) => fail(SteinerStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `bg` must come from [`steiner_blockgraph_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn steiner_blockgraph_free(bg: *mut SteinerBlockGraph) {
    if !bg.is_null() {
        drop(Box::from_raw(bg));
    }
}

/// Number of vertices, 0 for a null handle.
///
/// # Safety
/// `bg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn steiner_blockgraph_vertex_count(bg: *const SteinerBlockGraph) -> usize {
    bg.as_ref().map_or(0, |b| b.0.vertex_count())
}

/// 1 if the vertices are adjacent, 0 if not, -1 on bad arguments.
///
/// # Safety
/// `bg` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn steiner_blockgraph_adjacent(bg: *const SteinerBlockGraph, u: usize, w: usize) -> i32 {
    match bg.as_ref() {
        Some(b) if u < b.0.vertex_count() && w < b.0.vertex_count() => b.0.graph.adjacent(u, w) as i32,
        _ => -1,
    }
}

/// Strongly regular parameters from the design.
///
/// # Safety
/// `bg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn steiner_srg_params(bg: *const SteinerBlockGraph, out: *mut SteinerSrgParams) -> SteinerStatus {
    guard(|| {
        let (Some(b), false) = (bg.as_ref(), out.is_null()) else {
            return fail(SteinerStatus::NullPointer, "null argument");
        };
        match b.0.params() {
            Ok(p) => {
                *out = SteinerSrgParams {
                    v: p.v,
                    k: p.k,
                    lambda: p.lambda,
                    mu: p.mu,
                    r: p.r,
                    s: p.s,
                    m_r: p.m_r,
                    m_s: p.m_s,
                };
                SteinerStatus::Ok
            }
            Err(e) => fail(SteinerStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Weight-distribution bound for the eigenvalue `theta`.
///
/// # Safety
/// `bg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn steiner_wdb(bg: *const SteinerBlockGraph, theta: i64, out: *mut u64) -> SteinerStatus {
    guard(|| {
        let (Some(b), false) = (bg.as_ref(), out.is_null()) else {
            return fail(SteinerStatus::NullPointer, "null argument");
        };
        let p = match b.0.params() {
            Ok(p) => p,
            Err(e) => return fail(SteinerStatus::InvalidArgument, e.to_string()),
        };
        match wdb(&p, theta) {
            Ok(w) => {
                *out = w;
                SteinerStatus::Ok
            }
            Err(e) => fail(SteinerStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Checks the eigenvalue equation for the dense integer vector `values`
/// of length `len` (the vertex count). Returns `CheckFailed` with the first
/// violating vertex in `bad_vertex` when the equation fails.
///
/// # Safety
/// `bg` must be a live handle, `values` valid for `len` reads and
/// `bad_vertex` null or valid.
#[no_mangle]
pub unsafe extern "C" fn steiner_verify_eigenfunction(
    bg: *const SteinerBlockGraph,
    theta: i64,
    values: *const i64,
    len: usize,
    bad_vertex: *mut usize,
) -> SteinerStatus {
    guard(|| {
        let (Some(b), false) = (bg.as_ref(), values.is_null()) else {
            return fail(SteinerStatus::NullPointer, "null argument");
        };
        if len != b.0.vertex_count() {
            return fail(
                SteinerStatus::InvalidArgument,
                format!("expected {} values, got {len}", b.0.vertex_count()),
            );
        }
        let vals = std::slice::from_raw_parts(values, len);
        let sparse: Vec<(usize, i64)> = vals.iter().copied().enumerate().filter(|&(_, x)| x != 0).collect();
        let f = match Eigenfunction::from_ints(len, theta, &sparse) {
            Ok(f) => f,
            Err(e) => return eigen_status(e),
        };
        match verify_eigenfunction(&b.0.graph, &f) {
            Ok(None) => SteinerStatus::Ok,
            Ok(Some(w)) => {
                if !bad_vertex.is_null() {
                    *bad_vertex = w.vertex;
                }
                fail(SteinerStatus::CheckFailed, format!("eigenvalue equation fails at vertex {}", w.vertex))
            }
            Err(e) => eigen_status(e),
        }
    })
}

/// Number of induced K_{a,a} subgraphs (unordered part pairs), giving up
/// with `LimitExceeded` beyond `vertex_limit` vertices.
///
/// # Safety
/// `bg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn steiner_count_complete_bipartite(
    bg: *const SteinerBlockGraph,
    a: usize,
    vertex_limit: usize,
    out: *mut usize,
) -> SteinerStatus {
    guard(|| {
        let (Some(b), false) = (bg.as_ref(), out.is_null()) else {
            return fail(SteinerStatus::NullPointer, "null argument");
        };
        match enumerate_complete_bipartite_limited(&b.0.graph, a, vertex_limit) {
            Ok(v) => {
                *out = v.len();
                SteinerStatus::Ok
            }
            Err(e) => eigen_status(e),
        }
    })
}
