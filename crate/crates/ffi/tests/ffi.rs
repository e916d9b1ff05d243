use std::ffi::CStr;
use std::ptr;

use steiner_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe {
        steiner_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn graph(space: SteinerSpace, q: u64) -> *mut SteinerBlockGraph {
    let mut bg = ptr::null_mut();
    assert_eq!(unsafe { steiner_blockgraph_new(space, 3, q, &mut bg) }, SteinerStatus::Ok);
    bg
}

#[test]
fn field_arithmetic_matches_gf4_tables() {
    let mut f = ptr::null_mut();
    unsafe {
        assert_eq!(steiner_field_new(4, &mut f), SteinerStatus::Ok);
        assert_eq!(steiner_field_order(f), 4);
        let mut out = 0u32;
        // x * x = x + 1 in GF(4) = GF(2)[x]/(x^2+x+1); x has index 2, x+1 index 3
        assert_eq!(steiner_field_arith(f, SteinerOp::Mul, 2, 2, &mut out), SteinerStatus::Ok);
        assert_eq!(out, 3);
        assert_eq!(steiner_field_arith(f, SteinerOp::Add, 2, 3, &mut out), SteinerStatus::Ok);
        assert_eq!(out, 1);
        assert_eq!(steiner_field_arith(f, SteinerOp::Pow, 2, 3, &mut out), SteinerStatus::Ok);
        assert_eq!(out, 1);
        assert_eq!(steiner_field_arith(f, SteinerOp::Inv, 2, 0, &mut out), SteinerStatus::Ok);
        assert_eq!(out, 3);
        assert_eq!(steiner_field_arith(f, SteinerOp::Div, 1, 0, &mut out), SteinerStatus::InvalidArgument);
        assert!(last_error().contains("division by zero"));
        assert_eq!(steiner_field_arith(f, SteinerOp::Add, 7, 1, &mut out), SteinerStatus::InvalidArgument);
        steiner_field_free(f);
    }
}

#[test]
fn bad_field_order_reports_error() {
    let mut f = ptr::null_mut();
    unsafe {
        assert_eq!(steiner_field_new(6, &mut f), SteinerStatus::InvalidArgument);
        assert!(f.is_null());
        assert!(steiner_last_error_length() > 0);
        assert!(last_error().contains('6'));
        assert_eq!(steiner_field_new(4, ptr::null_mut()), SteinerStatus::NullPointer);
    }
}

#[test]
fn srg_params_and_wdb() {
    let bg = graph(SteinerSpace::Affine, 2);
    unsafe {
        assert_eq!(steiner_blockgraph_vertex_count(bg), 28);
        let mut p = SteinerSrgParams::default();
        assert_eq!(steiner_srg_params(bg, &mut p), SteinerStatus::Ok);
        assert_eq!((p.v, p.k, p.lambda, p.mu), (28, 12, 6, 4));
        assert_eq!((p.r, p.m_r, p.s, p.m_s), (4, 7, -2, 20));
        let mut w = 0u64;
        assert_eq!(steiner_wdb(bg, -2, &mut w), SteinerStatus::Ok);
        assert_eq!(w, 4);
        assert_eq!(steiner_wdb(bg, 4, &mut w), SteinerStatus::Ok);
        assert_eq!(w, 10);
        assert_eq!(steiner_wdb(bg, 5, &mut w), SteinerStatus::InvalidArgument);
        steiner_blockgraph_free(bg);
    }
}

#[test]
fn complete_bipartite_counts() {
    let aff = graph(SteinerSpace::Affine, 2);
    let proj = graph(SteinerSpace::Projective, 2);
    unsafe {
        let mut n = 0usize;
        assert_eq!(steiner_count_complete_bipartite(aff, 2, 1024, &mut n), SteinerStatus::Ok);
        assert_eq!(n, 210);
        assert_eq!(steiner_count_complete_bipartite(proj, 3, 1024, &mut n), SteinerStatus::Ok);
        assert_eq!(n, 280);
        assert_eq!(steiner_count_complete_bipartite(proj, 3, 10, &mut n), SteinerStatus::LimitExceeded);
        steiner_blockgraph_free(aff);
        steiner_blockgraph_free(proj);
    }
}

#[test]
fn verify_eigenfunction_from_complete_bipartite_part() {
    let bg = graph(SteinerSpace::Projective, 2);
    unsafe {
        let v = steiner_blockgraph_vertex_count(bg);
        // brute-force one induced K_{3,3}: three pairwise skew lines t0 and three t1 meeting all of t0
        let adj = |a: usize, b: usize| steiner_blockgraph_adjacent(bg, a, b) == 1;
        let mut found = None;
        'search: for a in 0..v {
            for b in a + 1..v {
                for c in b + 1..v {
                    if adj(a, b) || adj(a, c) || adj(b, c) {
                        continue;
                    }
                    let t1: Vec<usize> = (0..v).filter(|&x| adj(x, a) && adj(x, b) && adj(x, c)).collect();
                    if t1.len() >= 3 {
                        found = Some(([a, b, c], [t1[0], t1[1], t1[2]]));
                        break 'search;
                    }
                }
            }
        }
        let (t0, t1) = found.expect("a K_{3,3}");
        let mut vals = vec![0i64; v];
        t0.iter().for_each(|&u| vals[u] = 1);
        t1.iter().for_each(|&u| vals[u] = -1);
        let mut bad = usize::MAX;
        assert_eq!(steiner_verify_eigenfunction(bg, -3, vals.as_ptr(), v, &mut bad), SteinerStatus::Ok);
        assert_eq!(
            steiner_verify_eigenfunction(bg, 3, vals.as_ptr(), v, &mut bad),
            SteinerStatus::CheckFailed
        );
        assert!(bad < v);
        assert_eq!(
            steiner_verify_eigenfunction(bg, -3, vals.as_ptr(), v - 1, &mut bad),
            SteinerStatus::InvalidArgument
        );
        assert_eq!(steiner_blockgraph_adjacent(bg, 0, v), -1);
        steiner_blockgraph_free(bg);
    }
}

#[test]
fn null_handles_are_rejected() {
    unsafe {
        let mut p = SteinerSrgParams::default();
        assert_eq!(steiner_srg_params(ptr::null(), &mut p), SteinerStatus::NullPointer);
        assert_eq!(steiner_blockgraph_vertex_count(ptr::null()), 0);
        steiner_blockgraph_free(ptr::null_mut());
        steiner_field_free(ptr::null_mut());
    }
}

#[test]
fn header_is_valid_c() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/steiner.h");
    let text = std::fs::read_to_string(&header).expect("generated header");
    for name in [
        "steiner_field_new",
        "steiner_field_arith",
        "steiner_blockgraph_new",
        "steiner_srg_params",
        "steiner_wdb",
        "steiner_verify_eigenfunction",
        "steiner_count_complete_bipartite",
        "steiner_last_error_message",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let src = std::env::temp_dir().join(format!("steiner_header_{}.c", std::process::id()));
    std::fs::write(&src, "#include \"steiner.h\"\nint main(void) { return STEINER_STATUS_OK; }\n").unwrap();
    let out = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .output();
    let _ = std::fs::remove_file(&src);
    match out {
        Ok(o) => assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr)),
        Err(e) => eprintln!("no C compiler available ({e}), syntax check skipped"),
    }
}
