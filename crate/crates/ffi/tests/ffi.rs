use std::ffi::{CStr, CString};
use std::ptr;

use nckant_ffi::*;

fn last_error() -> String {
    let p = nck_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn two_point_distance() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(nck_triple_two_point(2.0, 0.0, &mut t), NckStatus::Ok);
        assert_eq!(nck_triple_hilbert_dim(t), 2);
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(nck_state_basis(2, 0, &mut a), NckStatus::Ok);
        assert_eq!(nck_state_basis(2, 1, &mut b), NckStatus::Ok);
        let mut d = NckDistance { finite: false, value: 0.0, gap: 0.0, iterations: 0, converged: false };
        assert_eq!(nck_spectral_distance(t, a, b, ptr::null(), &mut d), NckStatus::Ok);
        assert!(d.finite && d.converged);
        assert!((d.value - 0.5).abs() < 1e-9);
        nck_state_free(a);
        nck_state_free(b);
        nck_triple_free(t);
    }
}

#[test]
fn diagonal_dirac_infinite_and_finite() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(nck_triple_m2_diagonal(1.0, 3.0, &mut t), NckStatus::Ok);
        let (mut a, mut b, mut c) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(nck_state_from_bloch(0.5, 0.0, 0.0, &mut a), NckStatus::Ok);
        assert_eq!(nck_state_from_bloch(0.0, 0.5, 0.0, &mut b), NckStatus::Ok);
        let json = CString::new(r#"{"bloch": [0, 0, 0.5]}"#).unwrap();
        assert_eq!(nck_state_from_json(json.as_ptr(), &mut c), NckStatus::Ok);
        let opts = NckSolverOptions { seed: 3, ..nck_solver_options_default() };
        let mut d = NckDistance { finite: false, value: 0.0, gap: 0.0, iterations: 0, converged: false };
        assert_eq!(nck_spectral_distance(t, a, b, &opts, &mut d), NckStatus::Ok);
        assert!((d.value - 2f64.sqrt() / 4.0).abs() < 1e-4);
        assert_eq!(nck_spectral_distance(t, a, c, &opts, &mut d), NckStatus::Ok);
        assert!(!d.finite && d.value == f64::INFINITY);
        for s in [a, b, c] {
            nck_state_free(s);
        }
        nck_triple_free(t);
    }
}

#[test]
fn triple_from_json_and_not_converged() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/data/three_point_triple.json")).unwrap();
    let json = CString::new(text).unwrap();
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(nck_triple_from_json(json.as_ptr(), &mut t), NckStatus::Ok);
        assert_eq!(nck_triple_hilbert_dim(t), 3);
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        nck_state_basis(3, 0, &mut a);
        nck_state_basis(3, 2, &mut b);
        let opts = NckSolverOptions { tol: 1e-12, max_iter: 5, restarts: 1, seed: 0 };
        let mut d = NckDistance { finite: false, value: 0.0, gap: 0.0, iterations: 0, converged: false };
        assert_eq!(nck_spectral_distance(t, a, b, &opts, &mut d), NckStatus::NotConverged);
        assert!(d.finite && !d.converged && d.gap > 0.0);
        nck_state_free(a);
        nck_state_free(b);
        nck_triple_free(t);
    }
}

#[test]
fn transport_on_cycle_and_two_sheet() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(nck_cost_space_cycle(10, &mut s), NckStatus::Ok);
        assert_eq!(nck_cost_space_size(s), 10);
        let mut mu = [0.0; 10];
        let mut nu = [0.0; 10];
        mu[2] = 1.0;
        nu[9] = 1.0;
        let mut plan = [0.0; 100];
        let mut value = 0.0;
        assert_eq!(nck_wasserstein(s, mu.as_ptr(), nu.as_ptr(), 10, plan.as_mut_ptr(), &mut value), NckStatus::Ok);
        assert!((value - 0.3).abs() < 1e-12);
        assert_eq!(plan[2 * 10 + 9], 1.0);
        let mut f = [0.0; 10];
        let mut dual = 0.0;
        let status = nck_kantorovich_dual(s, mu.as_ptr(), nu.as_ptr(), 10, f.as_mut_ptr(), ptr::null_mut(), &mut dual);
        assert_eq!(status, NckStatus::Ok);
        assert!((dual - 0.3).abs() < 1e-9);
        assert!((f[2] - f[9] - 0.3).abs() < 1e-9);

        let mut two = ptr::null_mut();
        assert_eq!(nck_cost_space_two_sheet(s, 0.3, &mut two), NckStatus::Ok);
        assert_eq!(nck_cost_space_size(two), 20);
        let mut a = [0.0; 20];
        let mut b = [0.0; 20];
        a[0] = 1.0;
        b[10] = 1.0;
        assert_eq!(nck_wasserstein(two, a.as_ptr(), b.as_ptr(), 20, ptr::null_mut(), &mut value), NckStatus::Ok);
        assert!((value - 0.3).abs() < 1e-12);
        nck_cost_space_free(two);
        nck_cost_space_free(s);
    }
}

#[test]
fn infeasible_coupling() {
    let json = CString::new(r#"{"cost": [[0, "inf"], ["inf", 0]]}"#).unwrap();
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(nck_cost_space_from_json(json.as_ptr(), &mut s), NckStatus::Ok);
        let (mu, nu) = ([1.0, 0.0], [0.0, 1.0]);
        let mut value = 0.0;
        assert_eq!(nck_wasserstein(s, mu.as_ptr(), nu.as_ptr(), 2, ptr::null_mut(), &mut value), NckStatus::Infeasible);
        assert_eq!(value, f64::INFINITY);
        nck_cost_space_free(s);
    }
}

#[test]
fn closed_form_costs() {
    let (o, e, n) = ([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
    let mut c = 0.0;
    unsafe {
        assert_eq!(nck_moyal_ball_cost(o.as_ptr(), e.as_ptr(), 2.0, &mut c), NckStatus::Ok);
        assert!((c - 1.0).abs() < 1e-12);
        assert_eq!(nck_moyal_ball_cost(o.as_ptr(), n.as_ptr(), 2.0, &mut c), NckStatus::Ok);
        assert!((c - 0.5).abs() < 1e-12);
        assert_eq!(nck_two_sheet_cost(3.0, 4.0, &mut c), NckStatus::Ok);
        assert_eq!(c, 5.0);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut t = ptr::null_mut();
        assert_eq!(nck_triple_two_point(f64::NAN, 0.0, &mut t), NckStatus::InvalidArgument);
        assert!(t.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(nck_triple_two_point(1.0, 0.0, ptr::null_mut()), NckStatus::NullPointer);
        assert!(last_error().contains("null pointer"));

        let mut s = ptr::null_mut();
        assert_eq!(nck_state_from_bloch(1.0, 1.0, 0.0, &mut s), NckStatus::InvalidArgument);
        let bad = CString::new("{not json").unwrap();
        assert_eq!(nck_state_from_json(bad.as_ptr(), &mut s), NckStatus::InvalidArgument);

        let mut sp = ptr::null_mut();
        nck_cost_space_cycle(4, &mut sp);
        let w = [0.5, 0.5];
        let mut v = 0.0;
        assert_eq!(nck_wasserstein(sp, w.as_ptr(), w.as_ptr(), 2, ptr::null_mut(), &mut v), NckStatus::InvalidArgument);
        assert!(last_error().contains("dimension"));
        nck_cost_space_free(sp);

        nck_triple_free(ptr::null_mut());
        nck_state_free(ptr::null_mut());
        nck_cost_space_free(ptr::null_mut());
        assert_eq!(nck_triple_hilbert_dim(ptr::null()), 0);
    }
}

#[test]
fn version_and_header() {
    let v = unsafe { CStr::from_ptr(nck_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/nckant.h")).unwrap();
    for name in [
        "nck_spectral_distance",
        "nck_wasserstein",
        "nck_kantorovich_dual",
        "nck_triple_free",
        "typedef struct NckTriple NckTriple",
        "NckStatus_Infeasible = 3",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
