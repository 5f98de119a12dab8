use std::ffi::CStr;
use std::ptr;

use ips_ffi::*;

fn last_error() -> String {
    let p = ips_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn lattice(d: u32, r: u32) -> *mut IpsLattice {
    let mut l = ptr::null_mut();
    assert_eq!(unsafe { ips_lattice_new(d, r, &mut l) }, IpsStatus::Ok);
    l
}

#[test]
fn lattice_lifecycle() {
    let l = lattice(2, 3);
    assert_eq!(unsafe { ips_lattice_site_count(l) }, 49);
    unsafe { ips_lattice_free(l) };
    unsafe { ips_lattice_free(ptr::null_mut()) };
}

#[test]
fn bad_dimension_sets_error() {
    let mut l = ptr::null_mut();
    let s = unsafe { ips_lattice_new(0, 3, &mut l) };
    assert_eq!(s, IpsStatus::InvalidArgument);
    assert!(l.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_out_pointer() {
    assert_eq!(unsafe { ips_lattice_new(2, 3, ptr::null_mut()) }, IpsStatus::NullPointer);
    assert!(last_error().contains("null"));
}

#[test]
fn simulate_richardson_is_deterministic_and_never_shrinks() {
    let l = lattice(2, 6);
    let m = IpsModel { kind: IpsModelKind::Rms, lambda: 1.0, gamma: 0.0, nu: 1.0 };
    let run = || {
        let mut t = ptr::null_mut();
        assert_eq!(unsafe { ips_simulate(l, &m, ptr::null(), 0, 2.0, 42, &mut t) }, IpsStatus::Ok);
        let n = unsafe { ips_trajectory_final_size(t) };
        let mut buf = vec![0i32; 2 * n];
        let mut written = 0;
        assert_eq!(
            unsafe { ips_trajectory_final_sites(t, buf.as_mut_ptr(), buf.len(), &mut written) },
            IpsStatus::Ok
        );
        assert_eq!(written, n);
        assert!(unsafe { ips_trajectory_extinction(t) } < 0.0);
        unsafe { ips_trajectory_free(t) };
        buf
    };
    let a = run();
    assert!(a.len() >= 2);
    assert_eq!(a, run());
    unsafe { ips_lattice_free(l) };
}

#[test]
fn small_buffer_is_rejected() {
    let l = lattice(1, 20);
    let m = IpsModel { kind: IpsModelKind::Rm, lambda: 2.0, gamma: 0.0, nu: 0.0 };
    let init = [0i32, 1];
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { ips_simulate(l, &m, init.as_ptr(), 2, 1.0, 1, &mut t) }, IpsStatus::Ok);
    let mut written = 7;
    let mut one = [0i32; 1];
    let s = unsafe { ips_trajectory_final_sites(t, one.as_mut_ptr(), 1, &mut written) };
    assert_eq!(s, IpsStatus::InvalidArgument);
    assert_eq!(written, 0);
    unsafe {
        ips_trajectory_free(t);
        ips_lattice_free(l);
    }
}

#[test]
fn initial_site_outside_box() {
    let l = lattice(1, 2);
    let m = IpsModel { kind: IpsModelKind::Rm, lambda: 1.0, gamma: 0.0, nu: 0.0 };
    let init = [5i32];
    let mut t = ptr::null_mut();
    let s = unsafe { ips_simulate(l, &m, init.as_ptr(), 1, 1.0, 1, &mut t) };
    assert_eq!(s, IpsStatus::InvalidArgument);
    assert!(last_error().contains("outside"));
    unsafe { ips_lattice_free(l) };
}

#[test]
fn invalid_rates() {
    let l = lattice(1, 2);
    let m = IpsModel { kind: IpsModelKind::Cp, lambda: -1.0, gamma: 1.0, nu: 0.0 };
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { ips_simulate(l, &m, ptr::null(), 0, 1.0, 1, &mut t) }, IpsStatus::InvalidArgument);
    unsafe { ips_lattice_free(l) };
}

#[test]
fn containment_holds() {
    let l = lattice(2, 8);
    let m = IpsModel { kind: IpsModelKind::Cps, lambda: 2.0, gamma: 1.0, nu: 1.0 };
    for seed in 0..20 {
        let mut ok = false;
        assert_eq!(unsafe { ips_containment_check(l, &m, 3.0, seed, &mut ok) }, IpsStatus::Ok);
        assert!(ok);
    }
    let plain = IpsModel { kind: IpsModelKind::Cp, lambda: 2.0, gamma: 1.0, nu: 0.0 };
    let mut ok = true;
    assert_eq!(unsafe { ips_containment_check(l, &plain, 3.0, 0, &mut ok) }, IpsStatus::InvalidArgument);
    unsafe { ips_lattice_free(l) };
}

#[test]
fn tree_thresholds() {
    assert!((ips_tree_lambda_star(4) - 0.25).abs() < 1e-15);
    assert!(ips_tree_lambda_star(1).is_nan());
    let mut row = IpsThresholdRow::default();
    assert_eq!(unsafe { ips_tree_threshold_row(4, 1.0, &mut row) }, IpsStatus::Ok);
    assert_eq!((row.rms_lo, row.rms_hi), (0.25, 5.0));
    let mut w = true;
    assert_eq!(unsafe { ips_tree_in_w(16, 100.0, &mut w) }, IpsStatus::Ok);
    assert!(!w);
    assert_eq!(unsafe { ips_tree_in_w(17, 2.0, &mut w) }, IpsStatus::Ok);
    assert!(w);
    assert_eq!(unsafe { ips_tree_in_w(17, 0.0, &mut w) }, IpsStatus::InvalidArgument);
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/ips.h")).unwrap();
    for name in [
        "ips_last_error",
        "ips_lattice_new",
        "ips_lattice_free",
        "ips_simulate",
        "ips_trajectory_final_sites",
        "ips_containment_check",
        "ips_tree_threshold_row",
        "ips_tree_in_w",
        "IPS_STATUS_OK",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
