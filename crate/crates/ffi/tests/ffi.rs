use std::ffi::{CStr, CString};
use std::ptr;

use bandspec_ffi::*;

const JACOBI: &str = r#"{"k":1,"N":3,"A":[[[[0.0,0.0]]],[[[0.0,0.0]]],[[[0.0,0.0]]]],"B":[[[[1.0,0.0]]],[[[1.0,0.0]]]]}"#;

fn matrix(json: &str) -> (BsStatus, *mut BsMatrix) {
    let c = CString::new(json).unwrap();
    let mut m = ptr::null_mut();
    let s = unsafe { bs_matrix_from_json(c.as_ptr(), 0.0, &mut m) };
    (s, m)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(bs_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn spectral_round_trip_through_handles() {
    let (s, m) = matrix(JACOBI);
    assert_eq!(s, BsStatus::Ok);
    unsafe {
        let (mut k, mut n) = (0, 0);
        assert_eq!(bs_matrix_dims(m, &mut k, &mut n), BsStatus::Ok);
        assert_eq!((k, n), (1, 3));

        let mut mu = ptr::null_mut();
        assert_eq!(bs_spectral_map(m, 0.0, &mut mu), BsStatus::Ok);
        let mut atoms = 0;
        assert_eq!(bs_measure_dims(mu, &mut k, &mut atoms), BsStatus::Ok);
        assert_eq!(atoms, 3);
        // eigenvalues of the 3×3 free Jacobi matrix are 0 and ±√2 with weights 1/4, 1/2, 1/4
        let (mut x, mut re, mut im) = (0.0, [0.0], [0.0]);
        assert_eq!(bs_measure_atom(mu, 0, &mut x, re.as_mut_ptr(), im.as_mut_ptr(), 1), BsStatus::Ok);
        assert!((x + 2f64.sqrt()).abs() < 1e-14 && (re[0] - 0.25).abs() < 1e-14);
        assert_eq!(bs_measure_atom(mu, 1, &mut x, re.as_mut_ptr(), im.as_mut_ptr(), 1), BsStatus::Ok);
        assert!(x.abs() < 1e-14 && (re[0] - 0.5).abs() < 1e-14);

        let mut back = ptr::null_mut();
        assert_eq!(bs_inverse_spectral_map(mu, 0.0, &mut back), BsStatus::Ok);
        let (mut r1, mut i1) = ([0.0; 9], [0.0; 9]);
        let (mut r2, mut i2) = ([0.0; 9], [0.0; 9]);
        assert_eq!(bs_matrix_dense(m, r1.as_mut_ptr(), i1.as_mut_ptr(), 9), BsStatus::Ok);
        assert_eq!(bs_matrix_dense(back, r2.as_mut_ptr(), i2.as_mut_ptr(), 9), BsStatus::Ok);
        for i in 0..9 {
            assert!((r1[i] - r2[i]).abs() < 1e-12 && (i1[i] - i2[i]).abs() < 1e-12);
        }

        let mut text = ptr::null_mut();
        assert_eq!(bs_measure_to_json(mu, &mut text), BsStatus::Ok);
        let copy = CStr::from_ptr(text).to_owned();
        bs_string_free(text);
        let mut mu2 = ptr::null_mut();
        assert_eq!(bs_measure_from_json(copy.as_ptr(), 0.0, &mut mu2), BsStatus::Ok);

        bs_measure_free(mu2);
        bs_matrix_free(back);
        bs_measure_free(mu);
        bs_matrix_free(m);
    }
}

#[test]
fn toda_methods_agree() {
    let (_, m) = matrix(JACOBI);
    unsafe {
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(bs_toda_flow(m, 0.7, BsTodaMethod::Qr, 0.0, &mut a), BsStatus::Ok);
        assert_eq!(bs_toda_flow(m, 0.7, BsTodaMethod::Spectral, 0.0, &mut b), BsStatus::Ok);
        let (mut r1, mut i1, mut r2, mut i2) = ([0.0; 9], [0.0; 9], [0.0; 9], [0.0; 9]);
        bs_matrix_dense(a, r1.as_mut_ptr(), i1.as_mut_ptr(), 9);
        bs_matrix_dense(b, r2.as_mut_ptr(), i2.as_mut_ptr(), 9);
        for i in 0..9 {
            assert!((r1[i] - r2[i]).abs() < 1e-10 && (i1[i] - i2[i]).abs() < 1e-10);
        }
        assert_eq!(bs_toda_flow(m, 500.0, BsTodaMethod::Qr, 0.0, &mut a), BsStatus::Numerical);
        bs_matrix_free(a);
        bs_matrix_free(b);
        bs_matrix_free(m);
    }
}

#[test]
fn errors_are_reported() {
    let (s, m) = matrix("{");
    assert_eq!(s, BsStatus::Parse);
    assert!(m.is_null());
    assert!(!last_error().is_empty());
    let (s, _) = matrix(r#"{"k":1,"N":2,"A":[[[[0.0,0.0]]],[[[0.0,0.0]]]],"B":[[[[-1.0,0.0]]]]}"#);
    assert_eq!(s, BsStatus::Validation);
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(bs_matrix_from_json(ptr::null(), 0.0, &mut out), BsStatus::NullPointer);
        let (_, m) = matrix(JACOBI);
        let (mut re, mut im) = ([0.0; 4], [0.0; 4]);
        assert_eq!(bs_matrix_dense(m, re.as_mut_ptr(), im.as_mut_ptr(), 4), BsStatus::BufferTooSmall);
        bs_matrix_free(m);
        bs_matrix_free(ptr::null_mut());
        assert!(!CStr::from_ptr(bs_version()).to_bytes().is_empty());
    }
}

#[test]
fn header_declares_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/bandspec.h")).unwrap();
    for name in ["bs_matrix_from_json", "bs_spectral_map", "bs_toda_flow", "BS_STATUS_OK", "typedef struct BsMatrix BsMatrix"] {
        assert!(header.contains(name), "{name}");
    }
}
