//! C interface to `bandspec`.
//!
//! Matrices and measures are opaque handles created from JSON and released
//! with the matching `*_free` function. Every fallible call returns a
//! [`BsStatus`]; on failure `bs_last_error_message` describes the error for
//! the calling thread. Strings returned by the library are released with
//! `bs_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bandspec::io::{banded_to_json, measure_to_json, parse_banded, parse_measure};
use bandspec::spectral::{inverse_spectral_map, spectral_map};
use bandspec::toda::{toda_qr_flow, toda_spectral_flow};
use bandspec::{BandedHermitian, Error, MatrixMeasure, Tolerances};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Schema = 4,
    /// Input is outside the banded or measure class.
    Validation = 5,
    /// Numerical breakdown (singular factor, conditioning guard, ...).
    Numerical = 6,
    InvalidArgument = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Toda solver selection for [`bs_toda_flow`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsTodaMethod {
    Qr = 0,
    Spectral = 1,
}

/// Opaque handle to a banded Hermitian matrix.
pub struct BsMatrix(BandedHermitian);

/// Opaque handle to a matrix-valued measure.
pub struct BsMeasure(MatrixMeasure);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BsStatus {
    match e {
        Error::Parse(_) => BsStatus::Parse,
        Error::Schema(_) => BsStatus::Schema,
        Error::InvalidArgument(_) => BsStatus::InvalidArgument,
        e if e.is_validation() => BsStatus::Validation,
        _ => BsStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), BsStatus>) -> BsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            BsStatus::Panic
        }
    }
}

fn fail(e: Error) -> BsStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> BsStatus {
    set_error(format!("{what} is NULL"));
    BsStatus::NullPointer
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, BsStatus> {
    if s.is_null() {
        return Err(null("input string"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("input is not valid UTF-8".into());
        BsStatus::InvalidUtf8
    })
}

fn tolerances(rank_tol: f64) -> Tolerances {
    if rank_tol > 0.0 && rank_tol.is_finite() {
        Tolerances::with_rank(rank_tol)
    } else {
        Tolerances::default()
    }
}

unsafe fn write_string(s: String, out: *mut *mut c_char) -> Result<(), BsStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = CString::new(s).expect("JSON has no NUL").into_raw();
    Ok(())
}

unsafe fn write_handle<T>(value: T, out: *mut *mut T) -> Result<(), BsStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by the library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a matrix in block JSON form and checks the class conditions.
/// `rank_tol <= 0` selects the default tolerance.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_matrix_from_json(json: *const c_char, rank_tol: f64, out: *mut *mut BsMatrix) -> BsStatus {
    guard(|| {
        let text = read_str(json)?;
        let j = parse_banded(text, &tolerances(rank_tol)).map_err(fail)?;
        write_handle(BsMatrix(j), out)
    })
}

/// Serializes a matrix to block JSON; free the result with `bs_string_free`.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_matrix_to_json(m: *const BsMatrix, out: *mut *mut c_char) -> BsStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("matrix"))?;
        write_string(banded_to_json(&m.0), out)
    })
}

/// # Safety
/// `m` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn bs_matrix_free(m: *mut BsMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Block size `k` and matrix size `N`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bs_matrix_dims(m: *const BsMatrix, k: *mut usize, n: *mut usize) -> BsStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("matrix"))?;
        if k.is_null() || n.is_null() {
            return Err(null("output pointer"));
        }
        *k = m.0.k();
        *n = m.0.size();
        Ok(())
    })
}

/// Writes the dense matrix in row-major order into `re` and `im`, each of
/// length at least `N*N`.
///
/// # Safety
/// `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bs_matrix_dense(m: *const BsMatrix, re: *mut f64, im: *mut f64, len: usize) -> BsStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("matrix"))?;
        if re.is_null() || im.is_null() {
            return Err(null("output buffer"));
        }
        let n = m.0.size();
        if len < n * n {
            set_error(format!("buffer holds {len} entries, need {}", n * n));
            return Err(BsStatus::BufferTooSmall);
        }
        let d = m.0.to_dense();
        for i in 0..n {
            for j in 0..n {
                *re.add(i * n + j) = d[(i, j)].re;
                *im.add(i * n + j) = d[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// Parses a measure `{k, atoms: [{x, W}]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_measure_from_json(json: *const c_char, rank_tol: f64, out: *mut *mut BsMeasure) -> BsStatus {
    guard(|| {
        let text = read_str(json)?;
        let mu = parse_measure(text, &tolerances(rank_tol)).map_err(fail)?;
        write_handle(BsMeasure(mu), out)
    })
}

/// # Safety
/// `mu` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_measure_to_json(mu: *const BsMeasure, out: *mut *mut c_char) -> BsStatus {
    guard(|| {
        let mu = mu.as_ref().ok_or_else(|| null("measure"))?;
        write_string(measure_to_json(&mu.0), out)
    })
}

/// # Safety
/// `mu` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn bs_measure_free(mu: *mut BsMeasure) {
    if !mu.is_null() {
        drop(Box::from_raw(mu));
    }
}

/// Weight size `k` and number of atoms.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bs_measure_dims(mu: *const BsMeasure, k: *mut usize, atoms: *mut usize) -> BsStatus {
    guard(|| {
        let mu = mu.as_ref().ok_or_else(|| null("measure"))?;
        if k.is_null() || atoms.is_null() {
            return Err(null("output pointer"));
        }
        *k = mu.0.k();
        *atoms = mu.0.len();
        Ok(())
    })
}

/// Support point and weight (row-major, `k*k` entries) of atom `index`.
///
/// # Safety
/// `x` must be valid; `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bs_measure_atom(
    mu: *const BsMeasure,
    index: usize,
    x: *mut f64,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> BsStatus {
    guard(|| {
        let mu = mu.as_ref().ok_or_else(|| null("measure"))?;
        if x.is_null() || re.is_null() || im.is_null() {
            return Err(null("output pointer"));
        }
        let Some(atom) = mu.0.atoms().get(index) else {
            set_error(format!("atom index {index} out of range ({} atoms)", mu.0.len()));
            return Err(BsStatus::InvalidArgument);
        };
        let k = mu.0.k();
        if len < k * k {
            set_error(format!("buffer holds {len} entries, need {}", k * k));
            return Err(BsStatus::BufferTooSmall);
        }
        *x = atom.x;
        for i in 0..k {
            for j in 0..k {
                *re.add(i * k + j) = atom.weight[(i, j)].re;
                *im.add(i * k + j) = atom.weight[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// Spectral measure of a matrix.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_spectral_map(m: *const BsMatrix, rank_tol: f64, out: *mut *mut BsMeasure) -> BsStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("matrix"))?;
        let mu = spectral_map(&m.0, &tolerances(rank_tol)).map_err(fail)?;
        write_handle(BsMeasure(mu), out)
    })
}

/// Banded matrix with the given spectral measure.
///
/// # Safety
/// `mu` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_inverse_spectral_map(mu: *const BsMeasure, rank_tol: f64, out: *mut *mut BsMatrix) -> BsStatus {
    guard(|| {
        let mu = mu.as_ref().ok_or_else(|| null("measure"))?;
        let j = inverse_spectral_map(&mu.0, &tolerances(rank_tol)).map_err(fail)?;
        write_handle(BsMatrix(j), out)
    })
}

/// Toda flow of `m` at time `t`.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bs_toda_flow(
    m: *const BsMatrix,
    t: f64,
    method: BsTodaMethod,
    rank_tol: f64,
    out: *mut *mut BsMatrix,
) -> BsStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("matrix"))?;
        let tol = tolerances(rank_tol);
        let j = match method {
            BsTodaMethod::Qr => toda_qr_flow(&m.0, t, &tol).map(|s| s.x_t),
            BsTodaMethod::Spectral => toda_spectral_flow(&m.0, t, &tol),
        }
        .map_err(fail)?;
        write_handle(BsMatrix(j), out)
    })
}
