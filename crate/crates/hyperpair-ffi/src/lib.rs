//! C ABI for hyperpair.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every fallible call returns an
//! `HpStatus`; the message of the last failure on the calling thread is
//! available from `hp_last_error_message`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hyperpair::genericity::GENERICITY_TOL;
use hyperpair::gram::{conjugacy_test, ConjugacyOutcome, CONJUGACY_TOL};
use hyperpair::invariants::{invariants_of, InvariantTuple};
use hyperpair::io::{from_json, generate_pair, random_conjugator, to_json};
use hyperpair::{Error, Field, HermitianSpace, Mode, Pair};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    NotIsometry = 5,
    NotLoxodromic = 6,
    Degenerate = 7,
    NotGeneric = 8,
    VerificationFailed = 9,
    Gluing = 10,
    GenerationExhausted = 11,
    Internal = 12,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HpField {
    Complex = 0,
    Quaternion = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HpMode {
    Weak = 0,
    Strong = 1,
}

/// A pair of isometries with its space.
pub struct HpPair(Pair);

/// Invariant tuple of a pair.
pub struct HpInvariants(InvariantTuple);

/// Result of a conjugacy test.
pub struct HpConjugacy(ConjugacyOutcome);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HpStatus {
    match e {
        Error::Parse { .. } | Error::Io(_) => HpStatus::Parse,
        Error::DimensionMismatch { .. } | Error::BadParams(_) | Error::WrongField(_) | Error::WrongDimension(_) => {
            HpStatus::InvalidArgument
        }
        Error::NotIsometry(_) | Error::PalindromeViolation(_) => HpStatus::NotIsometry,
        Error::NotLoxodromic | Error::RealEigenvalueClass | Error::DegenerateSpectrum(_) => HpStatus::NotLoxodromic,
        Error::NotWeaklyNonsingular | Error::NotNonsingular => HpStatus::NotGeneric,
        Error::VerificationFailed(_) => HpStatus::VerificationFailed,
        Error::InconsistentProjectivePoints
        | Error::IncompatibleBoundary(_)
        | Error::GraphInvalid(_)
        | Error::CompatibilityFailed(_) => HpStatus::Gluing,
        Error::GenerationExhausted(_) => HpStatus::GenerationExhausted,
        _ => HpStatus::Degenerate,
    }
}

/// Runs `f`, turning errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (HpStatus, String)>) -> HpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HpStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            HpStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (HpStatus, String) {
    (status_of(&e), e.to_string())
}

fn null() -> (HpStatus, String) {
    (HpStatus::NullPointer, "null pointer argument".into())
}

unsafe fn borrow<'a, T>(p: *const T) -> Result<&'a T, (HpStatus, String)> {
    p.as_ref().ok_or_else(null)
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), (HpStatus, String)> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), (HpStatus, String)> {
    if out.is_null() {
        return Err(null());
    }
    let c = CString::new(s).map_err(|e| (HpStatus::Internal, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn mode_of(m: HpMode) -> Mode {
    match m {
        HpMode::Weak => Mode::Weak,
        HpMode::Strong => Mode::Strong,
    }
}

fn tol_or(tol: f64, default: f64) -> Result<f64, (HpStatus, String)> {
    if tol == 0.0 {
        Ok(default)
    } else if tol > 0.0 && tol.is_finite() {
        Ok(tol)
    } else {
        Err((HpStatus::InvalidArgument, format!("tolerance {tol} must be positive")))
    }
}

/// Message of the last failure on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a pair from JSON `{"space": {...}, "a": [...], "b": [...]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_pair_from_json(json: *const c_char, out: *mut *mut HpPair) -> HpStatus {
    guard(|| {
        if json.is_null() {
            return Err(null());
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| (HpStatus::InvalidUtf8, e.to_string()))?;
        let p: Pair = from_json(text).map_err(lib_err)?;
        let p = Pair::new(p.space, p.a, p.b).map_err(lib_err)?;
        write_out(out, HpPair(p))
    })
}

/// Seeded random pair satisfying `mode`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_pair_generate(n: usize, field: HpField, seed: u64, mode: HpMode, out: *mut *mut HpPair) -> HpStatus {
    guard(|| {
        let field = match field {
            HpField::Complex => Field::Complex,
            HpField::Quaternion => Field::Quaternion,
        };
        let space = HermitianSpace::new(n, field).map_err(lib_err)?;
        write_out(out, HpPair(generate_pair(&space, seed, mode_of(mode)).map_err(lib_err)?))
    })
}

/// The pair conjugated by a random isometry drawn from `seed`.
///
/// # Safety
/// `pair` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_pair_conjugate_random(pair: *const HpPair, seed: u64, out: *mut *mut HpPair) -> HpStatus {
    guard(|| {
        let p = &borrow(pair)?.0;
        let c = random_conjugator(&p.space, seed).map_err(lib_err)?;
        write_out(out, HpPair(p.conjugate_by(&c)))
    })
}

/// # Safety
/// `pair` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_pair_to_json(pair: *const HpPair, out: *mut *mut c_char) -> HpStatus {
    guard(|| write_string(out, to_json(&borrow(pair)?.0).map_err(lib_err)?))
}

/// # Safety
/// `pair` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hp_pair_free(pair: *mut HpPair) {
    if !pair.is_null() {
        drop(Box::from_raw(pair));
    }
}

/// Invariant tuple of a pair satisfying `mode`. `tol = 0` selects the
/// default genericity tolerance.
///
/// # Safety
/// `pair` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_invariants_compute(pair: *const HpPair, mode: HpMode, tol: f64, out: *mut *mut HpInvariants) -> HpStatus {
    guard(|| {
        let p = &borrow(pair)?.0;
        let analysis = p.analyze(tol_or(tol, GENERICITY_TOL)?).map_err(lib_err)?;
        analysis.require(mode_of(mode)).map_err(lib_err)?;
        write_out(out, HpInvariants(invariants_of(&analysis).map_err(lib_err)?))
    })
}

/// # Safety
/// `inv` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_invariants_to_json(inv: *const HpInvariants, out: *mut *mut c_char) -> HpStatus {
    guard(|| write_string(out, to_json(&borrow(inv)?.0).map_err(lib_err)?))
}

/// Cartan angular invariants of the four fixed points; `out` holds 3 values.
///
/// # Safety
/// `inv` must be a live handle; `out` must point to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn hp_invariants_angular(inv: *const HpInvariants, out: *mut f64) -> HpStatus {
    guard(|| {
        let a = borrow(inv)?.0.angular;
        if out.is_null() {
            return Err(null());
        }
        ptr::copy_nonoverlapping(a.as_ptr(), out, 3);
        Ok(())
    })
}

/// # Safety
/// `inv` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hp_invariants_free(inv: *mut HpInvariants) {
    if !inv.is_null() {
        drop(Box::from_raw(inv));
    }
}

/// Decides whether `q` is conjugate to `p`. `tol = 0` selects the default.
///
/// # Safety
/// `p`, `q` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_conjugacy_test(
    p: *const HpPair,
    q: *const HpPair,
    mode: HpMode,
    tol: f64,
    out: *mut *mut HpConjugacy,
) -> HpStatus {
    guard(|| {
        let (p, q) = (&borrow(p)?.0, &borrow(q)?.0);
        let outcome = conjugacy_test(p, q, mode_of(mode), tol_or(tol, CONJUGACY_TOL)?).map_err(lib_err)?;
        write_out(out, HpConjugacy(outcome))
    })
}

/// 1 when conjugate, 0 when not, -1 on a null handle.
///
/// # Safety
/// `c` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn hp_conjugacy_is_conjugate(c: *const HpConjugacy) -> i32 {
    c.as_ref().map_or(-1, |c| i32::from(c.0.conjugate))
}

/// Conjugation residual, or the mismatch that stopped the test. NaN on a null handle.
///
/// # Safety
/// `c` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn hp_conjugacy_residual(c: *const HpConjugacy) -> f64 {
    c.as_ref().map_or(f64::NAN, |c| c.0.residual)
}

/// Static name of the deciding stage, or NULL on a null handle.
///
/// # Safety
/// `c` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn hp_conjugacy_stage(c: *const HpConjugacy) -> *const c_char {
    let Some(c) = c.as_ref() else { return ptr::null() };
    let name: &'static CStr = match c.0.stage.label() {
        "real-trace" => c"real-trace",
        "tuple" => c"tuple",
        "projective-points" => c"projective-points",
        "congruence" => c"congruence",
        _ => c"verified",
    };
    name.as_ptr()
}

/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_conjugacy_to_json(c: *const HpConjugacy, out: *mut *mut c_char) -> HpStatus {
    guard(|| write_string(out, to_json(&borrow(c)?.0).map_err(lib_err)?))
}

/// # Safety
/// `c` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hp_conjugacy_free(c: *mut HpConjugacy) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}
