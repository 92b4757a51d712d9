//! C ABI over `afl_core`.
//!
//! Every function returns an [`AflStatus`]; results go through out-pointers.
//! On failure the message is available from [`afl_last_error_message`] on the
//! same thread. Handles are opaque and released with their `_free` function;
//! strings returned by the library are released with [`afl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use afl_core::embeddings::{decide_input, CheckInput};
use afl_core::frame::{analyze, reconstruction_error, CoefficientGrid, Frame, FrameSpec};
use afl_core::special::{bessel_j, cached_bessel_zeros};
use afl_core::spectral::{
    besov_norm, build_filter_bank, default_freq_grid, tl_norm, BankVariant, RadialProfile, SpaceKind,
    SpaceParams,
};
use afl_core::AflError;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AflStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Parse = 4,
    Io = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// A frame `(n, mu_max, k_max)`.
pub struct AflFrame {
    inner: Arc<Frame>,
}

/// A radial profile.
pub struct AflProfile {
    inner: RadialProfile,
}

/// A coefficient grid `lambda_{mu k}`.
pub struct AflCoefficients {
    inner: CoefficientGrid,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    let c = CString::new(text).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &AflError) -> AflStatus {
    match e {
        AflError::InvalidParameter(_) | AflError::UnsupportedOrder { .. } => AflStatus::InvalidArgument,
        AflError::IndexOutOfRange { .. } => AflStatus::OutOfRange,
        AflError::Json(_) | AflError::Csv(_) => AflStatus::Parse,
        AflError::Io(_) => AflStatus::Io,
        _ => AflStatus::Numerical,
    }
}

struct Fail(AflStatus, String);

impl From<AflError> for Fail {
    fn from(e: AflError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Fail(AflStatus::Parse, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(AflStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AflStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AflStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AflStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(AflStatus::Parse, format!("{what} is not valid UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn into_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(AflStatus::Numerical, "output contains a NUL byte".into()))
}

/// Message of the last failure on this thread, or NULL. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn afl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn afl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn afl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `J_nu(x)` for `0 <= nu <= 50`, `x >= 0`.
///
/// # Safety
/// `out_value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn afl_bessel_j(nu: f64, x: f64, out_value: *mut f64) -> AflStatus {
    guard(|| {
        let o = out(out_value, "out_value")?;
        *o = bessel_j(nu, x)?;
        Ok(())
    })
}

/// Writes `j_{nu,1..count}` into `out_zeros`, which must hold `count` values.
///
/// # Safety
/// `out_zeros` must be valid for `count` writes.
#[no_mangle]
pub unsafe extern "C" fn afl_bessel_zeros(nu: f64, count: usize, out_zeros: *mut f64) -> AflStatus {
    guard(|| {
        if out_zeros.is_null() {
            return Err(null("out_zeros"));
        }
        if count == 0 {
            return Err(Fail(AflStatus::InvalidArgument, "count must be positive".into()));
        }
        let table = cached_bessel_zeros(nu, count)?;
        std::slice::from_raw_parts_mut(out_zeros, count).copy_from_slice(table.zeros());
        Ok(())
    })
}

/// Builds (or reuses) the frame with the given truncation.
///
/// # Safety
/// `out_frame` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn afl_frame_new(n: u32, mu_max: u32, k_max: u32, out_frame: *mut *mut AflFrame) -> AflStatus {
    guard(|| {
        let o = out(out_frame, "out_frame")?;
        let inner = Frame::shared(FrameSpec::new(n, mu_max, k_max))?;
        *o = Box::into_raw(Box::new(AflFrame { inner }));
        Ok(())
    })
}

/// # Safety
/// `frame` must come from [`afl_frame_new`] and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn afl_frame_free(frame: *mut AflFrame) {
    if !frame.is_null() {
        drop(Box::from_raw(frame));
    }
}

/// Parses a profile from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_profile` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn afl_profile_from_json(json: *const c_char, out_profile: *mut *mut AflProfile) -> AflStatus {
    guard(|| {
        let o = out(out_profile, "out_profile")?;
        let inner = RadialProfile::from_json(text(json, "json")?)?;
        *o = Box::into_raw(Box::new(AflProfile { inner }));
        Ok(())
    })
}

/// `exp(-(scale r)^2 / 2)` on `R^n`.
///
/// # Safety
/// `out_profile` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn afl_profile_gaussian(n: u32, scale: f64, out_profile: *mut *mut AflProfile) -> AflStatus {
    guard(|| {
        let o = out(out_profile, "out_profile")?;
        let inner = RadialProfile::gaussian(n, scale)?;
        *o = Box::into_raw(Box::new(AflProfile { inner }));
        Ok(())
    })
}

/// # Safety
/// `profile` must be a live handle; `out_value` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn afl_profile_value(profile: *const AflProfile, r: f64, out_value: *mut f64) -> AflStatus {
    guard(|| {
        let p = handle(profile, "profile")?;
        *out(out_value, "out_value")? = p.inner.value(r);
        Ok(())
    })
}

/// # Safety
/// `profile` must come from this library and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn afl_profile_free(profile: *mut AflProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Truncated Besov or Triebel-Lizorkin norm; `space_json` holds the space
/// parameters (`kind`, `s`, `p`, `q`, `n`, `weight`).
///
/// # Safety
/// Pointers must be valid; `space_json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn afl_space_norm(
    profile: *const AflProfile,
    space_json: *const c_char,
    mu_max: u32,
    out_value: *mut f64,
) -> AflStatus {
    guard(|| {
        let f = &handle(profile, "profile")?.inner;
        let o = out(out_value, "out_value")?;
        let params: SpaceParams = serde_json::from_str(text(space_json, "space_json")?)?;
        let params = params.normalized()?;
        let bank = build_filter_bank(BankVariant::Lp, f.n, mu_max, &default_freq_grid(mu_max, 256))?;
        let r = match params.kind {
            SpaceKind::Besov => besov_norm(f, &params, &bank)?,
            SpaceKind::TriebelLizorkin => tl_norm(f, &params, &bank)?,
        };
        *o = r.value;
        Ok(())
    })
}

/// Frame coefficients `S f`.
///
/// # Safety
/// Handles must be live; `out_coefficients` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn afl_analyze(
    frame: *const AflFrame,
    profile: *const AflProfile,
    out_coefficients: *mut *mut AflCoefficients,
) -> AflStatus {
    guard(|| {
        let fr = handle(frame, "frame")?;
        let f = handle(profile, "profile")?;
        let o = out(out_coefficients, "out_coefficients")?;
        let inner = analyze(&f.inner, &fr.inner)?;
        *o = Box::into_raw(Box::new(AflCoefficients { inner }));
        Ok(())
    })
}

/// Number of stored coefficients, `(mu_max + 1) * k_max`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn afl_coefficients_len(coefficients: *const AflCoefficients, out_len: *mut usize) -> AflStatus {
    guard(|| {
        let c = handle(coefficients, "coefficients")?;
        *out(out_len, "out_len")? = c.inner.values().len();
        Ok(())
    })
}

/// `lambda_{mu k}`, `0 <= mu <= mu_max`, `1 <= k <= k_max`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn afl_coefficients_get(
    coefficients: *const AflCoefficients,
    mu: u32,
    k: u32,
    out_value: *mut f64,
) -> AflStatus {
    guard(|| {
        let c = handle(coefficients, "coefficients")?;
        let o = out(out_value, "out_value")?;
        let idx = afl_core::annuli::FrameIndex::new(mu, k)?;
        *o = c.inner.get(idx)?;
        Ok(())
    })
}

/// Copies the coefficients, `mu`-major, into `buffer` of length `len`.
///
/// # Safety
/// `buffer` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn afl_coefficients_copy(
    coefficients: *const AflCoefficients,
    buffer: *mut f64,
    len: usize,
) -> AflStatus {
    guard(|| {
        let c = handle(coefficients, "coefficients")?;
        if buffer.is_null() {
            return Err(null("buffer"));
        }
        let v = c.inner.values();
        if len != v.len() {
            return Err(Fail(
                AflStatus::OutOfRange,
                format!("buffer holds {len} values, grid has {}", v.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buffer, len).copy_from_slice(v);
        Ok(())
    })
}

/// `||T lambda - f||_{L^2} / ||f||_{L^2}`.
///
/// # Safety
/// Handles must be live; `out_error` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn afl_reconstruction_error(
    frame: *const AflFrame,
    profile: *const AflProfile,
    coefficients: *const AflCoefficients,
    out_error: *mut f64,
) -> AflStatus {
    guard(|| {
        let fr = handle(frame, "frame")?;
        let f = handle(profile, "profile")?;
        let c = handle(coefficients, "coefficients")?;
        *out(out_error, "out_error")? = reconstruction_error(&f.inner, &c.inner, &fr.inner)?;
        Ok(())
    })
}

/// # Safety
/// `coefficients` must come from this library and not have been freed. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn afl_coefficients_free(coefficients: *mut AflCoefficients) {
    if !coefficients.is_null() {
        drop(Box::from_raw(coefficients));
    }
}

/// Decides an embedding or Bessel-potential query given as JSON. Writes the
/// decision JSON (free with [`afl_string_free`]) and the verdict exit code
/// (0 holds, 10 not implied, 11 out of scope).
///
/// # Safety
/// `query_json` must be NUL-terminated; out-pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn afl_check_json(
    query_json: *const c_char,
    out_json: *mut *mut c_char,
    out_code: *mut i32,
) -> AflStatus {
    guard(|| {
        let input: CheckInput = serde_json::from_str(text(query_json, "query_json")?)?;
        let o = out(out_json, "out_json")?;
        let code = out(out_code, "out_code")?;
        let decision = decide_input(&input)?;
        *o = into_c_string(serde_json::to_string(&decision)?)?;
        *code = decision.exit_code();
        Ok(())
    })
}
