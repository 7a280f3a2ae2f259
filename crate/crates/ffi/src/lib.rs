//! C ABI for the weighted zero-sum library.
//!
//! Handles are opaque pointers created and freed by the paired
//! `wzs_*_new` / `wzs_*_free` functions. Every fallible call returns a
//! [`WzsStatus`]; on failure, `wzs_last_error()` exposes a thread-local
//! message valid until the next failing call on the same thread.
//!
//! The build script regenerates `include/wzs.h` with cbindgen.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use wzs_core::builder::random_extremal;
use wzs_core::decompose::{canonicalize, decompose};
use wzs_core::engine::{
    compute_constant, has_zero_window, is_extremal, window_reach, SearchBudget, SearchOutcome,
    Seq,
};
use wzs_core::known::Family;
use wzs_core::ring::{WeightSet, ZnContext};
use wzs_core::Error;

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WzsStatus {
    Ok = 0,
    /// A null pointer, unparseable string, or out-of-range argument.
    InvalidArgument = 1,
    /// The inputs are outside the supported domain (for example an even
    /// modulus for the units family).
    DomainRejected = 2,
    /// The search stopped at its node budget before settling the answer.
    BudgetExhausted = 3,
    InternalError = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: WzsStatus, message: impl Into<Vec<u8>>) -> WzsStatus {
    let message = CString::new(message).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
    status
}

fn fail_error(e: &Error) -> WzsStatus {
    let status = match e {
        Error::Internal(_) | Error::Io(_) | Error::Json(_) => WzsStatus::InternalError,
        Error::TermOutOfRange { .. } | Error::BadWeight { .. } | Error::WeightParse(_)
        | Error::RecipeParse(_) | Error::BadModulus(_) => WzsStatus::InvalidArgument,
        _ => WzsStatus::DomainRejected,
    };
    fail(status, e.to_string())
}

/// The message describing the most recent failure on this thread, or null.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wzs_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr())
    })
}

/// A modulus with its factorization.
pub struct WzsContext {
    inner: ZnContext,
}

/// A materialized weight set over some modulus.
pub struct WzsWeights {
    inner: WeightSet,
}

/// A finite sequence of residues.
pub struct WzsSeq {
    inner: Seq,
}

unsafe fn write_out<T>(out: *mut T, value: T) -> WzsStatus {
    if out.is_null() {
        return fail(WzsStatus::InvalidArgument, "null output pointer");
    }
    unsafe { out.write(value) };
    WzsStatus::Ok
}

macro_rules! deref {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(r) => &r.inner,
            None => return fail(WzsStatus::InvalidArgument, "null handle"),
        }
    };
}

/// Creates a context for the modulus `n >= 2`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wzs_context_new(n: u64, out: *mut *mut WzsContext) -> WzsStatus {
    match ZnContext::new(n) {
        Ok(inner) => unsafe {
            write_out(out, Box::into_raw(Box::new(WzsContext { inner })))
        },
        Err(e) => fail_error(&e),
    }
}

/// Frees a context handle (null is a no-op).
#[no_mangle]
pub extern "C" fn wzs_context_free(ctx: *mut WzsContext) {
    if !ctx.is_null() {
        drop(unsafe { Box::from_raw(ctx) });
    }
}

/// Parses a weight set over `Z_n` from the textual syntax `one`, `units`,
/// `units^2`, `units^3`, `nonzero`, or `set:1,4,...`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wzs_weights_new(
    n: u64,
    spec: *const c_char,
    out: *mut *mut WzsWeights,
) -> WzsStatus {
    if spec.is_null() {
        return fail(WzsStatus::InvalidArgument, "null weight spec");
    }
    let Ok(text) = unsafe { CStr::from_ptr(spec) }.to_str() else {
        return fail(WzsStatus::InvalidArgument, "weight spec is not UTF-8");
    };
    match WeightSet::parse(n, text) {
        Ok(inner) => unsafe {
            write_out(out, Box::into_raw(Box::new(WzsWeights { inner })))
        },
        Err(e) => fail_error(&e),
    }
}

/// Frees a weight-set handle (null is a no-op).
#[no_mangle]
pub extern "C" fn wzs_weights_free(weights: *mut WzsWeights) {
    if !weights.is_null() {
        drop(unsafe { Box::from_raw(weights) });
    }
}

/// Creates a sequence over `Z_n` from `len` terms, each in `[0, n)`.
///
/// # Safety
/// `terms` must point to `len` readable values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wzs_seq_new(
    n: u64,
    terms: *const u64,
    len: usize,
    out: *mut *mut WzsSeq,
) -> WzsStatus {
    if terms.is_null() && len > 0 {
        return fail(WzsStatus::InvalidArgument, "null terms pointer");
    }
    let slice = if len == 0 { &[][..] } else { unsafe { std::slice::from_raw_parts(terms, len) } };
    match Seq::new(n, slice.to_vec()) {
        Ok(inner) => unsafe { write_out(out, Box::into_raw(Box::new(WzsSeq { inner }))) },
        Err(e) => fail_error(&e),
    }
}

/// Frees a sequence handle (null is a no-op).
#[no_mangle]
pub extern "C" fn wzs_seq_free(seq: *mut WzsSeq) {
    if !seq.is_null() {
        drop(unsafe { Box::from_raw(seq) });
    }
}

/// The number of terms.
///
/// # Safety
/// `seq` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wzs_seq_len(seq: *const WzsSeq, out: *mut usize) -> WzsStatus {
    let s = deref!(seq);
    unsafe { write_out(out, s.len()) }
}

/// Copies the terms into `buf`, which must hold at least `buf_len >= len`
/// values.
///
/// # Safety
/// `seq` must be a live handle; `buf` must point to `buf_len` writable
/// values.
#[no_mangle]
pub unsafe extern "C" fn wzs_seq_terms(
    seq: *const WzsSeq,
    buf: *mut u64,
    buf_len: usize,
) -> WzsStatus {
    let s = deref!(seq);
    if buf_len < s.len() {
        return fail(WzsStatus::InvalidArgument, "buffer too small");
    }
    if s.len() > 0 {
        if buf.is_null() {
            return fail(WzsStatus::InvalidArgument, "null buffer");
        }
        unsafe { std::ptr::copy_nonoverlapping(s.terms().as_ptr(), buf, s.len()) };
    }
    WzsStatus::Ok
}

/// Finds the first zero window (ordered by end, then start). `*found` tells
/// whether `*start` / `*end` are meaningful.
///
/// # Safety
/// All handles must be live and all output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn wzs_zero_window(
    seq: *const WzsSeq,
    weights: *const WzsWeights,
    found: *mut bool,
    start: *mut usize,
    end: *mut usize,
) -> WzsStatus {
    let s = deref!(seq);
    let w = deref!(weights);
    match has_zero_window(s, w) {
        Ok(window) => {
            if found.is_null() || start.is_null() || end.is_null() {
                return fail(WzsStatus::InvalidArgument, "null output pointer");
            }
            unsafe {
                found.write(window.is_some());
                let (i, j) = window.unwrap_or((0, 0));
                start.write(i);
                end.write(j);
            }
            WzsStatus::Ok
        }
        Err(e) => fail_error(&e),
    }
}

/// True iff the full sequence is an A-weighted zero-sum sequence.
///
/// # Safety
/// All handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn wzs_is_zero_sum(
    seq: *const WzsSeq,
    weights: *const WzsWeights,
    out: *mut bool,
) -> WzsStatus {
    let s = deref!(seq);
    let w = deref!(weights);
    match window_reach(s, w) {
        Ok(reach) => unsafe { write_out(out, reach.contains_zero()) },
        Err(e) => fail_error(&e),
    }
}

/// Computes `C_A(n)` by exhaustive pruned search. `max_nodes = 0` means
/// unlimited. On [`WzsStatus::BudgetExhausted`], `*constant` holds the
/// verified lower bound instead.
///
/// # Safety
/// All handles must be live and output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn wzs_constant(
    ctx: *const WzsContext,
    weights: *const WzsWeights,
    max_nodes: u64,
    constant: *mut u64,
    nodes_visited: *mut u64,
) -> WzsStatus {
    let c = deref!(ctx);
    let w = deref!(weights);
    let budget = SearchBudget {
        max_nodes: if max_nodes == 0 { None } else { Some(max_nodes) },
        max_elapsed: None,
    };
    match compute_constant(c, w, budget) {
        Ok(report) => {
            if !nodes_visited.is_null() {
                unsafe { nodes_visited.write(report.nodes_visited) };
            }
            match report.outcome {
                SearchOutcome::Exact { constant: value } => unsafe {
                    write_out(constant, value)
                },
                SearchOutcome::LowerBound { at_least } => {
                    if !constant.is_null() {
                        unsafe { constant.write(at_least) };
                    }
                    fail(WzsStatus::BudgetExhausted, "search budget exhausted")
                }
            }
        }
        Err(e) => fail_error(&e),
    }
}

/// True iff the sequence has length `constant - 1` and no zero window.
///
/// # Safety
/// All handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn wzs_is_extremal(
    seq: *const WzsSeq,
    weights: *const WzsWeights,
    constant: u64,
    out: *mut bool,
) -> WzsStatus {
    let s = deref!(seq);
    let w = deref!(weights);
    match is_extremal(s, w, constant) {
        Ok(value) => unsafe { write_out(out, value) },
        Err(e) => fail_error(&e),
    }
}

/// Canonicalizes under A-equivalence: writes the canonical terms (same
/// length as the sequence) and the orbit size. Fails with
/// [`WzsStatus::DomainRejected`] when the orbit size exceeds `u64`.
///
/// # Safety
/// All handles must be live; `canonical` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn wzs_canonicalize(
    seq: *const WzsSeq,
    weights: *const WzsWeights,
    canonical: *mut u64,
    orbit_size: *mut u64,
) -> WzsStatus {
    let s = deref!(seq);
    let w = deref!(weights);
    match canonicalize(s, w) {
        Ok(class) => {
            if class.orbit_size > u64::MAX as u128 {
                return fail(WzsStatus::DomainRejected, "orbit size exceeds u64");
            }
            if s.len() > 0 && canonical.is_null() {
                return fail(WzsStatus::InvalidArgument, "null canonical buffer");
            }
            unsafe {
                std::ptr::copy_nonoverlapping(
                    class.canonical.terms().as_ptr(),
                    canonical,
                    s.len(),
                );
            }
            if orbit_size.is_null() {
                return fail(WzsStatus::InvalidArgument, "null orbit size pointer");
            }
            unsafe { orbit_size.write(class.orbit_size as u64) };
            WzsStatus::Ok
        }
        Err(e) => fail_error(&e),
    }
}

fn parse_family_c(family: *const c_char) -> Result<Family, WzsStatus> {
    if family.is_null() {
        return Err(fail(WzsStatus::InvalidArgument, "null family"));
    }
    let Ok(text) = unsafe { CStr::from_ptr(family) }.to_str() else {
        return Err(fail(WzsStatus::InvalidArgument, "family is not UTF-8"));
    };
    Family::parse(text).map_err(|e| fail_error(&e))
}

/// Builds a random extremal sequence for the family (`one`, `units`,
/// `units^2`, `units^3`) over `Z_n`, reproducible from the seed.
///
/// # Safety
/// `family` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wzs_build_random(
    family: *const c_char,
    n: u64,
    seed: u64,
    out: *mut *mut WzsSeq,
) -> WzsStatus {
    let family = match parse_family_c(family) {
        Ok(f) => f,
        Err(status) => return status,
    };
    let ctx = match ZnContext::new(n) {
        Ok(c) => c,
        Err(e) => return fail_error(&e),
    };
    match random_extremal(family, &ctx, seed) {
        Ok((s, _)) => unsafe { write_out(out, Box::into_raw(Box::new(WzsSeq { inner: s }))) },
        Err(e) => fail_error(&e),
    }
}

/// Decomposes an extremal sequence into its structural certificate, returned
/// as a JSON string to be freed with [`wzs_string_free`].
///
/// # Safety
/// `family` must be a NUL-terminated string, `seq` a live handle, `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wzs_decompose_json(
    n: u64,
    family: *const c_char,
    seq: *const WzsSeq,
    out: *mut *mut c_char,
) -> WzsStatus {
    let family = match parse_family_c(family) {
        Ok(f) => f,
        Err(status) => return status,
    };
    let s = deref!(seq);
    let ctx = match ZnContext::new(n) {
        Ok(c) => c,
        Err(e) => return fail_error(&e),
    };
    match decompose(s, family, &ctx) {
        Ok(cert) => {
            let json = cert.to_json();
            let Ok(cstring) = CString::new(json) else {
                return fail(WzsStatus::InternalError, "certificate JSON contains NUL");
            };
            unsafe { write_out(out, cstring.into_raw()) }
        }
        Err(e) => fail_error(&e),
    }
}

/// Frees a string returned by this library (null is a no-op).
#[no_mangle]
pub extern "C" fn wzs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
