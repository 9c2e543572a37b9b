//! C ABI over the byzweight truncation solver and sample certificate.
//!
//! Weight vectors and trade-off curves cross the boundary as opaque handles
//! that the caller frees with the matching `*_free` function. Every fallible
//! call returns a [`BwStatus`]; on failure, [`bw_last_error_message`] holds a
//! description for the calling thread. Panics are caught and reported as
//! `BW_STATUS_PANIC`, never unwound into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use byzweight::sample_check::{certify_sample, SampleCheckParams};
use byzweight::weights::{
    self, rational_to_f64, Rational, TradeoffCurve, TruncationQuery, TruncationStatus, WeightVector,
};
use byzweight::Error;
use num_bigint::BigInt;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Infeasible = 4,
    OutOfRange = 5,
    Panic = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BwTruncation {
    /// A finite cap `U*` was found.
    Solved = 0,
    /// The bound already holds without capping anything.
    NoTruncationNeeded = 1,
    /// No cap satisfies the bound.
    Infeasible = 2,
}

/// An exact proportion `num / den`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BwRatio {
    pub num: u64,
    pub den: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BwCertificate {
    pub certified: bool,
    /// `+inf` when the lower bound on the mean is not positive.
    pub lhs: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub top_mean: f64,
    pub sample_mean: f64,
}

/// Opaque sorted vector of client weights.
pub struct BwWeights(WeightVector);

/// Opaque list of `(alpha, U*)` pairs.
pub struct BwTradeoff(TradeoffCurve);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

struct Failure(BwStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Parse(_) => BwStatus::Parse,
            Error::PreprocessInfeasible => BwStatus::Infeasible,
            Error::IntervalIndex { .. } | Error::ValueExceedsCap { .. } => BwStatus::OutOfRange,
            Error::Io(_) => BwStatus::Internal,
            _ => BwStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(BwStatus::NullPointer, format!("{what} is null"))
}

/// Run `f`, translating errors and panics into a status.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> BwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BwStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("panic inside byzweight".into());
            BwStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn rational(r: BwRatio, what: &str) -> Result<Rational, Failure> {
    if r.den == 0 {
        return Err(Failure(BwStatus::InvalidArgument, format!("{what} has a zero denominator")));
    }
    Ok(Rational::new(BigInt::from(r.num), BigInt::from(r.den)))
}

fn query(alpha: BwRatio, alpha_star: BwRatio) -> Result<TruncationQuery, Failure> {
    Ok(TruncationQuery::new(rational(alpha, "alpha")?, rational(alpha_star, "alpha_star")?)?)
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Free a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Build a weight vector from `len` values. The handle stores them sorted.
///
/// # Safety
/// `values` must point to `len` readable integers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bw_weights_new(values: *const u64, len: usize, out: *mut *mut BwWeights) -> BwStatus {
    guard(|| {
        if values.is_null() && len > 0 {
            return Err(null("values"));
        }
        let slice = if len == 0 { &[][..] } else { std::slice::from_raw_parts(values, len) };
        let v = WeightVector::new(slice.to_vec())?;
        write_out(out, Box::into_raw(Box::new(BwWeights(v))), "out")
    })
}

/// Parse a weights file body: one integer per line, `#` comments allowed.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bw_weights_parse(text: *const c_char, out: *mut *mut BwWeights) -> BwStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| Failure(BwStatus::Parse, "weights text is not UTF-8".into()))?;
        let v = WeightVector::parse_weights_file(text)?;
        write_out(out, Box::into_raw(Box::new(BwWeights(v))), "out")
    })
}

/// # Safety
/// `w` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn bw_weights_free(w: *mut BwWeights) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Number of clients, 0 for a null handle.
///
/// # Safety
/// `w` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bw_weights_len(w: *const BwWeights) -> usize {
    w.as_ref().map_or(0, |w| w.0.len())
}

/// The `index`-th smallest weight.
///
/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bw_weights_get(w: *const BwWeights, index: usize, out: *mut u64) -> BwStatus {
    guard(|| {
        let w = as_ref(w, "weights")?;
        let value = *w.0.values().get(index).ok_or_else(|| {
            Failure(BwStatus::OutOfRange, format!("index {index} out of range for {} weights", w.0.len()))
        })?;
        write_out(out, value, "out")
    })
}

/// Maximal weight proportion of the heaviest `p` fraction of clients, as a
/// double.
///
/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bw_mwp(w: *const BwWeights, p: BwRatio, out: *mut f64) -> BwStatus {
    guard(|| {
        let w = as_ref(w, "weights")?;
        let value = weights::mwp(&w.0, &rational(p, "p")?)?;
        write_out(out, rational_to_f64(&value), "out")
    })
}

/// Exact maximal weight proportion as a `"num/den"` string to release with
/// [`bw_string_free`].
///
/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bw_mwp_exact(w: *const BwWeights, p: BwRatio, out: *mut *mut c_char) -> BwStatus {
    guard(|| {
        let w = as_ref(w, "weights")?;
        let value = weights::mwp(&w.0, &rational(p, "p")?)?;
        let text = format!("{}/{}", value.numer(), value.denom());
        write_out(out, into_c_string(text), "out")
    })
}

/// Largest cap `U*` with `mwp(trunc(w, U*), alpha) <= alpha_star`. `out_u` is
/// written only when the outcome is `BW_TRUNCATION_SOLVED`.
///
/// # Safety
/// `w` must be a live handle; `out_status` must be writable; `out_u` may be null.
#[no_mangle]
pub unsafe extern "C" fn bw_solve_u_star(
    w: *const BwWeights,
    alpha: BwRatio,
    alpha_star: BwRatio,
    out_status: *mut BwTruncation,
    out_u: *mut u64,
) -> BwStatus {
    guard(|| {
        let w = as_ref(w, "weights")?;
        let outcome = weights::solve_u_star(&w.0, &query(alpha, alpha_star)?)?;
        let status = match outcome.status {
            TruncationStatus::Solved { u_star } => {
                if !out_u.is_null() {
                    out_u.write(u_star);
                }
                BwTruncation::Solved
            }
            TruncationStatus::NoTruncationNeeded => BwTruncation::NoTruncationNeeded,
            TruncationStatus::Infeasible => BwTruncation::Infeasible,
        };
        write_out(out_status, status, "out_status")
    })
}

/// New handle with every weight capped at `cap`.
///
/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bw_truncate(w: *const BwWeights, cap: u64, out: *mut *mut BwWeights) -> BwStatus {
    guard(|| {
        let w = as_ref(w, "weights")?;
        let t = weights::truncate(&w.0, cap)?;
        write_out(out, Box::into_raw(Box::new(BwWeights(t))), "out")
    })
}

/// `(alpha, U*)` pairs for `alpha_star`, alpha decreasing over the grid `j/K`.
///
/// # Safety
/// `w` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bw_tradeoff_new(w: *const BwWeights, alpha_star: BwRatio, out: *mut *mut BwTradeoff) -> BwStatus {
    guard(|| {
        let w = as_ref(w, "weights")?;
        let curve = weights::tradeoff_report(&w.0, &rational(alpha_star, "alpha_star")?)?;
        write_out(out, Box::into_raw(Box::new(BwTradeoff(curve))), "out")
    })
}

/// # Safety
/// `t` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn bw_tradeoff_free(t: *mut BwTradeoff) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of pairs, 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bw_tradeoff_len(t: *const BwTradeoff) -> usize {
    t.as_ref().map_or(0, |t| t.0.points.len())
}

/// # Safety
/// `t` must be a live handle; both outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn bw_tradeoff_get(
    t: *const BwTradeoff,
    index: usize,
    out_alpha: *mut BwRatio,
    out_u: *mut u64,
) -> BwStatus {
    guard(|| {
        let t = as_ref(t, "tradeoff")?;
        let point = t.0.points.get(index).ok_or_else(|| {
            Failure(BwStatus::OutOfRange, format!("index {index} out of range for {} pairs", t.0.points.len()))
        })?;
        let part = |x: &BigInt| {
            u64::try_from(x).map_err(|_| Failure(BwStatus::Internal, "alpha does not fit in 64 bits".into()))
        };
        let alpha = BwRatio { num: part(point.alpha.numer())?, den: part(point.alpha.denom())? };
        write_out(out_alpha, alpha, "out_alpha")?;
        write_out(out_u, point.u_star, "out_u")
    })
}

/// The curve as `alpha,u_star` CSV, released with [`bw_string_free`].
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bw_tradeoff_csv(t: *const BwTradeoff, out: *mut *mut c_char) -> BwStatus {
    guard(|| {
        let t = as_ref(t, "tradeoff")?;
        write_out(out, into_c_string(t.0.to_csv()), "out")
    })
}

/// Check the sampled-weight certificate on `len` truncated sizes.
///
/// # Safety
/// `sample` must point to `len` readable integers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bw_certify_sample(
    sample: *const u64,
    len: usize,
    alpha: BwRatio,
    alpha_star: BwRatio,
    delta: f64,
    cap: u64,
    out: *mut BwCertificate,
) -> BwStatus {
    guard(|| {
        if sample.is_null() && len > 0 {
            return Err(null("sample"));
        }
        let slice = if len == 0 { &[][..] } else { std::slice::from_raw_parts(sample, len) };
        let params = SampleCheckParams::new(len, rational(alpha, "alpha")?, rational(alpha_star, "alpha_star")?, delta, cap)?;
        let r = certify_sample(slice, &params)?;
        let cert = BwCertificate {
            certified: r.certified,
            lhs: r.lhs,
            eps1: r.epsilons.eps1,
            eps2: r.epsilons.eps2,
            eps3: r.epsilons.eps3,
            top_mean: r.top_mean,
            sample_mean: r.sample_mean,
        };
        write_out(out, cert, "out")
    })
}
