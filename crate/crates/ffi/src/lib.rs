//! C ABI over the fhbounds engine.
//!
//! Markets are opaque handles created from the JSON spec format and released
//! with `fhb_market_free`. Every fallible call returns an `FhbStatus`; on
//! failure `fhb_last_error_message` describes the most recent error on the
//! calling thread. Strings handed out by the library are freed with
//! `fhb_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fhbounds::arbitrage::{DetectConfig, Market, PriceVector, Verdict};
use fhbounds::spec_file::LoadedSpec;
use fhbounds::Error;

/// Opaque market handle.
pub struct FhbMarket {
    market: Market,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FhbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    /// A price lies outside its single-derivative interval.
    Infeasible = 5,
    Unsupported = 6,
    Numerical = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FhbVerdict {
    NoDecision = 0,
    Arbitrage = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FhbStatus {
    match e {
        Error::Spec { .. } => FhbStatus::Parse,
        Error::Config(_) | Error::Domain(_) | Error::NoMartingaleDrift { .. } => FhbStatus::Validation,
        Error::InfeasibleConstraint(_) | Error::InfeasiblePrice { .. } => FhbStatus::Infeasible,
        Error::Unsupported(_) => FhbStatus::Unsupported,
        Error::OutOfRange { .. } | Error::Numerical(_) => FhbStatus::Numerical,
    }
}

fn guarded<F: FnOnce() -> Result<(), FhbStatus>>(f: F) -> FhbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FhbStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            FhbStatus::Panic
        }
    }
}

fn fail(e: Error) -> FhbStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> FhbStatus {
    set_error(format!("{what} is null"));
    FhbStatus::NullPointer
}

unsafe fn market_ref<'a>(m: *const FhbMarket) -> Result<&'a FhbMarket, FhbStatus> {
    m.as_ref().ok_or_else(|| null("market"))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], FhbStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

/// Builds a market from a JSON spec. On success `*out` owns a new handle.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fhb_market_from_json(json: *const c_char, out: *mut *mut FhbMarket) -> FhbStatus {
    guarded(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = CStr::from_ptr(json).to_str().map_err(|e| {
            set_error(format!("spec is not UTF-8: {e}"));
            FhbStatus::InvalidUtf8
        })?;
        let spec = LoadedSpec::from_json(text).map_err(fail)?;
        let market = spec.market().map_err(fail)?;
        *out = Box::into_raw(Box::new(FhbMarket { market }));
        Ok(())
    })
}

/// Releases a market handle. Null is ignored.
///
/// # Safety
/// `market` must come from `fhb_market_from_json` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fhb_market_free(market: *mut FhbMarket) {
    if !market.is_null() {
        drop(Box::from_raw(market));
    }
}

/// Number of assets.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fhb_market_dimension(market: *const FhbMarket, out: *mut usize) -> FhbStatus {
    guarded(|| {
        let m = market_ref(market)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = m.market.spec().margins().dim();
        Ok(())
    })
}

/// Number of derivatives.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fhb_market_num_derivatives(market: *const FhbMarket, out: *mut usize) -> FhbStatus {
    guarded(|| {
        let m = market_ref(market)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = m.market.spec().len();
        Ok(())
    })
}

/// No-arbitrage price interval of derivative `k` taken on its own.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fhb_price_interval(
    market: *const FhbMarket,
    k: usize,
    lower: *mut f64,
    upper: *mut f64,
) -> FhbStatus {
    guarded(|| {
        let m = market_ref(market)?;
        let lower = lower.as_mut().ok_or_else(|| null("lower"))?;
        let upper = upper.as_mut().ok_or_else(|| null("upper"))?;
        let iv = m
            .market
            .intervals()
            .get(k)
            .ok_or_else(|| fail(Error::Config(format!("no derivative with index {k}"))))?;
        *lower = iv.lower;
        *upper = iv.upper;
        Ok(())
    })
}

/// Gap between the upper and lower price-constrained envelopes at `u`.
///
/// # Safety
/// `prices` must hold `n_prices` values and `u` must hold `dim` values.
#[no_mangle]
pub unsafe extern "C" fn fhb_fobj(
    market: *const FhbMarket,
    prices: *const f64,
    n_prices: usize,
    u: *const f64,
    dim: usize,
    out: *mut f64,
) -> FhbStatus {
    guarded(|| {
        let m = market_ref(market)?;
        let p = slice(prices, n_prices, "prices")?;
        let u = slice(u, dim, "u")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let p = PriceVector::new(p.to_vec()).map_err(fail)?;
        *out = m.market.f_obj(u, &p).map_err(fail)?;
        Ok(())
    })
}

/// Runs grid detection (with optional refinement). The verdict is written to
/// `*verdict`; if `report_json` is non-null it receives the full report as a
/// JSON string to be released with `fhb_string_free`.
///
/// # Safety
/// `prices` must hold `n_prices` values; other pointers must be valid or
/// (for `report_json`) null.
#[no_mangle]
pub unsafe extern "C" fn fhb_detect(
    market: *const FhbMarket,
    prices: *const f64,
    n_prices: usize,
    grid_n: usize,
    refine: bool,
    verdict: *mut FhbVerdict,
    report_json: *mut *mut c_char,
) -> FhbStatus {
    guarded(|| {
        let m = market_ref(market)?;
        let p = slice(prices, n_prices, "prices")?;
        let verdict = verdict.as_mut().ok_or_else(|| null("verdict"))?;
        let p = PriceVector::new(p.to_vec()).map_err(fail)?;
        let cfg = DetectConfig {
            grid_n,
            refine,
            ..DetectConfig::default()
        };
        let r = m.market.detect_margins(&p, &cfg).map_err(fail)?;
        *verdict = match r.verdict {
            Verdict::Arbitrage => FhbVerdict::Arbitrage,
            Verdict::NoDecision => FhbVerdict::NoDecision,
        };
        if !report_json.is_null() {
            let text = serde_json::to_string(&r)
                .map_err(|e| fail(Error::Numerical(format!("serialization: {e}"))))?;
            *report_json = CString::new(text).unwrap_or_default().into_raw();
        }
        Ok(())
    })
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fhb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fhb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
