//! C ABI over the `vread` library.
//!
//! Every fallible function returns a [`VrStatus`]; on failure a message is
//! available from [`vr_last_error`] on the same thread until the next
//! failing call. Objects are opaque handles created by `*_new`/`*_load`
//! and released with the matching `*_free`. Panics never cross the
//! boundary; they surface as `VR_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vread::dwell_stats::{DwellStats, StatsAccumulator};
use vread::error::Error;
use vread::ingest::InteractionEvent;
use vread::ndt::NdtParams;
use vread::trainer::TrainedModel;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InsufficientData = 3,
    Parse = 4,
    Format = 5,
    Io = 6,
    IndexOutOfRange = 7,
    Internal = 8,
}

/// Normalized dwell-time curve parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VrNdtParams {
    pub offset: f64,
    pub tau: f64,
    pub a: f64,
    pub b: f64,
    pub t_max: f64,
    pub precision: f64,
}

/// Fitted ln(dwell time) moments and thresholds.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VrDwellStats {
    pub mu: f64,
    pub sigma: f64,
    pub n: u64,
    pub x_l: f64,
    pub x_h: f64,
}

/// Mergeable accumulator of clicked dwell times.
pub struct VrStatsAccumulator {
    inner: StatsAccumulator,
}

/// A trained two-tower model loaded from a checkpoint.
pub struct VrModel {
    inner: TrainedModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> VrStatus {
    match e {
        Error::Parse { .. } | Error::BadLineBudget { .. } => VrStatus::Parse,
        Error::InsufficientData(_) | Error::NoData(_) => VrStatus::InsufficientData,
        Error::InvalidArgument(_) | Error::Diverged { .. } => VrStatus::InvalidArgument,
        Error::IndexOutOfRange { .. } => VrStatus::IndexOutOfRange,
        Error::Format { .. } | Error::Json(_) => VrStatus::Format,
        Error::Io(_) | Error::MissingInput { .. } => VrStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (VrStatus, String)>) -> VrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VrStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            VrStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (VrStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (VrStatus, String) {
    (VrStatus::NullPointer, format!("{what} is null"))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (VrStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (VrStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn to_c_params(p: &NdtParams) -> VrNdtParams {
    VrNdtParams {
        offset: p.offset,
        tau: p.tau,
        a: p.a,
        b: p.b,
        t_max: p.t_max,
        precision: p.precision,
    }
}

fn from_c_params(p: &VrNdtParams) -> NdtParams {
    NdtParams {
        offset: p.offset,
        tau: p.tau,
        a: p.a,
        b: p.b,
        t_max: p.t_max,
        precision: p.precision,
    }
}

fn to_c_stats(s: &DwellStats) -> VrDwellStats {
    VrDwellStats {
        mu: s.mu,
        sigma: s.sigma,
        n: s.n,
        x_l: s.x_l,
        x_h: s.x_h,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default curve: offset 15 s, tau 20 s, t_max 1.575, precision 1e-5.
///
/// # Safety
/// `out` must be a valid pointer to writable memory.
#[no_mangle]
pub unsafe extern "C" fn vr_ndt_default(out: *mut VrNdtParams) -> VrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = to_c_params(&NdtParams::paper_default());
        Ok(())
    })
}

/// Scale constants `a`, `b` so the curve starts at 0 and saturates at `t_max`.
///
/// # Safety
/// `a` and `b` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn vr_derive_scale(offset: f64, tau: f64, t_max: f64, a: *mut f64, b: *mut f64) -> VrStatus {
    guard(|| {
        if a.is_null() || b.is_null() {
            return Err(null("output"));
        }
        let (sa, sb) = vread::ndt::derive_scale(offset, tau, t_max).map_err(lib_err)?;
        *a = sa;
        *b = sb;
        Ok(())
    })
}

/// Largest tau whose curve is within `precision` of `t_max` at `x_h`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vr_solve_tau(offset: f64, x_h: f64, precision: f64, t_max: f64, out: *mut f64) -> VrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = vread::ndt::solve_tau(offset, x_h, precision, t_max).map_err(lib_err)?;
        Ok(())
    })
}

/// Normalized dwell time of `t` seconds.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn vr_ndt(params: *const VrNdtParams, t: f64, out: *mut f64) -> VrStatus {
    guard(|| {
        if params.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let p = from_c_params(&*params);
        p.validate().map_err(lib_err)?;
        if !(t >= 0.0) {
            return Err((VrStatus::InvalidArgument, format!("dwell time {t} must be >= 0")));
        }
        *out = vread::ndt::ndt(t, &p);
        Ok(())
    })
}

/// `(auc - 0.5) / (base_auc - 0.5) - 1`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vr_relaimpr(auc: f64, base_auc: f64, out: *mut f64) -> VrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = vread::evaluator::relaimpr(auc, base_auc).map_err(lib_err)?;
        Ok(())
    })
}

/// AUC of `n` scores against 0/1 labels, ties counted as half.
///
/// # Safety
/// `scores` and `labels` must point to `n` readable elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vr_auc(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> VrStatus {
    guard(|| {
        if scores.is_null() || labels.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let s = std::slice::from_raw_parts(scores, n);
        let l: Vec<bool> = std::slice::from_raw_parts(labels, n).iter().map(|&v| v != 0).collect();
        *out = vread::evaluator::auc(s, &l).map_err(lib_err)?;
        Ok(())
    })
}

/// New empty accumulator; free with [`vr_stats_free`].
#[no_mangle]
pub extern "C" fn vr_stats_new() -> *mut VrStatsAccumulator {
    Box::into_raw(Box::new(VrStatsAccumulator { inner: StatsAccumulator::new() }))
}

/// Adds one clicked dwell time. Non-positive values are ignored and
/// reported through `used` (0 or 1; may be NULL).
///
/// # Safety
/// `acc` must come from [`vr_stats_new`]; `used` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn vr_stats_push(acc: *mut VrStatsAccumulator, dwell_time_s: f64, used: *mut u8) -> VrStatus {
    guard(|| {
        let acc = acc.as_mut().ok_or_else(|| null("acc"))?;
        if !dwell_time_s.is_finite() || dwell_time_s < 0.0 {
            return Err((VrStatus::InvalidArgument, format!("dwell time {dwell_time_s} must be finite and >= 0")));
        }
        let u = acc.inner.push_dwell(dwell_time_s);
        if !used.is_null() {
            *used = u8::from(u);
        }
        Ok(())
    })
}

/// Folds `src` into `dst`; `src` is unchanged.
///
/// # Safety
/// Both handles must come from [`vr_stats_new`].
#[no_mangle]
pub unsafe extern "C" fn vr_stats_merge(dst: *mut VrStatsAccumulator, src: *const VrStatsAccumulator) -> VrStatus {
    guard(|| {
        let src = src.as_ref().ok_or_else(|| null("src"))?.inner.clone();
        let dst = dst.as_mut().ok_or_else(|| null("dst"))?;
        dst.inner.merge(&src);
        Ok(())
    })
}

/// Fits mu, sigma and the thresholds; needs at least two samples.
///
/// # Safety
/// `acc` must come from [`vr_stats_new`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vr_stats_finalize(acc: *const VrStatsAccumulator, out: *mut VrDwellStats) -> VrStatus {
    guard(|| {
        let acc = acc.as_ref().ok_or_else(|| null("acc"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = to_c_stats(&acc.inner.finalize().map_err(lib_err)?);
        Ok(())
    })
}

/// # Safety
/// `acc` must come from [`vr_stats_new`] and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn vr_stats_free(acc: *mut VrStatsAccumulator) {
    if !acc.is_null() {
        drop(Box::from_raw(acc));
    }
}

/// Loads a checkpoint written by `vread train`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vr_model_load(path: *const c_char, out: *mut *mut VrModel) -> VrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = c_str(path, "path")?;
        let file = File::open(path).map_err(|e| (VrStatus::Io, format!("{path}: {e}")))?;
        let inner = TrainedModel::load(&mut BufReader::new(file)).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(VrModel { inner }));
        Ok(())
    })
}

/// Tower probabilities `(P, P')` for a user/item pair. Ids unseen in
/// training share the out-of-vocabulary row.
///
/// # Safety
/// `model` must come from [`vr_model_load`]; strings NUL-terminated; outputs valid.
#[no_mangle]
pub unsafe extern "C" fn vr_model_forward(
    model: *const VrModel,
    user_id: *const c_char,
    item_id: *const c_char,
    p: *mut f64,
    p_weighted: *mut f64,
) -> VrStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if p.is_null() || p_weighted.is_null() {
            return Err(null("output"));
        }
        let e = InteractionEvent::impression(c_str(user_id, "user_id")?, c_str(item_id, "item_id")?, 1);
        let (a, b) = m.inner.net.forward(&m.inner.features(&e)).map_err(lib_err)?;
        *p = a;
        *p_weighted = b;
        Ok(())
    })
}

/// Ranking score of the model's objective (`P + P'`, or `P` for the
/// single-tower objective).
///
/// # Safety
/// `model` must come from [`vr_model_load`]; strings NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn vr_model_score(
    model: *const VrModel,
    user_id: *const c_char,
    item_id: *const c_char,
    out: *mut f64,
) -> VrStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let e = InteractionEvent::impression(c_str(user_id, "user_id")?, c_str(item_id, "item_id")?, 1);
        *out = m.inner.ranking_score(&e).map_err(lib_err)?;
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`vr_model_load`] and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn vr_model_free(model: *mut VrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
