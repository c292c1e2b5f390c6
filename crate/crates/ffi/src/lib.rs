//! C ABI over `bdsched`.
//!
//! Handles are opaque and owned by the caller: every `*_free` accepts null.
//! Strings returned through out-parameters are heap-allocated and must be
//! released with [`bd_string_free`]. On any non-OK status the message is
//! available from [`bd_last_error`] until the next failing call on the same
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use bdsched::analysis::{audit, Audit};
use bdsched::generators::greedy_baseline;
use bdsched::model::{profit, Instance, Rat};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidInstance = 4,
    SimulationError = 5,
    Panic = 6,
}

/// Parsed and validated instance.
pub struct BdInstance {
    inner: Instance,
}

/// CP run, OPT schedule and interval report for one instance.
pub struct BdEvaluation {
    audit: Audit,
    v_greedy: Rat,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: BdStatus, msg: impl Into<String>) -> BdStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> BdStatus) -> BdStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(BdStatus::Panic, "internal panic"))
}

fn out_string(s: String, out: *mut *mut c_char) -> BdStatus {
    match CString::new(s) {
        Ok(c) => {
            // SAFETY: caller checked `out` for null.
            unsafe { *out = c.into_raw() };
            BdStatus::Ok
        }
        Err(_) => fail(BdStatus::Panic, "string contains NUL"),
    }
}

/// Parse and validate a JSON instance (`{"packets": [...]}`).
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn bd_instance_from_json(json: *const c_char, out: *mut *mut BdInstance) -> BdStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(BdStatus::NullPointer, "null argument");
        }
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(e) => return fail(BdStatus::InvalidUtf8, e.to_string()),
        };
        match Instance::load_json(text) {
            Ok(inner) => {
                unsafe { *out = Box::into_raw(Box::new(BdInstance { inner })) };
                BdStatus::Ok
            }
            Err(e @ bdsched::model::InstanceError::Json { .. }) => fail(BdStatus::ParseError, e.to_string()),
            Err(e) => fail(BdStatus::InvalidInstance, e.to_string()),
        }
    })
}

/// # Safety
/// `inst` must be null or come from [`bd_instance_from_json`], freed once.
#[no_mangle]
pub unsafe extern "C" fn bd_instance_free(inst: *mut BdInstance) {
    if !inst.is_null() {
        drop(unsafe { Box::from_raw(inst) });
    }
}

/// Number of packets, 0 for null.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bd_instance_len(inst: *const BdInstance) -> usize {
    unsafe { inst.as_ref() }.map_or(0, |i| i.inner.len())
}

/// Run CP, OPT and greedy and evaluate every interval check.
///
/// # Safety
/// `inst` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bd_evaluate(inst: *const BdInstance, out: *mut *mut BdEvaluation) -> BdStatus {
    guard(|| {
        let Some(inst) = (unsafe { inst.as_ref() }) else {
            return fail(BdStatus::NullPointer, "null instance");
        };
        if out.is_null() {
            return fail(BdStatus::NullPointer, "null output");
        }
        match audit(&inst.inner) {
            Ok(audit) => {
                let greedy = greedy_baseline(&inst.inner);
                let v_greedy = profit(&greedy, &inst.inner).unwrap_or_else(|_| Rat::zero());
                unsafe { *out = Box::into_raw(Box::new(BdEvaluation { audit, v_greedy })) };
                BdStatus::Ok
            }
            Err(e) => fail(BdStatus::SimulationError, e.to_string()),
        }
    })
}

/// # Safety
/// `ev` must be null or come from [`bd_evaluate`], freed once.
#[no_mangle]
pub unsafe extern "C" fn bd_evaluation_free(ev: *mut BdEvaluation) {
    if !ev.is_null() {
        drop(unsafe { Box::from_raw(ev) });
    }
}

/// Profits of CP, OPT and greedy as exact `n` or `n/d` strings. Any output
/// pointer may be null to skip it.
///
/// # Safety
/// `ev` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn bd_evaluation_profits(
    ev: *const BdEvaluation,
    v_cp: *mut *mut c_char,
    v_opt: *mut *mut c_char,
    v_greedy: *mut *mut c_char,
) -> BdStatus {
    guard(|| {
        let Some(ev) = (unsafe { ev.as_ref() }) else {
            return fail(BdStatus::NullPointer, "null evaluation");
        };
        let r = &ev.audit.report;
        for (value, out) in [(&r.v_cp, v_cp), (&r.v_opt, v_opt), (&ev.v_greedy, v_greedy)] {
            if !out.is_null() {
                let st = out_string(value.to_string(), out);
                if st != BdStatus::Ok {
                    return st;
                }
            }
        }
        BdStatus::Ok
    })
}

/// Writes 1 when `V_OPT ≤ R·V_CP` holds exactly, else 0.
///
/// # Safety
/// `ev` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bd_evaluation_within_r(ev: *const BdEvaluation, out: *mut i32) -> BdStatus {
    guard(|| match (unsafe { ev.as_ref() }, out.is_null()) {
        (Some(ev), false) => {
            unsafe { *out = i32::from(ev.audit.report.global_within_r) };
            BdStatus::Ok
        }
        _ => fail(BdStatus::NullPointer, "null argument"),
    })
}

/// Number of failed checks; 0 for null.
///
/// # Safety
/// `ev` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bd_evaluation_violations(ev: *const BdEvaluation) -> usize {
    unsafe { ev.as_ref() }.map_or(0, |e| e.audit.violations().count())
}

/// CP case trace, one JSON object per line.
///
/// # Safety
/// `ev` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bd_evaluation_trace_json(ev: *const BdEvaluation, out: *mut *mut c_char) -> BdStatus {
    guard(|| match (unsafe { ev.as_ref() }, out.is_null()) {
        (Some(ev), false) => out_string(ev.audit.run.trace.to_jsonl(), out),
        _ => fail(BdStatus::NullPointer, "null argument"),
    })
}

/// Interval report and every evaluated check as one JSON object.
///
/// # Safety
/// `ev` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bd_evaluation_report_json(ev: *const BdEvaluation, out: *mut *mut c_char) -> BdStatus {
    guard(|| match (unsafe { ev.as_ref() }, out.is_null()) {
        (Some(ev), false) => {
            let v = serde_json::json!({ "report": ev.audit.report, "checks": ev.audit.checks });
            out_string(v.to_string(), out)
        }
        _ => fail(BdStatus::NullPointer, "null argument"),
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn bd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Message for the last failing call on this thread, empty if none. Owned
/// by the library.
#[no_mangle]
pub extern "C" fn bd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn bd_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
