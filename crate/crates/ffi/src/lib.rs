//! C ABI surface over the simulator: opaque handles, integer status codes,
//! and JSON/string exports the caller frees explicitly. See
//! `include/aqm_sim.h` for the matching declarations.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use aqm_sim::model::AqmKind;
use aqm_sim::scenario_file;
use aqm_sim::sim::{run_scenario, RunOutput};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AqmSimStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    BadConfig = 3,
    NotRun = 4,
    RunFailed = 5,
}

/// Opaque simulation handle: a configured scenario and, after
/// `aqm_sim_run`, its results.
pub struct AqmSimHandle {
    cfg: aqm_sim::model::ScenarioConfig,
    output: Option<RunOutput>,
}

fn utf8<'a>(p: *const c_char) -> Result<&'a str, AqmSimStatus> {
    if p.is_null() {
        return Err(AqmSimStatus::NullArgument);
    }
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| AqmSimStatus::InvalidUtf8)
}

/// Build a handle from a scenario selector (preset numeral `I`..`XII` or a
/// scenario file path) and an AQM key (`ired-delay`, `ired-depth`,
/// `ired-ghost`, `codel`, `pi2`, `dualpi2`, `taildrop`). `scale` compresses
/// the load-phase timeline; pass 1.0 for the full run. On success `*out`
/// owns the handle; free it with `aqm_sim_free`.
///
/// # Safety
/// `selector` and `aqm_key` must be valid NUL-terminated strings and `out`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aqm_sim_new(
    selector: *const c_char,
    aqm_key: *const c_char,
    seed: u64,
    scale: f64,
    out: *mut *mut AqmSimHandle,
) -> AqmSimStatus {
    if out.is_null() {
        return AqmSimStatus::NullArgument;
    }
    unsafe { *out = ptr::null_mut() };
    let selector = match utf8(selector) {
        Ok(s) => s,
        Err(e) => return e,
    };
    let aqm_key = match utf8(aqm_key) {
        Ok(s) => s,
        Err(e) => return e,
    };
    let mut cfg = match scenario_file::load_selector(selector) {
        Ok(c) => c,
        Err(_) => return AqmSimStatus::BadConfig,
    };
    let kind = match AqmKind::from_key(aqm_key) {
        Ok(k) => k,
        Err(_) => return AqmSimStatus::BadConfig,
    };
    cfg.aqm = aqm_sim::model::AqmConfig::defaults(kind);
    cfg.seed = seed;
    if scale.is_finite() && scale > 0.0 && scale != 1.0 {
        cfg = cfg.scaled(scale);
    } else if !(scale.is_finite() && scale > 0.0) {
        return AqmSimStatus::BadConfig;
    }
    if cfg.validate().is_err() {
        return AqmSimStatus::BadConfig;
    }
    let handle = Box::new(AqmSimHandle { cfg, output: None });
    unsafe { *out = Box::into_raw(handle) };
    AqmSimStatus::Ok
}

/// Execute the scenario. Idempotent: running twice replaces the results.
///
/// # Safety
/// `h` must be a handle from `aqm_sim_new` that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn aqm_sim_run(h: *mut AqmSimHandle) -> AqmSimStatus {
    let Some(h) = (unsafe { h.as_mut() }) else {
        return AqmSimStatus::NullArgument;
    };
    match run_scenario(&h.cfg) {
        Ok(out) => {
            h.output = Some(out);
            AqmSimStatus::Ok
        }
        Err(_) => AqmSimStatus::RunFailed,
    }
}

/// Run summary as a JSON document. `*out` is owned by the caller; release
/// it with `aqm_sim_string_free`.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aqm_sim_summary_json(
    h: *const AqmSimHandle,
    out: *mut *mut c_char,
) -> AqmSimStatus {
    if out.is_null() {
        return AqmSimStatus::NullArgument;
    }
    unsafe { *out = ptr::null_mut() };
    let Some(h) = (unsafe { h.as_ref() }) else {
        return AqmSimStatus::NullArgument;
    };
    let Some(output) = &h.output else {
        return AqmSimStatus::NotRun;
    };
    let json = match serde_json::to_string_pretty(&output.summary) {
        Ok(j) => j,
        Err(_) => return AqmSimStatus::RunFailed,
    };
    // JSON never contains interior NULs
    let c = CString::new(json).expect("no interior NUL");
    unsafe { *out = c.into_raw() };
    AqmSimStatus::Ok
}

/// Event-stream hash of the finished run, for determinism checks across
/// processes. Caller frees with `aqm_sim_string_free`.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aqm_sim_trace_hash(
    h: *const AqmSimHandle,
    out: *mut *mut c_char,
) -> AqmSimStatus {
    if out.is_null() {
        return AqmSimStatus::NullArgument;
    }
    unsafe { *out = ptr::null_mut() };
    let Some(h) = (unsafe { h.as_ref() }) else {
        return AqmSimStatus::NullArgument;
    };
    let Some(output) = &h.output else {
        return AqmSimStatus::NotRun;
    };
    let c = CString::new(output.summary.trace_hash.clone()).expect("hex string");
    unsafe { *out = c.into_raw() };
    AqmSimStatus::Ok
}

/// Jain fairness index of phase `phase` (0-based). Fails with `NotRun`
/// before `aqm_sim_run` and `BadConfig` for an out-of-range phase.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aqm_sim_jain_phase(
    h: *const AqmSimHandle,
    phase: usize,
    out: *mut f64,
) -> AqmSimStatus {
    if out.is_null() {
        return AqmSimStatus::NullArgument;
    }
    let Some(h) = (unsafe { h.as_ref() }) else {
        return AqmSimStatus::NullArgument;
    };
    let Some(output) = &h.output else {
        return AqmSimStatus::NotRun;
    };
    match output.summary.jain_per_phase.get(phase) {
        Some(&j) => {
            unsafe { *out = j };
            AqmSimStatus::Ok
        }
        None => AqmSimStatus::BadConfig,
    }
}

/// Release a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn aqm_sim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Release a handle. NULL is a no-op.
///
/// # Safety
/// `h` must come from `aqm_sim_new` and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn aqm_sim_free(h: *mut AqmSimHandle) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}
