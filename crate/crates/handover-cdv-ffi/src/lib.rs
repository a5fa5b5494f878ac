//! C ABI for the handover verification testbench.
//!
//! The surface mirrors the CLI verbs: run a campaign from a config file,
//! check tuple reachability on the protocol model, and read a coverage
//! report through an opaque handle. Every call returns a status code;
//! `hcdv_last_error` retrieves the message of the most recent failure on
//! the calling thread.

use std::cell::RefCell;
use std::ffi::{CStr, CString, c_char};
use std::path::{Path, PathBuf};

use handover_cdv::campaign::{check_model_lines, read_report, run_campaign};
use handover_cdv::config::load_config;
use handover_cdv::coverage::CoverageReport;
use handover_cdv::mbt::CheckConfig;
use handover_cdv::monitors::RequirementId;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcdvStatus {
    /// The call succeeded.
    Ok = 0,
    /// The campaign ran but at least one assertion monitor failed.
    MonitorFailed = 1,
    /// The call failed; see `hcdv_last_error`.
    Error = 2,
    /// A pointer or index argument was invalid.
    InvalidArgument = 3,
}

/// Number of cross-product tuples reported by `hcdv_check_model`.
pub const HCDV_TUPLE_COUNT: usize = 33;

/// Number of requirement monitors.
pub const HCDV_REQUIREMENT_COUNT: usize = 11;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) -> HcdvStatus {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(message).unwrap_or_default();
    });
    HcdvStatus::Error
}

/// Opaque handle to a loaded coverage report.
pub struct HcdvReport {
    report: CoverageReport,
}

unsafe fn path_arg(ptr: *const c_char) -> Option<PathBuf> {
    if ptr.is_null() {
        return None;
    }
    let s = unsafe { CStr::from_ptr(ptr) };
    Some(PathBuf::from(s.to_string_lossy().into_owned()))
}

/// Library version as a static NUL-terminated string.
#[unsafe(no_mangle)]
pub extern "C" fn hcdv_version() -> *const c_char {
    const VERSION: &CStr = c"handover-cdv 0.1.0";
    VERSION.as_ptr()
}

/// Copies the last error message of this thread into `buffer` (truncated,
/// always NUL-terminated when `length > 0`) and returns the full message
/// length in bytes.
///
/// # Safety
/// `buffer` must point to at least `length` writable bytes, or be null.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn hcdv_last_error(buffer: *mut c_char, length: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buffer.is_null() && length > 0 {
            let n = bytes.len().min(length - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buffer, n);
                *buffer.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Runs a full campaign from a key-value config file.
///
/// `out_dir` overrides the config's output directory when non-null;
/// `override_seed` replaces the config's master seed when `use_seed` is
/// nonzero; `jobs` overrides the worker count when nonzero. Returns `Ok`
/// when every monitor passed, `MonitorFailed` when the campaign ran but
/// found violations.
///
/// # Safety
/// `config_path` must be a valid NUL-terminated string; `out_dir` must be
/// one or null.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn hcdv_run_campaign(
    config_path: *const c_char,
    out_dir: *const c_char,
    use_seed: u8,
    override_seed: u64,
    jobs: u32,
) -> HcdvStatus {
    let Some(config_path) = (unsafe { path_arg(config_path) }) else {
        return HcdvStatus::InvalidArgument;
    };
    let mut cfg = match load_config(&config_path) {
        Ok(c) => c,
        Err(e) => return set_error(e.to_string()),
    };
    if let Some(dir) = unsafe { path_arg(out_dir) } {
        cfg.out_dir = dir;
    }
    if use_seed != 0 {
        cfg.master_seed = Some(override_seed);
    }
    if jobs > 0 {
        cfg.jobs = jobs as usize;
    }
    match run_campaign(&cfg) {
        Ok(outcome) if outcome.any_failed => HcdvStatus::MonitorFailed,
        Ok(_) => HcdvStatus::Ok,
        Err(e) => set_error(e.to_string()),
    }
}

/// Checks reachability of all 33 cross-product tuples on the protocol
/// model and writes one flag per tuple (1 reachable, 0 not) in the
/// canonical universe order.
///
/// # Safety
/// `reachable_out` must point to at least `length` writable bytes.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn hcdv_check_model(reachable_out: *mut u8, length: usize) -> HcdvStatus {
    if reachable_out.is_null() || length < HCDV_TUPLE_COUNT {
        return HcdvStatus::InvalidArgument;
    }
    match check_model_lines(&CheckConfig::default()) {
        Ok((_, flags)) => {
            for (i, f) in flags.iter().enumerate() {
                unsafe { *reachable_out.add(i) = *f as u8 };
            }
            HcdvStatus::Ok
        }
        Err(e) => set_error(e.to_string()),
    }
}

/// Loads `report.json` from a campaign directory. Returns null on failure
/// (see `hcdv_last_error`). Free with `hcdv_report_close`.
///
/// # Safety
/// `campaign_dir` must be a valid NUL-terminated string.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn hcdv_report_open(campaign_dir: *const c_char) -> *mut HcdvReport {
    let Some(dir) = (unsafe { path_arg(campaign_dir) }) else {
        return std::ptr::null_mut();
    };
    match read_report(Path::new(&dir)) {
        Ok(report) => Box::into_raw(Box::new(HcdvReport { report })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Releases a report handle.
///
/// # Safety
/// `handle` must come from `hcdv_report_open` and not be used afterwards.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn hcdv_report_close(handle: *mut HcdvReport) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Total and conclusive run counts of the report.
///
/// # Safety
/// `handle` must be a live report handle; out pointers must be writable
/// or null.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn hcdv_report_runs(
    handle: *const HcdvReport,
    total_out: *mut u32,
    conclusive_out: *mut u32,
) -> HcdvStatus {
    let Some(r) = (unsafe { handle.as_ref() }) else {
        return HcdvStatus::InvalidArgument;
    };
    unsafe {
        if !total_out.is_null() {
            *total_out = r.report.runs_total;
        }
        if !conclusive_out.is_null() {
            *conclusive_out = r.report.runs_conclusive;
        }
    }
    HcdvStatus::Ok
}

/// Covered/passed/failed counters for one requirement, indexed in the
/// fixed order R1, R2, R3, R4, R5, R6, R7, R8a, R8b, R8c, R8d.
///
/// # Safety
/// `handle` must be a live report handle; out pointers must be writable
/// or null.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn hcdv_report_requirement(
    handle: *const HcdvReport,
    index: u32,
    covered_out: *mut u32,
    passed_out: *mut u32,
    failed_out: *mut u32,
) -> HcdvStatus {
    let Some(r) = (unsafe { handle.as_ref() }) else {
        return HcdvStatus::InvalidArgument;
    };
    let Some(req) = RequirementId::ALL.get(index as usize) else {
        return HcdvStatus::InvalidArgument;
    };
    let c = r.report.requirement(*req);
    unsafe {
        if !covered_out.is_null() {
            *covered_out = c.covered;
        }
        if !passed_out.is_null() {
            *passed_out = c.passed;
        }
        if !failed_out.is_null() {
            *failed_out = c.failed;
        }
    }
    HcdvStatus::Ok
}

/// Hit count of one cross-product tuple in the canonical universe order.
///
/// # Safety
/// `handle` must be a live report handle; `hits_out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn hcdv_report_tuple_hits(
    handle: *const HcdvReport,
    index: u32,
    hits_out: *mut u32,
) -> HcdvStatus {
    let Some(r) = (unsafe { handle.as_ref() }) else {
        return HcdvStatus::InvalidArgument;
    };
    if hits_out.is_null() || index as usize >= HCDV_TUPLE_COUNT {
        return HcdvStatus::InvalidArgument;
    }
    unsafe { *hits_out = r.report.tuple_hits[index as usize] };
    HcdvStatus::Ok
}

/// Statement coverage of the report: hit and total counts.
///
/// # Safety
/// `handle` must be a live report handle; out pointers must be writable
/// or null.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn hcdv_report_statements(
    handle: *const HcdvReport,
    hit_out: *mut u32,
    total_out: *mut u32,
) -> HcdvStatus {
    let Some(r) = (unsafe { handle.as_ref() }) else {
        return HcdvStatus::InvalidArgument;
    };
    unsafe {
        if !hit_out.is_null() {
            *hit_out = r.report.statements_hit_count() as u32;
        }
        if !total_out.is_null() {
            *total_out = r.report.statements_hit.len() as u32;
        }
    }
    HcdvStatus::Ok
}
