//! C ABI over the gazebench library: opaque handles, integer status codes,
//! and UTF-8 JSON strings for structured data.
//!
//! Every function returns a [`GbStatus`]; outputs are written through out
//! pointers. Strings returned through `char **` are heap-allocated and
//! must be released with [`gb_string_free`]. A thread-local message
//! describing the most recent error is available via
//! [`gb_last_error_message`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use libc::c_char;

use gazebench_core::bench::report::{masked_results_json, write_rank_csv, write_results_json};
use gazebench_core::bench::suite::{
    generate_suite, load_suite, run_suite, write_suite, Suite, SuiteKind,
};
use gazebench_core::bench::{run_episode, BenchResults};
use gazebench_core::gaze::ControllerKind;
use gazebench_core::Error;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error message").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Status codes returned by every FFI entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GbStatus {
    GbOk = 0,
    GbNullPointer = 1,
    GbInvalidUtf8 = 2,
    GbInvalidArgument = 3,
    GbNoPath = 4,
    GbNoFeasibleTask = 5,
    GbIoError = 6,
    GbJsonError = 7,
    GbSimulationError = 8,
}

fn status_of(e: &Error) -> GbStatus {
    match e {
        Error::InvalidConfig(_) => GbStatus::GbInvalidArgument,
        Error::NoPath => GbStatus::GbNoPath,
        Error::NoFeasibleTask { .. } => GbStatus::GbNoFeasibleTask,
        Error::Io(_) => GbStatus::GbIoError,
        Error::Json(_) => GbStatus::GbJsonError,
        _ => GbStatus::GbSimulationError,
    }
}

fn fail(e: Error) -> GbStatus {
    let s = status_of(&e);
    set_last_error(e.to_string());
    s
}

/// Head controllers addressable over the ABI.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GbController {
    GbFixed = 0,
    GbPanning = 1,
    GbLookAhead = 2,
    GbOptimised = 3,
}

impl From<GbController> for ControllerKind {
    fn from(c: GbController) -> Self {
        match c {
            GbController::GbFixed => ControllerKind::Fixed,
            GbController::GbPanning => ControllerKind::Panning,
            GbController::GbLookAhead => ControllerKind::LookAhead,
            GbController::GbOptimised => ControllerKind::Optimised,
        }
    }
}

/// Opaque handle to a loaded benchmark suite.
pub struct GbSuite {
    inner: Suite,
}

/// Opaque handle to a benchmark result set.
pub struct GbResults {
    inner: BenchResults,
}

unsafe fn cstr_arg<'a>(p: *const c_char) -> Result<&'a str, GbStatus> {
    if p.is_null() {
        set_last_error("null pointer argument".into());
        return Err(GbStatus::GbNullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_last_error("argument is not valid UTF-8".into());
        GbStatus::GbInvalidUtf8
    })
}

fn string_out(s: String, out: *mut *mut c_char) -> GbStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            GbStatus::GbOk
        }
        Err(_) => {
            set_last_error("output contained an interior NUL byte".into());
            GbStatus::GbJsonError
        }
    }
}

/// Library version as a static string; never freed by the caller.
#[no_mangle]
pub extern "C" fn gb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent error on this thread, or NULL when none.
/// The pointer stays valid until the next failing call on the thread.
#[no_mangle]
pub extern "C" fn gb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned through a `char **` out parameter.
///
/// # Safety
/// `s` must be a pointer previously returned by this library and not yet
/// freed; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn gb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Generate a canonical suite (`"2d-small"` or `"3d-lite-dynamic"`) into
/// a directory.
///
/// # Safety
/// `name` and `dir` must be valid NUL-terminated UTF-8 strings.
#[no_mangle]
pub unsafe extern "C" fn gb_suite_generate(
    name: *const c_char,
    seed: u64,
    dir: *const c_char,
) -> GbStatus {
    let name = match cstr_arg(name) {
        Ok(s) => s,
        Err(st) => return st,
    };
    let dir = match cstr_arg(dir) {
        Ok(s) => s,
        Err(st) => return st,
    };
    let kind: SuiteKind = match name.parse() {
        Ok(k) => k,
        Err(e) => return fail(e),
    };
    match generate_suite(kind, seed).and_then(|s| write_suite(&s, Path::new(dir))) {
        Ok(()) => GbStatus::GbOk,
        Err(e) => fail(e),
    }
}

/// Load a suite directory into an opaque handle.
///
/// # Safety
/// `dir` must be a valid NUL-terminated UTF-8 string and `out` a valid
/// pointer; on success the caller owns the handle and must release it
/// with [`gb_suite_free`].
#[no_mangle]
pub unsafe extern "C" fn gb_suite_load(dir: *const c_char, out: *mut *mut GbSuite) -> GbStatus {
    if out.is_null() {
        set_last_error("null out pointer".into());
        return GbStatus::GbNullPointer;
    }
    let dir = match cstr_arg(dir) {
        Ok(s) => s,
        Err(st) => return st,
    };
    match load_suite(Path::new(dir)) {
        Ok(suite) => {
            *out = Box::into_raw(Box::new(GbSuite { inner: suite }));
            GbStatus::GbOk
        }
        Err(e) => fail(e),
    }
}

/// Release a suite handle. NULL is ignored.
///
/// # Safety
/// `suite` must come from [`gb_suite_load`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gb_suite_free(suite: *mut GbSuite) {
    if !suite.is_null() {
        drop(Box::from_raw(suite));
    }
}

/// Number of tasks in a loaded suite.
///
/// # Safety
/// `suite` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gb_suite_task_count(suite: *const GbSuite, out: *mut usize) -> GbStatus {
    if suite.is_null() || out.is_null() {
        set_last_error("null pointer argument".into());
        return GbStatus::GbNullPointer;
    }
    *out = (*suite).inner.tasks.len();
    GbStatus::GbOk
}

/// Run a single episode and return its record as a JSON string.
///
/// # Safety
/// `suite` must be a live handle and `json_out` a valid pointer; the
/// returned string must be freed with [`gb_string_free`].
#[no_mangle]
pub unsafe extern "C" fn gb_run_episode(
    suite: *const GbSuite,
    task_index: usize,
    controller: GbController,
    json_out: *mut *mut c_char,
) -> GbStatus {
    if suite.is_null() || json_out.is_null() {
        set_last_error("null pointer argument".into());
        return GbStatus::GbNullPointer;
    }
    let suite = &(*suite).inner;
    let Some(task) = suite.tasks.get(task_index) else {
        set_last_error(format!(
            "task index {task_index} out of range (suite has {})",
            suite.tasks.len()
        ));
        return GbStatus::GbInvalidArgument;
    };
    let env = &suite.environments[task.env_index];
    match run_episode(env, &task.task, controller.into(), &suite.config, &task.id)
        .and_then(|r| Ok(serde_json::to_string_pretty(&r)?))
    {
        Ok(json) => string_out(json, json_out),
        Err(e) => fail(e),
    }
}

/// Run a set of controllers over every task, returning the results JSON.
/// `controllers_csv` is a comma-separated list such as
/// `"optimised,fixed,panning,lookahead"`.
///
/// # Safety
/// `suite` must be a live handle; `controllers_csv` a valid NUL-terminated
/// UTF-8 string; `json_out` a valid pointer. The returned string must be
/// freed with [`gb_string_free`].
#[no_mangle]
pub unsafe extern "C" fn gb_run_suite(
    suite: *const GbSuite,
    controllers_csv: *const c_char,
    json_out: *mut *mut c_char,
) -> GbStatus {
    if suite.is_null() || json_out.is_null() {
        set_last_error("null pointer argument".into());
        return GbStatus::GbNullPointer;
    }
    let csv = match cstr_arg(controllers_csv) {
        Ok(s) => s,
        Err(st) => return st,
    };
    let controllers: Result<Vec<ControllerKind>, Error> = csv
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<ControllerKind>())
        .collect();
    let controllers = match controllers {
        Ok(c) if !c.is_empty() => c,
        Ok(_) => {
            set_last_error("no controllers requested".into());
            return GbStatus::GbInvalidArgument;
        }
        Err(e) => return fail(e),
    };
    match run_suite(&(*suite).inner, &controllers, None)
        .and_then(|r| Ok(serde_json::to_string_pretty(&r)?))
    {
        Ok(json) => string_out(json, json_out),
        Err(e) => fail(e),
    }
}

/// Parse a results JSON string into an opaque handle.
///
/// # Safety
/// `json` must be a valid NUL-terminated UTF-8 string and `out` a valid
/// pointer; the handle must be released with [`gb_results_free`].
#[no_mangle]
pub unsafe extern "C" fn gb_results_parse(
    json: *const c_char,
    out: *mut *mut GbResults,
) -> GbStatus {
    if out.is_null() {
        set_last_error("null out pointer".into());
        return GbStatus::GbNullPointer;
    }
    let json = match cstr_arg(json) {
        Ok(s) => s,
        Err(st) => return st,
    };
    match serde_json::from_str::<BenchResults>(json) {
        Ok(r) => {
            *out = Box::into_raw(Box::new(GbResults { inner: r }));
            GbStatus::GbOk
        }
        Err(e) => fail(Error::Json(e)),
    }
}

/// Release a results handle. NULL is ignored.
///
/// # Safety
/// `results` must come from [`gb_results_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gb_results_free(results: *mut GbResults) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}

/// Write results to a results JSON file and its rank table to a CSV file.
/// Either path may be NULL to skip that output.
///
/// # Safety
/// `results` must be a live handle; non-NULL paths must be valid
/// NUL-terminated UTF-8 strings.
#[no_mangle]
pub unsafe extern "C" fn gb_results_write(
    results: *const GbResults,
    results_json_path: *const c_char,
    rank_csv_path: *const c_char,
) -> GbStatus {
    if results.is_null() {
        set_last_error("null results handle".into());
        return GbStatus::GbNullPointer;
    }
    let r = &(*results).inner;
    if !results_json_path.is_null() {
        let path = match cstr_arg(results_json_path) {
            Ok(s) => s,
            Err(st) => return st,
        };
        if let Err(e) = write_results_json(r, Path::new(path)) {
            return fail(e);
        }
    }
    if !rank_csv_path.is_null() {
        let path = match cstr_arg(rank_csv_path) {
            Ok(s) => s,
            Err(st) => return st,
        };
        if let Err(e) = write_rank_csv(r, Path::new(path)) {
            return fail(e);
        }
    }
    GbStatus::GbOk
}

/// Results JSON with wall-clock latency fields masked, for determinism
/// comparisons across runs.
///
/// # Safety
/// `results` must be a live handle and `json_out` a valid pointer; the
/// returned string must be freed with [`gb_string_free`].
#[no_mangle]
pub unsafe extern "C" fn gb_results_masked_json(
    results: *const GbResults,
    json_out: *mut *mut c_char,
) -> GbStatus {
    if results.is_null() || json_out.is_null() {
        set_last_error("null pointer argument".into());
        return GbStatus::GbNullPointer;
    }
    match masked_results_json(&(*results).inner) {
        Ok(json) => string_out(json, json_out),
        Err(e) => fail(e),
    }
}
