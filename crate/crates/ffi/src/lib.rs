//! C ABI over the `cpwl` crate.
//!
//! Functions return a [`CpwlStatus`]; on failure the message is available
//! from [`cpwl_last_error`] on the same thread. Strings handed out by the
//! library are released with [`cpwl_string_free`], function handles with
//! [`cpwl_function_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cpwl::cli::{self, Command, RunOptions};
use cpwl::cpwl_core::{CpwlFunction, Value};
use cpwl::ratlin::format_rational;
use cpwl::{Error, ErrorClass};

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CpwlStatus {
    Ok = 0,
    InvalidInput = 1,
    Precondition = 2,
    Internal = 3,
    NullPointer = 4,
    Panic = 5,
}

/// Opaque handle to a parsed CPWL function.
pub struct CpwlFunctionHandle {
    inner: CpwlFunction,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

type Failure = (CpwlStatus, String);

fn from_error(e: Error) -> Failure {
    let status = match e.class() {
        ErrorClass::InvalidInput => CpwlStatus::InvalidInput,
        ErrorClass::Precondition => CpwlStatus::Precondition,
        ErrorClass::Internal => CpwlStatus::Internal,
    };
    (status, e.to_string())
}

fn null(what: &str) -> Failure {
    (CpwlStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, recording any failure and converting panics.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CpwlStatus {
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err((CpwlStatus::Panic, format!("panic: {msg}")))
    });
    match outcome {
        Ok(()) => {
            set_error("");
            CpwlStatus::Ok
        }
        Err((status, msg)) => {
            set_error(&msg);
            status
        }
    }
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (CpwlStatus::InvalidInput, format!("{what} is not valid UTF-8")))
}

fn hand_out(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("interior NULs were replaced")
        .into_raw()
}

/// Parses a function document (a bare `{"pieces": ...}` object or a
/// `cpwl-query` document) into a new handle stored in `*out`.
///
/// # Safety
/// `json` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cpwl_function_from_json(
    json: *const c_char,
    out: *mut *mut CpwlFunctionHandle,
) -> CpwlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = read_str(json, "json")?;
        let theta = match cli::parse(text).map_err(from_error)? {
            cli::ProblemDocument::CpwlQuery(q) => q.theta,
            other => {
                return Err((
                    CpwlStatus::InvalidInput,
                    format!("expected a function document, got {}", other.kind()),
                ))
            }
        };
        *out = Box::into_raw(Box::new(CpwlFunctionHandle { inner: theta }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `handle` is null or came from [`cpwl_function_from_json`] and was not freed.
#[no_mangle]
pub unsafe extern "C" fn cpwl_function_free(handle: *mut CpwlFunctionHandle) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Ambient dimension `m` of the function.
///
/// # Safety
/// `handle` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cpwl_function_dim(handle: *const CpwlFunctionHandle, out: *mut usize) -> CpwlStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = h.inner.dim();
        Ok(())
    })
}

/// Evaluates at `point` (comma-separated rationals such as `"1/2,-1"`).
/// The value is written to `*out` as `"p/q"`, or `"+inf"` off the domain.
///
/// # Safety
/// `handle` is a live handle; `point` is NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cpwl_function_evaluate(
    handle: *const CpwlFunctionHandle,
    point: *const c_char,
    out: *mut *mut c_char,
) -> CpwlStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        let z = cli::parse_vector(read_str(point, "point")?).map_err(from_error)?;
        let text = match h.inner.evaluate(&z).map_err(from_error)? {
            Value::Finite(v) => format_rational(&v),
            Value::PlusInfinity => "+inf".into(),
        };
        *out = hand_out(text);
        Ok(())
    })
}

/// Runs a command-line subcommand (`"eval"`, `"d2"`, `"stability"`, ...)
/// on a problem document and writes the JSON report to `*out`. Query data
/// comes from the document.
///
/// # Safety
/// `command` and `document` are NUL-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn cpwl_run(
    command: *const c_char,
    document: *const c_char,
    seed: u64,
    out: *mut *mut c_char,
) -> CpwlStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let command: Command = read_str(command, "command")?.parse().map_err(from_error)?;
        let text = read_str(document, "document")?;
        let opts = RunOptions {
            seed,
            ..RunOptions::default()
        };
        *out = hand_out(cli::run(command, text, &opts).map_err(from_error)?);
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` is null or came from this library and was not freed.
#[no_mangle]
pub unsafe extern "C" fn cpwl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn cpwl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
