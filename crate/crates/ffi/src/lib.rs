//! C ABI over `monodromy-core`.
//!
//! Conventions:
//! - Every fallible function returns a [`MonoStatus`]. On failure,
//!   [`mono_last_error`] describes the error on the calling thread.
//! - Systems and probe results are opaque handles. Release them with their
//!   `_free` function.
//! - Strings returned by the library must be released with
//!   [`mono_string_free`].
//! - Matrices are row-major arrays of [`MonoComplex`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use monodromy_core::config::RunConfig;
use monodromy_core::expr::{SystemDef, SystemSource};
use monodromy_core::linalg::CMatrix;
use monodromy_core::monodromy::{probe, Classification, ProbeOptions, ProbeOutcome};
use monodromy_core::obstruction::commutator;
use monodromy_core::report::execute;
use monodromy_core::systems;
use num_complex::Complex64;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Unknown catalog name or malformed system text.
    System = 3,
    /// Input lengths disagree with the system or with each other.
    Dimension = 4,
    /// Invalid probe geometry or options.
    Probe = 5,
    /// Invalid run configuration.
    Config = 6,
    /// Output buffer too small.
    BufferTooSmall = 7,
    /// The handle holds no such data (for example no matrix).
    Unavailable = 8,
    /// A Rust panic was caught at the boundary.
    Internal = 9,
}

/// Probe classification codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonoClassification {
    Trivial = 0,
    Generator = 1,
    NonReturning = 2,
    Aborted = 3,
    Skipped = 4,
}

impl From<Classification> for MonoClassification {
    fn from(c: Classification) -> Self {
        match c {
            Classification::Trivial => MonoClassification::Trivial,
            Classification::Generator => MonoClassification::Generator,
            Classification::NonReturning => MonoClassification::NonReturning,
            Classification::Aborted => MonoClassification::Aborted,
            Classification::Skipped => MonoClassification::Skipped,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MonoComplex {
    pub re: f64,
    pub im: f64,
}

impl From<MonoComplex> for Complex64 {
    fn from(z: MonoComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

impl From<Complex64> for MonoComplex {
    fn from(z: Complex64) -> Self {
        MonoComplex { re: z.re, im: z.im }
    }
}

/// Opaque system handle.
pub struct MonoSystem(SystemDef);

/// Opaque probe result handle.
pub struct MonoProbe(ProbeOutcome);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

type Fallible = Result<(), (MonoStatus, String)>;

/// Run `f`, recording its error message and converting panics.
fn guard(f: impl FnOnce() -> Fallible) -> MonoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MonoStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MonoStatus::Internal
        }
    }
}

fn fail<T>(status: MonoStatus, msg: impl Into<String>) -> Result<T, (MonoStatus, String)> {
    Err((status, msg.into()))
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (MonoStatus, String)> {
    if s.is_null() {
        return fail(MonoStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(s)
        .to_str()
        .or_else(|_| fail(MonoStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn read_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (MonoStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(MonoStatus::NullPointer, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn check_out<T>(out: *mut T, what: &str) -> Fallible {
    if out.is_null() {
        return fail(MonoStatus::NullPointer, format!("{what} is null"));
    }
    Ok(())
}

/// Message for the last failure on this thread, or null. Valid until the next
/// call into the library on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn mono_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Build a catalog system with default parameters.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mono_system_from_catalog(name: *const c_char, out: *mut *mut MonoSystem) -> MonoStatus {
    guard(|| {
        check_out(out, "out")?;
        let name = read_str(name, "name")?;
        let sys = systems::build(name, &[]).or_else(|e| fail(MonoStatus::System, e.to_string()))?;
        *out = Box::into_raw(Box::new(MonoSystem(sys)));
        Ok(())
    })
}

/// Build a system from DSL text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mono_system_from_dsl(text: *const c_char, out: *mut *mut MonoSystem) -> MonoStatus {
    guard(|| {
        check_out(out, "out")?;
        let text = read_str(text, "text")?;
        let sys = SystemSource::parse(text)
            .and_then(|s| s.build(&[]))
            .or_else(|e| fail(MonoStatus::System, e.to_string()))?;
        *out = Box::into_raw(Box::new(MonoSystem(sys)));
        Ok(())
    })
}

/// State dimension, or 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mono_system_dim(sys: *const MonoSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.0.dim())
}

/// # Safety
/// `sys` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mono_system_free(sys: *mut MonoSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Probe `candidate` with a counterclockwise loop based at `t0`.
///
/// `radius <= 0` selects the default radius. `x0` holds `x0_len` entries,
/// which must equal the system dimension.
///
/// # Safety
/// Pointers must be valid for the stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mono_probe(
    sys: *const MonoSystem,
    x0: *const MonoComplex,
    x0_len: usize,
    t0: MonoComplex,
    candidate: MonoComplex,
    radius: f64,
    out: *mut *mut MonoProbe,
) -> MonoStatus {
    guard(|| {
        check_out(out, "out")?;
        let Some(sys) = sys.as_ref() else {
            return fail(MonoStatus::NullPointer, "sys is null");
        };
        let x0: Vec<Complex64> = read_slice(x0, x0_len, "x0")?.iter().map(|&z| z.into()).collect();
        if x0.len() != sys.0.dim() {
            return fail(
                MonoStatus::Dimension,
                format!("x0 has {} entries, system has dimension {}", x0.len(), sys.0.dim()),
            );
        }
        let opts = ProbeOptions {
            radius: (radius > 0.0).then_some(radius),
            ..Default::default()
        };
        let outcome = probe(&sys.0, &x0, t0.into(), candidate.into(), &opts)
            .or_else(|e| fail(MonoStatus::Probe, e.to_string()))?;
        *out = Box::into_raw(Box::new(MonoProbe(outcome)));
        Ok(())
    })
}

/// # Safety
/// `p` must be a live handle from [`mono_probe`].
#[no_mangle]
pub unsafe extern "C" fn mono_probe_classification(p: *const MonoProbe) -> MonoClassification {
    (*p).0.classification.into()
}

/// Laps used before `x` returned, or the last lap attempted.
///
/// # Safety
/// `p` must be a live handle from [`mono_probe`].
#[no_mangle]
pub unsafe extern "C" fn mono_probe_traversals(p: *const MonoProbe) -> u32 {
    (*p).0.traversals_used
}

/// Copy the accumulated loop matrix (row-major, `dim*dim` entries) into
/// `buf`. Fails with `Unavailable` when `x` did not return.
///
/// # Safety
/// `p` must be a live handle; `buf` must hold `buf_len` entries.
#[no_mangle]
pub unsafe extern "C" fn mono_probe_matrix(p: *const MonoProbe, buf: *mut MonoComplex, buf_len: usize) -> MonoStatus {
    guard(|| {
        let Some(p) = p.as_ref() else {
            return fail(MonoStatus::NullPointer, "probe is null");
        };
        let Some(m) = &p.0.matrix else {
            return fail(MonoStatus::Unavailable, "probe produced no matrix");
        };
        write_matrix(m, buf, buf_len)
    })
}

unsafe fn write_matrix(m: &CMatrix, buf: *mut MonoComplex, buf_len: usize) -> Fallible {
    let n = m.nrows();
    if buf_len < n * n {
        return fail(MonoStatus::BufferTooSmall, format!("need {} entries, got {buf_len}", n * n));
    }
    check_out(buf, "buf")?;
    let out = std::slice::from_raw_parts_mut(buf, n * n);
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = m[(i, j)].into();
        }
    }
    Ok(())
}

/// # Safety
/// `p` must be null or a handle from [`mono_probe`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mono_probe_free(p: *mut MonoProbe) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// `out = a·b − b·a` for row-major `n×n` matrices.
///
/// # Safety
/// `a`, `b` and `out` must each hold `n*n` entries.
#[no_mangle]
pub unsafe extern "C" fn mono_commutator(
    a: *const MonoComplex,
    b: *const MonoComplex,
    n: usize,
    out: *mut MonoComplex,
) -> MonoStatus {
    guard(|| {
        let read = |p: *const MonoComplex, what: &str| -> Result<CMatrix, (MonoStatus, String)> {
            let s = read_slice(p, n * n, what)?;
            Ok(CMatrix::from_fn(n, n, |i, j| s[i * n + j].into()))
        };
        let c = commutator(&read(a, "a")?, &read(b, "b")?).or_else(|e| fail(MonoStatus::Dimension, e.to_string()))?;
        write_matrix(&c, out, n * n)
    })
}

/// Run a JSON run configuration and return the JSON report in `*out`.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` writable. Free the
/// result with [`mono_string_free`].
#[no_mangle]
pub unsafe extern "C" fn mono_run_json(config_json: *const c_char, out: *mut *mut c_char) -> MonoStatus {
    guard(|| {
        check_out(out, "out")?;
        let text = read_str(config_json, "config_json")?;
        let value: serde_json::Value =
            serde_json::from_str(text).or_else(|e| fail(MonoStatus::Config, format!("invalid JSON: {e}")))?;
        let config = RunConfig::from_value(value).or_else(|e| fail(MonoStatus::Config, e.to_string()))?;
        let report = execute(config).or_else(|e| fail(MonoStatus::Config, e.to_string()))?;
        let json = report.to_json().or_else(|e| fail(MonoStatus::Internal, e.to_string()))?;
        *out = CString::new(json).or_else(|e| fail(MonoStatus::Internal, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mono_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
