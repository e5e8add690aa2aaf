//! C interface: opaque handles, integer status codes, and a per-thread error message.
//!
//! Every function returns a status code; results come back through out-pointers.
//! Handles returned by this library must be released with the matching `*_free`.

use bilinear_lab::cli::expr;
use bilinear_lab::dynamics::{integrate, ControlSchedule, FlowConfig, Model, ProfileSet};
use bilinear_lab::local_exact::{global_to_constant, GlobalConfig, GlobalReport};
use bilinear_lab::{Error, FourierField};
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

pub const BILAB_OK: i32 = 0;
pub const BILAB_NULL_POINTER: i32 = 1;
pub const BILAB_CONFIG_ERROR: i32 = 2;
pub const BILAB_NUMERIC_ERROR: i32 = 3;
pub const BILAB_TOLERANCE_NOT_MET: i32 = 4;
pub const BILAB_PANIC: i32 = 5;
pub const BILAB_BUFFER_TOO_SMALL: i32 = 6;

pub const BILAB_MODEL_KS: i32 = 0;
pub const BILAB_MODEL_CH: i32 = 1;

/// Real field on the torus, stored as a truncated Fourier series.
pub struct BilabField(FourierField);

/// Result of the two-phase steering to a constant.
pub struct BilabGlobalReport(GlobalReport);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status(e: &Error) -> i32 {
    match e.exit_code() {
        2 => BILAB_CONFIG_ERROR,
        4 => BILAB_TOLERANCE_NOT_MET,
        _ => BILAB_NUMERIC_ERROR,
    }
}

fn guard(f: impl FnOnce() -> Result<(), i32>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            BILAB_OK
        }
        Ok(Err(code)) => code,
        Err(_) => {
            set_error("internal panic".into());
            BILAB_PANIC
        }
    }
}

fn fail(e: Error) -> i32 {
    set_error(e.to_string());
    status(&e)
}

fn null(what: &str) -> i32 {
    set_error(format!("{what} is null"));
    BILAB_NULL_POINTER
}

fn model(m: i32) -> Result<Model, i32> {
    match m {
        BILAB_MODEL_KS => Ok(Model::Ks),
        BILAB_MODEL_CH => Ok(Model::Ch),
        _ => Err(fail(Error::ConfigError(format!("unknown model code {m}")))),
    }
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Version string of the library (static, do not free).
#[no_mangle]
pub extern "C" fn bilab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated).
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bilab_last_error(buf: *mut c_char, len: usize) -> i32 {
    if buf.is_null() {
        return BILAB_NULL_POINTER;
    }
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if msg.len() + 1 > len {
            return BILAB_BUFFER_TOO_SMALL;
        }
        std::ptr::copy_nonoverlapping(msg.as_ptr().cast(), buf, msg.len());
        *buf.add(msg.len()) = 0;
        BILAB_OK
    })
}

/// Field from cosine and sine coefficients of modes 0..n (the sine entry of mode 0 is ignored).
///
/// # Safety
/// `cos` and `sin` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bilab_field_from_cos_sin(
    k: usize,
    grid: usize,
    cos: *const f64,
    sin: *const f64,
    n: usize,
    out: *mut *mut BilabField,
) -> i32 {
    guard(|| {
        if cos.is_null() || sin.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        if n > k + 1 || grid < 2 * k + 1 {
            return Err(fail(Error::ConfigError(format!("need n ≤ k + 1 and grid > 2k (n {n}, k {k}, grid {grid})"))));
        }
        let (c, s) = (std::slice::from_raw_parts(cos, n), std::slice::from_raw_parts(sin, n));
        let terms: Vec<(usize, f64, f64)> = (0..n).map(|j| (j, c[j], if j == 0 { 0.0 } else { s[j] })).collect();
        write_out(out, BilabField(FourierField::from_cos_sin(k, grid, &terms)));
        Ok(())
    })
}

/// Field from an expression such as `"2 + 0.5 sin(x)"`, projected onto modes |j| ≤ k.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bilab_field_from_expr(
    text: *const c_char,
    k: usize,
    grid: usize,
    out: *mut *mut BilabField,
) -> i32 {
    guard(|| {
        if text.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let s = CStr::from_ptr(text).to_str().map_err(|_| fail(Error::Parse("expression is not UTF-8".into())))?;
        if grid < 2 * k + 1 {
            return Err(fail(Error::ConfigError(format!("grid {grid} must exceed 2k"))));
        }
        let f = expr::field(s, k, grid).map_err(fail)?;
        write_out(out, BilabField(f));
        Ok(())
    })
}

/// Number of grid points of the field.
///
/// # Safety
/// `field` must be a live handle; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bilab_field_grid_len(field: *const BilabField, len: *mut usize) -> i32 {
    guard(|| {
        let f = field.as_ref().ok_or_else(|| null("field"))?;
        let len = len.as_mut().ok_or_else(|| null("len"))?;
        *len = f.0.grid_size();
        Ok(())
    })
}

/// Writes u(x_j), x_j = 2πj/grid, into `buf`.
///
/// # Safety
/// `field` must be a live handle; `buf` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bilab_field_grid_values(field: *const BilabField, buf: *mut f64, len: usize) -> i32 {
    guard(|| {
        let f = field.as_ref().ok_or_else(|| null("field"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let vals = f.0.grid_values();
        if len < vals.len() {
            set_error(format!("buffer holds {len} values, field has {}", vals.len()));
            return Err(BILAB_BUFFER_TOO_SMALL);
        }
        std::slice::from_raw_parts_mut(buf, vals.len()).copy_from_slice(&vals);
        Ok(())
    })
}

/// L² norm over the torus.
///
/// # Safety
/// `field` must be a live handle; `norm` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bilab_field_l2_norm(field: *const BilabField, norm: *mut f64) -> i32 {
    guard(|| {
        let f = field.as_ref().ok_or_else(|| null("field"))?;
        *norm.as_mut().ok_or_else(|| null("norm"))? = f.0.l2_norm();
        Ok(())
    })
}

/// # Safety
/// `field` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bilab_field_free(field: *mut BilabField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Integrates to time `t` under the constant control p·(1, cos x, sin x).
///
/// # Safety
/// `u0` must be a live handle; `p` must point to 3 doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bilab_simulate(
    model_code: i32,
    u0: *const BilabField,
    p: *const f64,
    t: f64,
    out: *mut *mut BilabField,
) -> i32 {
    guard(|| {
        let m = model(model_code)?;
        let u0 = u0.as_ref().ok_or_else(|| null("u0"))?;
        if p.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let k = u0.0.truncation();
        let profiles = ProfileSet::low_modes(k, u0.0.grid_size());
        let law = ControlSchedule::constant(std::slice::from_raw_parts(p, 3).to_vec(), t).map_err(fail)?;
        let cfg = FlowConfig::default();
        let rep = integrate(&u0.0, &law, &profiles, m, t, &cfg).map_err(fail)?;
        if rep.blowup_flag {
            return Err(fail(Error::BlowupDetected { t: rep.t_end, norm: rep.sup_norm, guard: cfg.guard }));
        }
        write_out(out, BilabField(rep.final_state));
        Ok(())
    })
}

/// Steers `u0` to the constant `phi` (same strict sign) at time `t` with default settings.
///
/// # Safety
/// `u0` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bilab_global_to_constant(
    model_code: i32,
    u0: *const BilabField,
    phi: f64,
    t: f64,
    out: *mut *mut BilabGlobalReport,
) -> i32 {
    guard(|| {
        let m = model(model_code)?;
        let u0 = u0.as_ref().ok_or_else(|| null("u0"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if t.is_nan() || t <= 0.0 || phi == 0.0 || !phi.is_finite() {
            return Err(fail(Error::ConfigError("need t > 0 and a finite nonzero phi".into())));
        }
        let cfg = GlobalConfig::new(m, phi, t);
        let r = global_to_constant(&u0.0, &cfg).map_err(fail)?;
        write_out(out, BilabGlobalReport(r));
        Ok(())
    })
}

/// L² distance between u(T) and the target constant.
///
/// # Safety
/// `report` must be a live handle; `err` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bilab_global_terminal_error(report: *const BilabGlobalReport, err: *mut f64) -> i32 {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        *err.as_mut().ok_or_else(|| null("err"))? = r.0.terminal_error;
        Ok(())
    })
}

/// Copy of the terminal state u(T) as a new field handle.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bilab_global_terminal_state(report: *const BilabGlobalReport, out: *mut *mut BilabField) -> i32 {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        write_out(out, BilabField(r.0.terminal.clone()));
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bilab_global_report_free(report: *mut BilabGlobalReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
