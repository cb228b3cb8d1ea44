//! C ABI for the heatrec toolkit.
//!
//! The surface is deliberately small: load a config, run the reconstruction
//! it describes, and read the sweep back row by row or as CSV. Handles are
//! opaque pointers owned by this library; every constructor has a matching
//! `_free`, and every fallible call returns an [`HrStatus`] code with a
//! thread-local human-readable message behind [`hr_last_error`].
//!
//! Conventions:
//! - NULL inputs are rejected with `HR_STATUS_NULL_POINTER`, never
//!   dereferenced.
//! - Strings cross the boundary as NUL-terminated UTF-8; output strings are
//!   copied into caller-provided buffers (no library-owned string lifetime to
//!   manage).
//! - Optional row fields (`rel_error` without a reference value) are encoded
//!   as NaN.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::ptr;

use heatrec::config::ExperimentConfig;
use heatrec::driver::{run_reconstruction, RunOutcome};
use heatrec::kernel::kernel_pair_1d;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HrStatus {
    /// success
    HrStatusOk = 0,
    /// a required pointer argument was NULL
    HrStatusNullPointer = 1,
    /// a string argument was not valid UTF-8
    HrStatusInvalidUtf8 = 2,
    /// the config failed to load, parse, or validate; see `hr_last_error`
    HrStatusInvalidConfig = 3,
    /// the reconstruction itself failed; see `hr_last_error`
    HrStatusRunFailed = 4,
    /// an index was out of range
    HrStatusOutOfRange = 5,
    /// the caller's buffer was too small; required size is reported instead
    HrStatusBufferTooSmall = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

/// Copy the message of the most recent error on this thread into `buf`
/// (NUL-terminated, truncated to `cap`). Returns the full message length in
/// bytes, excluding the NUL; 0 means no error has occurred yet.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be NULL (query length only).
#[no_mangle]
pub unsafe extern "C" fn hr_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Opaque handle: a loaded and field-checked experiment configuration.
pub struct HrConfig(ExperimentConfig);

/// Opaque handle: a completed reconstruction run.
pub struct HrSweep(RunOutcome);

/// One row of a τ-sweep, in the same order as the CSV report.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct HrSweepRow {
    pub tau: f64,
    pub re_estimate: f64,
    pub im_estimate: f64,
    /// NaN when the config supplies no reference value
    pub reference: f64,
    /// NaN when the config supplies no reference value
    pub rel_error: f64,
    pub quad_error: f64,
    pub wall_ms: f64,
}

/// Load a config from a TOML file at `path`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
/// On success `*out` owns the handle; release it with [`hr_config_free`].
#[no_mangle]
pub unsafe extern "C" fn hr_config_load(
    path: *const c_char,
    out: *mut *mut HrConfig,
) -> HrStatus {
    if path.is_null() || out.is_null() {
        return HrStatus::HrStatusNullPointer;
    }
    *out = ptr::null_mut();
    let path = match CStr::from_ptr(path).to_str() {
        Ok(s) => s,
        Err(_) => return HrStatus::HrStatusInvalidUtf8,
    };
    match ExperimentConfig::load(path) {
        Ok(cfg) => {
            *out = Box::into_raw(Box::new(HrConfig(cfg)));
            HrStatus::HrStatusOk
        }
        Err(e) => {
            set_error(e.to_string());
            HrStatus::HrStatusInvalidConfig
        }
    }
}

/// Parse a config from TOML text (for callers that manage files themselves).
///
/// # Safety
/// As [`hr_config_load`], with `text` a NUL-terminated TOML document.
#[no_mangle]
pub unsafe extern "C" fn hr_config_parse(
    text: *const c_char,
    out: *mut *mut HrConfig,
) -> HrStatus {
    if text.is_null() || out.is_null() {
        return HrStatus::HrStatusNullPointer;
    }
    *out = ptr::null_mut();
    let text = match CStr::from_ptr(text).to_str() {
        Ok(s) => s,
        Err(_) => return HrStatus::HrStatusInvalidUtf8,
    };
    let cfg: ExperimentConfig = match toml_parse(text) {
        Ok(cfg) => cfg,
        Err(e) => {
            set_error(e);
            return HrStatus::HrStatusInvalidConfig;
        }
    };
    *out = Box::into_raw(Box::new(HrConfig(cfg)));
    HrStatus::HrStatusOk
}

fn toml_parse(text: &str) -> Result<ExperimentConfig, String> {
    ExperimentConfig::from_toml_str(text).map_err(|e| e.to_string())
}

/// Release a config handle. NULL is a no-op.
///
/// # Safety
/// `cfg` must come from `hr_config_load`/`hr_config_parse` and not have been
/// freed already.
#[no_mangle]
pub unsafe extern "C" fn hr_config_free(cfg: *mut HrConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Check scenario admissibility without running anything. On rejection the
/// error message names the violated condition.
///
/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn hr_config_validate(cfg: *const HrConfig) -> HrStatus {
    let Some(cfg) = cfg.as_ref() else {
        return HrStatus::HrStatusNullPointer;
    };
    match cfg.0.validate() {
        Ok(_) => HrStatus::HrStatusOk,
        Err(e) => {
            set_error(e.to_string());
            HrStatus::HrStatusInvalidConfig
        }
    }
}

/// Run the reconstruction described by `cfg`. On success `*out` owns the
/// sweep handle; release it with [`hr_sweep_free`].
///
/// # Safety
/// `cfg` must be a live config handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hr_reconstruct(
    cfg: *const HrConfig,
    out: *mut *mut HrSweep,
) -> HrStatus {
    let Some(cfg) = cfg.as_ref() else {
        return HrStatus::HrStatusNullPointer;
    };
    if out.is_null() {
        return HrStatus::HrStatusNullPointer;
    }
    *out = ptr::null_mut();
    match run_reconstruction(&cfg.0) {
        Ok(outcome) => {
            *out = Box::into_raw(Box::new(HrSweep(outcome)));
            HrStatus::HrStatusOk
        }
        Err(e) => {
            set_error(e.to_string());
            HrStatus::HrStatusRunFailed
        }
    }
}

/// Number of rows in the sweep (0 for NULL).
///
/// # Safety
/// `sweep` must be a live sweep handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn hr_sweep_len(sweep: *const HrSweep) -> usize {
    sweep.as_ref().map_or(0, |s| s.0.report.rows.len())
}

/// Copy row `index` into `*row`.
///
/// # Safety
/// `sweep` must be a live sweep handle and `row` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hr_sweep_row(
    sweep: *const HrSweep,
    index: usize,
    row: *mut HrSweepRow,
) -> HrStatus {
    let Some(sweep) = sweep.as_ref() else {
        return HrStatus::HrStatusNullPointer;
    };
    if row.is_null() {
        return HrStatus::HrStatusNullPointer;
    }
    let Some(r) = sweep.0.report.rows.get(index) else {
        set_error(format!(
            "row index {index} out of range ({} rows)",
            sweep.0.report.rows.len()
        ));
        return HrStatus::HrStatusOutOfRange;
    };
    *row = HrSweepRow {
        tau: r.tau,
        re_estimate: r.estimate.re,
        im_estimate: r.estimate.im,
        reference: r.reference.unwrap_or(f64::NAN),
        rel_error: r.rel_error.unwrap_or(f64::NAN),
        quad_error: r.quad_error,
        wall_ms: r.wall_ms,
    };
    HrStatus::HrStatusOk
}

/// Index of the best stable row, or the row count when the sweep is empty of
/// a best row (should not happen for a successful run).
///
/// # Safety
/// `sweep` must be a live sweep handle.
#[no_mangle]
pub unsafe extern "C" fn hr_sweep_best_row(sweep: *const HrSweep) -> usize {
    sweep
        .as_ref()
        .and_then(|s| s.0.report.best_row)
        .unwrap_or(usize::MAX)
}

/// Copy the CSV report into `buf` (NUL-terminated). Returns the full CSV
/// length in bytes excluding the NUL; if it exceeds `cap - 1` nothing beyond
/// the truncation point is written — call again with a larger buffer.
///
/// # Safety
/// `sweep` must be a live sweep handle; `buf` must point to `cap` writable
/// bytes, or be NULL (query length only).
#[no_mangle]
pub unsafe extern "C" fn hr_sweep_csv(
    sweep: *const HrSweep,
    buf: *mut c_char,
    cap: usize,
) -> usize {
    let Some(sweep) = sweep.as_ref() else {
        return 0;
    };
    let csv = sweep.0.report.to_csv();
    if !buf.is_null() && cap > 0 {
        let n = csv.len().min(cap - 1);
        ptr::copy_nonoverlapping(csv.as_ptr(), buf as *mut u8, n);
        *buf.add(n) = 0;
    }
    csv.len()
}

/// Release a sweep handle. NULL is a no-op.
///
/// # Safety
/// `sweep` must come from `hr_reconstruct` and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn hr_sweep_free(sweep: *mut HrSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}

/// Evaluate the 1-d probe kernel in split form: `K = exp(*exponent) * *k`,
/// with `*dk` the matching x-derivative factor. Direct passthrough for
/// callers embedding the kernel in their own quadrature.
///
/// # Safety
/// `exponent`, `k`, `dk` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn hr_kernel_pair_1d(
    a: f64,
    b: f64,
    x: f64,
    t: f64,
    exponent: *mut f64,
    k: *mut f64,
    dk: *mut f64,
) -> HrStatus {
    if exponent.is_null() || k.is_null() || dk.is_null() {
        return HrStatus::HrStatusNullPointer;
    }
    let (e, kv, dkv) = kernel_pair_1d(a, b, x, t);
    *exponent = e;
    *k = kv;
    *dk = dkv;
    HrStatus::HrStatusOk
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    const GOOD: &str = r#"
        target_x = 0.5
        target_t = 0.5
        probe_c = 2.0
        field = "heat_kernel"
        field_x_s = 0.3
        field_t_s = -0.5
        method = "carleman"
        taus = [8.0]
    "#;

    unsafe fn parse(text: &str) -> *mut HrConfig {
        let c = CString::new(text).unwrap();
        let mut h = ptr::null_mut();
        assert_eq!(hr_config_parse(c.as_ptr(), &mut h), HrStatus::HrStatusOk);
        h
    }

    #[test]
    fn round_trip_runs_and_reads_rows() {
        unsafe {
            let cfg = parse(GOOD);
            assert_eq!(hr_config_validate(cfg), HrStatus::HrStatusOk);
            let mut sweep = ptr::null_mut();
            assert_eq!(hr_reconstruct(cfg, &mut sweep), HrStatus::HrStatusOk);
            assert_eq!(hr_sweep_len(sweep), 1);
            let mut row = HrSweepRow {
                tau: 0.0,
                re_estimate: 0.0,
                im_estimate: 0.0,
                reference: 0.0,
                rel_error: 0.0,
                quad_error: 0.0,
                wall_ms: 0.0,
            };
            assert_eq!(hr_sweep_row(sweep, 0, &mut row), HrStatus::HrStatusOk);
            assert_eq!(row.tau, 8.0);
            assert!(row.rel_error < 1e-3);
            assert_eq!(hr_sweep_row(sweep, 1, &mut row), HrStatus::HrStatusOutOfRange);
            let n = hr_sweep_csv(sweep, ptr::null_mut(), 0);
            let mut buf = vec![0u8; n + 1];
            assert_eq!(hr_sweep_csv(sweep, buf.as_mut_ptr() as *mut c_char, n + 1), n);
            let csv = std::str::from_utf8(&buf[..n]).unwrap();
            assert!(csv.starts_with("tau,re_estimate,im_estimate,"));
            hr_sweep_free(sweep);
            hr_config_free(cfg);
        }
    }

    #[test]
    fn rejection_reports_condition_by_name() {
        unsafe {
            let cfg = parse(&GOOD.replace("probe_c = 2.0", "probe_c = 1.0"));
            assert_eq!(hr_config_validate(cfg), HrStatus::HrStatusInvalidConfig);
            let n = hr_last_error(ptr::null_mut(), 0);
            let mut buf = vec![0u8; n + 1];
            hr_last_error(buf.as_mut_ptr() as *mut c_char, n + 1);
            let msg = std::str::from_utf8(&buf[..n]).unwrap();
            assert!(msg.contains("inaccessible-boundary"), "{msg}");
            hr_config_free(cfg);
        }
    }

    #[test]
    fn null_handling_is_defensive() {
        unsafe {
            assert_eq!(
                hr_config_load(ptr::null(), ptr::null_mut()),
                HrStatus::HrStatusNullPointer
            );
            assert_eq!(hr_sweep_len(ptr::null()), 0);
            hr_sweep_free(ptr::null_mut());
            hr_config_free(ptr::null_mut());
        }
    }

    #[test]
    fn kernel_passthrough_matches_library() {
        unsafe {
            let (mut e, mut k, mut dk) = (0.0, 0.0, 0.0);
            assert_eq!(
                hr_kernel_pair_1d(0.0, 1.0, 0.0, 1.0, &mut e, &mut k, &mut dk),
                HrStatus::HrStatusOk
            );
            assert!((e.exp() * k + 0.46557651).abs() < 1e-7);
        }
    }

    #[test]
    fn generated_header_is_current() {
        let header = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/include/heatrec.h"
        ))
        .expect("cbindgen header missing; build must regenerate include/heatrec.h");
        for symbol in [
            "hr_config_load",
            "hr_config_parse",
            "hr_config_validate",
            "hr_config_free",
            "hr_reconstruct",
            "hr_sweep_len",
            "hr_sweep_row",
            "hr_sweep_best_row",
            "hr_sweep_csv",
            "hr_sweep_free",
            "hr_kernel_pair_1d",
            "hr_last_error",
            "HrSweepRow",
            "HrStatus",
        ] {
            assert!(header.contains(symbol), "header missing {symbol}");
        }
    }
}
