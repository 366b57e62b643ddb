//! C interface to the series solver.
//!
//! Every function returns an [`NsStatus`]; on failure the message is kept in
//! thread-local storage and read with [`ns_last_error_message`]. Handles are
//! opaque, created by `*_new`-style calls and released by the matching
//! `*_free`. Panics are caught at the boundary and reported as
//! `NS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use nsseries::calibration::calibrate_constant;
use nsseries::convolution::{ConvolutionMethod, Convolver};
use nsseries::experiment::{load_config, run_experiment};
use nsseries::field::{gaussian_initial_data, smallness_ratio, SpectralField, SpectralTrajectory, SwirlRecipe, TimeGrid};
use nsseries::grid::FrequencyGrid;
use nsseries::series::{build_v0, recurse_terms, sum_series, truncation_order, SeriesExpansion, DEFAULT_TERM_BUDGET};
use nsseries::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    GridMismatch = 4,
    Divergence = 5,
    BlowUp = 6,
    Budget = 7,
    Config = 8,
    Io = 9,
    BufferTooSmall = 10,
    Panic = 11,
    Internal = 12,
}

pub struct NsGrid(Arc<FrequencyGrid>);

pub struct NsField(SpectralField);

pub struct NsSolution {
    expansion: SeriesExpansion,
    sum: SpectralTrajectory,
    rho: f64,
    order: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(NsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Domain(_) | Error::KindMismatch(_) | Error::TimeGrid(_) | Error::DegenerateFit(_) => NsStatus::Domain,
            Error::GridMismatch(_) => NsStatus::GridMismatch,
            Error::Divergence(_) => NsStatus::Divergence,
            Error::BlowUp { .. } => NsStatus::BlowUp,
            Error::Budget { .. } => NsStatus::Budget,
            Error::Config(_) => NsStatus::Config,
            Error::Io(_) | Error::Format(_) | Error::Csv(_) | Error::Json(_) => NsStatus::Io,
            _ => NsStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            NsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(NsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ns_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn ns_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ns_grid_new(d: u32, h: f64, radius: f64, out: *mut *mut NsGrid) -> NsStatus {
    guard(|| {
        let g = FrequencyGrid::build(d as usize, h, radius)?;
        put(out, Box::into_raw(Box::new(NsGrid(g))), "out")
    })
}

/// # Safety
/// `grid` must come from `ns_grid_new`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_grid_len(grid: *const NsGrid, out: *mut usize) -> NsStatus {
    guard(|| put(out, get(grid, "grid")?.0.len(), "out"))
}

/// # Safety
/// `grid` must come from `ns_grid_new` and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn ns_grid_free(grid: *mut NsGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Gaussian initial data `amplitude e^{-width|ξ|²} K(ξ)a(ξ)` with the seeded
/// swirl direction.
///
/// # Safety
/// `grid` must be a live grid handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_field_gaussian(
    grid: *const NsGrid,
    amplitude: f64,
    width: f64,
    seed: u64,
    out: *mut *mut NsField,
) -> NsStatus {
    guard(|| {
        let g = &get(grid, "grid")?.0;
        let f = gaussian_initial_data(g, amplitude, width, &SwirlRecipe::Seeded { seed })?;
        put(out, Box::into_raw(Box::new(NsField(f))), "out")
    })
}

/// Number of complex values (modes times components).
///
/// # Safety
/// `field` must be a live field handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_field_len(field: *const NsField, out: *mut usize) -> NsStatus {
    guard(|| put(out, get(field, "field")?.0.data().len(), "out"))
}

/// Copies the values as interleaved `(re, im)` pairs, mode-major with
/// components innermost. `len` counts doubles and must be at least twice
/// `ns_field_len`.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ns_field_copy(field: *const NsField, buf: *mut f64, len: usize) -> NsStatus {
    guard(|| {
        let data = get(field, "field")?.0.data();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < 2 * data.len() {
            return Err(Failure(NsStatus::BufferTooSmall, format!("need {} doubles, got {len}", 2 * data.len())));
        }
        let out = std::slice::from_raw_parts_mut(buf, 2 * data.len());
        for (pair, v) in out.chunks_exact_mut(2).zip(data) {
            pair[0] = v.re;
            pair[1] = v.im;
        }
        Ok(())
    })
}

/// `‖f‖_{L¹} + ‖f‖_{L²}` with the lattice measure.
///
/// # Safety
/// `field` must be a live field handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_field_norm_1p2(field: *const NsField, out: *mut f64) -> NsStatus {
    guard(|| put(out, get(field, "field")?.0.norm_1p2(), "out"))
}

/// # Safety
/// `field` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn ns_field_free(field: *mut NsField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Fits the convolution constant on the bump corpus over `grid`.
///
/// # Safety
/// `grid` must be a live grid handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_calibrate(grid: *const NsGrid, corpus_size: usize, seed: u64, out: *mut f64) -> NsStatus {
    guard(|| {
        let conv = Convolver::new(&get(grid, "grid")?.0, ConvolutionMethod::Fft);
        put(out, calibrate_constant(&conv, corpus_size, seed)?.c_hat, "out")
    })
}

/// # Safety
/// `field` must be a live field handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_smallness_ratio(field: *const NsField, nu: f64, c_hat: f64, out: *mut f64) -> NsStatus {
    guard(|| put(out, smallness_ratio(&get(field, "field")?.0, nu, c_hat)?, "out"))
}

/// Computes terms up to `k_max` on `steps` uniform intervals of `[0, t_max]`
/// and sums them up to the tail-rule order. Returns `NS_STATUS_DIVERGENCE`
/// without a handle when the series is predicted to diverge.
///
/// # Safety
/// `u0` must be a live field handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_solve(
    u0: *const NsField,
    nu: f64,
    t_max: f64,
    steps: usize,
    k_max: usize,
    tail_tol: f64,
    c_hat: f64,
    out: *mut *mut NsSolution,
) -> NsStatus {
    guard(|| {
        let u0 = &get(u0, "u0")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let rho = smallness_ratio(u0, nu, c_hat)?;
        let times = Arc::new(TimeGrid::uniform(t_max, steps)?);
        let v0 = build_v0(u0, nu, &times)?;
        let conv = Convolver::new(u0.grid(), ConvolutionMethod::Fft);
        let mut expansion = recurse_terms(&v0, k_max, nu, &conv, DEFAULT_TERM_BUDGET)?;
        let order = truncation_order(&expansion.term_norms, rho, tail_tol)?;
        expansion.order = Some(order);
        let sum = sum_series(&expansion, Some(order))?;
        put(out, Box::into_raw(Box::new(NsSolution { expansion, sum, rho, order })), "out")
    })
}

/// # Safety
/// `sol` must be a live solution handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_solution_info(sol: *const NsSolution, order: *mut usize, rho: *mut f64) -> NsStatus {
    guard(|| {
        let s = get(sol, "sol")?;
        put(order, s.order, "order")?;
        put(rho, s.rho, "rho")
    })
}

/// Writes up to `len` values of `sup_t ‖v_k‖_{1⊕2}`, `k = 0..=k_max`, and
/// stores the total count in `count`.
///
/// # Safety
/// `buf` must point to `len` writable doubles (may be NULL when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn ns_solution_term_norms(sol: *const NsSolution, buf: *mut f64, len: usize, count: *mut usize) -> NsStatus {
    guard(|| {
        let norms = &get(sol, "sol")?.expansion.term_norms;
        put(count, norms.len(), "count")?;
        if len > 0 {
            if buf.is_null() {
                return Err(null("buf"));
            }
            let n = len.min(norms.len());
            std::slice::from_raw_parts_mut(buf, n).copy_from_slice(&norms[..n]);
        }
        Ok(())
    })
}

/// Summed solution at time index `m` as a new field handle.
///
/// # Safety
/// `sol` must be a live solution handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_solution_slice(sol: *const NsSolution, m: usize, out: *mut *mut NsField) -> NsStatus {
    guard(|| {
        let s = get(sol, "sol")?;
        let slices = s.sum.slices();
        let slice = slices
            .get(m)
            .ok_or_else(|| Failure(NsStatus::InvalidArgument, format!("time index {m} out of range 0..{}", slices.len())))?;
        put(out, Box::into_raw(Box::new(NsField(slice.clone()))), "out")
    })
}

/// # Safety
/// `sol` must come from `ns_solve` and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn ns_solution_free(sol: *mut NsSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Runs a TOML experiment config and returns its JSON report, to be released
/// with `ns_string_free`. `passed` receives whether every enabled check passed.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ns_run_config(path: *const c_char, report_json: *mut *mut c_char, passed: *mut bool) -> NsStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure(NsStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let report = run_experiment(&load_config(Path::new(path))?)?;
        let json = CString::new(report.to_json()?).map_err(|e| Failure(NsStatus::Internal, e.to_string()))?;
        put(passed, report.passed(), "passed")?;
        put(report_json, json.into_raw(), "report_json")
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn ns_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
