// SPDX-License-Identifier: Apache-2.0

//! C ABI over `hfp_core`.
//!
//! Handles are opaque and owned by the caller once returned; release them with
//! the matching `*_free` function. Every fallible call returns an [`HfpStatus`];
//! on failure [`hfp_last_error_message`] describes the error for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hfp_core::error::{DesignError, Error, ModelError};
use hfp_core::io::{design_from_str, load_design, ResultFile};
use hfp_core::model::Design;
use hfp_core::orchestrator::{run, Method, RunConfig};
use hfp_core::svg::write_svg;

/// Status codes returned by fallible calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Schema = 4,
    Integrity = 5,
    Io = 6,
    Infeasible = 7,
    Config = 8,
    Internal = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HfpMethod {
    Baseline = 0,
    Sa = 1,
    Rl = 2,
}

/// Run options; start from [`hfp_run_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HfpRunOptions {
    /// One of the [`HfpMethod`] values.
    pub method: u32,
    pub seed: u64,
    pub omega: f64,
    pub beta: f64,
    pub gamma: f64,
    pub tau: f64,
    pub n_max: u32,
    pub k_interval: u32,
    pub max_steps: u32,
}

/// Opaque design handle.
pub struct HfpDesign {
    design: Design,
}

/// Opaque solution handle.
pub struct HfpSolution {
    design: Design,
    result: ResultFile,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> HfpStatus {
    match e {
        Error::Design(DesignError::Parse { .. }) | Error::Json(_) => HfpStatus::Parse,
        Error::Design(DesignError::Schema { .. }) => HfpStatus::Schema,
        Error::Design(DesignError::Integrity { .. }) => HfpStatus::Integrity,
        Error::Design(DesignError::Io { .. }) | Error::Io(_) => HfpStatus::Io,
        Error::Model(ModelError::Infeasible(_)) => HfpStatus::Infeasible,
        Error::Model(ModelError::Config(_) | ModelError::Parameter(_)) => HfpStatus::Config,
        Error::Model(_) => HfpStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (HfpStatus, String)>) -> HfpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            HfpStatus::Ok
        }
        Ok(Err((s, m))) => {
            set_error(&m);
            s
        }
        Err(_) => {
            set_error("internal panic");
            HfpStatus::Panic
        }
    }
}

fn fail(e: impl Into<Error>) -> (HfpStatus, String) {
    let e = e.into();
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (HfpStatus, String) {
    (HfpStatus::NullArgument, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (HfpStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (HfpStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn store<T>(out: *mut *mut T, v: T) {
    // SAFETY: callers check `out` for null before computing `v`.
    unsafe { *out = Box::into_raw(Box::new(v)) };
}

/// Parses a design from a NUL-terminated JSON string.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hfp_design_from_json(json: *const c_char, out: *mut *mut HfpDesign) -> HfpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = str_arg(json, "json")?;
        let design = design_from_str(text, "<memory>").map_err(fail)?;
        store(out, HfpDesign { design });
        Ok(())
    })
}

/// Loads a design file.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hfp_design_load(path: *const c_char, out: *mut *mut HfpDesign) -> HfpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = str_arg(path, "path")?;
        let design = load_design(Path::new(p)).map_err(fail)?;
        store(out, HfpDesign { design });
        Ok(())
    })
}

/// # Safety
/// `design` must come from this library and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hfp_design_free(design: *mut HfpDesign) {
    if !design.is_null() {
        drop(Box::from_raw(design));
    }
}

/// Number of blocks; 0 for null.
///
/// # Safety
/// `design` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hfp_design_block_count(design: *const HfpDesign) -> usize {
    design.as_ref().map_or(0, |d| d.design.blocks.len())
}

#[no_mangle]
pub extern "C" fn hfp_run_options_default() -> HfpRunOptions {
    let c = RunConfig::default();
    let w = c.objective.weights;
    HfpRunOptions {
        method: HfpMethod::Rl as u32,
        seed: 0,
        omega: w.omega,
        beta: w.beta,
        gamma: w.gamma,
        tau: w.tau,
        n_max: w.n_max as u32,
        k_interval: c.refine.k_interval as u32,
        max_steps: c.max_total_steps as u32,
    }
}

fn config_of(o: &HfpRunOptions) -> Result<RunConfig, ModelError> {
    let mut c = RunConfig::default();
    let w = &mut c.objective.weights;
    (w.omega, w.beta, w.gamma, w.tau) = (o.omega, o.beta, o.gamma, o.tau);
    w.n_max = o.n_max as usize;
    c.refine.k_interval = o.k_interval as usize;
    c.max_total_steps = o.max_steps as usize;
    c.validate()?;
    Ok(c)
}

/// Floorplans `design`. A null `options` uses the defaults.
///
/// # Safety
/// `design` must be a live handle, `options` null or valid, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hfp_run(design: *const HfpDesign, options: *const HfpRunOptions, out: *mut *mut HfpSolution) -> HfpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let d = design.as_ref().ok_or_else(|| null("design"))?;
        let o = options.as_ref().copied().unwrap_or_else(|| hfp_run_options_default());
        let cfg = config_of(&o).map_err(fail)?;
        let method = match o.method {
            m if m == HfpMethod::Baseline as u32 => Method::Baseline,
            m if m == HfpMethod::Sa as u32 => Method::Sa,
            m if m == HfpMethod::Rl as u32 => Method::Rl,
            m => return Err((HfpStatus::Config, format!("unknown method {m}"))),
        };
        let sol = run(&d.design, method, &cfg, o.seed).map_err(fail)?;
        let result = ResultFile::new(&d.design, &sol, &cfg);
        store(
            out,
            HfpSolution {
                design: d.design.clone(),
                result,
            },
        );
        Ok(())
    })
}

/// Objective `f` of the solution; NaN for null.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hfp_solution_objective(solution: *const HfpSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.result.breakdown.f)
}

/// 1 when all constraints hold, 0 otherwise or for null.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hfp_solution_feasible(solution: *const HfpSolution) -> i32 {
    solution.as_ref().map_or(0, |s| i32::from(s.result.breakdown.feasible))
}

/// Result JSON; free the string with [`hfp_string_free`].
///
/// # Safety
/// `solution` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn hfp_solution_to_json(solution: *const HfpSolution, out: *mut *mut c_char) -> HfpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        let c = CString::new(s.result.to_json()).map_err(|e| (HfpStatus::Internal, e.to_string()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hfp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Writes an SVG rendering of the solution.
///
/// # Safety
/// `solution` must be a live handle and `path` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn hfp_solution_write_svg(solution: *const HfpSolution, path: *const c_char) -> HfpStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        let p = str_arg(path, "path")?;
        write_svg(&s.result, &s.design, Path::new(p)).map_err(fail)
    })
}

/// # Safety
/// `solution` must come from this library and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hfp_solution_free(solution: *mut HfpSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Message for the last failed call on this thread; empty after a success. The
/// pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn hfp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
