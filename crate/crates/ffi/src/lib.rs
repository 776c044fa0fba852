//! C ABI for `matched_wr`.
//!
//! Every fallible call returns an [`MwrStatus`]; on failure a description is
//! available from [`mwr_last_error_message`] on the same thread. Counts are
//! wrapped in an opaque [`MwrAnalysis`] handle that the caller frees with
//! [`mwr_analysis_free`]. Strings returned by the library are freed with
//! [`mwr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use matched_wr::hypothesis::{power, run_test, sample_size, DesignTarget, TestMethod};
use matched_wr::intervals::{nb_interval, wr_interval, NbMethod, WrMethod};
use matched_wr::report::{analyze, to_json, AnalysisRequest};
use matched_wr::simulation::{run_grid_with_threads, GridConfig};
use matched_wr::{net_benefit, win_ratio, Alpha, ConfidenceSet, Error, PairCounts};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MwrStatus {
    Ok = 0,
    NullPointer = 1,
    EmptyData = 2,
    AllTies = 3,
    UndefinedRatio = 4,
    DegenerateVariance = 5,
    InvalidArgument = 6,
    NoEffect = 7,
    Infeasible = 8,
    UnknownMethod = 9,
    Internal = 10,
}

#[repr(C)]
pub enum MwrTestMethod {
    Z = 0,
    ZPocock = 1,
    Exact = 2,
}

#[repr(C)]
pub enum MwrNbMethod {
    Wald = 0,
    MoverAc = 1,
    MoverWilson = 2,
}

#[repr(C)]
pub enum MwrWrMethod {
    Pocock = 0,
    Wald = 1,
    WaldLog = 2,
    Fieller = 3,
    MoverAc = 4,
    MoverWilson = 5,
}

#[repr(C)]
pub enum MwrDesignKind {
    /// `p1` = net benefit, `p2` = decided probability.
    NetBenefit = 0,
    /// `p1` = win ratio, `p2` = decided probability.
    WinRatio = 1,
    /// `p1` = win probability, `p2` = loss probability.
    Raw = 2,
}

/// Shape of a confidence set.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MwrSetKind {
    /// `[lower, upper]`.
    Bounded = 0,
    /// `(-inf, upper]`.
    LowerUnbounded = 1,
    /// `[lower, +inf)`.
    UpperUnbounded = 2,
    /// `(-inf, lower] U [upper, +inf)`.
    RayUnion = 3,
    WholeLine = 4,
    /// No usable set; see `mwr_last_error_message`.
    Undefined = 5,
}

/// A confidence set. Unused endpoints are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MwrSet {
    pub kind: MwrSetKind,
    pub lower: f64,
    pub upper: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MwrTestResult {
    /// NaN for the exact test.
    pub statistic: f64,
    pub p_value: f64,
}

/// Opaque handle holding counts and a significance level.
pub struct MwrAnalysis {
    counts: PairCounts,
    alpha: Alpha,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MwrStatus {
    match e {
        Error::EmptyData => MwrStatus::EmptyData,
        Error::AllTies => MwrStatus::AllTies,
        Error::UndefinedRatio => MwrStatus::UndefinedRatio,
        Error::DegenerateVariance(_) => MwrStatus::DegenerateVariance,
        Error::NoEffect => MwrStatus::NoEffect,
        Error::Infeasible(_) => MwrStatus::Infeasible,
        Error::Overflow { .. } => MwrStatus::Internal,
        _ => MwrStatus::InvalidArgument,
    }
}

fn fail(e: Error) -> MwrStatus {
    set_error(&e.to_string());
    status_of(&e)
}

/// Run `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), MwrStatus>) -> MwrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MwrStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            MwrStatus::Internal
        }
    }
}

fn null_ptr(what: &str) -> MwrStatus {
    set_error(&format!("{what} is null"));
    MwrStatus::NullPointer
}

fn unknown(what: &str, v: u32) -> MwrStatus {
    set_error(&format!("unknown {what} {v}"));
    MwrStatus::UnknownMethod
}

fn make_alpha(alpha: f64, rounded_z: bool) -> Result<Alpha, MwrStatus> {
    if rounded_z {
        Alpha::rounded(alpha)
    } else {
        Alpha::new(alpha)
    }
    .map_err(fail)
}

unsafe fn handle<'a>(h: *const MwrAnalysis) -> Result<&'a MwrAnalysis, MwrStatus> {
    h.as_ref().ok_or_else(|| null_ptr("analysis handle"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), MwrStatus> {
    if out.is_null() {
        return Err(null_ptr("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn into_c_string(s: String) -> Result<*mut c_char, MwrStatus> {
    CString::new(s).map(CString::into_raw).map_err(|_| {
        set_error("output contains an interior NUL byte");
        MwrStatus::Internal
    })
}

fn to_set(s: &ConfidenceSet) -> MwrSet {
    let nan = f64::NAN;
    let (kind, lower, upper) = match *s {
        ConfidenceSet::Bounded { lower, upper } => (MwrSetKind::Bounded, lower, upper),
        ConfidenceSet::LowerUnbounded { upper } => (MwrSetKind::LowerUnbounded, nan, upper),
        ConfidenceSet::UpperUnbounded { lower } => (MwrSetKind::UpperUnbounded, lower, nan),
        ConfidenceSet::RayUnion { a, b } => (MwrSetKind::RayUnion, a, b),
        ConfidenceSet::WholeLine => (MwrSetKind::WholeLine, nan, nan),
        ConfidenceSet::Undefined { ref reason } => {
            set_error(reason);
            (MwrSetKind::Undefined, nan, nan)
        }
    };
    MwrSet { kind, lower, upper }
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mwr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Create an analysis handle from counts.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn mwr_analysis_new(
    n_win: u64,
    n_loss: u64,
    n_tie: u64,
    alpha: f64,
    rounded_z: bool,
    out: *mut *mut MwrAnalysis,
) -> MwrStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_ptr("output pointer"));
        }
        let alpha = make_alpha(alpha, rounded_z)?;
        let counts = PairCounts::new(n_win, n_loss, n_tie);
        if counts.total() == 0 {
            return Err(fail(Error::EmptyData));
        }
        out.write(Box::into_raw(Box::new(MwrAnalysis { counts, alpha })));
        Ok(())
    })
}

/// Free a handle. NULL is ignored.
///
/// # Safety
/// `h` must be NULL or a handle from `mwr_analysis_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mwr_analysis_free(h: *mut MwrAnalysis) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Net benefit `(n_w - n_l) / N`.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mwr_analysis_net_benefit(
    h: *const MwrAnalysis,
    out: *mut f64,
) -> MwrStatus {
    guard(|| {
        let a = handle(h)?;
        write_out(out, net_benefit(&a.counts).map_err(fail)?)
    })
}

/// Win ratio `n_w / n_l`; `MWR_STATUS_UNDEFINED_RATIO` when there are no losses.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mwr_analysis_win_ratio(h: *const MwrAnalysis, out: *mut f64) -> MwrStatus {
    guard(|| {
        let a = handle(h)?;
        write_out(out, win_ratio(&a.counts).map_err(fail)?)
    })
}

/// Run a test; `method` is an `MwrTestMethod` value.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mwr_analysis_test(
    h: *const MwrAnalysis,
    method: u32,
    out: *mut MwrTestResult,
) -> MwrStatus {
    guard(|| {
        let a = handle(h)?;
        let m = match method {
            0 => TestMethod::Z,
            1 => TestMethod::ZPocock,
            2 => TestMethod::Exact,
            v => return Err(unknown("test method", v)),
        };
        let r = run_test(m, &a.counts).map_err(fail)?;
        write_out(
            out,
            MwrTestResult {
                statistic: r.statistic.unwrap_or(f64::NAN),
                p_value: r.p_value,
            },
        )
    })
}

/// Net benefit confidence set; `method` is an `MwrNbMethod` value.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mwr_analysis_nb_interval(
    h: *const MwrAnalysis,
    method: u32,
    out: *mut MwrSet,
) -> MwrStatus {
    guard(|| {
        let a = handle(h)?;
        let m = *NbMethod::ALL
            .get(method as usize)
            .ok_or_else(|| unknown("net benefit method", method))?;
        let set = nb_interval(m, &a.counts, &a.alpha).map_err(fail)?;
        write_out(out, to_set(&set))
    })
}

/// Win ratio confidence set; `method` is an `MwrWrMethod` value. A method
/// that cannot be computed for these counts returns an error status.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mwr_analysis_wr_interval(
    h: *const MwrAnalysis,
    method: u32,
    out: *mut MwrSet,
) -> MwrStatus {
    guard(|| {
        let a = handle(h)?;
        let m = *WrMethod::ALL
            .get(method as usize)
            .ok_or_else(|| unknown("win ratio method", method))?;
        let set = wr_interval(m, &a.counts, &a.alpha).map_err(fail)?;
        write_out(out, to_set(&set))
    })
}

/// Full report with every method, as JSON. Free with `mwr_string_free`.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mwr_analysis_report_json(
    h: *const MwrAnalysis,
    out: *mut *mut c_char,
) -> MwrStatus {
    guard(|| {
        let a = handle(h)?;
        let report = analyze(&AnalysisRequest::all(a.counts, a.alpha)).map_err(fail)?;
        write_out(out, into_c_string(to_json(&report))?)
    })
}

fn design_target(kind: u32, p1: f64, p2: f64) -> Result<DesignTarget, MwrStatus> {
    Ok(match kind {
        0 => DesignTarget::NetBenefit {
            delta: p1,
            pi_decided: p2,
        },
        1 => DesignTarget::WinRatio {
            ratio: p1,
            pi_decided: p2,
        },
        2 => DesignTarget::Raw {
            pi_win: p1,
            pi_loss: p2,
        },
        v => return Err(unknown("design kind", v)),
    })
}

/// Pairs needed for `target_power`; `kind` is an `MwrDesignKind` value.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mwr_sample_size(
    kind: u32,
    p1: f64,
    p2: f64,
    alpha: f64,
    target_power: f64,
    out: *mut u64,
) -> MwrStatus {
    guard(|| {
        let t = design_target(kind, p1, p2)?;
        let a = make_alpha(alpha, false)?;
        write_out(out, sample_size(&t, &a, target_power).map_err(fail)?)
    })
}

/// Approximate power with `n_pairs` pairs.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mwr_power(
    kind: u32,
    p1: f64,
    p2: f64,
    alpha: f64,
    n_pairs: u64,
    out: *mut f64,
) -> MwrStatus {
    guard(|| {
        let t = design_target(kind, p1, p2)?;
        let a = make_alpha(alpha, false)?;
        write_out(out, power(n_pairs, &t, &a).map_err(fail)?)
    })
}

/// Run a simulation grid given as TOML text; writes the CSV report.
/// `threads` = 0 uses every core. Free the result with `mwr_string_free`.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string and `out_csv` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mwr_simulate(
    config_toml: *const c_char,
    threads: u32,
    out_csv: *mut *mut c_char,
) -> MwrStatus {
    guard(|| {
        if config_toml.is_null() {
            return Err(null_ptr("config"));
        }
        let text = CStr::from_ptr(config_toml).to_str().map_err(|_| {
            set_error("config is not valid UTF-8");
            MwrStatus::InvalidArgument
        })?;
        let cfg = GridConfig::from_toml(text).map_err(fail)?;
        if cfg.replicates == 0 {
            return Err(fail(Error::InvalidArgument(
                "replicates must be at least 1".into(),
            )));
        }
        let scenarios = cfg.scenarios().map_err(fail)?;
        let threads = if threads == 0 {
            rayon_threads()
        } else {
            threads as usize
        };
        let report = run_grid_with_threads(&scenarios, threads).map_err(fail)?;
        write_out(out_csv, into_c_string(report.to_csv())?)
    })
}

fn rayon_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Free a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mwr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
