//! C ABI over `lpactive`.
//!
//! Every fallible call returns an [`LpaStatus`]; on failure the message is
//! available from [`lpa_last_error_message`] on the same thread. Handles are
//! opaque, created by the library and released with the matching `_free`.
//! Index arrays are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use lpactive::activity::prediction_ratios;
use lpactive::generate::{generate, InstanceKind, SizeRange};
use lpactive::ipm::{solve, SolveOptions, SolveStatus, SolveTrace, StopRule};
use lpactive::theory::perfect_perturbation;
use lpactive::{actual_active_set, ensure_full_rank, load_mps, Error, Oracle, StandardLP};
use nalgebra::DVector;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    OutOfRange = 4,
    Io = 5,
    Parse = 6,
    UnsupportedBound = 7,
    Infeasible = 8,
    RankDeficient = 9,
    IllConditioned = 10,
    Contract = 11,
    SolverStatus = 12,
    Internal = 13,
    Panic = 14,
}

/// Problem data in standard form `min cᵀx, Ax = b, x ≥ 0`.
pub struct LpaProblem {
    lp: StandardLP,
}

/// Iteration history of one solve.
pub struct LpaTrace {
    trace: SolveTrace,
}

/// Solver settings. Stopping tests with a value ≤ 0 are disabled; with all
/// three disabled the run stops at relres < 1e-8.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LpaSolveOptions {
    pub initial_perturbation: f64,
    pub eta: f64,
    pub zeta: f64,
    pub cutoff: f64,
    pub step_fraction: f64,
    pub max_iters: u32,
    pub mu_cap: f64,
    pub relres_tol: f64,
    /// Perform exactly this many iterations when > 0.
    pub iterations: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LpaRatios {
    pub false_ratio: f64,
    pub missed_ratio: f64,
    pub correct_ratio: f64,
}

/// How a run ended, reported by [`lpa_trace_status`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpaRunStatus {
    Converged = 0,
    IterationTarget = 1,
    IterLimit = 2,
    IllConditioned = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> LpaStatus {
    match e {
        Error::Io { .. } => LpaStatus::Io,
        Error::Parse { .. } | Error::Csv(_) => LpaStatus::Parse,
        Error::UnsupportedBound { .. } => LpaStatus::UnsupportedBound,
        Error::Infeasible { .. } => LpaStatus::Infeasible,
        Error::RankDeficient(_) => LpaStatus::RankDeficient,
        Error::IllConditioned { .. } => LpaStatus::IllConditioned,
        Error::InvalidArgument(_) | Error::Sampling(_) => LpaStatus::InvalidArgument,
        Error::Contract(_) => LpaStatus::Contract,
        Error::Status(_) => LpaStatus::SolverStatus,
        Error::Internal(_) => LpaStatus::Internal,
    }
}

struct Failure(LpaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail(status: LpaStatus, msg: &str) -> Failure {
    Failure(status, msg.to_string())
}

/// Runs `f`, records any error message, and converts panics to `Panic`.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LpaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            LpaStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LpaStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(LpaStatus::NullPointer, "null array"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(LpaStatus::NullPointer, "null output pointer"))
}

unsafe fn problem<'a>(p: *const LpaProblem) -> Result<&'a LpaProblem, Failure> {
    p.as_ref().ok_or_else(|| fail(LpaStatus::NullPointer, "null problem handle"))
}

unsafe fn trace<'a>(t: *const LpaTrace) -> Result<&'a LpaTrace, Failure> {
    t.as_ref().ok_or_else(|| fail(LpaStatus::NullPointer, "null trace handle"))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(fail(LpaStatus::NullPointer, "null path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(LpaStatus::InvalidArgument, "path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

/// Copies `src` into `buf`; `len` always receives the full length.
unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, cap: usize, len: *mut usize) -> Result<(), Failure> {
    *out_ref(len)? = src.len();
    if src.len() > cap {
        return Err(fail(
            LpaStatus::BufferTooSmall,
            &format!("need {} entries, buffer holds {cap}", src.len()),
        ));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return Err(fail(LpaStatus::NullPointer, "null buffer"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn lpa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn lpa_solve_options_default() -> LpaSolveOptions {
    let d = SolveOptions::default();
    LpaSolveOptions {
        initial_perturbation: d.initial_perturbation,
        eta: d.eta,
        zeta: d.zeta,
        cutoff: d.cutoff,
        step_fraction: d.step_fraction,
        max_iters: d.max_iters as u32,
        mu_cap: 0.0,
        relres_tol: 1e-8,
        iterations: 0,
    }
}

fn to_options(o: &LpaSolveOptions) -> SolveOptions {
    let stop = StopRule {
        mu_cap: (o.mu_cap > 0.0).then_some(o.mu_cap),
        relres_tol: (o.relres_tol > 0.0).then_some(o.relres_tol),
        iterations: (o.iterations > 0).then_some(o.iterations as usize),
    };
    let stop = if stop == StopRule::default() {
        StopRule::relres(1e-8)
    } else {
        stop
    };
    SolveOptions {
        initial_perturbation: o.initial_perturbation,
        eta: o.eta,
        zeta: o.zeta,
        cutoff: o.cutoff,
        step_fraction: o.step_fraction,
        max_iters: o.max_iters as usize,
        stop,
        ..SolveOptions::default()
    }
}

fn boxed_problem(lp: StandardLP, out: *mut *mut LpaProblem) -> Result<(), Failure> {
    let slot = unsafe { out_ref(out)? };
    *slot = Box::into_raw(Box::new(LpaProblem { lp }));
    Ok(())
}

/// Reads an MPS file and removes redundant equality rows.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lpa_problem_from_mps(path: *const c_char, out: *mut *mut LpaProblem) -> LpaStatus {
    guard(|| {
        let path = path_arg(path)?;
        let lp = ensure_full_rank(&load_mps(&path)?)?;
        boxed_problem(lp, out)
    })
}

/// Random instance: `kind` 0 gives a problem built around a feasible point,
/// 1 one built around a degenerate optimal solution. `m` is drawn from the
/// open interval `(m_lo, m_hi)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lpa_problem_generate(
    kind: u32,
    seed: u64,
    m_lo: usize,
    m_hi: usize,
    out: *mut *mut LpaProblem,
) -> LpaStatus {
    guard(|| {
        let kind = match kind {
            0 => InstanceKind::FeasiblePoint,
            1 => InstanceKind::DegenerateSolution,
            _ => return Err(fail(LpaStatus::InvalidArgument, "kind must be 0 or 1")),
        };
        if m_lo + 1 >= m_hi {
            return Err(fail(LpaStatus::InvalidArgument, "empty m range"));
        }
        boxed_problem(generate(kind, seed, SizeRange::with_m(m_lo, m_hi)).lp, out)
    })
}

/// Builds a problem from a row-major `m×n` matrix.
///
/// # Safety
/// `a` must hold `m*n` values, `b` `m`, `c` `n`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lpa_problem_from_dense(
    m: usize,
    n: usize,
    a: *const f64,
    b: *const f64,
    c: *const f64,
    out: *mut *mut LpaProblem,
) -> LpaStatus {
    guard(|| {
        let len = m
            .checked_mul(n)
            .ok_or_else(|| fail(LpaStatus::InvalidArgument, "m*n overflows"))?;
        let lp = StandardLP::from_rows(m, n, slice(a, len)?, slice(b, m)?, slice(c, n)?)?;
        boxed_problem(lp, out)
    })
}

/// # Safety
/// `p` must be a live handle; `m` and `n` writable.
#[no_mangle]
pub unsafe extern "C" fn lpa_problem_dims(p: *const LpaProblem, m: *mut usize, n: *mut usize) -> LpaStatus {
    guard(|| {
        let lp = &problem(p)?.lp;
        *out_ref(m)? = lp.m();
        *out_ref(n)? = lp.n();
        Ok(())
    })
}

/// Objective value `cᵀx` plus any constant carried from the input.
///
/// # Safety
/// `p` must be a live handle, `x` hold `n` values, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lpa_problem_objective(
    p: *const LpaProblem,
    x: *const f64,
    n: usize,
    out: *mut f64,
) -> LpaStatus {
    guard(|| {
        let lp = &problem(p)?.lp;
        if n != lp.n() {
            return Err(fail(LpaStatus::InvalidArgument, "x has the wrong length"));
        }
        *out_ref(out)? = lp.objective(&DVector::from_column_slice(slice(x, n)?));
        Ok(())
    })
}

/// Active set `{i : x_i < 1e-5}` of a reference solution; `oracle` 0 uses
/// the simplex method, 1 the unperturbed interior point method.
///
/// # Safety
/// `p` must be a live handle; `buf` must hold `cap` entries; `len` writable.
#[no_mangle]
pub unsafe extern "C" fn lpa_problem_active_set(
    p: *const LpaProblem,
    oracle: u32,
    buf: *mut usize,
    cap: usize,
    len: *mut usize,
) -> LpaStatus {
    guard(|| {
        let oracle = match oracle {
            0 => Oracle::Simplex,
            1 => Oracle::Ipm,
            _ => return Err(fail(LpaStatus::InvalidArgument, "oracle must be 0 or 1")),
        };
        let label = actual_active_set(&problem(p)?.lp, oracle)?;
        copy_out(&label.indices, buf, cap, len)
    })
}

/// # Safety
/// `p` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lpa_problem_free(p: *mut LpaProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Runs the interior point method from Mehrotra's starting point. `options`
/// may be null for the defaults.
///
/// # Safety
/// `p` must be a live handle; `options` null or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lpa_solve(
    p: *const LpaProblem,
    options: *const LpaSolveOptions,
    out: *mut *mut LpaTrace,
) -> LpaStatus {
    guard(|| {
        let lp = &problem(p)?.lp;
        let opts = match options.as_ref() {
            Some(o) => to_options(o),
            None => to_options(&lpa_solve_options_default()),
        };
        let trace = solve(lp, &opts)?;
        *out_ref(out)? = Box::into_raw(Box::new(LpaTrace { trace }));
        Ok(())
    })
}

/// Number of recorded iterations.
///
/// # Safety
/// `t` must be a live handle; `len` writable.
#[no_mangle]
pub unsafe extern "C" fn lpa_trace_len(t: *const LpaTrace, len: *mut usize) -> LpaStatus {
    guard(|| {
        *out_ref(len)? = trace(t)?.trace.len();
        Ok(())
    })
}

/// `iteration` receives the failing iteration for `IllConditioned`, else 0.
///
/// # Safety
/// `t` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn lpa_trace_status(
    t: *const LpaTrace,
    status: *mut LpaRunStatus,
    iteration: *mut usize,
) -> LpaStatus {
    guard(|| {
        let (s, k) = match trace(t)?.trace.status {
            SolveStatus::Converged => (LpaRunStatus::Converged, 0),
            SolveStatus::IterationTarget => (LpaRunStatus::IterationTarget, 0),
            SolveStatus::IterLimit => (LpaRunStatus::IterLimit, 0),
            SolveStatus::IllConditioned { iteration } => (LpaRunStatus::IllConditioned, iteration),
        };
        *out_ref(status)? = s;
        *out_ref(iteration)? = k;
        Ok(())
    })
}

fn record(t: &LpaTrace, k: usize) -> Result<&lpactive::ipm::IterationRecord, Failure> {
    if k == 0 {
        return Err(fail(LpaStatus::OutOfRange, "iterations are numbered from 1"));
    }
    t.trace
        .at(k)
        .ok_or_else(|| fail(LpaStatus::OutOfRange, &format!("iteration {k} not recorded")))
}

/// Duality measure and relative residual after iteration `k` (1-based).
///
/// # Safety
/// `t` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn lpa_trace_measures(
    t: *const LpaTrace,
    k: usize,
    mu: *mut f64,
    relres: *mut f64,
) -> LpaStatus {
    guard(|| {
        let r = record(trace(t)?, k)?;
        *out_ref(mu)? = r.mu;
        *out_ref(relres)? = r.relres;
        Ok(())
    })
}

/// Copies `x`, `y`, `s` after iteration `k` (0 is the starting point).
/// Any output may be null to skip it.
///
/// # Safety
/// `t` must be a live handle; non-null outputs must hold `n`, `m`, `n` values.
#[no_mangle]
pub unsafe extern "C" fn lpa_trace_iterate(
    t: *const LpaTrace,
    k: usize,
    x: *mut f64,
    y: *mut f64,
    s: *mut f64,
) -> LpaStatus {
    guard(|| {
        let t = trace(t)?;
        let it = if k == 0 {
            &t.trace.start
        } else {
            &record(t, k)?.iterate
        };
        for (src, dst) in [(&it.x, x), (&it.y, y), (&it.s, s)] {
            if !dst.is_null() {
                ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
            }
        }
        Ok(())
    })
}

/// Predicted active set after iteration `k` (empty for `k = 0`).
///
/// # Safety
/// `t` must be a live handle; `buf` must hold `cap` entries; `len` writable.
#[no_mangle]
pub unsafe extern "C" fn lpa_trace_predicted_active(
    t: *const LpaTrace,
    k: usize,
    buf: *mut usize,
    cap: usize,
    len: *mut usize,
) -> LpaStatus {
    guard(|| {
        let set = trace(t)?
            .trace
            .predicted_active(k)
            .ok_or_else(|| fail(LpaStatus::OutOfRange, &format!("iteration {k} not recorded")))?;
        copy_out(&set, buf, cap, len)
    })
}

/// # Safety
/// `t` must be a live handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn lpa_trace_write_csv(t: *const LpaTrace, path: *const c_char) -> LpaStatus {
    guard(|| {
        let t = trace(t)?;
        t.trace.write_csv_file(path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `t` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lpa_trace_free(t: *mut LpaTrace) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// False / missed / correct fractions of a predicted against an actual set.
///
/// # Safety
/// Arrays must hold the stated counts; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lpa_prediction_ratios(
    predicted: *const usize,
    predicted_len: usize,
    actual: *const usize,
    actual_len: usize,
    out: *mut LpaRatios,
) -> LpaStatus {
    guard(|| {
        let r = prediction_ratios(slice(predicted, predicted_len)?, slice(actual, actual_len)?);
        *out_ref(out)? = LpaRatios {
            false_ratio: r.false_ratio,
            missed_ratio: r.missed_ratio,
            correct_ratio: r.correct_ratio,
        };
        Ok(())
    })
}

/// Shift λ with `(x*+λ)∘(s*+λ) = μ̂e` for a complementary pair.
///
/// # Safety
/// `x`, `s` and `lambda` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn lpa_perfect_perturbation(
    x: *const f64,
    s: *const f64,
    n: usize,
    mu_hat: f64,
    lambda: *mut f64,
) -> LpaStatus {
    guard(|| {
        let xs = DVector::from_column_slice(slice(x, n)?);
        let ss = DVector::from_column_slice(slice(s, n)?);
        let l = perfect_perturbation(&xs, &ss, mu_hat)?;
        if n > 0 {
            if lambda.is_null() {
                return Err(fail(LpaStatus::NullPointer, "null output array"));
            }
            ptr::copy_nonoverlapping(l.as_ptr(), lambda, n);
        }
        Ok(())
    })
}
