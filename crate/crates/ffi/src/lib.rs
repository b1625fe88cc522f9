//! C interface to `dynsys`.
//!
//! Handles are opaque pointers created by `ds_*_new`/`ds_*_parse`/`ds_integrate`
//! and released with the matching `ds_*_free`. Every fallible call returns a
//! [`DsStatus`]; the message for the most recent failure on the calling thread
//! is available from [`ds_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dynsys::continuous::{
    check_f_relatedness, default_samples, integrate, ContinuousError, ContinuousSystem, Domain, IntegrateOptions,
    SmoothMap, Termination, Trajectory, DEFAULT_SAMPLE_COUNT,
};
use dynsys::discrete::{check_dt_morphism, DiscreteMap, DiscreteSystem};
use dynsys::expr::{Expr, ExprError, VectorExpr};
use dynsys::report::{CheckReport, Verdict};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Domain = 4,
    Dimension = 5,
    Integration = 6,
    Invalid = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsTermination {
    ReachedSpan = 0,
    BlowUp = 1,
    LeftDomain = 2,
}

/// Result of a relatedness check. `tolerance` is NaN for exact checks.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsCheckReport {
    pub passed: bool,
    pub exact: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub samples: usize,
}

pub struct DsExpr(Expr);
pub struct DsSystem(ContinuousSystem);
pub struct DsTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl ToString) {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(DsStatus, String);

impl From<ExprError> for Failure {
    fn from(e: ExprError) -> Self {
        let status = match e {
            ExprError::Syntax { .. } | ExprError::UnknownIdentifier { .. } => DsStatus::Parse,
            ExprError::Domain { .. } => DsStatus::Domain,
            _ => DsStatus::Dimension,
        };
        Failure(status, e.to_string())
    }
}

impl From<ContinuousError> for Failure {
    fn from(e: ContinuousError) -> Self {
        let status = match &e {
            ContinuousError::Expr(inner) => return Failure::from(inner.clone()),
            ContinuousError::OutsideDomain { .. } => DsStatus::Domain,
            ContinuousError::Dimension { .. } => DsStatus::Dimension,
            ContinuousError::StepSizeUnderflow { .. } | ContinuousError::MaxSteps { .. } => DsStatus::Integration,
            _ => DsStatus::Invalid,
        };
        Failure(status, e.to_string())
    }
}

impl From<dynsys::discrete::DiscreteError> for Failure {
    fn from(e: dynsys::discrete::DiscreteError) -> Self {
        Failure(DsStatus::Invalid, e.to_string())
    }
}

fn null() -> Failure {
    Failure(DsStatus::NullPointer, "null pointer argument".into())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> DsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => DsStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DsStatus::Panic
        }
    }
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s).to_str().map_err(|e| Failure(DsStatus::InvalidUtf8, e.to_string()))
}

unsafe fn texts<'a>(s: *const *const c_char, n: usize) -> Result<Vec<&'a str>, Failure> {
    if s.is_null() && n > 0 {
        return Err(null());
    }
    (0..n).map(|i| text(*s.add(i))).collect()
}

unsafe fn slice<'a, T>(p: *const T, n: usize) -> Result<&'a [T], Failure> {
    match (p.is_null(), n) {
        (_, 0) => Ok(&[]),
        (true, _) => Err(null()),
        (false, _) => Ok(std::slice::from_raw_parts(p, n)),
    }
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    *out = value;
    Ok(())
}

fn to_c(report: &CheckReport) -> DsCheckReport {
    DsCheckReport {
        passed: report.verdict == Verdict::Pass,
        exact: report.tolerance.is_none(),
        residual: report.residual,
        tolerance: report.tolerance.unwrap_or(f64::NAN),
        samples: report.samples,
    }
}

/// Message for the last failed call on this thread, or NULL. Free with
/// [`ds_string_free`].
#[no_mangle]
pub extern "C" fn ds_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ds_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses an expression in variables `x1..x{arity}` and `t`.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ds_expr_parse(source: *const c_char, arity: usize, out: *mut *mut DsExpr) -> DsStatus {
    guard(|| {
        let e = dynsys::expr::parse(text(source)?, arity)?;
        store(out, DsExpr(e))
    })
}

/// # Safety
/// `point` must hold `n` values, `n` equal to the arity.
#[no_mangle]
pub unsafe extern "C" fn ds_expr_eval(
    expr: *const DsExpr,
    point: *const f64,
    n: usize,
    t: f64,
    out: *mut f64,
) -> DsStatus {
    guard(|| {
        let e = &handle(expr)?.0;
        let v = e.eval(slice(point, n)?, t)?;
        put(out, v)
    })
}

/// Symbolic partial derivative in `x{var}` (`var` starts at 1).
///
/// # Safety
/// `expr` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ds_expr_derivative(expr: *const DsExpr, var: usize, out: *mut *mut DsExpr) -> DsStatus {
    guard(|| {
        let d = handle(expr)?.0.differentiate(var)?;
        store(out, DsExpr(d))
    })
}

/// Printed form, parseable by [`ds_expr_parse`]. Free with [`ds_string_free`].
///
/// # Safety
/// `expr` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ds_expr_to_string(expr: *const DsExpr) -> *mut c_char {
    match expr.as_ref() {
        Some(e) => CString::new(e.0.to_string()).map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `expr` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ds_expr_free(expr: *mut DsExpr) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}

/// Continuous system `ẋ = field(x, t)` on the open box `(lo, hi)`. NULL bounds
/// mean the whole space.
///
/// # Safety
/// `field` holds `n` strings; `lo`/`hi` are NULL or hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn ds_system_new(
    field: *const *const c_char,
    n: usize,
    lo: *const f64,
    hi: *const f64,
    out: *mut *mut DsSystem,
) -> DsStatus {
    guard(|| {
        let sources = texts(field, n)?;
        let bound = |p: *const f64, fill: f64| -> Result<Vec<f64>, Failure> {
            if p.is_null() {
                Ok(vec![fill; n])
            } else {
                Ok(slice(p, n)?.to_vec())
            }
        };
        let domain = Domain::new(bound(lo, f64::NEG_INFINITY)?, bound(hi, f64::INFINITY)?)?;
        let system = ContinuousSystem::new(domain, VectorExpr::parse(&sources, n)?)?;
        store(out, DsSystem(system))
    })
}

/// # Safety
/// `system` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ds_system_dimension(system: *const DsSystem) -> usize {
    system.as_ref().map_or(0, |s| s.0.dimension())
}

/// # Safety
/// `system` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ds_system_free(system: *mut DsSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Integrates from `x0` over `[0, t_end]` (`t_end < 0` runs backward).
/// Non-positive `rtol`/`atol` select the defaults. Early termination still
/// returns `Ok`; inspect [`ds_trajectory_termination`].
///
/// # Safety
/// `x0` holds `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ds_integrate(
    system: *const DsSystem,
    x0: *const f64,
    n: usize,
    t_end: f64,
    rtol: f64,
    atol: f64,
    out: *mut *mut DsTrajectory,
) -> DsStatus {
    guard(|| {
        let sys = &handle(system)?.0;
        let mut opts = IntegrateOptions::default();
        if rtol > 0.0 {
            opts.rtol = rtol;
        }
        if atol > 0.0 {
            opts.atol = atol;
        }
        let traj = integrate(sys, slice(x0, n)?, t_end, &opts)?;
        store(out, DsTrajectory(traj))
    })
}

/// # Safety
/// `traj` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ds_trajectory_len(traj: *const DsTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `traj` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ds_trajectory_termination(traj: *const DsTrajectory) -> DsTermination {
    match traj.as_ref().map(|t| t.0.termination) {
        Some(Termination::BlowUp) => DsTermination::BlowUp,
        Some(Termination::LeftDomain) => DsTermination::LeftDomain,
        _ => DsTermination::ReachedSpan,
    }
}

/// Time and state of node `i`. `state` must have room for the dimension.
///
/// # Safety
/// `time` is writable; `state` holds `n` writable values.
#[no_mangle]
pub unsafe extern "C" fn ds_trajectory_node(
    traj: *const DsTrajectory,
    i: usize,
    time: *mut f64,
    state: *mut f64,
    n: usize,
) -> DsStatus {
    guard(|| {
        let t = &handle(traj)?.0;
        let x = t
            .states
            .get(i)
            .ok_or_else(|| Failure(DsStatus::Invalid, format!("node {i} out of range ({} nodes)", t.len())))?;
        write_state(x, state, n)?;
        put(time, t.times[i])
    })
}

unsafe fn write_state(x: &[f64], state: *mut f64, n: usize) -> Result<(), Failure> {
    if n != x.len() {
        return Err(Failure(DsStatus::Dimension, format!("buffer holds {n} values, state has {}", x.len())));
    }
    if state.is_null() {
        return Err(null());
    }
    ptr::copy_nonoverlapping(x.as_ptr(), state, n);
    Ok(())
}

/// Dense-output state at time `t` inside the covered interval.
///
/// # Safety
/// `state` holds `n` writable values.
#[no_mangle]
pub unsafe extern "C" fn ds_trajectory_state_at(
    traj: *const DsTrajectory,
    t: f64,
    state: *mut f64,
    n: usize,
) -> DsStatus {
    guard(|| {
        let tr = &handle(traj)?.0;
        let x = tr
            .state_at(t)
            .ok_or_else(|| Failure(DsStatus::Domain, format!("t = {t} outside [{}, {}]", tr.t_lo, tr.t_hi)))?;
        write_state(&x, state, n)
    })
}

/// # Safety
/// `traj` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ds_trajectory_free(traj: *mut DsTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Checks `J_f X = Y∘f` at `samples` default sample points (0 selects the
/// default count). `map` holds one expression per target coordinate.
///
/// # Safety
/// `map` holds `map_len` strings; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn ds_check_relatedness(
    map: *const *const c_char,
    map_len: usize,
    source: *const DsSystem,
    target: *const DsSystem,
    samples: usize,
    tol: f64,
    out: *mut DsCheckReport,
) -> DsStatus {
    guard(|| {
        let (src, dst) = (&handle(source)?.0, &handle(target)?.0);
        let f = SmoothMap::parse(&texts(map, map_len)?, src.dimension())?;
        let count = if samples == 0 { DEFAULT_SAMPLE_COUNT } else { samples };
        let report = check_f_relatedness(&f, src, dst, &default_samples(src.domain(), count), tol)?;
        put(out, to_c(&report))
    })
}

/// Exact check `β∘α = α∘α_src` for finite systems given as index tables.
///
/// # Safety
/// Each table holds the stated number of indices; `alpha` holds `src_len`.
#[no_mangle]
pub unsafe extern "C" fn ds_check_discrete_morphism(
    src_table: *const usize,
    src_len: usize,
    dst_table: *const usize,
    dst_len: usize,
    alpha: *const usize,
    out: *mut DsCheckReport,
) -> DsStatus {
    guard(|| {
        let names = |n: usize| (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
        let src = DiscreteSystem::from_indices(names(src_len), slice(src_table, src_len)?.to_vec())?;
        let dst = DiscreteSystem::from_indices(names(dst_len), slice(dst_table, dst_len)?.to_vec())?;
        let a = DiscreteMap::from_indices(slice(alpha, src_len)?.to_vec(), dst_len)?;
        put(out, to_c(&check_dt_morphism(&a, &src, &dst)?))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_status_codes() {
        assert_eq!(guard(|| panic!("boom")), DsStatus::Panic);
        let msg = ds_last_error();
        assert_eq!(unsafe { CStr::from_ptr(msg) }.to_str().unwrap(), "internal panic");
        unsafe { ds_string_free(msg) };
    }

    #[test]
    fn exact_reports_have_nan_tolerance() {
        let r = to_c(&CheckReport::exact(4, 1, Some("x".into())));
        assert!(!r.passed && r.exact && r.tolerance.is_nan());
        assert_eq!(r.samples, 4);
        let r = to_c(&CheckReport::numeric(1e-3, 1e-2, 9, None));
        assert!(r.passed && !r.exact);
    }

    #[test]
    fn nul_bytes_in_messages_survive() {
        set_error("a\0b");
        let msg = ds_last_error();
        assert_eq!(unsafe { CStr::from_ptr(msg) }.to_str().unwrap(), "a b");
        unsafe { ds_string_free(msg) };
    }
}
