//! C ABI over `polyshrink`.
//!
//! Estimators are opaque heap handles created by the `ps_estimator_*`
//! constructors and released with [`ps_estimator_free`]. Every fallible
//! function returns a [`PsStatus`]; on failure a description is available
//! from [`ps_last_error_message`] on the calling thread. Panics never cross
//! the boundary and are reported as [`PsStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use polyshrink::estimators::{self, CoefficientConvention, ShrinkagePolynomial};
use polyshrink::montecarlo::{simulate_risk, SimulationPlan};
use polyshrink::ncx2::{self, NoncentralChiSquare, SeriesControl};
use polyshrink::risk::{self, RiskMethod, RiskReport};
use polyshrink::Error;

pub const PS_CONVENTION_THEOREM: u32 = 0;
pub const PS_CONVENTION_SIMULATION: u32 = 1;

pub const PS_METHOD_EXACT_GENERAL: u32 = 0;
pub const PS_METHOD_EXACT_CHAINED: u32 = 1;
pub const PS_METHOD_MONTE_CARLO: u32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    NullPointer = 1,
    NonIntegrable = 2,
    TruncationFailure = 3,
    DomainViolation = 4,
    DimensionTooSmall = 5,
    SingularObservation = 6,
    LengthMismatch = 7,
    ConventionUnsupported = 8,
    InvalidParameter = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Opaque estimator handle.
pub struct PsEstimator {
    inner: ShrinkagePolynomial,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsRiskReport {
    pub risk: f64,
    pub ratio_to_mle: f64,
    /// NaN for exact methods.
    pub stderr: f64,
    pub p: usize,
    pub lambda: f64,
    pub omega: f64,
    /// One of the `PS_METHOD_*` constants.
    pub method: u32,
}

impl From<&RiskReport> for PsRiskReport {
    fn from(r: &RiskReport) -> Self {
        Self {
            risk: r.risk,
            ratio_to_mle: r.ratio_to_mle,
            stderr: r.stderr.unwrap_or(f64::NAN),
            p: r.p,
            lambda: r.lambda,
            omega: r.omega,
            method: match r.method {
                RiskMethod::ExactGeneral => PS_METHOD_EXACT_GENERAL,
                RiskMethod::ExactChained => PS_METHOD_EXACT_CHAINED,
                RiskMethod::MonteCarlo => PS_METHOD_MONTE_CARLO,
            },
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PsStatus {
    match e {
        Error::NonIntegrable { .. } => PsStatus::NonIntegrable,
        Error::TruncationFailure { .. } => PsStatus::TruncationFailure,
        Error::DomainViolation(_) => PsStatus::DomainViolation,
        Error::DimensionTooSmall { .. } => PsStatus::DimensionTooSmall,
        Error::SingularObservation => PsStatus::SingularObservation,
        Error::LengthMismatch { .. } => PsStatus::LengthMismatch,
        Error::ConventionUnsupported { .. } => PsStatus::ConventionUnsupported,
        Error::InvalidParameter(_) => PsStatus::InvalidParameter,
    }
}

struct Failure(PsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(PsStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            PsStatus::Panic
        }
    }
}

fn convention(code: u32) -> Result<CoefficientConvention, Failure> {
    match code {
        PS_CONVENTION_THEOREM => Ok(CoefficientConvention::Theorem),
        PS_CONVENTION_SIMULATION => Ok(CoefficientConvention::Simulation),
        _ => Err(Failure(
            PsStatus::InvalidParameter,
            format!("unknown convention code {code}"),
        )),
    }
}

unsafe fn out_ref<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| null(what))
}

unsafe fn estimator_ref<'a>(ptr: *const PsEstimator) -> Result<&'a ShrinkagePolynomial, Failure> {
    ptr.as_ref().map(|e| &e.inner).ok_or_else(|| null("estimator"))
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn emit(out: *mut *mut PsEstimator, est: Result<ShrinkagePolynomial, Error>) -> Result<(), Failure> {
    let slot = out_ref(out, "out")?;
    *slot = Box::into_raw(Box::new(PsEstimator { inner: est? }));
    Ok(())
}

/// The MLE `x` itself; `omega` is the loss weight.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn ps_estimator_mle(omega: f64, out: *mut *mut PsEstimator) -> PsStatus {
    guard(|| emit(out, estimators::mle(omega)))
}

/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn ps_estimator_james_stein(p: usize, omega: f64, out: *mut *mut PsEstimator) -> PsStatus {
    guard(|| emit(out, estimators::james_stein(p, omega)))
}

/// Degree 1 to 4 member of the polynomial chain.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn ps_estimator_poly(
    degree: u32,
    p: usize,
    omega: f64,
    convention_code: u32,
    out: *mut *mut PsEstimator,
) -> PsStatus {
    guard(|| {
        let conv = convention(convention_code)?;
        emit(out, estimators::poly(degree as usize, p, omega, conv))
    })
}

/// Arbitrary coefficients `gamma_1..gamma_n`; `dimension` 0 means untuned.
///
/// # Safety
/// `coeffs` must point to `n` readable doubles (or may be null when `n` is
/// 0) and `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_estimator_custom(
    omega: f64,
    coeffs: *const f64,
    n: usize,
    dimension: usize,
    out: *mut *mut PsEstimator,
) -> PsStatus {
    guard(|| {
        let gamma = slice(coeffs, n, "coeffs")?.to_vec();
        let dim = (dimension > 0).then_some(dimension);
        emit(out, ShrinkagePolynomial::custom(omega, gamma, dim))
    })
}

/// # Safety
/// `est` must be null or a handle from a `ps_estimator_*` constructor that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ps_estimator_free(est: *mut PsEstimator) {
    if !est.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(est))));
    }
}

/// Number of coefficients, 0 for a null handle.
///
/// # Safety
/// `est` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_estimator_degree(est: *const PsEstimator) -> usize {
    est.as_ref().map_or(0, |e| e.inner.degree())
}

/// Copies up to `cap` coefficients into `out` and stores the full count in
/// `len`; returns `BufferTooSmall` if `cap` was insufficient.
///
/// # Safety
/// `est` must be a live handle, `out` valid for `cap` writes (or null when
/// `cap` is 0) and `len` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ps_estimator_coeffs(
    est: *const PsEstimator,
    out: *mut f64,
    cap: usize,
    len: *mut usize,
) -> PsStatus {
    guard(|| {
        let est = estimator_ref(est)?;
        let len = out_ref(len, "len")?;
        let coeffs = est.coeffs();
        *len = coeffs.len();
        if cap > 0 {
            if out.is_null() {
                return Err(null("out"));
            }
            let n = cap.min(coeffs.len());
            ptr::copy_nonoverlapping(coeffs.as_ptr(), out, n);
        }
        if cap < coeffs.len() {
            return Err(Failure(
                PsStatus::BufferTooSmall,
                format!("buffer holds {cap} coefficients, need {}", coeffs.len()),
            ));
        }
        Ok(())
    })
}

/// # Safety
/// `est` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ps_estimator_omega(est: *const PsEstimator, out: *mut f64) -> PsStatus {
    guard(|| {
        *out_ref(out, "out")? = estimator_ref(est)?.omega();
        Ok(())
    })
}

/// `1 + sum gamma_m / norm_sq^m`.
///
/// # Safety
/// `est` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ps_shrinkage_factor(est: *const PsEstimator, norm_sq: f64, out: *mut f64) -> PsStatus {
    guard(|| {
        *out_ref(out, "out")? = estimator_ref(est)?.shrinkage_factor(norm_sq)?;
        Ok(())
    })
}

/// Applies the estimator to `x[0..n]`, writing `n` values to `out`.
///
/// # Safety
/// `x` must be readable and `out` writable for `n` doubles; they may alias.
#[no_mangle]
pub unsafe extern "C" fn ps_estimator_apply(
    est: *const PsEstimator,
    x: *const f64,
    n: usize,
    out: *mut f64,
) -> PsStatus {
    guard(|| {
        let est = estimator_ref(est)?;
        let x = slice(x, n, "x")?.to_vec();
        if n > 0 && out.is_null() {
            return Err(null("out"));
        }
        let mut delta = vec![0.0; n];
        est.estimate_into(&x, &mut delta)?;
        if n > 0 {
            ptr::copy_nonoverlapping(delta.as_ptr(), out, n);
        }
        Ok(())
    })
}

fn write_report(out: *mut PsRiskReport, r: Result<RiskReport, Error>) -> Result<(), Failure> {
    let r = r?;
    // SAFETY: forwarded from the callers' contracts
    unsafe { *out_ref(out, "out")? = PsRiskReport::from(&r) };
    Ok(())
}

/// Exact risk of any estimator with `p > 4M - 2`.
///
/// # Safety
/// `est` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ps_exact_risk_general(
    est: *const PsEstimator,
    p: usize,
    lambda: f64,
    out: *mut PsRiskReport,
) -> PsStatus {
    guard(|| {
        let est = estimator_ref(est)?;
        write_report(out, risk::exact_risk_general(est, p, lambda, &SeriesControl::default()))
    })
}

/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ps_exact_risk_js(p: usize, omega: f64, lambda: f64, out: *mut PsRiskReport) -> PsStatus {
    guard(|| write_report(out, risk::exact_risk_js(p, omega, lambda, &SeriesControl::default())))
}

/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ps_exact_risk_chained(
    degree: u32,
    p: usize,
    omega: f64,
    lambda: f64,
    convention_code: u32,
    out: *mut PsRiskReport,
) -> PsStatus {
    guard(|| {
        let conv = convention(convention_code)?;
        let r = risk::exact_risk_chained(degree as usize, p, omega, lambda, conv, &SeriesControl::default());
        write_report(out, r)
    })
}

/// Monte Carlo risks of `n` estimators on common draws; writes `n` reports.
///
/// # Safety
/// `ests` must point to `n` live handles and `out` be valid for `n` writes.
#[no_mangle]
pub unsafe extern "C" fn ps_simulate_risk(
    ests: *const *const PsEstimator,
    n: usize,
    p: usize,
    lambda: f64,
    omega: f64,
    replications: u64,
    seed: u64,
    out: *mut PsRiskReport,
) -> PsStatus {
    guard(|| {
        if ests.is_null() || out.is_null() {
            return Err(null("ests or out"));
        }
        let handles = std::slice::from_raw_parts(ests, n);
        let list = handles
            .iter()
            .map(|&h| estimator_ref(h).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        let plan = SimulationPlan::new(p, lambda, omega, list, replications, seed);
        let estimates = simulate_risk(&plan)?;
        let out = std::slice::from_raw_parts_mut(out, n);
        for ((slot, est), mc) in out.iter_mut().zip(&plan.estimators).zip(&estimates) {
            *slot = PsRiskReport::from(&mc.to_report(&plan, est));
        }
        Ok(())
    })
}

fn write_value(out: *mut f64, v: Result<f64, Error>) -> Result<(), Failure> {
    let v = v?;
    // SAFETY: forwarded from the callers' contracts
    unsafe { *out_ref(out, "out")? = v };
    Ok(())
}

/// `E[U^v]` for `U ~ chi'^2_p(lambda)`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ps_ncx2_moment(p: usize, lambda: f64, v: f64, out: *mut f64) -> PsStatus {
    guard(|| {
        let d = NoncentralChiSquare::new(p, lambda)?;
        write_value(out, d.moment(v, &SeriesControl::default()))
    })
}

/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ps_ncx2_inverse_moment(p: usize, lambda: f64, m: u32, out: *mut f64) -> PsStatus {
    guard(|| {
        let d = NoncentralChiSquare::new(p, lambda)?;
        write_value(out, d.inverse_moment(m, &SeriesControl::default()))
    })
}

/// `d/d lambda E[U^v]`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ps_ncx2_moment_derivative(p: usize, lambda: f64, v: f64, out: *mut f64) -> PsStatus {
    guard(|| {
        let d = NoncentralChiSquare::new(p, lambda)?;
        write_value(out, d.moment_derivative(v, &SeriesControl::default()))
    })
}

/// `E[U^r] / E[U^s]`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ps_moment_ratio(p: usize, r: f64, s: f64, lambda: f64, out: *mut f64) -> PsStatus {
    guard(|| write_value(out, ncx2::moment_ratio(p, r, s, lambda, &SeriesControl::default())))
}

/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ps_sup_inverse_ratio(p: usize, r: f64, out: *mut f64) -> PsStatus {
    guard(|| write_value(out, ncx2::sup_inverse_ratio(p, r)))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ps_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
