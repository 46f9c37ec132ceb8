//! C ABI over `bwls`.
//!
//! Every fallible call returns a [`BwlsStatus`]; on failure the message is
//! available from [`bwls_last_error_message`] on the same thread. Objects
//! are handed out as opaque pointers and must be released with the matching
//! `*_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bwls::basis::{BasisDescriptor, BasisSpec, IndexRule, Measure};
use bwls::design::{build_design, DesignParams, MethodSpec, NPolicy};
use bwls::projection::{fit_values, ApproxModel};
use bwls::sampling::{OptimalDensity, SampleSet};
use bwls::seed::rng_for_key;
use bwls::stability::{gram, required_sample_size};
use bwls::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BwlsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The least-squares or interpolation system is singular.
    Singular = 3,
    /// Conditioning hit its rejection cap, or an input sample is unstable.
    Unstable = 4,
    Unsupported = 5,
    /// Malformed JSON or UTF-8.
    Parse = 6,
    BufferTooSmall = 7,
    Panic = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BwlsMeasure {
    /// Uniform on [-1, 1], Legendre polynomials.
    Uniform = 0,
    /// Standard normal, Hermite polynomials.
    Gaussian = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BwlsIndexRule {
    TotalDegree = 0,
    HyperbolicCross = 1,
}

/// Polynomial space V_m with its orthonormal basis.
pub struct BwlsBasis {
    spec: BasisSpec,
}

/// Weighted point set.
pub struct BwlsSample {
    sample: SampleSet,
}

/// Fitted expansion.
pub struct BwlsModel {
    model: ApproxModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> BwlsStatus {
    match e {
        Error::InvalidArgument(_) | Error::NonFinite(_) | Error::ZeroBasisNorm(_) => BwlsStatus::InvalidArgument,
        Error::Singular(_) | Error::RankDeficient { .. } => BwlsStatus::Singular,
        Error::RejectionCapExceeded { .. } | Error::UnstableInput { .. } => BwlsStatus::Unstable,
        Error::Unsupported(_) => BwlsStatus::Unsupported,
        Error::Json(_) => BwlsStatus::Parse,
        Error::GridResolution { .. } | Error::Io(_) | Error::Csv(_) => BwlsStatus::Internal,
    }
}

struct Failure(BwlsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail<T>(status: BwlsStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

/// Runs `f`, records the error message and converts panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BwlsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            BwlsStatus::Ok
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
            BwlsStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: caller passes either null or a live handle from this library.
    unsafe { p.as_ref() }.ok_or_else(|| Failure(BwlsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: as in `get`, for a writable location.
    unsafe { p.as_mut() }.ok_or_else(|| Failure(BwlsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(BwlsStatus::NullPointer, format!("{what} is null"));
    }
    // SAFETY: non-null, NUL-terminated per the contract.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure(BwlsStatus::Parse, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(BwlsStatus::NullPointer, format!("{what} is null"));
    }
    // SAFETY: caller guarantees `len` readable doubles.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn copy_out(src: &[f64], dst: *mut f64, capacity: usize, what: &str) -> Result<(), Failure> {
    if capacity < src.len() {
        return fail(
            BwlsStatus::BufferTooSmall,
            format!("{what} needs {} doubles, buffer holds {capacity}", src.len()),
        );
    }
    if src.is_empty() {
        return Ok(());
    }
    if dst.is_null() {
        return fail(BwlsStatus::NullPointer, format!("{what} buffer is null"));
    }
    // SAFETY: capacity checked; caller guarantees the buffer is writable.
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len()) };
    Ok(())
}

unsafe fn json_out(s: String, out: *mut *mut c_char) -> Result<(), Failure> {
    let slot = unsafe { out_ptr(out, "out")? };
    *slot = CString::new(s).map_err(|_| Failure(BwlsStatus::Internal, "JSON contains NUL".into()))?.into_raw();
    Ok(())
}

/// Message of the last failed call on this thread, or NULL after a
/// success. Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn bwls_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bwls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by a `*_to_json` call.
///
/// # Safety
/// `s` must be NULL or a string from this library that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn bwls_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by CString::into_raw.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Sample size n(delta, eta, m) that makes a draw stable with probability
/// at least 1 - eta.
///
/// # Safety
/// `out` must point to writable storage for one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn bwls_required_sample_size(delta: f64, eta: f64, m: usize, out: *mut usize) -> BwlsStatus {
    guard(|| {
        let slot = unsafe { out_ptr(out, "out")? };
        *slot = required_sample_size(delta, eta, m)?;
        Ok(())
    })
}

/// Tensor basis on `d` copies of `measure` with index set `rule(p)`.
///
/// # Safety
/// `out` must point to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn bwls_basis_new(
    measure: BwlsMeasure,
    d: usize,
    rule: BwlsIndexRule,
    p: usize,
    out: *mut *mut BwlsBasis,
) -> BwlsStatus {
    guard(|| {
        let slot = unsafe { out_ptr(out, "out")? };
        let measure = match measure {
            BwlsMeasure::Uniform => Measure::Uniform,
            BwlsMeasure::Gaussian => Measure::Gaussian,
        };
        let rule = match rule {
            BwlsIndexRule::TotalDegree => IndexRule::TotalDegree(p),
            BwlsIndexRule::HyperbolicCross => IndexRule::HyperbolicCross(p),
        };
        let spec = BasisSpec::tensor(measure, d, rule)?;
        *slot = Box::into_raw(Box::new(BwlsBasis { spec }));
        Ok(())
    })
}

/// Basis from a JSON descriptor, e.g.
/// `{"measure":"uniform","d":2,"rule":"hyperbolic_cross","p":9}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bwls_basis_from_json(json: *const c_char, out: *mut *mut BwlsBasis) -> BwlsStatus {
    guard(|| {
        let slot = unsafe { out_ptr(out, "out")? };
        let text = unsafe { str_arg(json, "json")? };
        let desc: BasisDescriptor = serde_json::from_str(text).map_err(Error::from)?;
        let spec = desc.build()?;
        *slot = Box::into_raw(Box::new(BwlsBasis { spec }));
        Ok(())
    })
}

/// # Safety
/// `basis` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn bwls_basis_free(basis: *mut BwlsBasis) {
    if !basis.is_null() {
        // SAFETY: produced by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(basis) });
    }
}

/// Dimension m of the space.
///
/// # Safety
/// `basis` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bwls_basis_size(basis: *const BwlsBasis, out: *mut usize) -> BwlsStatus {
    guard(|| {
        let b = unsafe { get(basis, "basis")? };
        *unsafe { out_ptr(out, "out")? } = b.spec.size();
        Ok(())
    })
}

/// Number of variables d.
///
/// # Safety
/// `basis` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bwls_basis_dim(basis: *const BwlsBasis, out: *mut usize) -> BwlsStatus {
    guard(|| {
        let b = unsafe { get(basis, "basis")? };
        *unsafe { out_ptr(out, "out")? } = b.spec.dim();
        Ok(())
    })
}

/// Writes the m basis values at `x` (length d) into `values`.
///
/// # Safety
/// `x` holds `d` doubles; `values` has room for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn bwls_basis_eval(
    basis: *const BwlsBasis,
    x: *const f64,
    d: usize,
    values: *mut f64,
    capacity: usize,
) -> BwlsStatus {
    guard(|| {
        let b = unsafe { get(basis, "basis")? };
        if d != b.spec.dim() {
            return fail(BwlsStatus::InvalidArgument, format!("point has {d} coordinates, basis has {}", b.spec.dim()));
        }
        let x = unsafe { slice_arg(x, d, "x")? };
        let phi = b.spec.eval(x)?;
        unsafe { copy_out(&phi, values, capacity, "values") }
    })
}

/// Builds a design with the guaranteed-stability sample size.
/// `method` is one of `sls`, `owls`, `bls:M`, `cbls:M`, `sbls:M`, `gauss`,
/// `leja`, `fekete`, `magic`. `boost` is used when the method gives no M.
///
/// # Safety
/// `basis` live, `method` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bwls_design_new(
    basis: *const BwlsBasis,
    method: *const c_char,
    delta: f64,
    eta: f64,
    boost: usize,
    seed: u64,
    out: *mut *mut BwlsSample,
) -> BwlsStatus {
    guard(|| {
        let slot = unsafe { out_ptr(out, "out")? };
        let b = unsafe { get(basis, "basis")? };
        let name = unsafe { str_arg(method, "method")? };
        let method = MethodSpec::parse_with_default(name, boost)?;
        let params = DesignParams { delta, eta, ..DesignParams::default() };
        let density = OptimalDensity::new(b.spec.clone())?;
        let mut rng = rng_for_key(seed, &format!("ffi/design/{method}"));
        let mut design = build_design(&method, &density, NPolicy::GuaranteedStability, &params, &mut rng)?;
        design.sample.meta.seed = Some(seed);
        *slot = Box::into_raw(Box::new(BwlsSample { sample: design.sample }));
        Ok(())
    })
}

/// Sample from caller-provided points (row-major, n x d) with optimal weights.
///
/// # Safety
/// `points` holds `n * d` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bwls_sample_from_points(
    basis: *const BwlsBasis,
    points: *const f64,
    n: usize,
    d: usize,
    out: *mut *mut BwlsSample,
) -> BwlsStatus {
    guard(|| {
        let slot = unsafe { out_ptr(out, "out")? };
        let b = unsafe { get(basis, "basis")? };
        if d != b.spec.dim() {
            return fail(BwlsStatus::InvalidArgument, format!("points have {d} coordinates, basis has {}", b.spec.dim()));
        }
        let len = n.checked_mul(d).ok_or_else(|| Failure(BwlsStatus::InvalidArgument, "n * d overflows".into()))?;
        let flat = unsafe { slice_arg(points, len, "points")? };
        let rows = flat.chunks(d.max(1)).map(<[f64]>::to_vec).collect();
        let sample = SampleSet::with_optimal_weights(&b.spec, rows, bwls::sampling::Method::Baseline("external".into()))?;
        *slot = Box::into_raw(Box::new(BwlsSample { sample }));
        Ok(())
    })
}

/// # Safety
/// `sample` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn bwls_sample_free(sample: *mut BwlsSample) {
    if !sample.is_null() {
        // SAFETY: produced by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(sample) });
    }
}

/// Number of points n.
///
/// # Safety
/// `sample` live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bwls_sample_len(sample: *const BwlsSample, out: *mut usize) -> BwlsStatus {
    guard(|| {
        let s = unsafe { get(sample, "sample")? };
        *unsafe { out_ptr(out, "out")? } = s.sample.len();
        Ok(())
    })
}

/// Copies the points, row-major n x d, into `buffer`.
///
/// # Safety
/// `buffer` has room for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn bwls_sample_points(sample: *const BwlsSample, buffer: *mut f64, capacity: usize) -> BwlsStatus {
    guard(|| {
        let s = unsafe { get(sample, "sample")? };
        let flat: Vec<f64> = s.sample.points.iter().flatten().copied().collect();
        unsafe { copy_out(&flat, buffer, capacity, "points") }
    })
}

/// Copies the n weights into `buffer`.
///
/// # Safety
/// `buffer` has room for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn bwls_sample_weights(sample: *const BwlsSample, buffer: *mut f64, capacity: usize) -> BwlsStatus {
    guard(|| {
        let s = unsafe { get(sample, "sample")? };
        unsafe { copy_out(&s.sample.weights, buffer, capacity, "weights") }
    })
}

/// Deviation Z = ||G - I|| of the sample's Gram matrix in `basis`.
///
/// # Safety
/// Handles live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bwls_sample_stability(
    sample: *const BwlsSample,
    basis: *const BwlsBasis,
    out: *mut f64,
) -> BwlsStatus {
    guard(|| {
        let s = unsafe { get(sample, "sample")? };
        let b = unsafe { get(basis, "basis")? };
        *unsafe { out_ptr(out, "out")? } = gram(&s.sample, &b.spec)?.z;
        Ok(())
    })
}

/// JSON serialization; release with [`bwls_string_free`].
///
/// # Safety
/// `sample` live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bwls_sample_to_json(sample: *const BwlsSample, out: *mut *mut c_char) -> BwlsStatus {
    guard(|| {
        let s = unsafe { get(sample, "sample")? };
        unsafe { json_out(s.sample.to_json()?, out) }
    })
}

/// Weighted least-squares fit of `values` (one per sample point).
///
/// # Safety
/// Handles live, `values` holds `n` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bwls_fit(
    basis: *const BwlsBasis,
    sample: *const BwlsSample,
    values: *const f64,
    n: usize,
    out: *mut *mut BwlsModel,
) -> BwlsStatus {
    guard(|| {
        let slot = unsafe { out_ptr(out, "out")? };
        let b = unsafe { get(basis, "basis")? };
        let s = unsafe { get(sample, "sample")? };
        if n != s.sample.len() {
            return fail(BwlsStatus::InvalidArgument, format!("{n} values for {} points", s.sample.len()));
        }
        let y = unsafe { slice_arg(values, n, "values")? };
        let model = fit_values(&s.sample, &b.spec, y)?;
        *slot = Box::into_raw(Box::new(BwlsModel { model }));
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn bwls_model_free(model: *mut BwlsModel) {
    if !model.is_null() {
        // SAFETY: produced by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Copies the m coefficients into `buffer`.
///
/// # Safety
/// `buffer` has room for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn bwls_model_coefficients(model: *const BwlsModel, buffer: *mut f64, capacity: usize) -> BwlsStatus {
    guard(|| {
        let m = unsafe { get(model, "model")? };
        unsafe { copy_out(&m.model.coefficients, buffer, capacity, "coefficients") }
    })
}

/// Evaluates the fitted expansion at `x` (length d).
///
/// # Safety
/// `x` holds `d` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bwls_model_eval(model: *const BwlsModel, x: *const f64, d: usize, out: *mut f64) -> BwlsStatus {
    guard(|| {
        let m = unsafe { get(model, "model")? };
        if d != m.model.spec.dim() {
            return fail(BwlsStatus::InvalidArgument, format!("point has {d} coordinates, model has {}", m.model.spec.dim()));
        }
        let x = unsafe { slice_arg(x, d, "x")? };
        *unsafe { out_ptr(out, "out")? } = m.model.eval(x)?;
        Ok(())
    })
}

/// JSON serialization; release with [`bwls_string_free`].
///
/// # Safety
/// `model` live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bwls_model_to_json(model: *const BwlsModel, out: *mut *mut c_char) -> BwlsStatus {
    guard(|| {
        let m = unsafe { get(model, "model")? };
        unsafe { json_out(m.model.to_json()?, out) }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_status_codes() {
        let prev = std::panic::take_hook();
        std::panic::set_hook(Box::new(|_| {}));
        let st = guard(|| panic!("boom"));
        std::panic::set_hook(prev);
        assert_eq!(st, BwlsStatus::Panic);
        let msg = unsafe { CStr::from_ptr(bwls_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "panic: boom");
        assert_eq!(guard(|| Ok(())), BwlsStatus::Ok);
        assert!(bwls_last_error_message().is_null());
    }

    #[test]
    fn version_is_nul_terminated() {
        let v = unsafe { CStr::from_ptr(bwls_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
