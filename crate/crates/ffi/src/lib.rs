//! C ABI over `pwcheat`.
//!
//! Every fallible function returns a [`PwStatus`]; on failure the message is available from
//! [`pw_last_error_message`] on the same thread. Handles are opaque and owned by the caller,
//! who releases them with the matching `*_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pwcheat::dataset::{Provenance, TransferDataset, TransferSample};
use pwcheat::inverse::{reconstruct, ReconstructOptions, ReconstructionResult};
use pwcheat::time_domain::synthesize_dataset;
use pwcheat::{solve_psi, transfer_function, ConductivityProfile};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Validation = 3,
    Domain = 4,
    Config = 5,
    Numerical = 6,
    Io = 7,
    Panic = 8,
}

/// Piecewise-constant conductivity on [0, 1].
pub struct PwProfile(ConductivityProfile);

/// Transfer-function samples `(lambda, H, sigma)`.
pub struct PwDataset(TransferDataset);

/// Outcome of a multi-start reconstruction.
pub struct PwReconstruction(ReconstructionResult);

/// Options for [`pw_reconstruct`]; start from [`pw_reconstruct_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PwReconstructOptions {
    pub c0: f64,
    pub c1: f64,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol_grad: f64,
    pub tol_step: f64,
    pub min_width: f64,
    pub damping_init: f64,
    pub seed: u64,
    pub ridge: f64,
    pub h_rel: f64,
}

impl From<PwReconstructOptions> for ReconstructOptions {
    fn from(o: PwReconstructOptions) -> Self {
        ReconstructOptions {
            c0: o.c0,
            c1: o.c1,
            restarts: o.restarts,
            max_iter: o.max_iter,
            tol_grad: o.tol_grad,
            tol_step: o.tol_step,
            min_width: o.min_width,
            damping_init: o.damping_init,
            seed: o.seed,
            ridge: o.ridge,
            h_rel: o.h_rel,
        }
    }
}

impl From<ReconstructOptions> for PwReconstructOptions {
    fn from(o: ReconstructOptions) -> Self {
        PwReconstructOptions {
            c0: o.c0,
            c1: o.c1,
            restarts: o.restarts,
            max_iter: o.max_iter,
            tol_grad: o.tol_grad,
            tol_step: o.tol_step,
            min_width: o.min_width,
            damping_init: o.damping_init,
            seed: o.seed,
            ridge: o.ridge,
            h_rel: o.h_rel,
        }
    }
}

struct Failure {
    status: PwStatus,
    message: String,
}

impl From<pwcheat::Error> for Failure {
    fn from(e: pwcheat::Error) -> Self {
        let status = match e {
            pwcheat::Error::Validation(_) => PwStatus::Validation,
            pwcheat::Error::Domain(_) => PwStatus::Domain,
            pwcheat::Error::Config(_) => PwStatus::Config,
            pwcheat::Error::Numerical(_) => PwStatus::Numerical,
            pwcheat::Error::Io(_) => PwStatus::Io,
        };
        Failure { status, message: e.to_string() }
    }
}

fn null(what: &str) -> Failure {
    Failure { status: PwStatus::NullPointer, message: format!("`{what}` is null") }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { status: PwStatus::InvalidArgument, message: message.into() }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PwStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PwStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            PwStatus::Panic
        }
    }
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| invalid(format!("`{what}` is not valid UTF-8")))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|_| invalid("string contains a NUL byte"))
}

unsafe fn copy_out(src: &[f64], out: *mut f64, capacity: usize, what: &str) -> Result<(), Failure> {
    if capacity < src.len() {
        return Err(invalid(format!("`{what}` holds {capacity} values, need {}", src.len())));
    }
    if out.is_null() {
        return Err(null(what));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL after a successful call.
///
/// The pointer stays valid until the next `pw_*` call on the same thread.
#[no_mangle]
pub extern "C" fn pw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from a `pw_*` function that documents ownership transfer and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pw_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a profile from `n_values + 1` breakpoints and `n_values` values.
///
/// # Safety
/// `breakpoints` and `values` must point to the stated number of doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pw_profile_new(
    breakpoints: *const f64,
    n_breakpoints: usize,
    values: *const f64,
    n_values: usize,
    out: *mut *mut PwProfile,
) -> PwStatus {
    guard(|| {
        let x = slice(breakpoints, n_breakpoints, "breakpoints")?.to_vec();
        let v = slice(values, n_values, "values")?.to_vec();
        let profile = ConductivityProfile::new(x, v)?;
        put(out, Box::into_raw(Box::new(PwProfile(profile))), "out")
    })
}

/// Parses a profile from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pw_profile_from_json(json: *const c_char, out: *mut *mut PwProfile) -> PwStatus {
    guard(|| {
        let profile = ConductivityProfile::from_json(c_str(json, "json")?)?;
        put(out, Box::into_raw(Box::new(PwProfile(profile))), "out")
    })
}

/// Serializes a profile to JSON. Free the string with [`pw_string_free`].
///
/// # Safety
/// `profile` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pw_profile_to_json(profile: *const PwProfile, out: *mut *mut c_char) -> PwStatus {
    guard(|| {
        let p = handle(profile, "profile")?;
        put(out, into_c_string(p.0.to_json())?, "out")
    })
}

/// Number of pieces, or 0 for a NULL handle.
///
/// # Safety
/// `profile` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pw_profile_num_pieces(profile: *const PwProfile) -> usize {
    profile.as_ref().map_or(0, |p| p.0.num_pieces())
}

/// Copies the `num_pieces + 1` breakpoints into `out`.
///
/// # Safety
/// `profile` must be a live handle; `out` must have room for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn pw_profile_breakpoints(profile: *const PwProfile, out: *mut f64, capacity: usize) -> PwStatus {
    guard(|| copy_out(handle(profile, "profile")?.0.breakpoints(), out, capacity, "out"))
}

/// Copies the `num_pieces` conductivity values into `out`.
///
/// # Safety
/// `profile` must be a live handle; `out` must have room for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn pw_profile_values(profile: *const PwProfile, out: *mut f64, capacity: usize) -> PwStatus {
    guard(|| copy_out(handle(profile, "profile")?.0.values(), out, capacity, "out"))
}

/// Releases a profile. NULL is ignored.
///
/// # Safety
/// `profile` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pw_profile_free(profile: *mut PwProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Transfer function `H(lambda)` of the profile.
///
/// # Safety
/// `profile` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pw_transfer_function(profile: *const PwProfile, lambda: f64, out: *mut f64) -> PwStatus {
    guard(|| {
        let h = transfer_function(&handle(profile, "profile")?.0, lambda)?;
        put(out, h, "out")
    })
}

/// `H` at each of `n` values of `lambda`, written to `out[0..n]`.
///
/// # Safety
/// `lambdas` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn pw_transfer_function_many(
    profile: *const PwProfile,
    lambdas: *const f64,
    n: usize,
    out: *mut f64,
) -> PwStatus {
    guard(|| {
        let p = handle(profile, "profile")?;
        let ls = slice(lambdas, n, "lambdas")?;
        let h = ls.iter().map(|&l| transfer_function(&p.0, l)).collect::<pwcheat::Result<Vec<f64>>>()?;
        copy_out(&h, out, n, "out")
    })
}

/// `ln psi(x)` for the potential `q^2 = 1/a` of the profile at spectral parameter `k`.
///
/// The logarithm is returned because `psi` grows like `exp(k x)`.
///
/// # Safety
/// `profile` must be a live handle; `out_ln` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pw_psi_ln(profile: *const PwProfile, k: f64, x: f64, out_ln: *mut f64) -> PwStatus {
    guard(|| {
        let q2 = handle(profile, "profile")?.0.q_squared();
        let psi = solve_psi(&q2, k)?.psi(x)?;
        put(out_ln, psi.ln_abs(), "out_ln")
    })
}

/// Dataset from `n` triples; samples are sorted by `lambda`.
///
/// # Safety
/// `lambdas`, `h` and `sigma` must each hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pw_dataset_new(
    lambdas: *const f64,
    h: *const f64,
    sigma: *const f64,
    n: usize,
    out: *mut *mut PwDataset,
) -> PwStatus {
    guard(|| {
        let (l, hv, s) = (slice(lambdas, n, "lambdas")?, slice(h, n, "h")?, slice(sigma, n, "sigma")?);
        let samples = (0..n).map(|i| TransferSample { lambda: l[i], h: hv[i], sigma: s[i] }).collect();
        let data = TransferDataset::new(samples, Provenance::External)?;
        put(out, Box::into_raw(Box::new(PwDataset(data))), "out")
    })
}

/// Parses a dataset from CSV text with columns `lambda,H,sigma`.
///
/// # Safety
/// `csv` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pw_dataset_from_csv(csv: *const c_char, out: *mut *mut PwDataset) -> PwStatus {
    guard(|| {
        let data = TransferDataset::from_csv(c_str(csv, "csv")?.as_bytes())?;
        put(out, Box::into_raw(Box::new(PwDataset(data))), "out")
    })
}

/// Synthetic samples of `H` on the `n` given `lambdas` with seeded relative noise.
///
/// # Safety
/// `profile` must be a live handle; `lambdas` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pw_synthesize(
    profile: *const PwProfile,
    lambdas: *const f64,
    n: usize,
    noise_rel: f64,
    seed: u64,
    out: *mut *mut PwDataset,
) -> PwStatus {
    guard(|| {
        let p = handle(profile, "profile")?;
        let data = synthesize_dataset(&p.0, slice(lambdas, n, "lambdas")?, noise_rel, seed)?;
        put(out, Box::into_raw(Box::new(PwDataset(data))), "out")
    })
}

/// Number of samples, or 0 for a NULL handle.
///
/// # Safety
/// `data` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pw_dataset_len(data: *const PwDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.len())
}

/// Copies the sample values `H` (ascending `lambda`) into `out`.
///
/// # Safety
/// `data` must be a live handle; `out` must have room for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn pw_dataset_values(data: *const PwDataset, out: *mut f64, capacity: usize) -> PwStatus {
    guard(|| {
        let h: Vec<f64> = handle(data, "data")?.0.samples().iter().map(|s| s.h).collect();
        copy_out(&h, out, capacity, "out")
    })
}

/// Releases a dataset. NULL is ignored.
///
/// # Safety
/// `data` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pw_dataset_free(data: *mut PwDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Default reconstruction options.
#[no_mangle]
pub extern "C" fn pw_reconstruct_options_default() -> PwReconstructOptions {
    ReconstructOptions::default().into()
}

/// Fits an `n`-piece profile to `data`. `options` may be NULL for the defaults.
///
/// A non-converged fit still returns `PW_STATUS_OK`; check [`pw_reconstruction_converged`].
///
/// # Safety
/// `data` must be a live handle; `options` NULL or readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pw_reconstruct(
    data: *const PwDataset,
    n: usize,
    options: *const PwReconstructOptions,
    out: *mut *mut PwReconstruction,
) -> PwStatus {
    guard(|| {
        let d = handle(data, "data")?;
        let opts = options.as_ref().map_or_else(ReconstructOptions::default, |o| (*o).into());
        let res = reconstruct(&d.0, n, &opts)?;
        put(out, Box::into_raw(Box::new(PwReconstruction(res))), "out")
    })
}

/// Weighted residual sum of squares of the best fit; NaN for a NULL handle.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pw_reconstruction_objective(r: *const PwReconstruction) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.objective)
}

/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pw_reconstruction_converged(r: *const PwReconstruction) -> bool {
    r.as_ref().is_some_and(|r| r.0.converged)
}

/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pw_reconstruction_iterations(r: *const PwReconstruction) -> usize {
    r.as_ref().map_or(0, |r| r.0.iterations)
}

/// Converged restarts that agree with the best fit.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pw_reconstruction_restarts_agreeing(r: *const PwReconstruction) -> usize {
    r.as_ref().map_or(0, |r| r.0.restarts_agreeing)
}

/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pw_reconstruction_restarts_converged(r: *const PwReconstruction) -> usize {
    r.as_ref().map_or(0, |r| r.0.restarts_converged)
}

/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pw_reconstruction_jacobian_condition(r: *const PwReconstruction) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.jacobian_condition)
}

/// Copy of the fitted profile as a new handle owned by the caller.
///
/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pw_reconstruction_profile(r: *const PwReconstruction, out: *mut *mut PwProfile) -> PwStatus {
    guard(|| {
        let p = handle(r, "reconstruction")?.0.profile.clone();
        put(out, Box::into_raw(Box::new(PwProfile(p))), "out")
    })
}

/// Full result as JSON. Free the string with [`pw_string_free`].
///
/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pw_reconstruction_to_json(r: *const PwReconstruction, out: *mut *mut c_char) -> PwStatus {
    guard(|| {
        let res = handle(r, "reconstruction")?;
        let text = serde_json::to_string_pretty(&res.0).map_err(|e| invalid(e.to_string()))?;
        put(out, into_c_string(text)?, "out")
    })
}

/// Releases a reconstruction. NULL is ignored.
///
/// # Safety
/// `r` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pw_reconstruction_free(r: *mut PwReconstruction) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_status_codes() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, PwStatus::Panic);
        let msg = unsafe { CStr::from_ptr(pw_last_error_message()) }.to_str().unwrap();
        assert_eq!(msg, "panic: boom");
    }

    #[test]
    fn success_clears_last_error() {
        guard(|| Err(invalid("bad")));
        assert!(!pw_last_error_message().is_null());
        assert_eq!(guard(|| Ok(())), PwStatus::Ok);
        assert!(pw_last_error_message().is_null());
    }

    #[test]
    fn options_round_trip() {
        let o = pw_reconstruct_options_default();
        let back: ReconstructOptions = o.into();
        assert_eq!(back, ReconstructOptions::default());
    }
}
