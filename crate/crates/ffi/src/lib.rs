//! C ABI for the `ffpn` reconstruction library.
//!
//! Systems and weights are opaque handles created and destroyed through this
//! interface. Every fallible call returns an [`FfpnStatus`]; the message of
//! the most recent failure on the calling thread is available from
//! [`ffpn_last_error`]. Sinograms cross the boundary in raw (unnormalized)
//! units and images are row-major `side × side` arrays of `double`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ffpn::feasibility::{clamp_unit, DropOperator};
use ffpn::ffpn::ffpn_forward;
use ffpn::geometry::{build_radon_matrix, RowScaling, ScanGeometry};
use ffpn::metrics::{psnr, ssim};
use ffpn::numerics::SparseMatrix;
use ffpn::regularizer::{read_weights, NetworkWeights};
use ffpn::variational::{tvm_reconstruct, tvs_reconstruct, AdmmParams, TvsParams};
use ffpn::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FfpnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Io = 4,
    Format = 5,
    Numerical = 6,
    Panic = 7,
}

/// A scan geometry with its raw and row-normalized system matrices.
pub struct FfpnSystem {
    side: usize,
    raw: SparseMatrix,
    scaling: RowScaling,
    op: DropOperator,
}

/// Trained regularizer weights.
pub struct FfpnWeights {
    net: NetworkWeights,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> FfpnStatus {
    match err {
        Error::InvalidArgument(_) => FfpnStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => FfpnStatus::DimensionMismatch,
        Error::Io { .. } => FfpnStatus::Io,
        Error::BadMagic { .. }
        | Error::Truncated { .. }
        | Error::NonFinite { .. }
        | Error::UnsupportedVersion(_)
        | Error::Malformed(_) => FfpnStatus::Format,
        e if e.is_numerical() => FfpnStatus::Numerical,
        _ => FfpnStatus::InvalidArgument,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> FfpnStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => FfpnStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer passed as {what}"));
            FfpnStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(format!("internal panic: {msg}"));
            FfpnStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<(), Failure> {
    if expected == found {
        Ok(())
    } else {
        Err(Failure::Lib(Error::DimensionMismatch {
            context,
            expected,
            found,
        }))
    }
}

impl FfpnSystem {
    fn n_pixels(&self) -> usize {
        self.side * self.side
    }

    fn shape(&self) -> (usize, usize) {
        (self.side, self.side)
    }

    fn normalized(&self, sinogram: &[f64]) -> Result<Vec<f64>, Failure> {
        check_len("sinogram", self.raw.rows(), sinogram.len())?;
        Ok(self.scaling.apply_data(sinogram)?)
    }
}

/// Message of the last failure on this thread, or null if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ffpn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds the parallel-beam system for a `side × side` image with detector
/// span `side·√2` and DROP relaxation `relaxation`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ffpn_system_new(
    n_angles: usize,
    n_beams: usize,
    side: usize,
    relaxation: f64,
    out: *mut *mut FfpnSystem,
) -> FfpnStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let geom = ScanGeometry::new(n_angles, n_beams, side)?;
        let raw = build_radon_matrix(&geom)?;
        let scaling = RowScaling::for_matrix(&raw);
        let op = DropOperator::new(scaling.apply_matrix(&raw)?, relaxation)?;
        *out = Box::into_raw(Box::new(FfpnSystem {
            side,
            raw,
            scaling,
            op,
        }));
        Ok(())
    })
}

/// Releases a system. Null is ignored.
///
/// # Safety
/// `system` must come from [`ffpn_system_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ffpn_system_free(system: *mut FfpnSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Number of rays (sinogram length) and pixels of a system.
///
/// # Safety
/// `system` must be a live handle; `n_rays` and `n_pixels` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ffpn_system_dims(
    system: *const FfpnSystem,
    n_rays: *mut usize,
    n_pixels: *mut usize,
) -> FfpnStatus {
    guard(|| {
        let sys = borrow(system, "system")?;
        if n_rays.is_null() || n_pixels.is_null() {
            return Err(Failure::Null("dimension output"));
        }
        *n_rays = sys.raw.rows();
        *n_pixels = sys.n_pixels();
        Ok(())
    })
}

/// Raw forward projection `d = Au`.
///
/// # Safety
/// `image` must hold `n_pixels` values and `sinogram` room for `n_rays`.
#[no_mangle]
pub unsafe extern "C" fn ffpn_system_forward(
    system: *const FfpnSystem,
    image: *const f64,
    n_pixels: usize,
    sinogram: *mut f64,
    n_rays: usize,
) -> FfpnStatus {
    guard(|| {
        let sys = borrow(system, "system")?;
        check_len("image", sys.n_pixels(), n_pixels)?;
        check_len("sinogram", sys.raw.rows(), n_rays)?;
        let u = slice(image, n_pixels, "image")?;
        let out = slice_mut(sinogram, n_rays, "sinogram")?;
        out.copy_from_slice(&sys.raw.spmv(u)?);
        Ok(())
    })
}

/// `iterations` DROP steps from zero, clipped to `[0, 1]`.
///
/// # Safety
/// `sinogram` must hold `n_rays` values and `image` room for `n_pixels`.
#[no_mangle]
pub unsafe extern "C" fn ffpn_reconstruct_drop(
    system: *const FfpnSystem,
    sinogram: *const f64,
    n_rays: usize,
    iterations: usize,
    image: *mut f64,
    n_pixels: usize,
) -> FfpnStatus {
    ffpn_reconstruct_tvs(system, sinogram, n_rays, 0.0, 0.5, iterations, image, n_pixels)
}

/// TV superiorization with perturbation scale `alpha`, decay `beta` and
/// `iterations` steps, clipped to `[0, 1]`.
///
/// # Safety
/// `sinogram` must hold `n_rays` values and `image` room for `n_pixels`.
#[no_mangle]
pub unsafe extern "C" fn ffpn_reconstruct_tvs(
    system: *const FfpnSystem,
    sinogram: *const f64,
    n_rays: usize,
    alpha: f64,
    beta: f64,
    iterations: usize,
    image: *mut f64,
    n_pixels: usize,
) -> FfpnStatus {
    guard(|| {
        let sys = borrow(system, "system")?;
        check_len("image", sys.n_pixels(), n_pixels)?;
        let d = sys.normalized(slice(sinogram, n_rays, "sinogram")?)?;
        let out = slice_mut(image, n_pixels, "image")?;
        let params = TvsParams {
            alpha,
            beta,
            iterations,
            ..TvsParams::default()
        };
        let rep = tvs_reconstruct(&sys.op, &d, sys.shape(), &params)?;
        out.copy_from_slice(&rep.image);
        Ok(())
    })
}

/// TV minimization by linearized ADMM on the row-normalized system with
/// data-ball radius `eps`.
///
/// # Safety
/// `sinogram` must hold `n_rays` values and `image` room for `n_pixels`.
#[no_mangle]
pub unsafe extern "C" fn ffpn_reconstruct_tvm(
    system: *const FfpnSystem,
    sinogram: *const f64,
    n_rays: usize,
    alpha: f64,
    beta: f64,
    lambda: f64,
    eps: f64,
    iterations: usize,
    image: *mut f64,
    n_pixels: usize,
) -> FfpnStatus {
    guard(|| {
        let sys = borrow(system, "system")?;
        check_len("image", sys.n_pixels(), n_pixels)?;
        let d = sys.normalized(slice(sinogram, n_rays, "sinogram")?)?;
        let out = slice_mut(image, n_pixels, "image")?;
        let params = AdmmParams {
            alpha,
            beta,
            lambda,
            eps,
            iterations,
        };
        let rep = tvm_reconstruct(sys.op.matrix(), &d, sys.shape(), &params)?;
        out.copy_from_slice(&rep.image);
        Ok(())
    })
}

/// Fixed-point network reconstruction from zero, stopping when successive
/// iterates differ by less than `delta` or after `max_iter` steps. The result
/// is clipped to `[0, 1]`. `iterations` (may be null) receives the step count.
///
/// # Safety
/// Handles must be live; `sinogram` must hold `n_rays` values and `image`
/// room for `n_pixels`.
#[no_mangle]
pub unsafe extern "C" fn ffpn_reconstruct_ffpn(
    system: *const FfpnSystem,
    weights: *const FfpnWeights,
    sinogram: *const f64,
    n_rays: usize,
    delta: f64,
    max_iter: usize,
    image: *mut f64,
    n_pixels: usize,
    iterations: *mut usize,
) -> FfpnStatus {
    guard(|| {
        let sys = borrow(system, "system")?;
        let w = borrow(weights, "weights")?;
        check_len("image", sys.n_pixels(), n_pixels)?;
        let d = sys.normalized(slice(sinogram, n_rays, "sinogram")?)?;
        let out = slice_mut(image, n_pixels, "image")?;
        let rep = ffpn_forward(&w.net, &sys.op, &d, sys.shape(), delta, max_iter)?;
        let mut u = rep.iterate;
        clamp_unit(&mut u);
        out.copy_from_slice(&u);
        if !iterations.is_null() {
            *iterations = rep.iterations;
        }
        Ok(())
    })
}

/// Loads an FWTS weights file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ffpn_weights_load(path: *const c_char, out: *mut *mut FfpnWeights) -> FfpnStatus {
    guard(|| {
        if path.is_null() {
            return Err(Failure::Null("path"));
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Error::InvalidArgument("path is not valid UTF-8".into()))?;
        let net = read_weights(path)?;
        *out = Box::into_raw(Box::new(FfpnWeights { net }));
        Ok(())
    })
}

/// Releases weights. Null is ignored.
///
/// # Safety
/// `weights` must come from [`ffpn_weights_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ffpn_weights_free(weights: *mut FfpnWeights) {
    if !weights.is_null() {
        drop(Box::from_raw(weights));
    }
}

/// Number of trainable parameters, or 0 for a null handle.
///
/// # Safety
/// `weights` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ffpn_weights_parameter_count(weights: *const FfpnWeights) -> usize {
    weights.as_ref().map_or(0, |w| w.net.parameter_count())
}

/// Peak signal-to-noise ratio in dB (`+inf` for identical inputs).
///
/// # Safety
/// `image` and `reference` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ffpn_psnr(
    image: *const f64,
    reference: *const f64,
    len: usize,
    max_val: f64,
    out: *mut f64,
) -> FfpnStatus {
    guard(|| {
        let u = slice(image, len, "image")?;
        let r = slice(reference, len, "reference")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = psnr(u, r, max_val)?;
        Ok(())
    })
}

/// Structural similarity of two `height × width` images.
///
/// # Safety
/// `image` and `reference` must hold `height·width` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ffpn_ssim(
    image: *const f64,
    reference: *const f64,
    height: usize,
    width: usize,
    out: *mut f64,
) -> FfpnStatus {
    guard(|| {
        let n = height.checked_mul(width).ok_or(Error::InvalidArgument("image too large".into()))?;
        let u = slice(image, n, "image")?;
        let r = slice(reference, n, "reference")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = ssim(u, r, (height, width))?;
        Ok(())
    })
}
