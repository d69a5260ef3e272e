//! C ABI for difftomo.
//!
//! Objects live behind opaque handles that the constructor functions write
//! through an out pointer and the matching `dt_*_free` releases. Every fallible
//! call returns a [`DtStatus`]; on failure `dt_last_error()` describes the
//! problem until the next failing call on the same thread. Complex arrays
//! cross the boundary as interleaved `(re, im)` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use difftomo::coverage::{coverage_mask, indicatrix_field, FieldGrid, IndicatrixField};
use difftomo::geometry::{ExperimentPath, PathSpec};
use difftomo::grid::Grid;
use difftomo::metrics;
use difftomo::ndft::CgOptions;
use difftomo::recon::{backpropagate, backpropagate_sym, inverse_ndft_reconstruct, CardSource, Volume};
use difftomo::sampling::XGrid;
use difftomo::scattering::{forward_ndft, Phantom, PhantomSpec, Sinogram};
use difftomo::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Domain = 4,
    Numerical = 5,
    SizeMismatch = 6,
    Io = 7,
    Format = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DtXGrid {
    Uniform = 0,
    Chebyshev = 1,
}

pub struct DtPath(ExperimentPath);
pub struct DtPhantom(Phantom);
pub struct DtSinogram(Sinogram);
pub struct DtField(IndicatrixField);
pub struct DtVolume(Volume);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap_or_default());
}

fn status_of(e: &Error) -> DtStatus {
    match e {
        Error::Domain(_) => DtStatus::Domain,
        Error::SizeMismatch { .. } => DtStatus::SizeMismatch,
        Error::InvalidArgument(_) => DtStatus::InvalidArgument,
        Error::Config(_) | Error::Json(_) => DtStatus::Config,
        Error::Numerical(_) => DtStatus::Numerical,
        Error::Format(_) => DtStatus::Format,
        Error::Io(_) => DtStatus::Io,
    }
}

struct Fail(DtStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(DtStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DtStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DtStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(DtStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_complex(values: &[Complex64], out: *mut f64, len: usize) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if len != 2 * values.len() {
        return Err(Fail(
            DtStatus::SizeMismatch,
            format!("buffer holds {len} doubles, need {}", 2 * values.len()),
        ));
    }
    let dst = std::slice::from_raw_parts_mut(out, len);
    for (pair, v) in dst.chunks_exact_mut(2).zip(values) {
        pair[0] = v.re;
        pair[1] = v.im;
    }
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failing call on this thread; empty if none. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Build an experiment path from its JSON description.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dt_path_from_json(json: *const c_char, out: *mut *mut DtPath) -> DtStatus {
    guard(|| {
        let spec: PathSpec = serde_json::from_str(str_arg(json, "json")?).map_err(Error::from)?;
        emit(out, DtPath(spec.build()?))
    })
}

/// # Safety
/// `path` must be null or a handle from `dt_path_from_json`.
#[no_mangle]
pub unsafe extern "C" fn dt_path_free(path: *mut DtPath) {
    release(path)
}

/// Largest wavenumber along the path, or a negative value for a null handle.
///
/// # Safety
/// `path` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dt_path_k_max(path: *const DtPath) -> f64 {
    path.as_ref().map_or(-1.0, |p| p.0.k_max())
}

/// Phantom on the `P^dim` grid of half width `r_m`, from its JSON
/// generator description.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dt_phantom_from_json(
    json: *const c_char,
    dim: usize,
    p: usize,
    r_m: f64,
    out: *mut *mut DtPhantom,
) -> DtStatus {
    guard(|| {
        let spec: PhantomSpec = serde_json::from_str(str_arg(json, "json")?).map_err(Error::from)?;
        emit(out, DtPhantom(Phantom::from_spec(&spec, Grid::new(dim, p, r_m)?)?))
    })
}

/// Phantom from interleaved complex voxel values; voxels outside
/// `support_radius` are zeroed.
///
/// # Safety
/// `values` must point to `len` readable doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn dt_phantom_from_values(
    dim: usize,
    p: usize,
    r_m: f64,
    support_radius: f64,
    values: *const f64,
    len: usize,
    out: *mut *mut DtPhantom,
) -> DtStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        let grid = Grid::new(dim, p, r_m)?;
        if len != 2 * grid.len() {
            return Err(Fail(DtStatus::SizeMismatch, format!("got {len} doubles, need {}", 2 * grid.len())));
        }
        let v: Vec<Complex64> = std::slice::from_raw_parts(values, len)
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        emit(out, DtPhantom(Phantom::new(grid, support_radius, v)?))
    })
}

/// Number of voxels, 0 for a null handle.
///
/// # Safety
/// `phantom` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dt_phantom_len(phantom: *const DtPhantom) -> usize {
    phantom.as_ref().map_or(0, |p| p.0.values().len())
}

/// # Safety
/// `out` must point to `len` writable doubles, `len = 2 * dt_phantom_len`.
#[no_mangle]
pub unsafe extern "C" fn dt_phantom_values(phantom: *const DtPhantom, out: *mut f64, len: usize) -> DtStatus {
    guard(|| copy_complex(handle(phantom, "phantom")?.0.values(), out, len))
}

/// # Safety
/// `phantom` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dt_phantom_free(phantom: *mut DtPhantom) {
    release(phantom)
}

/// Born data by the NDFT forward model, `m` transverse and `n` time samples.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dt_forward_ndft(
    phantom: *const DtPhantom,
    path: *const DtPath,
    m: usize,
    n: usize,
    r_m: f64,
    x_grid: DtXGrid,
    out: *mut *mut DtSinogram,
) -> DtStatus {
    guard(|| {
        let xg = match x_grid {
            DtXGrid::Uniform => XGrid::Uniform,
            DtXGrid::Chebyshev => XGrid::Chebyshev,
        };
        let sino = forward_ndft(&handle(phantom, "phantom")?.0, &handle(path, "path")?.0, m, n, r_m, xg)?;
        emit(out, DtSinogram(sino))
    })
}

/// Number of complex samples, 0 for a null handle.
///
/// # Safety
/// `sino` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dt_sinogram_len(sino: *const DtSinogram) -> usize {
    sino.as_ref().map_or(0, |s| s.0.data.len())
}

/// # Safety
/// `out` must point to `len` writable doubles, `len = 2 * dt_sinogram_len`.
#[no_mangle]
pub unsafe extern "C" fn dt_sinogram_values(sino: *const DtSinogram, out: *mut f64, len: usize) -> DtStatus {
    guard(|| copy_complex(&handle(sino, "sinogram")?.0.data, out, len))
}

/// # Safety
/// `sino` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dt_sinogram_free(sino: *mut DtSinogram) {
    release(sino)
}

/// Estimated indicatrix on a `q^dim` grid over `[-2 k_max, 2 k_max]^dim`
/// using `n_est` time samples per smooth piece.
///
/// # Safety
/// `path` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dt_indicatrix(
    path: *const DtPath,
    q: usize,
    n_est: usize,
    sym: bool,
    out: *mut *mut DtField,
) -> DtStatus {
    guard(|| {
        let p = &handle(path, "path")?.0;
        emit(out, DtField(indicatrix_field(p, FieldGrid::for_path(p, q)?, n_est, sym)?))
    })
}

/// Rasterized coverage mask on the same grid as [`dt_indicatrix`].
///
/// # Safety
/// `path` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dt_coverage(
    path: *const DtPath,
    q: usize,
    n_est: usize,
    sym: bool,
    out: *mut *mut DtField,
) -> DtStatus {
    guard(|| {
        let p = &handle(path, "path")?.0;
        emit(out, DtField(coverage_mask(p, FieldGrid::for_path(p, q)?, sym, n_est)?))
    })
}

/// Field value at frequency `y` (length = dimension); 0 off the grid.
///
/// # Safety
/// `field` must be live and `y` point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn dt_field_lookup(field: *const DtField, y: *const f64, dim: usize, out: *mut u32) -> DtStatus {
    guard(|| {
        let f = &handle(field, "field")?.0;
        if y.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        if dim != f.grid.dim {
            return Err(Fail(DtStatus::SizeMismatch, format!("field is {}-dimensional", f.grid.dim)));
        }
        *out = f.lookup(std::slice::from_raw_parts(y, dim));
        Ok(())
    })
}

/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dt_field_free(field: *mut DtField) {
    release(field)
}

/// Filtered backpropagation onto a `p^dim` grid. With `sym` the field
/// must have been estimated with `sym` as well and the result is real.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dt_backpropagate(
    sino: *const DtSinogram,
    path: *const DtPath,
    p: usize,
    field: *const DtField,
    sym: bool,
    out: *mut *mut DtVolume,
) -> DtStatus {
    guard(|| {
        let (s, pa, f) = (&handle(sino, "sinogram")?.0, &handle(path, "path")?.0, &handle(field, "field")?.0);
        if f.sym != sym {
            return Err(Fail(DtStatus::InvalidArgument, "indicatrix symmetry flag differs from sym".into()));
        }
        let v = if sym {
            backpropagate_sym(s, pa, p, CardSource::Field(f))?
        } else {
            backpropagate(s, pa, p, CardSource::Field(f))?
        };
        emit(out, DtVolume(v))
    })
}

/// Inverse NDFT by conjugate gradients. `converged` receives whether the
/// tolerance was reached.
///
/// # Safety
/// Handles must be live; `out` writable; `converged` null or writable.
#[no_mangle]
pub unsafe extern "C" fn dt_inverse_ndft(
    sino: *const DtSinogram,
    path: *const DtPath,
    p: usize,
    tol: f64,
    max_iter: usize,
    real_constraint: bool,
    converged: *mut bool,
    out: *mut *mut DtVolume,
) -> DtStatus {
    guard(|| {
        let options = CgOptions { max_iter, tol, real_constraint };
        let v = inverse_ndft_reconstruct(&handle(sino, "sinogram")?.0, &handle(path, "path")?.0, p, options)?;
        if !converged.is_null() {
            *converged = v.converged;
        }
        emit(out, DtVolume(v))
    })
}

/// Number of voxels, 0 for a null handle.
///
/// # Safety
/// `vol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dt_volume_len(vol: *const DtVolume) -> usize {
    vol.as_ref().map_or(0, |v| v.0.values.len())
}

/// # Safety
/// `out` must point to `len` writable doubles, `len = 2 * dt_volume_len`.
#[no_mangle]
pub unsafe extern "C" fn dt_volume_values(vol: *const DtVolume, out: *mut f64, len: usize) -> DtStatus {
    guard(|| copy_complex(&handle(vol, "volume")?.0.values, out, len))
}

/// # Safety
/// `vol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dt_volume_free(vol: *mut DtVolume) {
    release(vol)
}

/// PSNR in dB of two real images of `len` pixels (`+inf` when identical).
///
/// # Safety
/// `reference` and `candidate` must point to `len` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dt_psnr(reference: *const f64, candidate: *const f64, len: usize, out: *mut f64) -> DtStatus {
    guard(|| {
        if reference.is_null() || candidate.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let (a, b) = (std::slice::from_raw_parts(reference, len), std::slice::from_raw_parts(candidate, len));
        *out = metrics::psnr(a, b)?;
        Ok(())
    })
}

/// Mean SSIM of two real `rows x cols` images.
///
/// # Safety
/// `reference` and `candidate` must point to `rows * cols` doubles, `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn dt_ssim(
    reference: *const f64,
    candidate: *const f64,
    rows: usize,
    cols: usize,
    out: *mut f64,
) -> DtStatus {
    guard(|| {
        if reference.is_null() || candidate.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let n = rows * cols;
        let (a, b) = (std::slice::from_raw_parts(reference, n), std::slice::from_raw_parts(candidate, n));
        *out = metrics::ssim(a, b, &[rows, cols])?;
        Ok(())
    })
}
