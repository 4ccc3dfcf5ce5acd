//! C ABI over the `seamdetect` pipeline.
//!
//! Clouds and results are opaque heap handles created and destroyed by
//! this library. Every fallible call returns an [`SdStatus`]; on failure
//! [`sd_last_error`] describes the error for the calling thread. Panics
//! never cross the boundary; they surface as [`SdStatus::Panic`].
//!
//! The header `include/seamdetect.h` is generated by the build script.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use seamdetect::cloud::{load_cloud, CloudFormat};
use seamdetect::corner::CornerParams;
use seamdetect::edge::EdgeParams;
use seamdetect::pipeline::{run_pipeline, Depth, PipelineOutput, PipelineParams};
use seamdetect::{Error, Point3, PointCloud};

/// Run edge detection only.
pub const SD_DEPTH_EDGES: u32 = 0;
/// Run edge and corner detection.
pub const SD_DEPTH_CORNERS: u32 = 1;
/// Run edges, corners and seams.
pub const SD_DEPTH_SEAMS: u32 = 2;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    TooFewPoints = 5,
    Degenerate = 6,
    Panic = 7,
}

/// Detector parameters. Fill with [`sd_params_default`] and adjust.
/// Non-positive `corner_radius`, `merge_radius` and `seam_delta` mean
/// "derive from edge spacing".
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SdParams {
    pub edge_k: usize,
    pub edge_lambda: f64,
    pub corner_k: usize,
    pub corner_radius: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub theta1_deg: f64,
    pub theta2_deg: f64,
    pub merge_radius: f64,
    pub seam_delta: f64,
    pub seam_bins: usize,
    pub seam_gamma: f64,
}

/// One seam: indices into the corner list and the covered fraction.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdSeam {
    pub a: usize,
    pub b: usize,
    pub coverage: f64,
}

/// Opaque point cloud.
pub struct SdCloud {
    inner: PointCloud,
}

/// Opaque detection result.
pub struct SdResult {
    out: PipelineOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SdStatus {
    match err {
        Error::Io { .. } => SdStatus::Io,
        Error::Parse { .. } => SdStatus::Parse,
        Error::InvalidArgument(_) => SdStatus::InvalidArgument,
        Error::TooFewPoints { .. } => SdStatus::TooFewPoints,
        Error::Degenerate(_) => SdStatus::Degenerate,
    }
}

/// Runs `f`, recording any error or panic for [`sd_last_error`].
fn guard(f: impl FnOnce() -> Result<(), (SdStatus, String)>) -> SdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SdStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SdStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (SdStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SdStatus, String) {
    (SdStatus::NullPointer, format!("{what} is null"))
}

/// Message for the last failed call on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Writes the default parameters to `out`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `SdParams`.
#[no_mangle]
pub unsafe extern "C" fn sd_params_default(out: *mut SdParams) -> SdStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let p = PipelineParams::default();
        *out = SdParams {
            edge_k: p.edge.k,
            edge_lambda: p.edge.lambda,
            corner_k: p.corner.k,
            corner_radius: 0.0,
            rho: p.corner.rho,
            epsilon: p.corner.epsilon,
            theta1_deg: p.corner.theta1.to_degrees(),
            theta2_deg: p.corner.theta2.to_degrees(),
            merge_radius: 0.0,
            seam_delta: 0.0,
            seam_bins: p.seam_bins,
            seam_gamma: p.seam_gamma,
        };
        Ok(())
    })
}

fn positive(v: f64) -> Option<f64> {
    (v > 0.0).then_some(v)
}

impl SdParams {
    fn to_pipeline(self) -> PipelineParams {
        PipelineParams {
            edge: EdgeParams {
                k: self.edge_k,
                lambda: self.edge_lambda,
            },
            corner: CornerParams {
                k: self.corner_k,
                radius: positive(self.corner_radius),
                rho: self.rho,
                epsilon: self.epsilon,
                theta1: self.theta1_deg.to_radians(),
                theta2: self.theta2_deg.to_radians(),
                merge_radius: positive(self.merge_radius),
            },
            seam_delta: positive(self.seam_delta),
            seam_bins: self.seam_bins,
            seam_gamma: self.seam_gamma,
        }
    }
}

/// Copies `n_points` points from `xyz` (x, y, z interleaved) into a new
/// cloud.
///
/// # Safety
/// `xyz` must point to `3 * n_points` readable doubles; `out` must be
/// writable. On failure `*out` is set to null.
#[no_mangle]
pub unsafe extern "C" fn sd_cloud_from_xyz(xyz: *const f64, n_points: usize, out: *mut *mut SdCloud) -> SdStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        if xyz.is_null() {
            return Err(null("xyz"));
        }
        let len = n_points
            .checked_mul(3)
            .ok_or_else(|| (SdStatus::InvalidArgument, "point count overflows".to_string()))?;
        let flat = unsafe { std::slice::from_raw_parts(xyz, len) };
        let points = flat.chunks_exact(3).map(|c| Point3::new(c[0], c[1], c[2])).collect();
        let inner = PointCloud::new(points).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SdCloud { inner }));
        Ok(())
    })
}

/// Loads an ASCII PLY (`.ply`) or whitespace-separated XYZ file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable. On
/// failure `*out` is set to null.
#[no_mangle]
pub unsafe extern "C" fn sd_cloud_load(path: *const c_char, out: *mut *mut SdCloud) -> SdStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        if path.is_null() {
            return Err(null("path"));
        }
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| (SdStatus::InvalidArgument, "path is not valid UTF-8".to_string()))?;
        let path = Path::new(path);
        let inner = load_cloud(path, CloudFormat::from_path(path)).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SdCloud { inner }));
        Ok(())
    })
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `cloud` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sd_cloud_len(cloud: *const SdCloud) -> usize {
    unsafe { cloud.as_ref() }.map_or(0, |c| c.inner.len())
}

/// Releases a cloud. Null is ignored.
///
/// # Safety
/// `cloud` must be null or a live handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn sd_cloud_free(cloud: *mut SdCloud) {
    if !cloud.is_null() {
        drop(unsafe { Box::from_raw(cloud) });
    }
}

/// Runs the pipeline up to `depth` (one of the `SD_DEPTH_*` constants).
///
/// # Safety
/// `cloud` must be a live handle, `params` readable and `out` writable.
/// On failure `*out` is set to null.
#[no_mangle]
pub unsafe extern "C" fn sd_detect(
    cloud: *const SdCloud,
    params: *const SdParams,
    depth: u32,
    out: *mut *mut SdResult,
) -> SdStatus {
    guard(|| {
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let cloud = unsafe { cloud.as_ref() }.ok_or_else(|| null("cloud"))?;
        let params = unsafe { params.as_ref() }.ok_or_else(|| null("params"))?;
        let depth = match depth {
            SD_DEPTH_EDGES => Depth::Edges,
            SD_DEPTH_CORNERS => Depth::Corners,
            SD_DEPTH_SEAMS => Depth::Seams,
            other => return Err((SdStatus::InvalidArgument, format!("unknown depth {other}"))),
        };
        let result = run_pipeline(&cloud.inner, &params.to_pipeline(), depth).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(SdResult { out: result }));
        Ok(())
    })
}

/// Number of points labeled edge.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sd_result_edge_count(result: *const SdResult) -> usize {
    unsafe { result.as_ref() }.map_or(0, |r| r.out.edges.edge_count())
}

/// Writes one flag per cloud point: 0 plain, 1 edge, 2 corner candidate.
///
/// # Safety
/// `flags` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sd_result_labels(result: *const SdResult, flags: *mut u8, len: usize) -> SdStatus {
    guard(|| {
        let r = unsafe { result.as_ref() }.ok_or_else(|| null("result"))?;
        if flags.is_null() {
            return Err(null("flags"));
        }
        let labels = r.out.labels();
        if len != labels.len() {
            return Err((
                SdStatus::InvalidArgument,
                format!("buffer holds {len} labels, cloud has {}", labels.len()),
            ));
        }
        let dst = unsafe { std::slice::from_raw_parts_mut(flags, len) };
        for (d, l) in dst.iter_mut().zip(labels) {
            *d = l as u8;
        }
        Ok(())
    })
}

/// Number of merged corners (0 if corners were not requested).
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sd_result_corner_count(result: *const SdResult) -> usize {
    unsafe { result.as_ref() }
        .and_then(|r| r.out.corners.as_ref())
        .map_or(0, |c| c.corners.len())
}

/// Writes corner positions (x, y, z interleaved) into `xyz`, which holds
/// `n_corners` points and must match [`sd_result_corner_count`].
///
/// # Safety
/// `xyz` must point to `3 * n_corners` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sd_result_corners(result: *const SdResult, xyz: *mut f64, n_corners: usize) -> SdStatus {
    guard(|| {
        let r = unsafe { result.as_ref() }.ok_or_else(|| null("result"))?;
        let points = r.out.corners.as_ref().map(|c| c.corner_points()).unwrap_or_default();
        if n_corners != points.len() {
            return Err((
                SdStatus::InvalidArgument,
                format!("buffer holds {n_corners} corners, result has {}", points.len()),
            ));
        }
        if points.is_empty() {
            return Ok(());
        }
        if xyz.is_null() {
            return Err(null("xyz"));
        }
        let dst = unsafe { std::slice::from_raw_parts_mut(xyz, 3 * n_corners) };
        for (d, p) in dst.chunks_exact_mut(3).zip(points) {
            d.copy_from_slice(&p.to_array());
        }
        Ok(())
    })
}

/// Number of seams (0 if seams were not requested).
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sd_result_seam_count(result: *const SdResult) -> usize {
    unsafe { result.as_ref() }
        .and_then(|r| r.out.seams.as_ref())
        .map_or(0, Vec::len)
}

/// Writes seams into `seams`, which holds `n_seams` entries and must match
/// [`sd_result_seam_count`].
///
/// # Safety
/// `seams` must point to `n_seams` writable `SdSeam` values.
#[no_mangle]
pub unsafe extern "C" fn sd_result_seams(result: *const SdResult, seams: *mut SdSeam, n_seams: usize) -> SdStatus {
    guard(|| {
        let r = unsafe { result.as_ref() }.ok_or_else(|| null("result"))?;
        let src = r.out.seams.as_deref().unwrap_or_default();
        if n_seams != src.len() {
            return Err((
                SdStatus::InvalidArgument,
                format!("buffer holds {n_seams} seams, result has {}", src.len()),
            ));
        }
        if src.is_empty() {
            return Ok(());
        }
        if seams.is_null() {
            return Err(null("seams"));
        }
        let dst = unsafe { std::slice::from_raw_parts_mut(seams, n_seams) };
        for (d, s) in dst.iter_mut().zip(src) {
            *d = SdSeam {
                a: s.a,
                b: s.b,
                coverage: s.coverage,
            };
        }
        Ok(())
    })
}

/// Releases a result. Null is ignored.
///
/// # Safety
/// `result` must be null or a live handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn sd_result_free(result: *mut SdResult) {
    if !result.is_null() {
        drop(unsafe { Box::from_raw(result) });
    }
}
