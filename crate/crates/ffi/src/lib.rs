//! C ABI over `fastce`.
//!
//! Images cross the boundary as opaque `FastceImage` handles owned by the
//! caller and released with `fastce_image_free`. Every fallible call returns a
//! `FastceStatus`; the message of the most recent failure on the calling
//! thread is available from `fastce_last_error`. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fastce::bench::{self, Algorithm, EnhanceParams};
use fastce::imageio::{read_image, write_image};
use fastce::{BlockGrid, Error, GrayImage, Image};

/// Opaque 8-bit grayscale image.
pub struct FastceImage {
    inner: GrayImage,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastceStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Numeric = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastceAlgorithm {
    He = 0,
    Fhe = 1,
    Smirank = 2,
    Fsmirank = 3,
}

impl From<FastceAlgorithm> for Algorithm {
    fn from(a: FastceAlgorithm) -> Self {
        match a {
            FastceAlgorithm::He => Algorithm::He,
            FastceAlgorithm::Fhe => Algorithm::Fhe,
            FastceAlgorithm::Smirank => Algorithm::Smirank,
            FastceAlgorithm::Fsmirank => Algorithm::Fsmirank,
        }
    }
}

/// Enhancement parameters; algorithms ignore the fields they do not use.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastceParams {
    /// Spatial sampling step.
    pub step: usize,
    /// Histogram bin count, a power of two in [2, 256].
    pub bins: usize,
    /// Damping factor in [0, 1).
    pub alpha: f64,
    pub blocks_y: usize,
    pub blocks_x: usize,
}

impl From<FastceParams> for EnhanceParams {
    fn from(p: FastceParams) -> Self {
        EnhanceParams {
            s: p.step,
            n_g: p.bins,
            alpha: p.alpha,
            grid: BlockGrid::new(p.blocks_y, p.blocks_x),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> FastceStatus {
    match err {
        Error::Io(_) => FastceStatus::Io,
        Error::MalformedHeader(_)
        | Error::UnsupportedFormat(_)
        | Error::UnsupportedMaxval(_)
        | Error::TruncatedPayload { .. } => FastceStatus::Parse,
        Error::ZeroMatrix | Error::Singular | Error::EmptyHistogram => FastceStatus::Numeric,
        _ => FastceStatus::InvalidArgument,
    }
}

struct Failure(FastceStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FastceStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FastceStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FastceStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FastceStatus::Panic
        }
    }
}

unsafe fn image_ref<'a>(img: *const FastceImage) -> Result<&'a GrayImage, Failure> {
    img.as_ref().map(|i| &i.inner).ok_or_else(|| null("image"))
}

unsafe fn store(out: *mut *mut FastceImage, img: GrayImage) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(FastceImage { inner: img }));
    Ok(())
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Failure(FastceStatus::InvalidArgument, "path is not UTF-8".into()))
}

/// Defaults: step 8, 64 bins, alpha 0.9, 8x8 blocks.
#[no_mangle]
pub extern "C" fn fastce_params_default() -> FastceParams {
    let d = EnhanceParams::default();
    FastceParams {
        step: d.s,
        bins: d.n_g,
        alpha: d.alpha,
        blocks_y: d.grid.blocks_y,
        blocks_x: d.grid.blocks_x,
    }
}

/// Copies `len == width * height` bytes into a new image.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastce_image_new(
    width: usize,
    height: usize,
    data: *const u8,
    len: usize,
    out: *mut *mut FastceImage,
) -> FastceStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if width.checked_mul(height) != Some(len) {
            return Err(Failure(
                FastceStatus::InvalidArgument,
                format!("length {len} does not match {width}x{height}"),
            ));
        }
        let pixels = std::slice::from_raw_parts(data, len);
        store(out, GrayImage::from_u8(width, height, pixels)?)
    })
}

/// Releases an image. Null is ignored.
///
/// # Safety
/// `img` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fastce_image_free(img: *mut FastceImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Width in pixels, or 0 for a null handle.
///
/// # Safety
/// `img` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fastce_image_width(img: *const FastceImage) -> usize {
    img.as_ref().map_or(0, |i| i.inner.width())
}

/// Height in pixels, or 0 for a null handle.
///
/// # Safety
/// `img` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fastce_image_height(img: *const FastceImage) -> usize {
    img.as_ref().map_or(0, |i| i.inner.height())
}

/// Copies the pixels into `buf`, which must hold exactly `width * height` bytes.
///
/// # Safety
/// `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fastce_image_copy_data(
    img: *const FastceImage,
    buf: *mut u8,
    len: usize,
) -> FastceStatus {
    guard(|| {
        let img = image_ref(img)?;
        if buf.is_null() {
            return Err(null("buffer"));
        }
        if len != img.len() {
            return Err(Failure(
                FastceStatus::InvalidArgument,
                format!("buffer holds {len} bytes, image has {}", img.len()),
            ));
        }
        let bytes = img.to_u8().expect("handles are always 8-bit");
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf, len);
        Ok(())
    })
}

/// Reads a binary PGM or PPM; color files yield their HSV value channel.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastce_image_read(
    path: *const c_char,
    out: *mut *mut FastceImage,
) -> FastceStatus {
    guard(|| {
        let img = bench::luminance(read_image(path_arg(path)?)?);
        store(out, img)
    })
}

/// Writes the image as binary PGM.
///
/// # Safety
/// `img` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fastce_image_write(
    img: *const FastceImage,
    path: *const c_char,
) -> FastceStatus {
    guard(|| {
        let img = image_ref(img)?;
        write_image(&Image::Gray(img.clone()), path_arg(path)?)?;
        Ok(())
    })
}

/// Runs `algorithm` on `img` and stores a new image in `*out`.
///
/// # Safety
/// `img` and `params` must be valid pointers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastce_enhance(
    img: *const FastceImage,
    algorithm: FastceAlgorithm,
    params: *const FastceParams,
    out: *mut *mut FastceImage,
) -> FastceStatus {
    guard(|| {
        let img = image_ref(img)?;
        let params = params.as_ref().ok_or_else(|| null("params"))?;
        let y = bench::run_gray(algorithm.into(), img, &(*params).into())?;
        store(out, y)
    })
}

/// Writes the 256-entry lookup table `algorithm` would apply to `img`.
///
/// # Safety
/// `lut` must point to `len` writable bytes, with `len == 256`.
#[no_mangle]
pub unsafe extern "C" fn fastce_lut(
    img: *const FastceImage,
    algorithm: FastceAlgorithm,
    params: *const FastceParams,
    lut: *mut u8,
    len: usize,
) -> FastceStatus {
    guard(|| {
        let img = image_ref(img)?;
        let params = params.as_ref().ok_or_else(|| null("params"))?;
        if lut.is_null() {
            return Err(null("lut"));
        }
        let curve = bench::lut_for(algorithm.into(), img, &(*params).into())?;
        if len != curve.len() {
            return Err(Failure(
                FastceStatus::InvalidArgument,
                format!("lut buffer holds {len} entries, need {}", curve.len()),
            ));
        }
        let out = std::slice::from_raw_parts_mut(lut, len);
        for (o, &v) in out.iter_mut().zip(curve.lut()) {
            *o = v as u8;
        }
        Ok(())
    })
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fastce_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fastce_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
