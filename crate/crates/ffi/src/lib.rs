//! C ABI over `matte-core`.
//!
//! Every function returns a [`MatteStatus`] (or a value with a documented sentinel) and never
//! unwinds across the boundary. On failure, [`matte_last_error`] returns a message for the
//! calling thread. Buffers are row-major: RGB is 3 interleaved bytes per pixel, trimaps are
//! one byte per pixel (0 background, 255 foreground, anything else unknown), and alpha
//! outputs are `double` values in `[0, 1]`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use matte_core::eval::flicker_report;
use matte_core::{estimate_frame_matte, run_pipeline, run_sequence, AlphaMatte, Frame, MatteError, PipelineConfig, Trimap};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatteStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidTrimap = 3,
    DimensionMismatch = 4,
    Io = 5,
    NotReady = 6,
    Internal = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatteStage {
    Initial = 0,
    Smoothed = 1,
}

/// Mirrors the pipeline configuration. `superpixels == 0` derives the count from region
/// area; `threads == 0` uses every core.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatteParams {
    pub lambda: f64,
    pub radius: f64,
    pub patch: usize,
    pub k: usize,
    pub gamma: f64,
    pub superpixels: usize,
    pub compactness: f64,
    pub csh_tables: usize,
    pub csh_bits: u32,
    pub csh_iterations: usize,
    pub csh_kernels: usize,
    pub threads: usize,
    pub skip_nlm: bool,
    pub seed: u64,
}

impl From<&PipelineConfig> for MatteParams {
    fn from(c: &PipelineConfig) -> Self {
        Self {
            lambda: c.lambda,
            radius: c.radius,
            patch: c.patch,
            k: c.k,
            gamma: c.gamma,
            superpixels: c.superpixels.unwrap_or(0),
            compactness: c.compactness,
            csh_tables: c.csh_tables,
            csh_bits: c.csh_bits,
            csh_iterations: c.csh_iterations,
            csh_kernels: c.csh_kernels,
            threads: c.threads,
            skip_nlm: c.skip_nlm,
            seed: c.seed,
        }
    }
}

impl From<&MatteParams> for PipelineConfig {
    fn from(p: &MatteParams) -> Self {
        Self {
            lambda: p.lambda,
            radius: p.radius,
            patch: p.patch,
            k: p.k,
            gamma: p.gamma,
            superpixels: (p.superpixels > 0).then_some(p.superpixels),
            compactness: p.compactness,
            csh_tables: p.csh_tables,
            csh_bits: p.csh_bits,
            csh_iterations: p.csh_iterations,
            csh_kernels: p.csh_kernels,
            threads: p.threads,
            skip_nlm: p.skip_nlm,
            seed: p.seed,
        }
    }
}

/// Opaque handle holding frames, trimaps, and the mattes of the last run.
pub struct MatteSequence {
    width: usize,
    height: usize,
    frames: Vec<Frame>,
    trimaps: Vec<Trimap>,
    initial: Vec<AlphaMatte>,
    smoothed: Vec<AlphaMatte>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &MatteError) -> MatteStatus {
    match e {
        MatteError::Stage { source, .. } => status_of(source),
        MatteError::InvalidTrimap(_) => MatteStatus::InvalidTrimap,
        MatteError::DimensionMismatch { .. } | MatteError::BufferLength { .. } | MatteError::PatchTooLarge { .. } => {
            MatteStatus::DimensionMismatch
        }
        MatteError::ImageRead { .. }
        | MatteError::ImageWrite { .. }
        | MatteError::Io { .. }
        | MatteError::NoFrames { .. }
        | MatteError::MissingTrimap { .. } => MatteStatus::Io,
        MatteError::Config(_)
        | MatteError::PatchNotPowerOfTwo(_)
        | MatteError::TooManyKernels { .. }
        | MatteError::InvalidTemplate(_)
        | MatteError::InvalidSchedule(_)
        | MatteError::AlphaOutOfRange(_)
        | MatteError::SequenceLength(_) => MatteStatus::InvalidArgument,
        _ => MatteStatus::Internal,
    }
}

/// Runs `f`, recording errors and converting panics.
fn guard(f: impl FnOnce() -> Result<(), (MatteStatus, String)>) -> MatteStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            MatteStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(&format!("internal panic: {msg}"));
            MatteStatus::Panic
        }
    }
}

fn core_err(e: MatteError) -> (MatteStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (MatteStatus, String) {
    (MatteStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (MatteStatus, String) {
    (MatteStatus::InvalidArgument, msg.into())
}

fn pixel_count(width: usize, height: usize) -> Result<usize, (MatteStatus, String)> {
    if width == 0 || height == 0 {
        return Err(invalid(format!("empty frame {width}x{height}")));
    }
    width
        .checked_mul(height)
        .filter(|n| n.checked_mul(3).is_some())
        .ok_or_else(|| invalid(format!("frame {width}x{height} is too large")))
}

/// # Safety
/// `rgb` must point to `3 * n` bytes and `trimap` to `n` bytes.
unsafe fn read_frame(
    width: usize,
    height: usize,
    index: usize,
    rgb: *const u8,
    trimap: *const u8,
) -> Result<(Frame, Trimap), (MatteStatus, String)> {
    let n = pixel_count(width, height)?;
    if rgb.is_null() {
        return Err(null("rgb"));
    }
    if trimap.is_null() {
        return Err(null("trimap"));
    }
    let rgb = slice::from_raw_parts(rgb, 3 * n);
    let gray = slice::from_raw_parts(trimap, n);
    let pixels = rgb
        .chunks_exact(3)
        .map(|p| [p[0], p[1], p[2]].map(|c| f64::from(c) / 255.0))
        .collect();
    let frame = Frame::from_rgb(width, height, index, pixels).map_err(core_err)?;
    let trimap = Trimap::from_gray(width, height, gray).map_err(core_err)?;
    Ok((frame, trimap))
}

unsafe fn read_params(params: *const MatteParams) -> Result<PipelineConfig, (MatteStatus, String)> {
    let cfg = if params.is_null() {
        PipelineConfig::default()
    } else {
        PipelineConfig::from(&*params)
    };
    cfg.validate().map_err(core_err)?;
    Ok(cfg)
}

unsafe fn read_path<'a>(p: *const c_char, what: &str) -> Result<&'a Path, (MatteStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

/// Default parameters.
#[no_mangle]
pub extern "C" fn matte_params_default() -> MatteParams {
    MatteParams::from(&PipelineConfig::default())
}

/// Message for the most recent failure on this thread; empty after a success. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn matte_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn matte_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Estimates the initial matte of a single frame into `alpha_out` (`width * height` doubles).
///
/// # Safety
/// `rgb` must hold `3 * width * height` bytes, `trimap` and `alpha_out` `width * height`
/// elements. `params` may be null for defaults.
#[no_mangle]
pub unsafe extern "C" fn matte_estimate_frame(
    width: usize,
    height: usize,
    rgb: *const u8,
    trimap: *const u8,
    params: *const MatteParams,
    alpha_out: *mut f64,
) -> MatteStatus {
    guard(|| {
        let (frame, trimap) = read_frame(width, height, 0, rgb, trimap)?;
        let cfg = read_params(params)?;
        if alpha_out.is_null() {
            return Err(null("alpha_out"));
        }
        let m = estimate_frame_matte(&frame, &trimap, &cfg.matte_params()).map_err(core_err)?;
        slice::from_raw_parts_mut(alpha_out, width * height).copy_from_slice(m.alpha());
        Ok(())
    })
}

/// Runs the full pipeline on a directory of PNG frames and trimaps, writing mattes and
/// reports under `output_dir`.
///
/// # Safety
/// `input_dir` and `output_dir` must be NUL-terminated strings; `params` may be null.
#[no_mangle]
pub unsafe extern "C" fn matte_run_pipeline(
    input_dir: *const c_char,
    output_dir: *const c_char,
    params: *const MatteParams,
) -> MatteStatus {
    guard(|| {
        let input = read_path(input_dir, "input_dir")?;
        let output = read_path(output_dir, "output_dir")?;
        let cfg = read_params(params)?;
        run_pipeline(input, output, &cfg).map_err(core_err)?;
        Ok(())
    })
}

/// New empty sequence of `width x height` frames, or null if either is zero.
#[no_mangle]
pub extern "C" fn matte_sequence_new(width: usize, height: usize) -> *mut MatteSequence {
    match catch_unwind(|| pixel_count(width, height)) {
        Ok(Ok(_)) => Box::into_raw(Box::new(MatteSequence {
            width,
            height,
            frames: Vec::new(),
            trimaps: Vec::new(),
            initial: Vec::new(),
            smoothed: Vec::new(),
        })),
        Ok(Err((_, msg))) => {
            set_error(&msg);
            ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic");
            ptr::null_mut()
        }
    }
}

/// Releases a sequence. Null is ignored.
///
/// # Safety
/// `seq` must come from [`matte_sequence_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn matte_sequence_free(seq: *mut MatteSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// Appends a frame and its trimap. Invalidates results of a previous run.
///
/// # Safety
/// `seq` must be a live handle; buffers as in [`matte_estimate_frame`].
#[no_mangle]
pub unsafe extern "C" fn matte_sequence_push_frame(seq: *mut MatteSequence, rgb: *const u8, trimap: *const u8) -> MatteStatus {
    guard(|| {
        let seq = seq.as_mut().ok_or_else(|| null("seq"))?;
        let (frame, trimap) = read_frame(seq.width, seq.height, seq.frames.len(), rgb, trimap)?;
        seq.frames.push(frame);
        seq.trimaps.push(trimap);
        seq.initial.clear();
        seq.smoothed.clear();
        Ok(())
    })
}

/// Number of frames pushed so far, or 0 for a null handle.
///
/// # Safety
/// `seq` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn matte_sequence_len(seq: *const MatteSequence) -> usize {
    seq.as_ref().map_or(0, |s| s.frames.len())
}

/// Runs every stage over the pushed frames.
///
/// # Safety
/// `seq` must be a live handle; `params` may be null.
#[no_mangle]
pub unsafe extern "C" fn matte_sequence_run(seq: *mut MatteSequence, params: *const MatteParams) -> MatteStatus {
    guard(|| {
        let seq = seq.as_mut().ok_or_else(|| null("seq"))?;
        let cfg = read_params(params)?;
        if seq.frames.is_empty() {
            return Err((MatteStatus::NotReady, "sequence has no frames".into()));
        }
        let out = run_sequence(&seq.frames, &seq.trimaps, &cfg).map_err(core_err)?;
        seq.initial = out.initial;
        seq.smoothed = out.smoothed;
        Ok(())
    })
}

unsafe fn mattes_for<'a>(seq: *const MatteSequence, stage: MatteStage) -> Result<(&'a MatteSequence, &'a [AlphaMatte]), (MatteStatus, String)> {
    let seq: &'a MatteSequence = seq.as_ref().ok_or_else(|| null("seq"))?;
    let mattes = match stage {
        MatteStage::Initial => &seq.initial,
        MatteStage::Smoothed => &seq.smoothed,
    };
    if mattes.is_empty() {
        return Err((MatteStatus::NotReady, "run the sequence first".into()));
    }
    Ok((seq, mattes.as_slice()))
}

/// Copies the matte of frame `index` at `stage` into `alpha_out` (`width * height` doubles).
///
/// # Safety
/// `seq` must be a live handle and `alpha_out` must hold `width * height` doubles.
#[no_mangle]
pub unsafe extern "C" fn matte_sequence_alpha(
    seq: *const MatteSequence,
    index: usize,
    stage: MatteStage,
    alpha_out: *mut f64,
) -> MatteStatus {
    guard(|| {
        let (seq, mattes) = mattes_for(seq, stage)?;
        let m = mattes
            .get(index)
            .ok_or_else(|| invalid(format!("frame {index} out of range ({} frames)", mattes.len())))?;
        if alpha_out.is_null() {
            return Err(null("alpha_out"));
        }
        slice::from_raw_parts_mut(alpha_out, seq.width * seq.height).copy_from_slice(m.alpha());
        Ok(())
    })
}

/// Mean temporal flicker of the mattes at `stage` over unknown pixels.
///
/// # Safety
/// `seq` must be a live handle and `flicker_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn matte_sequence_flicker(seq: *const MatteSequence, stage: MatteStage, flicker_out: *mut f64) -> MatteStatus {
    guard(|| {
        let (seq, mattes) = mattes_for(seq, stage)?;
        if flicker_out.is_null() {
            return Err(null("flicker_out"));
        }
        let r = flicker_report(mattes, &seq.frames, &seq.trimaps).map_err(core_err)?;
        *flicker_out = r.mean;
        Ok(())
    })
}
