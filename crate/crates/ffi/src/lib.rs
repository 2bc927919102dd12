//! C ABI for `valuepref`.
//!
//! Conventions:
//! - Fallible functions return a [`VpStatus`]; on failure a message is
//!   available from [`vp_last_error_message`] on the same thread.
//! - Objects are opaque handles created by `*_new`/`*_load`/... functions and
//!   released by the matching `*_free`. Freeing NULL is a no-op.
//! - Rankings cross the boundary as group-index arrays: entry `v` is the
//!   0-based tied group of value `v`, group 0 being the most preferred.
//! - Panics never unwind into C; they surface as `VP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use valuepref::dataio::{self, LoadOptions};
use valuepref::estimation::{self, EstimationResult, Estimator, McSemantics, Method, Pipeline};
use valuepref::model::{ChoiceAllocation, Dataset, Ranking, ValueOptionMatrix};
use valuepref::{metrics, synth, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Validation = 3,
    Io = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VpMethod {
    C = 0,
    M = 1,
    Tb = 2,
    Mc = 3,
    Mo = 4,
    Comb = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VpMcSemantics {
    Prose = 0,
    Pseudocode = 1,
}

/// A validated dataset.
pub struct VpDataset(Dataset);

/// A value-option relevance matrix.
pub struct VpVoMatrix(ValueOptionMatrix);

/// One participant's estimate: ranking, optional utility, final matrix.
pub struct VpEstimate(EstimationResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> VpStatus {
    match e {
        Error::Io { .. } => VpStatus::Io,
        Error::InvalidConfig(_) | Error::InvalidPipeline(_) | Error::DimensionMismatch { .. } => {
            VpStatus::InvalidArgument
        }
        _ => VpStatus::Validation,
    }
}

enum Fail {
    Null(&'static str),
    Arg(String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

type Outcome = Result<(), Fail>;

/// Runs `f`, converting failures and panics into a status plus message.
fn guard(f: impl FnOnce() -> Outcome) -> VpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            VpStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            VpStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            VpStatus::InvalidArgument
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            VpStatus::Panic
        }
    }
}

unsafe fn ref_of<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out_of<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn slice_of<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn slice_mut_of<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn str_of<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Arg(format!("{what} is not valid UTF-8")))
}

fn check_len(what: &str, expected: usize, actual: usize) -> Outcome {
    if expected == actual {
        Ok(())
    } else {
        Err(Fail::Arg(format!("{what}: expected length {expected}, got {actual}")))
    }
}

fn write_groups(r: &Ranking, out: &mut [usize]) {
    out.copy_from_slice(r.group_indices());
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn vp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads and validates a dataset file (and its ground-truth sidecar).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_dataset_load(path: *const c_char, lenient: c_int, out: *mut *mut VpDataset) -> VpStatus {
    guard(|| {
        let out = out_of(out, "out")?;
        let path = str_of(path, "path")?;
        let loaded = dataio::load_dataset_with(Path::new(path), LoadOptions { lenient: lenient != 0 })?;
        *out = Box::into_raw(Box::new(VpDataset(loaded.dataset)));
        Ok(())
    })
}

/// Generates a synthetic dataset with default settings.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_dataset_synthetic(participants: usize, seed: u64, out: *mut *mut VpDataset) -> VpStatus {
    guard(|| {
        let out = out_of(out, "out")?;
        let ds = synth::generate(&synth::SynthConfig {
            participants,
            seed,
            ..synth::SynthConfig::default()
        })?;
        *out = Box::into_raw(Box::new(VpDataset(ds)));
        Ok(())
    })
}

/// Writes a dataset (and its ground truth, if any) to `path`.
///
/// # Safety
/// `ds` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn vp_dataset_save(ds: *const VpDataset, path: *const c_char) -> VpStatus {
    guard(|| {
        let ds = ref_of(ds, "dataset")?;
        dataio::write_dataset(&ds.0, Path::new(str_of(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `ds` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vp_dataset_free(ds: *mut VpDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Participant count; 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn vp_dataset_num_participants(ds: *const VpDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.participants.len())
}

/// # Safety
/// `ds` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn vp_dataset_num_values(ds: *const VpDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.values.len())
}

/// # Safety
/// `ds` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn vp_dataset_num_options(ds: *const VpDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.options.len())
}

/// Annotation counts, row-major `values × options`.
///
/// # Safety
/// `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn vp_dataset_annotation_counts(ds: *const VpDataset, out: *mut u64, len: usize) -> VpStatus {
    guard(|| {
        let ds = ref_of(ds, "dataset")?;
        let out = slice_mut_of(out, len, "out")?;
        let counts = dataio::annotation_counts(&ds.0);
        check_len("counts", ds.0.values.len() * ds.0.options.len(), len)?;
        for (dst, src) in out.iter_mut().zip(counts.iter().flatten()) {
            *dst = *src;
        }
        Ok(())
    })
}

/// Matrix from a row-major 0/1 grid.
///
/// # Safety
/// `cells` must hold `rows * cols` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_vo_new(rows: usize, cols: usize, cells: *const u8, out: *mut *mut VpVoMatrix) -> VpStatus {
    guard(|| {
        let out = out_of(out, "out")?;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Fail::Arg("matrix too large".into()))?;
        let cells = slice_of(cells, n, "cells")?;
        let grid: Vec<Vec<u8>> = (0..rows).map(|r| cells[r * cols..(r + 1) * cols].to_vec()).collect();
        let vo = if rows == 0 {
            ValueOptionMatrix::zeros(0, cols)
        } else {
            ValueOptionMatrix::from_rows(&grid)?
        };
        *out = Box::into_raw(Box::new(VpVoMatrix(vo)));
        Ok(())
    })
}

/// Thresholds the dataset's annotation counts: a cell is 1 iff at least
/// `threshold` motivations for the option carry the value.
///
/// # Safety
/// `ds` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_vo_from_annotations(
    ds: *const VpDataset,
    threshold: u64,
    out: *mut *mut VpVoMatrix,
) -> VpStatus {
    guard(|| {
        let ds = ref_of(ds, "dataset")?;
        let out = out_of(out, "out")?;
        let vo = estimation::init_vo(&dataio::annotation_counts(&ds.0), threshold);
        *out = Box::into_raw(Box::new(VpVoMatrix(vo)));
        Ok(())
    })
}

/// # Safety
/// `vo` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vp_vo_free(vo: *mut VpVoMatrix) {
    if !vo.is_null() {
        drop(Box::from_raw(vo));
    }
}

/// # Safety
/// `vo` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn vp_vo_rows(vo: *const VpVoMatrix) -> usize {
    vo.as_ref().map_or(0, |m| m.0.rows())
}

/// # Safety
/// `vo` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn vp_vo_cols(vo: *const VpVoMatrix) -> usize {
    vo.as_ref().map_or(0, |m| m.0.cols())
}

/// Copies the matrix into a row-major 0/1 grid of `len` bytes.
///
/// # Safety
/// `out` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn vp_vo_cells(vo: *const VpVoMatrix, out: *mut u8, len: usize) -> VpStatus {
    guard(|| {
        let vo = &ref_of(vo, "matrix")?.0;
        check_len("cells", vo.rows() * vo.cols(), len)?;
        let out = slice_mut_of(out, len, "out")?;
        for (dst, src) in out.iter_mut().zip(vo.to_rows().into_iter().flatten()) {
            *dst = src;
        }
        Ok(())
    })
}

fn estimator(method: VpMethod, semantics: VpMcSemantics, order: Option<&str>) -> Result<Estimator, Fail> {
    let method = match method {
        VpMethod::C => Method::C,
        VpMethod::M => Method::M,
        VpMethod::Tb => Method::TB,
        VpMethod::Mc => Method::MC,
        VpMethod::Mo => Method::MO,
        VpMethod::Comb => Method::Comb,
    };
    let semantics = match semantics {
        VpMcSemantics::Prose => McSemantics::Prose,
        VpMcSemantics::Pseudocode => McSemantics::Pseudocode,
    };
    let pipeline = match order {
        Some(s) => s.parse::<Pipeline>()?,
        None => Pipeline::default(),
    };
    Ok(Estimator {
        method,
        semantics,
        pipeline,
    })
}

/// Estimates one participant of a dataset. `order` is the stage order of
/// the combined method ("MO>MC>TB" when NULL).
///
/// # Safety
/// Handles must come from this library; `order` must be NULL or
/// NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_estimate(
    ds: *const VpDataset,
    vo: *const VpVoMatrix,
    participant: usize,
    method: VpMethod,
    semantics: VpMcSemantics,
    order: *const c_char,
    out: *mut *mut VpEstimate,
) -> VpStatus {
    guard(|| {
        let ds = &ref_of(ds, "dataset")?.0;
        let vo = &ref_of(vo, "matrix")?.0;
        let out = out_of(out, "out")?;
        let order = if order.is_null() { None } else { Some(str_of(order, "order")?) };
        let p = ds.participants.get(participant).ok_or_else(|| {
            Fail::Arg(format!("participant {participant} out of range ({})", ds.participants.len()))
        })?;
        vo.check_shape(ds.values.len(), ds.options.len())?;
        let result = estimator(method, semantics, order)?.estimate_participant(vo, p)?;
        *out = Box::into_raw(Box::new(VpEstimate(result)));
        Ok(())
    })
}

/// # Safety
/// `e` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vp_estimate_free(e: *mut VpEstimate) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Number of values in the estimate; 0 for NULL.
///
/// # Safety
/// `e` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn vp_estimate_len(e: *const VpEstimate) -> usize {
    e.as_ref().map_or(0, |e| e.0.ranking.len())
}

/// Writes the group index of every value.
///
/// # Safety
/// `out` must hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn vp_estimate_groups(e: *const VpEstimate, out: *mut usize, len: usize) -> VpStatus {
    guard(|| {
        let r = &ref_of(e, "estimate")?.0.ranking;
        check_len("groups", r.len(), len)?;
        write_groups(r, slice_mut_of(out, len, "out")?);
        Ok(())
    })
}

/// Writes the utility vector; sets `*has_utility` to 0 (and writes
/// nothing else) when the method produced only a ranking.
///
/// # Safety
/// `out` must hold `len` elements; `has_utility` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_estimate_utility(
    e: *const VpEstimate,
    out: *mut u64,
    len: usize,
    has_utility: *mut c_int,
) -> VpStatus {
    guard(|| {
        let e = &ref_of(e, "estimate")?.0;
        let has = out_of(has_utility, "has_utility")?;
        match &e.utility {
            Some(u) => {
                check_len("utility", u.len(), len)?;
                slice_mut_of(out, len, "out")?.copy_from_slice(u.as_slice());
                *has = 1;
            }
            None => *has = 0,
        }
        Ok(())
    })
}

/// Copies the matrix the estimate ended with into a new handle.
///
/// # Safety
/// `e` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_estimate_vo(e: *const VpEstimate, out: *mut *mut VpVoMatrix) -> VpStatus {
    guard(|| {
        let e = &ref_of(e, "estimate")?.0;
        *out_of(out, "out")? = Box::into_raw(Box::new(VpVoMatrix(e.vo_after.clone())));
        Ok(())
    })
}

/// Method-C utility of a point allocation: `out[v] = Σ_o vo[v][o]·points[o]`.
/// The points must sum to the allocation's budget, which is their sum.
///
/// # Safety
/// `points` must hold `n_options` and `out` `n_values` elements.
#[no_mangle]
pub unsafe extern "C" fn vp_utility(
    vo: *const VpVoMatrix,
    points: *const u64,
    n_options: usize,
    out: *mut u64,
    n_values: usize,
) -> VpStatus {
    guard(|| {
        let vo = &ref_of(vo, "matrix")?.0;
        let points = slice_of(points, n_options, "points")?.to_vec();
        check_len("values", vo.rows(), n_values)?;
        let budget = points.iter().sum();
        let c = ChoiceAllocation::new(points, budget)?;
        let u = vo.utility(&c)?;
        slice_mut_of(out, n_values, "out")?.copy_from_slice(u.as_slice());
        Ok(())
    })
}

/// Ranks values by descending score; equal scores share a group.
///
/// # Safety
/// `scores` and `out_groups` must hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn vp_rank_from_scores(scores: *const u64, n: usize, out_groups: *mut usize) -> VpStatus {
    guard(|| {
        let r = Ranking::from_scores(slice_of(scores, n, "scores")?);
        write_groups(&r, slice_mut_of(out_groups, n, "out_groups")?);
        Ok(())
    })
}

/// Kemeny distance between two rankings given as group-index arrays
/// (smaller index = more preferred; indices need not be contiguous).
///
/// # Safety
/// `a` and `b` must hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vp_kemeny_distance(a: *const usize, b: *const usize, n: usize, out: *mut f64) -> VpStatus {
    guard(|| {
        let ra = Ranking::from_group_keys(slice_of(a, n, "a")?);
        let rb = Ranking::from_group_keys(slice_of(b, n, "b")?);
        *out_of(out, "out")? = metrics::kemeny_distance(&ra, &rb)?;
        Ok(())
    })
}

/// Thresholds a row-major `rows × cols` count grid into 0/1 cells.
///
/// # Safety
/// `counts` and `out_cells` must hold `rows * cols` elements.
#[no_mangle]
pub unsafe extern "C" fn vp_init_vo(
    counts: *const u64,
    rows: usize,
    cols: usize,
    threshold: u64,
    out_cells: *mut u8,
) -> VpStatus {
    guard(|| {
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Fail::Arg("matrix too large".into()))?;
        let counts = slice_of(counts, n, "counts")?;
        let out = slice_mut_of(out_cells, n, "out_cells")?;
        let grid: Vec<Vec<u64>> = (0..rows).map(|r| counts[r * cols..(r + 1) * cols].to_vec()).collect();
        let vo = estimation::init_vo(&grid, threshold);
        for (dst, src) in out.iter_mut().zip(vo.to_rows().into_iter().flatten()) {
            *dst = src;
        }
        Ok(())
    })
}
