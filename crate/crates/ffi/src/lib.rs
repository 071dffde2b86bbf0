//! C ABI over the stream index.
//!
//! Handles are opaque pointers created by `*_new` and released by the
//! matching `*_free`. Fallible calls return a [`BstStatus`]; the message for
//! the last failure on the calling thread is available from
//! [`bst_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;
use std::sync::Arc;

use bstree::index::{BsTree, TreeParams};
use bstree::prune::{IndexBuilder, PruneMode};
use bstree::query::{range_search, range_search_untouched, QueryMode, QueryResult, RangeQuery};
use bstree::sax::{sax_transform, SaxConfig};
use bstree::stream::{SlidingWindow, WindowArchive, WindowSpec};
use bstree::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BstStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DataError = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BstQueryMode {
    Approximate = 0,
    Exact = 1,
}

/// Construction parameters. Start from [`bst_params_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BstParams {
    pub window_len: usize,
    pub slide: usize,
    pub word_len: usize,
    pub alphabet: usize,
    pub order: usize,
    pub mbr_capacity: usize,
    pub max_height: usize,
    pub prune_threshold: u64,
    /// Non-zero: the threshold is a maximum age instead of a clock value.
    pub age_mode: u8,
    /// Archived windows kept for exact queries; 0 keeps all.
    pub archive_capacity: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BstPruneReport {
    pub clock: u64,
    pub visited: usize,
    pub kept: usize,
    pub pruned: usize,
    pub bridges: usize,
    pub old_height: usize,
    pub new_height: usize,
}

/// An index fed point by point.
pub struct BstIndex {
    window: SlidingWindow,
    builder: IndexBuilder,
    archive: Arc<WindowArchive>,
}

/// Window ids returned by a query.
pub struct BstQueryResult {
    ids: Vec<u64>,
    unverifiable: usize,
    candidates: usize,
    nodes_visited: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> BstStatus {
    match e {
        Error::Config(_) | Error::Shape { .. } | Error::WordLength { .. } | Error::InvalidEnvelope(_) => {
            BstStatus::InvalidArgument
        }
        _ => BstStatus::DataError,
    }
}

fn guard(f: impl FnOnce() -> Result<(), BstStatus>) -> BstStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BstStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            BstStatus::Panic
        }
    }
}

fn fail(e: Error) -> BstStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> BstStatus {
    set_error(format!("{what} is null"));
    BstStatus::NullPointer
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bst_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn bst_params_default() -> BstParams {
    let t = TreeParams::default();
    BstParams {
        window_len: 512,
        slide: 512,
        word_len: bstree::sax::DEFAULT_WORD_LEN,
        alphabet: 8,
        order: t.order,
        mbr_capacity: t.mbr_capacity,
        max_height: t.max_height,
        prune_threshold: t.prune_threshold,
        age_mode: 0,
        archive_capacity: 0,
    }
}

fn build_index(p: &BstParams) -> Result<BstIndex, Error> {
    let sax = SaxConfig::new(p.window_len, p.word_len, p.alphabet)?;
    let spec = WindowSpec::new(p.window_len, p.slide)?;
    let params = TreeParams {
        order: p.order,
        mbr_capacity: p.mbr_capacity,
        max_height: p.max_height,
        prune_threshold: p.prune_threshold,
        prune_mode: if p.age_mode != 0 { PruneMode::Age } else { PruneMode::Absolute },
    };
    let archive = Arc::new(if p.archive_capacity == 0 {
        WindowArchive::unbounded()
    } else {
        WindowArchive::with_capacity(p.archive_capacity)
    });
    let window = SlidingWindow::new(spec, sax.clone(), Arc::clone(&archive))?;
    let builder = IndexBuilder::new(BsTree::new(sax, params)?);
    Ok(BstIndex { window, builder, archive })
}

/// # Safety
/// `params` must point to a valid `BstParams`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bst_index_new(params: *const BstParams, out: *mut *mut BstIndex) -> BstStatus {
    guard(|| {
        if params.is_null() {
            return Err(null("params"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let index = build_index(&*params).map_err(fail)?;
        *out = Box::into_raw(Box::new(index));
        Ok(())
    })
}

/// # Safety
/// `index` must come from `bst_index_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bst_index_free(index: *mut BstIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

fn push_values(index: &mut BstIndex, values: &[f64]) -> Result<usize, Error> {
    let mut emitted = 0;
    for &v in values {
        if !v.is_finite() {
            return Err(Error::Config(format!("non-finite stream value {v}")));
        }
        if let Some(rec) = index.window.push_value(v)? {
            index.builder.feed(&rec.word, rec.window_id)?;
            emitted += 1;
        }
    }
    Ok(emitted)
}

/// Appends stream values; `emitted` (optional) receives the number of
/// windows indexed by this call.
///
/// # Safety
/// `index` must be a live handle; `values` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bst_index_push(
    index: *mut BstIndex,
    values: *const f64,
    len: usize,
    emitted: *mut usize,
) -> BstStatus {
    guard(|| {
        let index = index.as_mut().ok_or_else(|| null("index"))?;
        if values.is_null() && len > 0 {
            return Err(null("values"));
        }
        let vals = if len == 0 { &[][..] } else { slice::from_raw_parts(values, len) };
        let n = push_values(index, vals).map_err(fail)?;
        if !emitted.is_null() {
            *emitted = n;
        }
        Ok(())
    })
}

/// # Safety
/// `index` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bst_index_height(index: *const BstIndex) -> usize {
    index.as_ref().map_or(0, |i| i.builder.tree().height())
}

/// # Safety
/// `index` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bst_index_element_count(index: *const BstIndex) -> usize {
    index.as_ref().map_or(0, |i| i.builder.tree().element_count())
}

/// # Safety
/// `index` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bst_index_window_count(index: *const BstIndex) -> usize {
    index.as_ref().map_or(0, |i| i.archive.len())
}

/// # Safety
/// `index` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn bst_index_prune_count(index: *const BstIndex) -> usize {
    index.as_ref().map_or(0, |i| i.builder.prune_reports().len())
}

/// Forces one prune cycle.
///
/// # Safety
/// `index` must be a live handle; `report` may be null.
#[no_mangle]
pub unsafe extern "C" fn bst_index_prune(index: *mut BstIndex, report: *mut BstPruneReport) -> BstStatus {
    guard(|| {
        let index = index.as_mut().ok_or_else(|| null("index"))?;
        let r = index.builder.prune().map_err(fail)?;
        if !report.is_null() {
            *report = BstPruneReport {
                clock: r.clock,
                visited: r.visited,
                kept: r.kept,
                pruned: r.pruned,
                bridges: r.bridges,
                old_height: r.old_height,
                new_height: r.new_height,
            };
        }
        Ok(())
    })
}

/// Range query. With `record_visit` non-zero the query advances the visit
/// clock and stamps the elements it enters.
///
/// # Safety
/// `index` must be a live handle; `pattern` must point to `len` doubles;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bst_index_query(
    index: *mut BstIndex,
    pattern: *const f64,
    len: usize,
    radius: f64,
    mode: BstQueryMode,
    record_visit: u8,
    out: *mut *mut BstQueryResult,
) -> BstStatus {
    guard(|| {
        let index = index.as_mut().ok_or_else(|| null("index"))?;
        if pattern.is_null() {
            return Err(null("pattern"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let mode = match mode {
            BstQueryMode::Approximate => QueryMode::Approximate,
            BstQueryMode::Exact => QueryMode::Exact,
        };
        let q = RangeQuery::new(slice::from_raw_parts(pattern, len).to_vec(), radius, mode).map_err(fail)?;
        let res: QueryResult = if record_visit != 0 {
            range_search(index.builder.tree_mut(), &q, &index.archive)
        } else {
            range_search_untouched(index.builder.tree(), &q, &index.archive)
        }
        .map_err(fail)?;
        let result = BstQueryResult {
            ids: res.matches.into_iter().collect(),
            unverifiable: res.unverifiable.len(),
            candidates: res.candidates_examined,
            nodes_visited: res.nodes_visited,
        };
        *out = Box::into_raw(Box::new(result));
        Ok(())
    })
}

/// # Safety
/// `result` must be a live result handle or null.
#[no_mangle]
pub unsafe extern "C" fn bst_result_len(result: *const BstQueryResult) -> usize {
    result.as_ref().map_or(0, |r| r.ids.len())
}

/// # Safety
/// `result` must be a live result handle or null.
#[no_mangle]
pub unsafe extern "C" fn bst_result_candidates(result: *const BstQueryResult) -> usize {
    result.as_ref().map_or(0, |r| r.candidates)
}

/// # Safety
/// `result` must be a live result handle or null.
#[no_mangle]
pub unsafe extern "C" fn bst_result_unverifiable(result: *const BstQueryResult) -> usize {
    result.as_ref().map_or(0, |r| r.unverifiable)
}

/// # Safety
/// `result` must be a live result handle or null.
#[no_mangle]
pub unsafe extern "C" fn bst_result_nodes_visited(result: *const BstQueryResult) -> usize {
    result.as_ref().map_or(0, |r| r.nodes_visited)
}

/// Copies the ascending window ids into `buf`.
///
/// # Safety
/// `result` must be a live result handle; `buf` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn bst_result_ids(result: *const BstQueryResult, buf: *mut u64, cap: usize) -> BstStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        if r.ids.is_empty() {
            return Ok(());
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        if cap < r.ids.len() {
            set_error(format!("buffer holds {cap} ids, {} needed", r.ids.len()));
            return Err(BstStatus::BufferTooSmall);
        }
        ptr::copy_nonoverlapping(r.ids.as_ptr(), buf, r.ids.len());
        Ok(())
    })
}

/// # Safety
/// `result` must come from `bst_index_query` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bst_result_free(result: *mut BstQueryResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Writes the SAX word of `values` under the index configuration as a
/// NUL-terminated string.
///
/// # Safety
/// `index` must be a live handle; `values` must point to `len` doubles;
/// `buf` must hold `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn bst_index_sax_word(
    index: *const BstIndex,
    values: *const f64,
    len: usize,
    buf: *mut c_char,
    cap: usize,
) -> BstStatus {
    guard(|| {
        let index = index.as_ref().ok_or_else(|| null("index"))?;
        if values.is_null() || buf.is_null() {
            return Err(null("values or buf"));
        }
        let (word, _) =
            sax_transform(slice::from_raw_parts(values, len), index.window.config()).map_err(fail)?;
        let text = word.to_string();
        if cap < text.len() + 1 {
            set_error(format!("buffer holds {cap} bytes, {} needed", text.len() + 1));
            return Err(BstStatus::BufferTooSmall);
        }
        ptr::copy_nonoverlapping(text.as_ptr() as *const c_char, buf, text.len());
        *buf.add(text.len()) = 0;
        Ok(())
    })
}

/// Preorder text dump of the index; release with [`bst_string_free`].
///
/// # Safety
/// `index` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bst_index_dump(index: *const BstIndex, out: *mut *mut c_char) -> BstStatus {
    guard(|| {
        let index = index.as_ref().ok_or_else(|| null("index"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CString::new(index.builder.tree().dump()).map_err(|_| BstStatus::Panic)?;
        *out = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bst_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
