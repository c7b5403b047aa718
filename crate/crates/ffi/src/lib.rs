//! C interface to `ppgraph`.
//!
//! Graphs and fields cross the boundary as opaque handles owned by the
//! caller and released with the matching `*_free` function. Every fallible
//! call returns a [`PpgStatus`]; on failure the message is available from
//! [`ppg_last_error`] on the same thread until the next failing call.
//! Strings returned by the library are released with [`ppg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use ppgraph::canon::{canonicalize, CanonConfig, RawAnnotation};
use ppgraph::config::PipelineConfig;
use ppgraph::eval::evaluate;
use ppgraph::extract::{extract_junctions, PlateauMode};
use ppgraph::field::PlanarField;
use ppgraph::graph::{graph_to_segments, Junction, LineGraph};
use ppgraph::pipeline;
use ppgraph::scorer::{lsam_sample, score_all_pairs, QuantileScorer};
use ppgraph::Error;

/// Result of a call. Codes 2 to 4 match the command line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Io = 3,
    Internal = 4,
}

/// Opaque graph handle.
pub struct PpgGraph(LineGraph);

/// Opaque planar field handle.
pub struct PpgField(PlanarField);

/// Detection and evaluation parameters. Obtain defaults from
/// [`ppg_pipeline_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpgPipelineConfig {
    pub tau: f64,
    pub epsilon: f64,
    pub max_junctions: usize,
    /// Nonzero accepts plateau maxima (greater or equal to neighbours).
    pub plateau_ge: u8,
    pub samples: usize,
    pub quantile: f64,
    pub threshold: f64,
    pub block: usize,
    pub tol_frac: f64,
    pub collinear_tol: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpgCanonConfig {
    pub belt_width: f64,
    pub inner_dist: f64,
    pub min_angle_deg: f64,
    pub merge_tol: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PpgEvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matches: usize,
    pub gt_pixels: usize,
    pub pred_pixels: usize,
    pub tolerance_px: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(e: &Error) -> PpgStatus {
    set_error(&e.to_string());
    match e.exit_code() {
        3 => PpgStatus::Io,
        4 => PpgStatus::Internal,
        _ => PpgStatus::InvalidInput,
    }
}

fn null(what: &str) -> PpgStatus {
    set_error(&format!("{what} is null"));
    PpgStatus::NullPointer
}

/// Runs `f`, turning panics into `Internal`.
fn guard(f: impl FnOnce() -> PpgStatus) -> PpgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal error: {msg}"));
            PpgStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, PpgStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(&format!("{what} is not UTF-8"));
        PpgStatus::InvalidInput
    })
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, need: usize, what: &str) -> Result<&'a mut [T], PpgStatus> {
    if len < need {
        set_error(&format!("{what} holds {len} values, {need} needed"));
        return Err(PpgStatus::InvalidInput);
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn in_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], PpgStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! core {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return fail(&e),
        }
    };
}

fn pipeline_config(cfg: Option<&PpgPipelineConfig>) -> Result<PipelineConfig, Error> {
    let mut out = PipelineConfig::default();
    if let Some(c) = cfg {
        out.extractor.tau = c.tau;
        out.extractor.epsilon = c.epsilon;
        out.extractor.max_junctions = c.max_junctions;
        out.extractor.plateau_mode = if c.plateau_ge != 0 {
            PlateauMode::Ge
        } else {
            PlateauMode::Strict
        };
        out.scorer.samples = c.samples;
        out.scorer.quantile = c.quantile;
        out.scorer.threshold = c.threshold;
        out.scorer.block = c.block;
        out.tol_frac = c.tol_frac;
        out.collinear_tol = c.collinear_tol;
    }
    out.validate()?;
    Ok(out)
}

unsafe fn put<T>(out: *mut *mut T, v: T) {
    *out = Box::into_raw(Box::new(v));
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn ppg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ppg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn ppg_pipeline_config_default() -> PpgPipelineConfig {
    let d = PipelineConfig::default();
    PpgPipelineConfig {
        tau: d.extractor.tau,
        epsilon: d.extractor.epsilon,
        max_junctions: d.extractor.max_junctions,
        plateau_ge: u8::from(d.extractor.plateau_mode == PlateauMode::Ge),
        samples: d.scorer.samples,
        quantile: d.scorer.quantile,
        threshold: d.scorer.threshold,
        block: d.scorer.block,
        tol_frac: d.tol_frac,
        collinear_tol: d.collinear_tol,
    }
}

#[no_mangle]
pub extern "C" fn ppg_canon_config_default() -> PpgCanonConfig {
    let d = CanonConfig::default();
    PpgCanonConfig {
        belt_width: d.belt_width,
        inner_dist: d.inner_dist,
        min_angle_deg: d.min_angle_deg,
        merge_tol: d.merge_tol,
    }
}

/// Builds a graph from `k` junctions (`xy` holds `2k` values, x then y)
/// and `e` edges (`edges` holds `2e` junction indices).
///
/// # Safety
/// `xy` and `edges` must point to at least `2k` and `2e` readable values;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppg_graph_new(
    width: u32,
    height: u32,
    xy: *const f64,
    k: usize,
    edges: *const usize,
    e: usize,
    out: *mut *mut PpgGraph,
) -> PpgStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let xy = tri!(in_slice(xy, 2 * k, "xy"));
        let edges = tri!(in_slice(edges, 2 * e, "edges"));
        let junctions: Vec<Junction> = xy.chunks_exact(2).map(|p| Junction::new(p[0], p[1])).collect();
        let pairs: Vec<(usize, usize)> = edges.chunks_exact(2).map(|p| (p[0], p[1])).collect();
        let g = core!(LineGraph::from_edges(width, height, junctions, &pairs));
        put(out, PpgGraph(g));
        PpgStatus::Ok
    })
}

/// Parses graph JSON.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppg_graph_from_json(json: *const c_char, out: *mut *mut PpgGraph) -> PpgStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let text = tri!(str_arg(json, "json"));
        let g = core!(LineGraph::from_json(text));
        put(out, PpgGraph(g));
        PpgStatus::Ok
    })
}

/// Serializes a graph to JSON; free the result with [`ppg_string_free`].
///
/// # Safety
/// `g` must be a live graph handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppg_graph_to_json(g: *const PpgGraph, out: *mut *mut c_char) -> PpgStatus {
    guard(|| {
        let Some(g) = g.as_ref() else { return null("graph") };
        if out.is_null() {
            return null("out");
        }
        let text = CString::new(g.0.to_json()).expect("graph JSON has no nul bytes");
        *out = text.into_raw();
        PpgStatus::Ok
    })
}

/// # Safety
/// `g` must be null or a live graph handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ppg_graph_free(g: *mut PpgGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Junction count; 0 for null.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn ppg_graph_junction_count(g: *const PpgGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.len())
}

/// Edge count; 0 for null.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn ppg_graph_edge_count(g: *const PpgGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.edge_count())
}

/// # Safety
/// `g` must be a live graph handle; `width` and `height` writable.
#[no_mangle]
pub unsafe extern "C" fn ppg_graph_frame(g: *const PpgGraph, width: *mut u32, height: *mut u32) -> PpgStatus {
    guard(|| {
        let Some(g) = g.as_ref() else { return null("graph") };
        if width.is_null() || height.is_null() {
            return null("frame output");
        }
        *width = g.0.width();
        *height = g.0.height();
        PpgStatus::Ok
    })
}

/// Copies junctions in canonical order into `xy` as x, y pairs. `len` is
/// the capacity of `xy` and must be at least twice the junction count.
///
/// # Safety
/// `g` must be a live graph handle; `xy` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ppg_graph_junctions(g: *const PpgGraph, xy: *mut f64, len: usize) -> PpgStatus {
    guard(|| {
        let Some(g) = g.as_ref() else { return null("graph") };
        let js = g.0.junctions();
        let dst = tri!(out_slice(xy, len, 2 * js.len(), "xy"));
        for (d, j) in dst.chunks_exact_mut(2).zip(js) {
            d[0] = j.x;
            d[1] = j.y;
        }
        PpgStatus::Ok
    })
}

/// Copies edges as sorted `i, j` pairs with `i < j`. `len` must be at
/// least twice the edge count.
///
/// # Safety
/// `g` must be a live graph handle; `ij` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ppg_graph_edges(g: *const PpgGraph, ij: *mut usize, len: usize) -> PpgStatus {
    guard(|| {
        let Some(g) = g.as_ref() else { return null("graph") };
        let edges = g.0.edges();
        let dst = tri!(out_slice(ij, len, 2 * edges.len(), "ij"));
        for (d, (i, j)) in dst.chunks_exact_mut(2).zip(edges) {
            d[0] = i;
            d[1] = j;
        }
        PpgStatus::Ok
    })
}

/// Builds a field from `channels * height * width` values in channel, row,
/// column order.
///
/// # Safety
/// `values` must point to that many readable floats; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ppg_field_new(
    channels: usize,
    height: usize,
    width: usize,
    stride: f64,
    values: *const f32,
    out: *mut *mut PpgField,
) -> PpgStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let Some(n) = channels.checked_mul(height).and_then(|v| v.checked_mul(width)) else {
            set_error("field size overflows");
            return PpgStatus::InvalidInput;
        };
        let values = tri!(in_slice(values, n, "values"));
        let f = core!(PlanarField::new(channels, height, width, stride, values.to_vec()));
        put(out, PpgField(f));
        PpgStatus::Ok
    })
}

/// Reads a PPGF file.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppg_field_read(path: *const c_char, out: *mut *mut PpgField) -> PpgStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let path = tri!(str_arg(path, "path"));
        let f = core!(PlanarField::read_ppgf(Path::new(path)));
        put(out, PpgField(f));
        PpgStatus::Ok
    })
}

/// # Safety
/// `f` must be null or a live field handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ppg_field_free(f: *mut PpgField) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Canonicalizes endpoint annotation JSON. `cfg` may be null for defaults.
///
/// # Safety
/// `json` must be a nul-terminated string; `cfg` null or readable; `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ppg_canonicalize(
    json: *const c_char,
    cfg: *const PpgCanonConfig,
    out: *mut *mut PpgGraph,
) -> PpgStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let text = tri!(str_arg(json, "json"));
        let cfg = cfg.as_ref().map_or_else(CanonConfig::default, |c| CanonConfig {
            belt_width: c.belt_width,
            inner_dist: c.inner_dist,
            min_angle_deg: c.min_angle_deg,
            merge_tol: c.merge_tol,
        });
        let raw = core!(RawAnnotation::from_json(text));
        let g = core!(canonicalize(&raw, &cfg));
        put(out, PpgGraph(g));
        PpgStatus::Ok
    })
}

/// Extracts junctions from a heatmap into `xy` (x, y pairs, capacity
/// `len` values); the junction count goes to `count`. When `len` is too
/// small nothing is copied, `count` is still set and the call fails.
///
/// # Safety
/// `heatmap` must be a live field; `xy` must hold `len` writable values;
/// `cfg` null or readable; `count` writable.
#[no_mangle]
pub unsafe extern "C" fn ppg_extract(
    heatmap: *const PpgField,
    cfg: *const PpgPipelineConfig,
    xy: *mut f64,
    len: usize,
    count: *mut usize,
) -> PpgStatus {
    guard(|| {
        let Some(h) = heatmap.as_ref() else { return null("heatmap") };
        if count.is_null() {
            return null("count");
        }
        let cfg = core!(pipeline_config(cfg.as_ref()));
        let js = core!(extract_junctions(&h.0, &cfg.extractor));
        *count = js.len();
        let dst = tri!(out_slice(xy, len, 2 * js.len(), "xy"));
        for (d, j) in dst.chunks_exact_mut(2).zip(&js) {
            d[0] = j.x;
            d[1] = j.y;
        }
        PpgStatus::Ok
    })
}

/// Samples `samples` points from `(ax, ay)` to `(bx, by)` on every channel
/// of `f`. `out` receives `channels * samples` values, channel-major.
///
/// # Safety
/// `f` must be a live field; `out` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ppg_lsam_sample(
    f: *const PpgField,
    ax: f64,
    ay: f64,
    bx: f64,
    by: f64,
    samples: usize,
    out: *mut f64,
    len: usize,
) -> PpgStatus {
    guard(|| {
        let Some(f) = f.as_ref() else { return null("field") };
        let strip = core!(lsam_sample(&f.0, Junction::new(ax, ay), Junction::new(bx, by), samples));
        let dst = tri!(out_slice(out, len, strip.channels() * strip.len(), "out"));
        for c in 0..strip.channels() {
            dst[c * strip.len()..(c + 1) * strip.len()].copy_from_slice(strip.channel(c));
        }
        PpgStatus::Ok
    })
}

/// Scores all pairs of `k` junctions (`xy`, x then y) on `line_map` with
/// the quantile scorer. `out` receives the symmetric `k * k` matrix.
///
/// # Safety
/// `line_map` must be a live field; `xy` must hold `2k` readable values;
/// `out` must hold `len` writable values; `cfg` null or readable.
#[no_mangle]
pub unsafe extern "C" fn ppg_score_pairs(
    line_map: *const PpgField,
    xy: *const f64,
    k: usize,
    cfg: *const PpgPipelineConfig,
    out: *mut f64,
    len: usize,
) -> PpgStatus {
    guard(|| {
        let Some(f) = line_map.as_ref() else { return null("line_map") };
        let cfg = core!(pipeline_config(cfg.as_ref()));
        let xy = tri!(in_slice(xy, 2 * k, "xy"));
        let junctions: Vec<Junction> = xy.chunks_exact(2).map(|p| Junction::new(p[0], p[1])).collect();
        let dst = tri!(out_slice(out, len, k * k, "out"));
        let scorer = QuantileScorer {
            quantile: cfg.scorer.quantile,
        };
        let m = core!(score_all_pairs(&f.0, &junctions, &cfg.scorer, &scorer));
        dst.copy_from_slice(m.values());
        PpgStatus::Ok
    })
}

/// Detects a graph from junction and line heatmaps.
///
/// # Safety
/// Field handles must be live; `cfg` null or readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ppg_detect(
    junction_map: *const PpgField,
    line_map: *const PpgField,
    cfg: *const PpgPipelineConfig,
    out: *mut *mut PpgGraph,
) -> PpgStatus {
    guard(|| {
        let (Some(jm), Some(lm)) = (junction_map.as_ref(), line_map.as_ref()) else {
            return null("field");
        };
        if out.is_null() {
            return null("out");
        }
        let cfg = core!(pipeline_config(cfg.as_ref()));
        let g = core!(pipeline::detect(&jm.0, &lm.0, &cfg));
        put(out, PpgGraph(g));
        PpgStatus::Ok
    })
}

/// Evaluates `pred` against `gt`; both are reduced to maximal segments
/// with `collinear_tol` first.
///
/// # Safety
/// Graph handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ppg_evaluate(
    gt: *const PpgGraph,
    pred: *const PpgGraph,
    tol_frac: f64,
    collinear_tol: f64,
    out: *mut PpgEvalReport,
) -> PpgStatus {
    guard(|| {
        let (Some(gt), Some(pred)) = (gt.as_ref(), pred.as_ref()) else {
            return null("graph");
        };
        if out.is_null() {
            return null("out");
        }
        let gs = core!(graph_to_segments(&gt.0, collinear_tol));
        let ps = core!(graph_to_segments(&pred.0, collinear_tol));
        let r = core!(evaluate(&gs, &ps, tol_frac));
        *out = PpgEvalReport {
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            matches: r.matches,
            gt_pixels: r.gt_pixels,
            pred_pixels: r.pred_pixels,
            tolerance_px: r.tolerance_px,
        };
        PpgStatus::Ok
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn status_codes_follow_exit_codes() {
        assert_eq!(fail(&Error::Internal("x".into())), PpgStatus::Internal);
        let io = Error::Io {
            path: "p".into(),
            source: std::io::Error::other("x"),
        };
        assert_eq!(fail(&io), PpgStatus::Io);
        assert_eq!(fail(&Error::InvalidInput("x".into())), PpgStatus::InvalidInput);
    }

    #[test]
    fn panics_become_internal() {
        assert_eq!(guard(|| panic!("boom")), PpgStatus::Internal);
        let msg = unsafe { CStr::from_ptr(ppg_last_error()) }.to_str().unwrap();
        assert!(msg.contains("boom"));
    }

    #[test]
    fn null_arguments() {
        let mut out = ptr::null_mut();
        assert_eq!(unsafe { ppg_graph_from_json(ptr::null(), &mut out) }, PpgStatus::NullPointer);
        assert!(out.is_null());
    }
}
