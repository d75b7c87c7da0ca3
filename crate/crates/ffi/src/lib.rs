//! C ABI for `hitwalk`.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `_free` function. Every function returns an [`HwStatus`]; on
//! failure [`hw_last_error`] describes the problem. Output buffers are
//! caller-allocated with an explicit length.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use hitwalk::ctime::{ct_cdf, ct_pdf};
use hitwalk::graph_spec::GraphSpec;
use hitwalk::montecarlo::{simulate, SimConfig};
use hitwalk::spectral::gf_series;
use hitwalk::{
    make_absorbing, moments, pmf, simple_walk_kernel, AbsorbingSystem, ErrorClass, Graph, HitError,
};

/// Status codes. The numeric values of the first four match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HwStatus {
    Ok = 0,
    InvalidInput = 2,
    HypothesisViolation = 3,
    NumericalFailure = 4,
    NullPointer = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// A graph together with its simple random walk.
pub struct HwGraph {
    graph: Graph,
}

/// The walk on a graph with one target node made absorbing.
pub struct HwAbsorbing {
    system: AbsorbingSystem,
    node_count: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HwSimSummary {
    pub trials: u64,
    pub completed: u64,
    pub capped_count: u64,
    pub mean: f64,
    pub variance: f64,
    pub min: u64,
    pub max: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(HwStatus, String);

impl From<HitError> for Failure {
    fn from(e: HitError) -> Self {
        let status = match e.class() {
            ErrorClass::InvalidInput => HwStatus::InvalidInput,
            ErrorClass::HypothesisViolation => HwStatus::HypothesisViolation,
            ErrorClass::NumericalFailure => HwStatus::NumericalFailure,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(HwStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            HwStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            HwStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(HwStatus::InvalidInput, format!("{what} is not valid UTF-8")))
}

unsafe fn out_slice<'a>(
    p: *mut f64,
    len: usize,
    need: usize,
    what: &str,
) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    if len < need {
        return Err(Failure(
            HwStatus::BufferTooSmall,
            format!("{what} holds {len} values, {need} needed"),
        ));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn graph_ref<'a>(g: *const HwGraph) -> Result<&'a HwGraph, Failure> {
    g.as_ref().ok_or_else(|| null("graph"))
}

unsafe fn absorbing_ref<'a>(a: *const HwAbsorbing) -> Result<&'a HwAbsorbing, Failure> {
    a.as_ref().ok_or_else(|| null("absorbing system"))
}

unsafe fn write_graph(spec: GraphSpec, out: *mut *mut HwGraph) -> Result<(), Failure> {
    let graph = spec.build()?;
    graph.require_connected()?;
    *out = Box::into_raw(Box::new(HwGraph { graph }));
    Ok(())
}

/// Message for the last failed call on this thread, or an empty string. Valid
/// until the next `hw_` call on the same thread.
#[no_mangle]
pub extern "C" fn hw_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a preset graph from `name:args`, e.g. `"hypercube:3"`.
#[no_mangle]
pub unsafe extern "C" fn hw_graph_from_preset(
    preset: *const c_char,
    out: *mut *mut HwGraph,
) -> HwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = GraphSpec::from_preset_str(str_arg(preset, "preset")?)?;
        write_graph(spec, out)
    })
}

/// Builds a graph from a JSON graph spec.
#[no_mangle]
pub unsafe extern "C" fn hw_graph_from_json(
    json: *const c_char,
    out: *mut *mut HwGraph,
) -> HwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = GraphSpec::from_json_str(str_arg(json, "json")?)?;
        write_graph(spec, out)
    })
}

/// Node count, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn hw_graph_node_count(graph: *const HwGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.graph.node_count())
}

#[no_mangle]
pub unsafe extern "C" fn hw_graph_free(graph: *mut HwGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

#[no_mangle]
pub unsafe extern "C" fn hw_absorbing_new(
    graph: *const HwGraph,
    target: usize,
    out: *mut *mut HwAbsorbing,
) -> HwStatus {
    guard(|| {
        let g = graph_ref(graph)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let kernel = simple_walk_kernel(&g.graph)?;
        let system = make_absorbing(&kernel, target)?;
        *out = Box::into_raw(Box::new(HwAbsorbing {
            system,
            node_count: g.graph.node_count(),
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn hw_absorbing_free(system: *mut HwAbsorbing) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// Number of non-target nodes, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn hw_absorbing_dim(system: *const HwAbsorbing) -> usize {
    system.as_ref().map_or(0, |s| s.system.dim())
}

fn reduced(a: &HwAbsorbing, start: usize) -> Result<usize, Failure> {
    if start >= a.node_count {
        return Err(Failure(
            HwStatus::InvalidInput,
            format!("start {start} outside 0..{}", a.node_count),
        ));
    }
    Ok(a.system.reduced_index(start)?)
}

/// Writes `P(tau = n)` for `n = 1..=horizon` into `out[0..horizon]`.
#[no_mangle]
pub unsafe extern "C" fn hw_pmf(
    system: *const HwAbsorbing,
    start: usize,
    horizon: usize,
    out: *mut f64,
    out_len: usize,
) -> HwStatus {
    guard(|| {
        let a = absorbing_ref(system)?;
        reduced(a, start)?;
        let dst = out_slice(out, out_len, horizon, "out")?;
        let series = pmf(&a.system, horizon)?.series(start)?;
        dst[..horizon].copy_from_slice(&series);
        Ok(())
    })
}

/// Mean, second moment and variance of the hitting time from `start`. Any of
/// the output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn hw_moments(
    system: *const HwAbsorbing,
    start: usize,
    mean: *mut f64,
    second: *mut f64,
    variance: *mut f64,
) -> HwStatus {
    guard(|| {
        let a = absorbing_ref(system)?;
        let r = reduced(a, start)?;
        let m = moments(&a.system)?;
        for (p, v) in [
            (mean, m.mean[r]),
            (second, m.second[r]),
            (variance, m.variance[r]),
        ] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// `P(tau^c <= t)` for the rate-1 continuous-time walk.
#[no_mangle]
pub unsafe extern "C" fn hw_ct_cdf(
    system: *const HwAbsorbing,
    start: usize,
    t: f64,
    tol: f64,
    out: *mut f64,
) -> HwStatus {
    guard(|| {
        let a = absorbing_ref(system)?;
        let r = reduced(a, start)?;
        let dst = out.as_mut().ok_or_else(|| null("out"))?;
        *dst = ct_cdf(&a.system, t, tol)?[r];
        Ok(())
    })
}

/// Density of `tau^c` at `t`.
#[no_mangle]
pub unsafe extern "C" fn hw_ct_pdf(
    system: *const HwAbsorbing,
    start: usize,
    t: f64,
    tol: f64,
    out: *mut f64,
) -> HwStatus {
    guard(|| {
        let a = absorbing_ref(system)?;
        let r = reduced(a, start)?;
        let dst = out.as_mut().ok_or_else(|| null("out"))?;
        *dst = ct_pdf(&a.system, t, tol)?[r];
        Ok(())
    })
}

/// Seeded simulation; the result does not depend on `workers`.
#[no_mangle]
pub unsafe extern "C" fn hw_simulate(
    graph: *const HwGraph,
    start: usize,
    target: usize,
    trials: u64,
    seed: u64,
    workers: u32,
    out: *mut HwSimSummary,
) -> HwStatus {
    guard(|| {
        let g = graph_ref(graph)?;
        let dst = out.as_mut().ok_or_else(|| null("out"))?;
        let kernel = simple_walk_kernel(&g.graph)?;
        let config = SimConfig::new(trials, seed).with_workers(workers.max(1) as usize);
        let s = simulate(&kernel, start, target, &config)?;
        *dst = HwSimSummary {
            trials: s.trials,
            completed: s.completed,
            capped_count: s.capped_count,
            mean: s.mean,
            variance: s.variance,
            min: s.min,
            max: s.max,
        };
        Ok(())
    })
}

/// Generating-function coefficients `P(tau = n)`, `n = 0..=horizon`, by the
/// trace recursion. Needs `out_len >= horizon + 1` and a vertex-transitive graph.
#[no_mangle]
pub unsafe extern "C" fn hw_gf_series(
    graph: *const HwGraph,
    start: usize,
    target: usize,
    horizon: usize,
    out: *mut f64,
    out_len: usize,
) -> HwStatus {
    guard(|| {
        let g = graph_ref(graph)?;
        let need = horizon
            .checked_add(1)
            .ok_or_else(|| Failure(HwStatus::InvalidInput, "horizon too large".into()))?;
        let dst = out_slice(out, out_len, need, "out")?;
        if !g.graph.is_vertex_transitive() {
            return Err(Failure(
                HwStatus::HypothesisViolation,
                "trace recursion needs a vertex-transitive graph".into(),
            ));
        }
        let c = gf_series(&g.graph, start, target, horizon)?;
        dst[..=horizon].copy_from_slice(&c);
        Ok(())
    })
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn hw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
