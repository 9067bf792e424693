//! C ABI for the cayham toolkit.
//!
//! The interface follows the usual C conventions: opaque handles created
//! and destroyed by paired functions, integer status codes, and results
//! returned as heap-allocated JSON strings that the caller releases with
//! [`cayham_string_free`].  A human-readable message for the most recent
//! failure on the current thread is available from
//! [`cayham_last_error_message`].
//!
//! Every entry point catches panics, so no Rust unwinding ever crosses the
//! boundary; a caught panic is reported as [`CayhamStatus::InternalError`].
//!
//! The matching header is generated into `include/cayham.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use cayham::assembler::{forest_bipartite, forest_nonbipartite, hamilton_cycle, PipelineParams};
use cayham::cayley::CayleyGraph;
use cayham::group::{build_group, GeneratorSet, GroupSpec};
use cayham::oracle::{verify_forest_endpoints, verify_hamilton_cycle};
use cayham::witness::Witness;

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CayhamStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Arguments were structurally invalid (bad spec, bad generators,
    /// out-of-range vertices, ...).  See `cayham_last_error_message`.
    InvalidArgument = 2,
    /// The instance is well-formed but the requested object does not exist
    /// or could not be produced.  See `cayham_last_error_message`.
    Unsolvable = 3,
    /// A witness failed validation.  See `cayham_last_error_message`.
    InvalidWitness = 4,
    /// An internal panic was caught.  See `cayham_last_error_message`.
    InternalError = 5,
}

/// Opaque Cayley graph handle.
pub struct CayhamGraph {
    cg: CayleyGraph,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl AsRef<str>) {
    let owned = message.as_ref().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = Some(CString::new(owned).expect("NULs stripped"));
    });
}

fn clear_error() {
    LAST_ERROR.with(|slot| slot.borrow_mut().take());
}

/// Message for the most recent failure on this thread, or null when the
/// last call succeeded.  The pointer stays valid until the next cayham
/// call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn cayham_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |s| s.as_ptr())
    })
}

/// Frees a string returned by this library.  Null is ignored.
///
/// # Safety
/// `s` must be a pointer previously returned through an out-string
/// parameter of this library, or null.
#[no_mangle]
pub unsafe extern "C" fn cayham_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Runs `body` with panic containment, mapping panics to `InternalError`.
fn guarded(body: impl FnOnce() -> CayhamStatus) -> CayhamStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            CayhamStatus::InternalError
        }
    }
}

fn write_out_string(out: *mut *mut c_char, text: String) -> CayhamStatus {
    let cstring = match CString::new(text) {
        Ok(c) => c,
        Err(_) => {
            set_error("output contained an interior NUL");
            return CayhamStatus::InternalError;
        }
    };
    unsafe { *out = cstring.into_raw() };
    clear_error();
    CayhamStatus::Ok
}

unsafe fn slice_arg<'a, T>(ptr: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        Some(&[])
    } else if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

fn graph_from_parts(
    spec_text: &str,
    gens: &[u64],
    sigma: f64,
    seed: u64,
) -> Result<CayleyGraph, (CayhamStatus, String)> {
    let invalid = |why: String| (CayhamStatus::InvalidArgument, why);
    let spec = GroupSpec::parse(spec_text).map_err(|e| invalid(e.to_string()))?;
    let group = Arc::new(build_group(&spec).map_err(|e| invalid(e.to_string()))?);
    let set = if gens.is_empty() {
        if !(sigma > 0.0 && sigma <= 1.0) {
            return Err(invalid(format!("density {sigma} is outside (0, 1]")));
        }
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        GeneratorSet::random_symmetric(&group, sigma, &mut rng)
            .map_err(|e| invalid(e.to_string()))?
    } else {
        let elems: Vec<usize> = gens.iter().map(|&g| g as usize).collect();
        GeneratorSet::symmetrized(&group, &elems).map_err(|e| invalid(e.to_string()))?
    };
    Ok(CayleyGraph::new(group, set))
}

/// Builds a Cayley graph from a group spec (for example `"cyclic:12"`) and
/// an explicit generator list; inverses are added automatically.  On
/// success `*out` owns the new handle.
///
/// # Safety
/// `spec` must be a valid NUL-terminated string, `gens` must point to
/// `gens_len` readable elements (or be null when `gens_len` is 0), and
/// `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cayham_graph_new(
    spec: *const c_char,
    gens: *const u64,
    gens_len: usize,
    out: *mut *mut CayhamGraph,
) -> CayhamStatus {
    guarded(|| {
        if spec.is_null() || out.is_null() {
            set_error("null argument");
            return CayhamStatus::NullArgument;
        }
        let Some(gens) = (unsafe { slice_arg(gens, gens_len) }) else {
            set_error("null generator array with nonzero length");
            return CayhamStatus::NullArgument;
        };
        if gens.is_empty() {
            set_error("at least one generator is required");
            return CayhamStatus::InvalidArgument;
        }
        let spec_text = match unsafe { CStr::from_ptr(spec) }.to_str() {
            Ok(s) => s,
            Err(_) => {
                set_error("spec is not valid UTF-8");
                return CayhamStatus::InvalidArgument;
            }
        };
        match graph_from_parts(spec_text, gens, 0.0, 0) {
            Ok(cg) => {
                unsafe { *out = Box::into_raw(Box::new(CayhamGraph { cg })) };
                clear_error();
                CayhamStatus::Ok
            }
            Err((status, why)) => {
                set_error(why);
                status
            }
        }
    })
}

/// Builds a Cayley graph with a random symmetric generator set of density
/// at least `sigma`, drawn deterministically from `seed`.
///
/// # Safety
/// `spec` must be a valid NUL-terminated string and `out` a valid
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cayham_graph_random(
    spec: *const c_char,
    sigma: f64,
    seed: u64,
    out: *mut *mut CayhamGraph,
) -> CayhamStatus {
    guarded(|| {
        if spec.is_null() || out.is_null() {
            set_error("null argument");
            return CayhamStatus::NullArgument;
        }
        let spec_text = match unsafe { CStr::from_ptr(spec) }.to_str() {
            Ok(s) => s,
            Err(_) => {
                set_error("spec is not valid UTF-8");
                return CayhamStatus::InvalidArgument;
            }
        };
        match graph_from_parts(spec_text, &[], sigma, seed) {
            Ok(cg) => {
                unsafe { *out = Box::into_raw(Box::new(CayhamGraph { cg })) };
                clear_error();
                CayhamStatus::Ok
            }
            Err((status, why)) => {
                set_error(why);
                status
            }
        }
    })
}

/// Releases a graph handle.  Null is ignored.
///
/// # Safety
/// `g` must be a handle from `cayham_graph_new`/`cayham_graph_random`
/// that has not been freed, or null.
#[no_mangle]
pub unsafe extern "C" fn cayham_graph_free(g: *mut CayhamGraph) {
    if !g.is_null() {
        drop(unsafe { Box::from_raw(g) });
    }
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `g` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cayham_graph_order(g: *const CayhamGraph) -> u64 {
    if g.is_null() {
        return 0;
    }
    unsafe { &*g }.cg.group().order() as u64
}

/// Vertex degree (= generator count), or 0 for a null handle.
///
/// # Safety
/// `g` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cayham_graph_degree(g: *const CayhamGraph) -> u64 {
    if g.is_null() {
        return 0;
    }
    unsafe { &*g }.cg.degree_value() as u64
}

/// Finds a Hamilton cycle.  On success `*out_json` holds a JSON object
/// `{"witness": ..., "report": ...}` whose witness has been validated;
/// free it with `cayham_string_free`.
///
/// # Safety
/// `g` must be a live handle and `out_json` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cayham_hamilton_json(
    g: *const CayhamGraph,
    seed: u64,
    out_json: *mut *mut c_char,
) -> CayhamStatus {
    guarded(|| {
        if g.is_null() || out_json.is_null() {
            set_error("null argument");
            return CayhamStatus::NullArgument;
        }
        let cg = &unsafe { &*g }.cg;
        let params = PipelineParams::for_host(cg, seed);
        let (cycle, report) = match hamilton_cycle(cg, &params) {
            Ok(pair) => pair,
            Err(err) => {
                set_error(err.to_string());
                return CayhamStatus::Unsolvable;
            }
        };
        if let Err(violation) = verify_hamilton_cycle(cg, &cycle.order) {
            set_error(format!("produced witness failed validation: {violation}"));
            return CayhamStatus::InvalidWitness;
        }
        let record = serde_json::json!({
            "witness": Witness::cycle(&cycle, true, report.mode),
            "report": report,
        });
        write_out_string(out_json, record.to_string())
    })
}

/// Finds a spanning linear forest whose path `j` runs between
/// `pairs[2j]` and `pairs[2j+1]`.  On bipartite hosts every pair must
/// cross the bipartition.  On success `*out_json` holds
/// `{"witness": ..., "report": ...}`; free it with `cayham_string_free`.
///
/// # Safety
/// `g` must be a live handle, `pairs` must point to `2 * pair_count`
/// readable elements, and `out_json` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cayham_forest_json(
    g: *const CayhamGraph,
    pairs: *const u64,
    pair_count: usize,
    seed: u64,
    out_json: *mut *mut c_char,
) -> CayhamStatus {
    guarded(|| {
        if g.is_null() || out_json.is_null() {
            set_error("null argument");
            return CayhamStatus::NullArgument;
        }
        let Some(flat) = (unsafe { slice_arg(pairs, pair_count * 2) }) else {
            set_error("null pair array with nonzero length");
            return CayhamStatus::NullArgument;
        };
        let pairs: Vec<(usize, usize)> = flat
            .chunks_exact(2)
            .map(|c| (c[0] as usize, c[1] as usize))
            .collect();
        let cg = &unsafe { &*g }.cg;
        let params = PipelineParams::for_host(cg, seed);
        let bipartite = match cg.bipartite_structure() {
            Ok(b) => b.is_some(),
            Err(err) => {
                set_error(err.to_string());
                return CayhamStatus::InvalidArgument;
            }
        };
        let solved = if bipartite {
            forest_bipartite(cg, &pairs, &params)
                .map(|(f, r)| (f, serde_json::to_value(&r).expect("report serializes"), r.mode))
        } else {
            forest_nonbipartite(cg, &pairs, &params)
                .map(|(f, r)| (f, serde_json::to_value(&r).expect("report serializes"), r.mode))
        };
        let (forest, report, mode) = match solved {
            Ok(triple) => triple,
            Err(err) => {
                set_error(err.to_string());
                return CayhamStatus::Unsolvable;
            }
        };
        let paths: Vec<Vec<usize>> = forest.paths.iter().map(|p| p.vertices.clone()).collect();
        if let Err(violation) = verify_forest_endpoints(cg, &paths, &pairs) {
            set_error(format!("produced witness failed validation: {violation}"));
            return CayhamStatus::InvalidWitness;
        }
        let record = serde_json::json!({
            "witness": Witness::forest(&forest, true, mode),
            "report": report,
        });
        write_out_string(out_json, record.to_string())
    })
}

/// Checks a caller-supplied Hamilton cycle witness against the graph.
/// Returns `Ok` when valid and `InvalidWitness` (with a message) when not.
///
/// # Safety
/// `g` must be a live handle and `order` must point to `len` readable
/// elements.
#[no_mangle]
pub unsafe extern "C" fn cayham_verify_cycle(
    g: *const CayhamGraph,
    order: *const u64,
    len: usize,
) -> CayhamStatus {
    guarded(|| {
        if g.is_null() {
            set_error("null argument");
            return CayhamStatus::NullArgument;
        }
        let Some(order) = (unsafe { slice_arg(order, len) }) else {
            set_error("null order array with nonzero length");
            return CayhamStatus::NullArgument;
        };
        let cg = &unsafe { &*g }.cg;
        let order: Vec<usize> = order.iter().map(|&v| v as usize).collect();
        match verify_hamilton_cycle(cg, &order) {
            Ok(()) => {
                clear_error();
                CayhamStatus::Ok
            }
            Err(violation) => {
                set_error(violation.to_string());
                CayhamStatus::InvalidWitness
            }
        }
    })
}
