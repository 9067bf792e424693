//! Exercises the C ABI through the exported symbols: handle lifecycle,
//! status codes, JSON results, witness rejection, and the thread-local
//! error message.

use std::ffi::{CStr, CString};
use std::ptr;

use cayham_ffi::*;

fn make_graph(spec: &str, gens: &[u64]) -> *mut CayhamGraph {
    let spec = CString::new(spec).unwrap();
    let mut handle: *mut CayhamGraph = ptr::null_mut();
    let status =
        unsafe { cayham_graph_new(spec.as_ptr(), gens.as_ptr(), gens.len(), &mut handle) };
    assert_eq!(status, CayhamStatus::Ok);
    assert!(!handle.is_null());
    handle
}

fn last_error() -> Option<String> {
    let ptr = cayham_last_error_message();
    if ptr.is_null() {
        None
    } else {
        Some(unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_string())
    }
}

fn take_string(raw: *mut std::ffi::c_char) -> String {
    assert!(!raw.is_null());
    let text = unsafe { CStr::from_ptr(raw) }.to_str().unwrap().to_string();
    unsafe { cayham_string_free(raw) };
    text
}

#[test]
fn graph_lifecycle_and_accessors() {
    let g = make_graph("cyclic:12", &[1]);
    unsafe {
        assert_eq!(cayham_graph_order(g), 12);
        assert_eq!(cayham_graph_degree(g), 2); // the inverse is added
        cayham_graph_free(g);
        cayham_graph_free(ptr::null_mut()); // null is a no-op
    }
}

#[test]
fn hamilton_returns_validated_json() {
    let g = make_graph("cyclic:12", &[1]);
    let mut raw: *mut std::ffi::c_char = ptr::null_mut();
    let status = unsafe { cayham_hamilton_json(g, 7, &mut raw) };
    assert_eq!(status, CayhamStatus::Ok);
    assert_eq!(last_error(), None);
    let parsed: serde_json::Value = serde_json::from_str(&take_string(raw)).unwrap();
    assert_eq!(parsed["witness"]["type"], "hamilton_cycle");
    assert_eq!(parsed["witness"]["validated"], true);
    assert_eq!(parsed["witness"]["order"].as_array().unwrap().len(), 12);
    unsafe { cayham_graph_free(g) };
}

#[test]
fn forest_with_pinned_endpoints() {
    // C_13 with shifts {1, 5}: non-bipartite, degree 4.
    let g = make_graph("cyclic:13", &[1, 5]);
    let pairs = [0u64, 6u64];
    let mut raw: *mut std::ffi::c_char = ptr::null_mut();
    let status = unsafe { cayham_forest_json(g, pairs.as_ptr(), 1, 3, &mut raw) };
    assert_eq!(status, CayhamStatus::Ok, "{:?}", last_error());
    let parsed: serde_json::Value = serde_json::from_str(&take_string(raw)).unwrap();
    assert_eq!(parsed["witness"]["type"], "linear_forest");
    assert_eq!(parsed["witness"]["validated"], true);
    let paths = parsed["witness"]["paths"].as_array().unwrap();
    assert_eq!(paths.len(), 1);
    unsafe { cayham_graph_free(g) };
}

#[test]
fn unsolvable_instances_report_cleanly() {
    // A ring has no spanning path between non-adjacent endpoints.
    let g = make_graph("cyclic:12", &[1]);
    let pairs = [0u64, 5u64];
    let mut raw: *mut std::ffi::c_char = ptr::null_mut();
    let status = unsafe { cayham_forest_json(g, pairs.as_ptr(), 1, 0, &mut raw) };
    assert_eq!(status, CayhamStatus::Unsolvable);
    assert!(raw.is_null());
    assert!(last_error().is_some());
    unsafe { cayham_graph_free(g) };
}

#[test]
fn verify_cycle_accepts_and_rejects() {
    let g = make_graph("cyclic:6", &[1]);
    let good: Vec<u64> = vec![0, 1, 2, 3, 4, 5];
    let bad: Vec<u64> = vec![0, 2, 1, 3, 4, 5];
    unsafe {
        assert_eq!(
            cayham_verify_cycle(g, good.as_ptr(), good.len()),
            CayhamStatus::Ok
        );
        assert_eq!(last_error(), None);
        assert_eq!(
            cayham_verify_cycle(g, bad.as_ptr(), bad.len()),
            CayhamStatus::InvalidWitness
        );
        let msg = last_error().unwrap();
        assert!(msg.contains("not adjacent"), "{msg}");
        cayham_graph_free(g);
    }
}

#[test]
fn null_and_invalid_arguments() {
    let mut handle: *mut CayhamGraph = ptr::null_mut();
    unsafe {
        assert_eq!(
            cayham_graph_new(ptr::null(), ptr::null(), 0, &mut handle),
            CayhamStatus::NullArgument
        );
        let spec = CString::new("frobnicate:9").unwrap();
        let gens = [1u64];
        assert_eq!(
            cayham_graph_new(spec.as_ptr(), gens.as_ptr(), 1, &mut handle),
            CayhamStatus::InvalidArgument
        );
        assert!(last_error().unwrap().contains("unknown catalog name"));
        // Identity as a generator is structurally invalid.
        let spec = CString::new("cyclic:5").unwrap();
        let bad = [0u64];
        assert_eq!(
            cayham_graph_new(spec.as_ptr(), bad.as_ptr(), 1, &mut handle),
            CayhamStatus::InvalidArgument
        );
    }
}

#[test]
fn random_graph_is_seed_deterministic() {
    let spec = CString::new("cyclic:40").unwrap();
    let mut a: *mut CayhamGraph = ptr::null_mut();
    let mut b: *mut CayhamGraph = ptr::null_mut();
    unsafe {
        assert_eq!(
            cayham_graph_random(spec.as_ptr(), 0.3, 11, &mut a),
            CayhamStatus::Ok
        );
        assert_eq!(
            cayham_graph_random(spec.as_ptr(), 0.3, 11, &mut b),
            CayhamStatus::Ok
        );
        assert_eq!(cayham_graph_degree(a), cayham_graph_degree(b));
        let mut ja: *mut std::ffi::c_char = ptr::null_mut();
        let mut jb: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(cayham_hamilton_json(a, 5, &mut ja), CayhamStatus::Ok);
        assert_eq!(cayham_hamilton_json(b, 5, &mut jb), CayhamStatus::Ok);
        assert_eq!(take_string(ja), take_string(jb));
        cayham_graph_free(a);
        cayham_graph_free(b);
    }
}
