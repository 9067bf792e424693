//! Spanning path covers of regular and almost-regular digraphs.
//!
//! The core routine covers a `d`-regular digraph by few vertex-disjoint
//! directed paths: greedy walks that extend at both ends, close into a cycle
//! and reopen elsewhere when stuck, and finally merge end to end.  Inputs
//! that are only almost regular are first embedded as induced subgraphs of a
//! strictly regular supergraph; the cover of the supergraph is computed and
//! the helper vertices are deleted, splitting paths where they were used.
//!
//! The path-count bound `10 n ln(d) / d` is a reference value reported with
//! each run, never a promise of the greedy heuristic.

use crate::bits::VertexSet;
use crate::graph::{Digraph, Graph, Navigable};
use crate::oracle::{verify_linear_forest, WitnessViolation};
use crate::witness::{LinearForest, PathWitness};
use serde::Serialize;
use std::collections::VecDeque;
use thiserror::Error;

/// Maximum attempts for the regularization wiring, growing the helper block
/// by one vertex per retry.
pub const REGULARIZE_ATTEMPTS: usize = 3;

/// Failures while covering or regularizing.
#[derive(Debug, Error)]
pub enum PathCoverError {
    /// The input was supposed to be regular but is not.
    #[error("vertex {v} has out-degree {out_degree} and in-degree {in_degree}, expected {expected}")]
    NotRegular {
        v: usize,
        out_degree: usize,
        in_degree: usize,
        expected: usize,
    },
    /// The degree profile is internally inconsistent.
    #[error("bad degree profile: {0}")]
    BadProfile(String),
    /// A vertex degree falls outside the profile window.
    #[error("{kind}-degree {degree} of vertex {v} outside [{lo}, {hi}]")]
    DegreeOutOfRange {
        v: usize,
        degree: usize,
        kind: &'static str,
        lo: usize,
        hi: usize,
    },
    /// The helper-block wiring failed on every attempt.
    #[error("regularization failed after {attempts} attempts")]
    RegularizationFailed { attempts: usize },
    /// An internal consistency check failed; this is a bug if it ever fires.
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

/// Degree window `d +- deviation` together with the measured per-vertex
/// degrees of a digraph.
#[derive(Debug, Clone)]
pub struct AlmostRegularProfile {
    /// Centre of the degree window.
    pub d: usize,
    /// Allowed deviation; the window is `[d - deviation, d + deviation]`.
    pub deviation: usize,
    /// Measured out-degrees.
    pub out_degrees: Vec<usize>,
    /// Measured in-degrees.
    pub in_degrees: Vec<usize>,
}

impl AlmostRegularProfile {
    /// Measures a digraph against the window, rejecting any vertex outside
    /// it.
    pub fn measure(dg: &Digraph, d: usize, deviation: usize) -> Result<Self, PathCoverError> {
        if deviation > d {
            return Err(PathCoverError::BadProfile(format!(
                "deviation {deviation} exceeds degree {d}"
            )));
        }
        let n = dg.order();
        let (lo, hi) = (d - deviation, d + deviation);
        let mut out_degrees = Vec::with_capacity(n);
        let mut in_degrees = Vec::with_capacity(n);
        for v in 0..n {
            let (o, i) = (dg.out_degree(v), dg.in_degree(v));
            for (deg, kind) in [(o, "out"), (i, "in")] {
                if deg < lo || deg > hi {
                    return Err(PathCoverError::DegreeOutOfRange {
                        v,
                        degree: deg,
                        kind,
                        lo,
                        hi,
                    });
                }
            }
            out_degrees.push(o);
            in_degrees.push(i);
        }
        Ok(AlmostRegularProfile {
            d,
            deviation,
            out_degrees,
            in_degrees,
        })
    }

    /// Degree every vertex is raised to by regularization.
    pub fn target_degree(&self) -> usize {
        self.d + self.deviation
    }
}

/// Result of embedding a digraph into a regular supergraph.  Original
/// vertices keep their ids; helper vertices occupy `original..`.
#[derive(Clone)]
pub struct Regularization {
    /// The regular supergraph containing the input as an induced subgraph.
    pub supergraph: Digraph,
    /// Order of the original digraph.
    pub original: usize,
    /// Helper vertices appended after the originals.
    pub added: usize,
    /// Common degree of the supergraph.
    pub target_degree: usize,
    /// Wiring attempts spent (the helper block grows by one per retry).
    pub attempts: usize,
    /// Achieved constant in the `C n deviation / d` overhead accounting,
    /// zero when the input needed no helpers.
    pub overhead_constant: f64,
}

/// Embeds `dg` as an induced subgraph of a `(d + deviation)`-regular
/// digraph.  Degree deficits are wired round-robin into a helper block,
/// which is then patched to exact regularity by a largest-deficit-first
/// internal wiring.
pub fn regularize_to_regular(
    dg: &Digraph,
    profile: &AlmostRegularProfile,
) -> Result<Regularization, PathCoverError> {
    let n = dg.order();
    if profile.out_degrees.len() != n || profile.in_degrees.len() != n {
        return Err(PathCoverError::BadProfile(format!(
            "profile covers {} vertices, digraph has {n}",
            profile.out_degrees.len()
        )));
    }
    let big_d = profile.target_degree();
    let already_regular = (0..n)
        .all(|v| profile.out_degrees[v] == big_d && profile.in_degrees[v] == big_d);
    if already_regular {
        return Ok(Regularization {
            supergraph: dg.clone(),
            original: n,
            added: 0,
            target_degree: big_d,
            attempts: 1,
            overhead_constant: 0.0,
        });
    }

    let total_deficit: usize = (0..n).map(|v| big_d - profile.out_degrees[v]).sum();
    let max_deficit = (0..n)
        .map(|v| (big_d - profile.out_degrees[v]).max(big_d - profile.in_degrees[v]))
        .max()
        .unwrap_or(0);
    let base = (2 * big_d + 2)
        .max(total_deficit.div_ceil(big_d) + 1)
        .max(max_deficit + 1);
    for attempt in 1..=REGULARIZE_ATTEMPTS {
        let b = base + attempt - 1;
        if let Some(supergraph) = wire_helper_block(dg, profile, b) {
            let overhead_constant = if profile.deviation > 0 {
                b as f64 * profile.d as f64 / (n as f64 * profile.deviation as f64)
            } else {
                0.0
            };
            return Ok(Regularization {
                supergraph,
                original: n,
                added: b,
                target_degree: big_d,
                attempts: attempt,
                overhead_constant,
            });
        }
    }
    Err(PathCoverError::RegularizationFailed {
        attempts: REGULARIZE_ATTEMPTS,
    })
}

/// One wiring attempt with a helper block of `b` vertices; `None` when the
/// block cannot be patched to exact regularity.
fn wire_helper_block(dg: &Digraph, profile: &AlmostRegularProfile, b: usize) -> Option<Digraph> {
    let n = dg.order();
    let big_d = profile.target_degree();
    let mut sg = Digraph::new(n + b);
    for (u, v) in dg.arcs() {
        sg.add_arc(u, v);
    }

    // Round-robin the original deficits through the block.
    let mut in_from_orig = vec![0usize; b];
    let mut out_to_orig = vec![0usize; b];
    let mut ptr = 0usize;
    for v in 0..n {
        let deficit = big_d - profile.out_degrees[v];
        if deficit > b {
            return None;
        }
        for _ in 0..deficit {
            sg.add_arc(v, n + ptr);
            in_from_orig[ptr] += 1;
            ptr = (ptr + 1) % b;
        }
    }
    let mut ptr = 0usize;
    for v in 0..n {
        let deficit = big_d - profile.in_degrees[v];
        if deficit > b {
            return None;
        }
        for _ in 0..deficit {
            sg.add_arc(n + ptr, v);
            out_to_orig[ptr] += 1;
            ptr = (ptr + 1) % b;
        }
    }
    if in_from_orig.iter().chain(&out_to_orig).any(|&c| c > big_d) {
        return None;
    }

    // Patch the block internally with circulant sweeps: for each offset,
    // add u -> u+offset wherever both endpoints still need arcs.
    let mut out_need: Vec<usize> = (0..b).map(|u| big_d - out_to_orig[u]).collect();
    let mut in_need: Vec<usize> = (0..b).map(|u| big_d - in_from_orig[u]).collect();
    for k in 1..b {
        for u in 0..b {
            let w = (u + k) % b;
            if out_need[u] > 0 && in_need[w] > 0 {
                sg.add_arc(n + u, n + w);
                out_need[u] -= 1;
                in_need[w] -= 1;
            }
        }
    }
    // The sweeps can strand residual need where the only matching pairs are
    // already joined by an arc (or are the same vertex). Route each leftover
    // unit through an existing block arc: replacing a -> c by a -> w and
    // u -> c serves one out-unit at u and one in-unit at w without touching
    // the degrees of a and c.
    while let Some(u) = (0..b).find(|&u| out_need[u] > 0) {
        let w = (0..b).find(|&w| in_need[w] > 0)?;
        if u != w && !sg.has_arc(n + u, n + w) {
            sg.add_arc(n + u, n + w);
        } else {
            let mut rewired = false;
            'scan: for a in 0..b {
                if a == u || a == w || sg.has_arc(n + a, n + w) {
                    continue;
                }
                for c in 0..b {
                    if c == u || c == w || c == a {
                        continue;
                    }
                    if sg.has_arc(n + a, n + c) && !sg.has_arc(n + u, n + c) {
                        sg.remove_arc(n + a, n + c);
                        sg.add_arc(n + a, n + w);
                        sg.add_arc(n + u, n + c);
                        rewired = true;
                        break 'scan;
                    }
                }
            }
            if !rewired {
                return None;
            }
        }
        out_need[u] -= 1;
        in_need[w] -= 1;
    }
    if in_need.iter().any(|&x| x > 0) {
        return None;
    }
    Some(sg)
}

/// Measured outcome of one cover run.
#[derive(Debug, Clone, Serialize)]
pub struct CoverReport {
    /// Paths in the returned forest.
    pub path_count: usize,
    /// Reference value `10 n ln(d) / d`; reported, never asserted.
    pub reference_bound: f64,
}

/// Outcome of an almost-regular cover, including the regularization detour.
#[derive(Debug, Clone, Serialize)]
pub struct AlmostRegularReport {
    /// Paths in the final forest on the original vertices.
    pub path_count: usize,
    /// Paths the supergraph cover produced before helper deletion.
    pub supergraph_path_count: usize,
    /// Helper vertices used by the embedding.
    pub added_vertices: usize,
    /// Regularization wiring attempts.
    pub attempts: usize,
    /// Achieved helper-overhead constant.
    pub overhead_constant: f64,
    /// Reference value `10 n ln(d) / d` for the supergraph degree.
    pub reference_bound: f64,
}

fn reference_bound(n: usize, d: usize) -> f64 {
    if d == 0 {
        return n as f64;
    }
    10.0 * n as f64 * (d as f64).ln() / d as f64
}

/// Checks that `forest` is a spanning collection of pairwise disjoint
/// directed paths of `dg`.
pub fn verify_directed_forest(dg: &Digraph, forest: &LinearForest) -> Result<(), String> {
    let n = dg.order();
    let mut seen = VertexSet::new(n);
    for path in &forest.paths {
        if path.vertices.is_empty() {
            return Err("empty path".into());
        }
        for &v in &path.vertices {
            if v >= n {
                return Err(format!("vertex {v} out of range"));
            }
            if !seen.insert(v) {
                return Err(format!("vertex {v} covered twice"));
            }
        }
        for pair in path.vertices.windows(2) {
            if !dg.has_arc(pair[0], pair[1]) {
                return Err(format!("missing arc {}->{}", pair[0], pair[1]));
            }
        }
    }
    if seen.len() != n {
        return Err(format!("covers {} of {n} vertices", seen.len()));
    }
    Ok(())
}

/// Covers a `d`-regular digraph by vertex-disjoint directed paths.
///
/// Greedy walks extend forwards at the tail and backwards at the head,
/// always taking the smallest uncovered vertex id.  A stuck walk whose tail
/// points back at its head is closed into a cycle and reopened at the
/// latest position with an uncovered successor.  Emitted paths are merged
/// end to end in a final pass.
pub fn path_cover_regular(dg: &Digraph) -> Result<(LinearForest, CoverReport), PathCoverError> {
    let n = dg.order();
    let d = if n > 0 { dg.out_degree(0) } else { 0 };
    for v in 0..n {
        let (o, i) = (dg.out_degree(v), dg.in_degree(v));
        if o != d || i != d {
            return Err(PathCoverError::NotRegular {
                v,
                out_degree: o,
                in_degree: i,
                expected: d,
            });
        }
    }

    let mut uncovered = VertexSet::full(n);
    let mut raw_paths: Vec<VecDeque<usize>> = Vec::new();
    while let Some(start) = uncovered.first() {
        uncovered.remove(start);
        let mut path = VecDeque::from([start]);
        loop {
            let tail = *path.back().unwrap();
            if let Some(next) = dg.succ(tail).into_iter().find(|&w| uncovered.contains(w)) {
                uncovered.remove(next);
                path.push_back(next);
                continue;
            }
            let head = *path.front().unwrap();
            if let Some(prev) = dg.pred(head).into_iter().find(|&w| uncovered.contains(w)) {
                uncovered.remove(prev);
                path.push_front(prev);
                continue;
            }
            // Close into a cycle and reopen where an uncovered successor
            // exists; the follow-up iteration extends from there.
            if path.len() >= 2 && dg.has_arc(tail, head) {
                let vertices: Vec<usize> = path.iter().copied().collect();
                let reopen = vertices[..vertices.len() - 1].iter().position(|&v| {
                    dg.succ(v).into_iter().any(|w| uncovered.contains(w))
                });
                if let Some(j) = reopen {
                    path = vertices[j + 1..]
                        .iter()
                        .chain(&vertices[..=j])
                        .copied()
                        .collect();
                    continue;
                }
            }
            break;
        }
        raw_paths.push(path);
    }

    // Merge pass: join any path whose tail has an arc to another's head.
    let mut paths: Vec<Vec<usize>> = raw_paths
        .into_iter()
        .map(|p| p.into_iter().collect())
        .collect();
    loop {
        let mut merged = false;
        'outer: for a in 0..paths.len() {
            for b in 0..paths.len() {
                if a == b {
                    continue;
                }
                let tail = *paths[a].last().unwrap();
                let head = paths[b][0];
                if dg.has_arc(tail, head) {
                    let absorbed = paths.remove(b);
                    let a = if b < a { a - 1 } else { a };
                    paths[a].extend(absorbed);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }

    let forest = LinearForest::new(paths.into_iter().map(PathWitness::new).collect());
    verify_directed_forest(dg, &forest).map_err(PathCoverError::Internal)?;
    let report = CoverReport {
        path_count: forest.paths.len(),
        reference_bound: reference_bound(n, d),
    };
    Ok((forest, report))
}

/// Splits every path at helper vertices (`>= keep`) and drops them.
fn strip_helpers(forest: &LinearForest, keep: usize) -> LinearForest {
    let mut out = Vec::new();
    for path in &forest.paths {
        let mut run: Vec<usize> = Vec::new();
        for &v in &path.vertices {
            if v < keep {
                run.push(v);
            } else if !run.is_empty() {
                out.push(PathWitness::new(std::mem::take(&mut run)));
            }
        }
        if !run.is_empty() {
            out.push(PathWitness::new(run));
        }
    }
    LinearForest::new(out)
}

/// Covers an almost-regular digraph: regularize, cover the supergraph, then
/// delete the helper vertices, splitting paths where they were used.
pub fn path_cover_almost_regular(
    dg: &Digraph,
    profile: &AlmostRegularProfile,
) -> Result<(LinearForest, AlmostRegularReport), PathCoverError> {
    let reg = regularize_to_regular(dg, profile)?;
    let (super_forest, cover) = path_cover_regular(&reg.supergraph)?;
    let forest = strip_helpers(&super_forest, reg.original);
    if forest.paths.len() > cover.path_count + reg.added {
        return Err(PathCoverError::Internal(format!(
            "stripping {} helpers grew {} paths to {}",
            reg.added,
            cover.path_count,
            forest.paths.len()
        )));
    }
    verify_directed_forest(dg, &forest).map_err(PathCoverError::Internal)?;
    let path_count = forest.paths.len();
    Ok((
        forest,
        AlmostRegularReport {
            path_count,
            supergraph_path_count: cover.path_count,
            added_vertices: reg.added,
            attempts: reg.attempts,
            overhead_constant: reg.overhead_constant,
            reference_bound: cover.reference_bound,
        },
    ))
}

/// Covers an undirected almost-regular graph by viewing it as the digraph
/// with both orientations of every edge.
pub fn path_cover_undirected(
    g: &Graph,
    d: usize,
    deviation: usize,
) -> Result<(LinearForest, AlmostRegularReport), PathCoverError> {
    let doubled = Digraph::doubled(g);
    let profile = AlmostRegularProfile::measure(&doubled, d, deviation)?;
    let (forest, report) = path_cover_almost_regular(&doubled, &profile)?;
    let lists: Vec<Vec<usize>> = forest.paths.iter().map(|p| p.vertices.clone()).collect();
    verify_linear_forest(g, &lists).map_err(|e: WitnessViolation| {
        PathCoverError::Internal(format!("undirected check failed: {e:?}"))
    })?;
    Ok((forest, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::HostGraph;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn directed_cycle(n: usize) -> Digraph {
        let mut dg = Digraph::new(n);
        for v in 0..n {
            dg.add_arc(v, (v + 1) % n);
        }
        dg
    }

    fn complete_digraph(n: usize) -> Digraph {
        let mut dg = Digraph::new(n);
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    dg.add_arc(u, v);
                }
            }
        }
        dg
    }

    fn assert_induced(input: &Digraph, sg: &Digraph) {
        for u in 0..input.order() {
            for v in 0..input.order() {
                assert_eq!(input.has_arc(u, v), sg.has_arc(u, v), "arc {u}->{v}");
            }
        }
    }

    fn assert_regular(dg: &Digraph, d: usize) {
        for v in 0..dg.order() {
            assert_eq!(dg.out_degree(v), d, "out-degree of {v}");
            assert_eq!(dg.in_degree(v), d, "in-degree of {v}");
        }
    }

    #[test]
    fn profile_rejects_out_of_window_degrees() {
        let dg = directed_cycle(6);
        assert!(AlmostRegularProfile::measure(&dg, 1, 0).is_ok());
        let err = AlmostRegularProfile::measure(&dg, 3, 1);
        assert!(matches!(
            err,
            Err(PathCoverError::DegreeOutOfRange { degree: 1, lo: 2, hi: 4, .. })
        ));
        assert!(matches!(
            AlmostRegularProfile::measure(&dg, 1, 2),
            Err(PathCoverError::BadProfile(_))
        ));
    }

    #[test]
    fn regular_input_needs_no_helpers() {
        let dg = directed_cycle(8);
        let profile = AlmostRegularProfile::measure(&dg, 1, 0).unwrap();
        let reg = regularize_to_regular(&dg, &profile).unwrap();
        assert_eq!(reg.added, 0);
        assert_eq!(reg.attempts, 1);
        assert_eq!(reg.supergraph.order(), 8);
        assert_induced(&dg, &reg.supergraph);
    }

    #[test]
    fn star_digraph_regularizes() {
        // Both orientations of K_{1,4}: centre has degree 4, leaves 1.
        let mut g = Graph::new(5);
        for leaf in 1..5 {
            g.add_edge(0, leaf);
        }
        let dg = Digraph::doubled(&g);
        let profile = AlmostRegularProfile::measure(&dg, 4, 3).unwrap();
        let reg = regularize_to_regular(&dg, &profile).unwrap();
        assert_eq!(reg.target_degree, 7);
        assert_eq!(reg.attempts, 1);
        assert_regular(&reg.supergraph, 7);
        assert_induced(&dg, &reg.supergraph);
        assert_eq!(reg.supergraph.order(), 5 + reg.added);
    }

    #[test]
    fn single_vertex_completes_to_regular() {
        let dg = Digraph::new(1);
        let profile = AlmostRegularProfile::measure(&dg, 1, 1).unwrap();
        let reg = regularize_to_regular(&dg, &profile).unwrap();
        assert_regular(&reg.supergraph, 2);
        assert_induced(&dg, &reg.supergraph);
    }

    #[test]
    fn directed_cycle_covers_with_one_path() {
        let dg = directed_cycle(8);
        let (forest, report) = path_cover_regular(&dg).unwrap();
        assert_eq!(report.path_count, 1);
        assert_eq!(forest.paths[0].vertices, vec![0, 1, 2, 3, 4, 5, 6, 7]);
    }

    #[test]
    fn complete_digraph_covers_with_one_path() {
        let dg = complete_digraph(6);
        let (forest, report) = path_cover_regular(&dg).unwrap();
        assert_eq!(report.path_count, 1);
        assert_eq!(forest.paths[0].vertices, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn irregular_input_is_rejected() {
        let mut dg = directed_cycle(5);
        dg.add_arc(0, 2);
        assert!(matches!(
            path_cover_regular(&dg),
            Err(PathCoverError::NotRegular { v: 0, .. })
        ));
    }

    #[test]
    fn disjoint_cycles_cover_and_merge_where_possible() {
        // Two directed triangles with no arcs between them.
        let mut dg = Digraph::new(6);
        for &(a, b) in &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)] {
            dg.add_arc(a, b);
        }
        let (forest, report) = path_cover_regular(&dg).unwrap();
        assert_eq!(report.path_count, 2);
        verify_directed_forest(&dg, &forest).unwrap();
    }

    #[test]
    fn random_regular_cover_stays_reasonable() {
        let mut rng = ChaCha20Rng::seed_from_u64(0xc0_7e5);
        let dg = Digraph::random_regular(512, 64, &mut rng);
        let (forest, report) = path_cover_regular(&dg).unwrap();
        verify_directed_forest(&dg, &forest).unwrap();
        assert!(
            (report.path_count as f64) <= report.reference_bound,
            "count {} exceeds reference {}",
            report.path_count,
            report.reference_bound
        );
    }

    #[test]
    fn chord_graph_covers_with_few_paths() {
        let mut g = Graph::cycle(6);
        g.add_edge(0, 3);
        let (forest, report) = path_cover_undirected(&g, 3, 1).unwrap();
        assert!(report.path_count <= 3, "got {} paths", report.path_count);
        assert_eq!(forest.paths.len(), report.path_count);
        assert!(forest.paths.len() <= report.supergraph_path_count + report.added_vertices);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn random_regular_digraph_covers(n in 6usize..40, d in 1usize..5, seed in any::<u64>()) {
            let d = d.min(n - 1);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let dg = Digraph::random_regular(n, d, &mut rng);
            let (forest, _) = path_cover_regular(&dg).unwrap();
            verify_directed_forest(&dg, &forest).unwrap();
        }

        #[test]
        fn almost_regular_random_graphs_cover(n in 5usize..24, seed in any::<u64>()) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut g = Graph::new(n);
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.4) {
                        g.add_edge(u, v);
                    }
                }
            }
            let max_deg = (0..n).map(|v| g.degree(v)).max().unwrap();
            let min_deg = (0..n).map(|v| g.degree(v)).min().unwrap();
            let d = (max_deg + min_deg).div_ceil(2).max(1);
            let dev = (d - min_deg).max(max_deg - d);
            prop_assume!(dev <= d);
            let (forest, _) = path_cover_undirected(&g, d, dev).unwrap();
            let lists: Vec<Vec<usize>> = forest.paths.iter().map(|p| p.vertices.clone()).collect();
            verify_linear_forest(&g, &lists).unwrap();
        }
    }
}
