//! Exhaustive solvers for small instances, plus the independent witness
//! checker.
//!
//! The solvers run a subset dynamic program over vertex masks (`dp[mask]` is
//! the bitset of reachable path endpoints), so they are exact up to
//! [`ORACLE_VERTEX_LIMIT`] vertices and deterministic: ties are always broken
//! toward the lowest vertex id.  They answer definitively; a `None` from a
//! solver means the structure does not exist.
//!
//! Everything here is independent of the constructive pipeline so it can
//! serve as ground truth for it: the pipeline's outputs are re-checked by
//! [`verify_witness`], which shares no code with the producers.

use crate::graph::{Digraph, Graph, HostGraph, Navigable};
use crate::witness::{HamiltonCycle, LinearForest, PathWitness, Witness};

/// Largest instance the mask DP accepts (`2^n` states of 32-bit endpoint
/// sets).
pub const ORACLE_VERTEX_LIMIT: usize = 22;

/// Largest forced matching accepted by [`exact_cycle_through_matching`]
/// (orientations are enumerated, `2^t` of them).
pub const MATCHING_LIMIT: usize = 12;

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance has {n} vertices; the exhaustive solver handles at most {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("invalid oracle input: {0}")]
    Invalid(String),
}

// ---------------------------------------------------------------------------
// Mask DP core
// ---------------------------------------------------------------------------

/// Adjacency packed into one `u32` mask per vertex, in both directions.
struct MaskAdj {
    n: usize,
    out: Vec<u32>,
    inn: Vec<u32>,
}

fn bits(mut mask: u32) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let v = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(v)
        }
    })
}

impl MaskAdj {
    fn new<D: Navigable + ?Sized>(d: &D) -> Result<MaskAdj, OracleError> {
        let n = d.vertex_count();
        if n == 0 {
            return Err(OracleError::Invalid("empty graph".into()));
        }
        if n > ORACLE_VERTEX_LIMIT {
            return Err(OracleError::TooLarge {
                n,
                limit: ORACLE_VERTEX_LIMIT,
            });
        }
        let mut out = vec![0u32; n];
        let mut inn = vec![0u32; n];
        for v in 0..n {
            for w in d.succ(v) {
                if w != v {
                    out[v] |= 1 << w;
                    inn[w] |= 1 << v;
                }
            }
        }
        Ok(MaskAdj { n, out, inn })
    }

    fn full(&self) -> u32 {
        if self.n == 32 {
            u32::MAX
        } else {
            (1u32 << self.n) - 1
        }
    }

    /// Spanning directed path from any vertex in `starts` to any vertex in
    /// `ends`, lowest ids preferred.
    fn ham_path(&self, starts: u32, ends: u32) -> Option<Vec<usize>> {
        let full = self.full();
        let mut dp = vec![0u32; 1 << self.n];
        for v in bits(starts & full) {
            dp[1 << v] |= 1 << v;
        }
        for mask in 1..=full {
            let here = dp[mask as usize];
            if here == 0 {
                continue;
            }
            for v in bits(here) {
                let ext = self.out[v] & !mask;
                for w in bits(ext) {
                    dp[(mask | (1 << w)) as usize] |= 1 << w;
                }
            }
        }
        let fin = dp[full as usize] & ends;
        if fin == 0 {
            return None;
        }
        let mut v = fin.trailing_zeros() as usize;
        let mut mask = full;
        let mut rev = vec![v];
        while mask.count_ones() > 1 {
            let prev_mask = mask & !(1u32 << v);
            let cands = dp[prev_mask as usize] & self.inn[v];
            debug_assert_ne!(cands, 0, "DP table admits a predecessor");
            let u = cands.trailing_zeros() as usize;
            rev.push(u);
            mask = prev_mask;
            v = u;
        }
        rev.reverse();
        Some(rev)
    }

    /// Spanning directed cycle, anchored at vertex 0.  Valid for `n >= 2`
    /// in digraphs; undirected callers must require `n >= 3` themselves.
    fn ham_cycle(&self) -> Option<Vec<usize>> {
        if self.n < 2 {
            return None;
        }
        self.ham_path(1, self.inn[0] & !1)
    }
}

// ---------------------------------------------------------------------------
// Public solvers
// ---------------------------------------------------------------------------

fn endpoint_mask(n: usize, v: Option<usize>) -> Result<u32, OracleError> {
    match v {
        None => Ok(u32::MAX),
        Some(v) if v < n => Ok(1 << v),
        Some(v) => Err(OracleError::Invalid(format!(
            "endpoint {v} out of range 0..{n}"
        ))),
    }
}

/// Hamilton path with optional pinned endpoints.  `None` endpoints are
/// unconstrained.
pub fn exact_hamilton_path(
    g: &Graph,
    start: Option<usize>,
    end: Option<usize>,
) -> Result<Option<PathWitness>, OracleError> {
    let adj = MaskAdj::new(g)?;
    let starts = endpoint_mask(adj.n, start)?;
    let ends = endpoint_mask(adj.n, end)?;
    Ok(adj.ham_path(starts, ends).map(PathWitness::new))
}

/// Hamilton cycle; simple undirected cycles need at least 3 vertices.
pub fn exact_hamilton_cycle(g: &Graph) -> Result<Option<HamiltonCycle>, OracleError> {
    if g.order() < 3 {
        if g.order() == 0 {
            return Err(OracleError::Invalid("empty graph".into()));
        }
        return Ok(None);
    }
    let adj = MaskAdj::new(g)?;
    Ok(adj.ham_cycle().map(HamiltonCycle::new))
}

/// Directed Hamilton path with optional pinned endpoints.
pub fn exact_hamilton_path_digraph(
    d: &Digraph,
    start: Option<usize>,
    end: Option<usize>,
) -> Result<Option<Vec<usize>>, OracleError> {
    let adj = MaskAdj::new(d)?;
    let starts = endpoint_mask(adj.n, start)?;
    let ends = endpoint_mask(adj.n, end)?;
    Ok(adj.ham_path(starts, ends))
}

/// Directed Hamilton cycle (length 2 allowed: a digraph may have a
/// two-cycle).
pub fn exact_hamilton_cycle_digraph(d: &Digraph) -> Result<Option<Vec<usize>>, OracleError> {
    let adj = MaskAdj::new(d)?;
    Ok(adj.ham_cycle())
}

/// Spanning linear forest whose `j`-th path runs from `pairs[j].0` to
/// `pairs[j].1`.  A pair with equal entries pins a single-vertex path.  All
/// endpoints must be distinct vertices across pairs.
///
/// The DP runs in stages, one per pair: within stage `j` the moving endpoint
/// may only step onto non-endpoint vertices or onto `pairs[j].1`, which
/// closes the path and seeds stage `j+1`.
pub fn exact_forest_with_endpoints(
    g: &Graph,
    pairs: &[(usize, usize)],
) -> Result<Option<LinearForest>, OracleError> {
    let n = g.order();
    let k = pairs.len();
    if k == 0 {
        return Err(OracleError::Invalid("no endpoint pairs given".into()));
    }
    let adj = MaskAdj::new(g)?;
    // Memory guard: one 2^n table per stage.
    if (1usize << n).saturating_mul(k) > (1 << 24) {
        return Err(OracleError::TooLarge {
            n,
            limit: ORACLE_VERTEX_LIMIT,
        });
    }
    let mut occupied = vec![false; n];
    let mut endpoint_bits: u32 = 0;
    for &(a, b) in pairs {
        for v in if a == b { vec![a] } else { vec![a, b] } {
            if v >= n {
                return Err(OracleError::Invalid(format!(
                    "endpoint {v} out of range 0..{n}"
                )));
            }
            if occupied[v] {
                return Err(OracleError::Invalid(format!(
                    "vertex {v} appears in more than one endpoint slot"
                )));
            }
            occupied[v] = true;
            endpoint_bits |= 1 << v;
        }
    }

    let full = adj.full();
    let size = 1usize << n;
    // dp[j][mask]: possible moving endpoints of the in-progress path j,
    // where mask covers paths 0..j plus the partial path.
    let mut dp: Vec<Vec<u32>> = vec![vec![0u32; size]; k];
    dp[0][1 << pairs[0].0] = 1 << pairs[0].0;
    let mut success: Option<u32> = None; // final mask (always `full`)
    for j in 0..k {
        let (_, b) = pairs[j];
        let b_bit = 1u32 << b;
        for mask in 1..=full {
            let here = dp[j][mask as usize];
            if here == 0 {
                continue;
            }
            if here & b_bit != 0 {
                // Path j closed at b.
                if j + 1 < k {
                    let a_next = pairs[j + 1].0;
                    if mask & (1 << a_next) == 0 {
                        let m2 = mask | (1 << a_next);
                        dp[j + 1][m2 as usize] |= 1 << a_next;
                    }
                } else if mask == full && success.is_none() {
                    success = Some(mask);
                }
            }
            for v in bits(here & !b_bit) {
                // Interior steps avoid all pinned endpoints except b itself.
                let allowed = !endpoint_bits | b_bit;
                let ext = adj.out[v] & !mask & allowed;
                for w in bits(ext) {
                    dp[j][(mask | (1 << w)) as usize] |= 1 << w;
                }
            }
        }
    }
    let Some(final_mask) = success else {
        return Ok(None);
    };

    // Walk backwards: stage by stage, lowest-id predecessors.
    let mut paths_rev: Vec<Vec<usize>> = Vec::with_capacity(k);
    let mut mask = final_mask;
    for j in (0..k).rev() {
        let (a, b) = pairs[j];
        let mut v = b;
        let mut rev = vec![v];
        while v != a {
            let prev_mask = mask & !(1u32 << v);
            let cands = dp[j][prev_mask as usize] & adj.inn[v];
            debug_assert_ne!(cands, 0);
            let u = cands.trailing_zeros() as usize;
            rev.push(u);
            mask = prev_mask;
            v = u;
        }
        mask &= !(1u32 << a);
        rev.reverse();
        paths_rev.push(rev);
    }
    debug_assert_eq!(mask, 0);
    paths_rev.reverse();
    Ok(Some(LinearForest::new(
        paths_rev.into_iter().map(PathWitness::new).collect(),
    )))
}

/// Hamilton cycle traversing every pair of `matching` as a consecutive
/// cycle edge.  The pairs are treated as forced adjacencies whether or not
/// they are host edges, so callers may thread the cycle through virtual
/// edges; the returned order then lives in `G` plus those pairs.
///
/// Each pair is contracted to one directed node (entered at one endpoint,
/// left at the other); all `2^t` orientation patterns are tried in
/// ascending order and the first directed Hamilton cycle wins.
pub fn exact_cycle_through_matching(
    g: &Graph,
    matching: &[(usize, usize)],
) -> Result<Option<HamiltonCycle>, OracleError> {
    let n = g.order();
    let t = matching.len();
    if t == 0 {
        return exact_hamilton_cycle(g);
    }
    if t > MATCHING_LIMIT {
        return Err(OracleError::Invalid(format!(
            "matching of size {t} exceeds the limit {MATCHING_LIMIT}"
        )));
    }
    let mut in_pair = vec![usize::MAX; n];
    for (i, &(a, b)) in matching.iter().enumerate() {
        if a >= n || b >= n {
            return Err(OracleError::Invalid(format!(
                "matching pair ({a},{b}) out of range 0..{n}"
            )));
        }
        if a == b {
            return Err(OracleError::Invalid(format!("degenerate pair ({a},{a})")));
        }
        for v in [a, b] {
            if in_pair[v] != usize::MAX {
                return Err(OracleError::Invalid(format!(
                    "vertex {v} appears in two matching pairs"
                )));
            }
            in_pair[v] = i;
        }
    }
    if n < 3 {
        return Ok(None);
    }
    let contracted_n = n - t;
    if contracted_n > ORACLE_VERTEX_LIMIT {
        return Err(OracleError::TooLarge {
            n: contracted_n,
            limit: ORACLE_VERTEX_LIMIT,
        });
    }

    // Plain vertices keep their relative order; pair i becomes node
    // `plain_count + i`.
    let plain: Vec<usize> = (0..n).filter(|&v| in_pair[v] == usize::MAX).collect();
    let mut node_of = vec![usize::MAX; n];
    for (i, &v) in plain.iter().enumerate() {
        node_of[v] = i;
    }
    for (i, &(a, b)) in matching.iter().enumerate() {
        node_of[a] = plain.len() + i;
        node_of[b] = plain.len() + i;
    }

    for orientation in 0u32..(1 << t) {
        let enter_exit: Vec<(usize, usize)> = matching
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| {
                if orientation & (1 << i) == 0 {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        let mut d = Digraph::new(contracted_n);
        let arc_if_edge = |d: &mut Digraph, hu: usize, hv: usize, nu: usize, nv: usize| {
            if nu != nv && g.has_edge(hu, hv) {
                d.add_arc(nu, nv);
            }
        };
        for (i, &u) in plain.iter().enumerate() {
            for (jj, &w) in plain.iter().enumerate() {
                arc_if_edge(&mut d, u, w, i, jj);
            }
            for (p, &(enter, exit)) in enter_exit.iter().enumerate() {
                arc_if_edge(&mut d, u, enter, i, plain.len() + p);
                arc_if_edge(&mut d, exit, u, plain.len() + p, i);
            }
        }
        for (p, &(_, exit)) in enter_exit.iter().enumerate() {
            for (q, &(enter, _)) in enter_exit.iter().enumerate() {
                arc_if_edge(&mut d, exit, enter, plain.len() + p, plain.len() + q);
            }
        }
        if let Some(cycle) = exact_hamilton_cycle_digraph(&d)? {
            let mut order = Vec::with_capacity(n);
            for node in cycle {
                if node < plain.len() {
                    order.push(plain[node]);
                } else {
                    let (enter, exit) = enter_exit[node - plain.len()];
                    order.push(enter);
                    order.push(exit);
                }
            }
            return Ok(Some(HamiltonCycle::new(order)));
        }
    }
    Ok(None)
}

/// True when every pair appears as a consecutive (cyclic) adjacency of the
/// cycle order, in either direction.
pub fn cycle_traverses_pairs(order: &[usize], pairs: &[(usize, usize)]) -> bool {
    let n = order.len();
    pairs.iter().all(|&(a, b)| {
        (0..n).any(|i| {
            let (u, v) = (order[i], order[(i + 1) % n]);
            (u, v) == (a, b) || (u, v) == (b, a)
        })
    })
}

// ---------------------------------------------------------------------------
// Witness verification
// ---------------------------------------------------------------------------

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum WitnessViolation {
    #[error("vertex {vertex} out of range 0..{n}")]
    OutOfRange { vertex: usize, n: usize },
    #[error("vertex {vertex} appears more than once")]
    Repeated { vertex: usize },
    #[error("vertex {vertex} is not covered")]
    Missing { vertex: usize },
    #[error("consecutive witness vertices {u} and {v} are not adjacent")]
    NotAdjacent { u: usize, v: usize },
    #[error("a cycle needs at least 3 vertices, got {len}")]
    CycleTooShort { len: usize },
    #[error("witness contains an empty path")]
    EmptyPath,
    #[error("expected {expected} paths, got {got}")]
    WrongPathCount { expected: usize, got: usize },
    #[error("path {index} has endpoints ({got_a},{got_b}) instead of ({want_a},{want_b})")]
    WrongEndpoints {
        index: usize,
        got_a: usize,
        got_b: usize,
        want_a: usize,
        want_b: usize,
    },
}

fn check_coverage<G: HostGraph + ?Sized>(
    g: &G,
    vertices: impl Iterator<Item = usize>,
) -> Result<(), WitnessViolation> {
    let n = g.order();
    let mut seen = vec![false; n];
    let mut count = 0usize;
    for v in vertices {
        if v >= n {
            return Err(WitnessViolation::OutOfRange { vertex: v, n });
        }
        if seen[v] {
            return Err(WitnessViolation::Repeated { vertex: v });
        }
        seen[v] = true;
        count += 1;
    }
    if count < n {
        let missing = seen.iter().position(|&s| !s).unwrap();
        return Err(WitnessViolation::Missing { vertex: missing });
    }
    Ok(())
}

/// Checks that `order` is a Hamilton cycle of `g`.
pub fn verify_hamilton_cycle<G: HostGraph + ?Sized>(
    g: &G,
    order: &[usize],
) -> Result<(), WitnessViolation> {
    if order.len() < 3 {
        return Err(WitnessViolation::CycleTooShort { len: order.len() });
    }
    check_coverage(g, order.iter().copied())?;
    for i in 0..order.len() {
        let (u, v) = (order[i], order[(i + 1) % order.len()]);
        if !g.has_edge(u, v) {
            return Err(WitnessViolation::NotAdjacent { u, v });
        }
    }
    Ok(())
}

/// Checks that `paths` is a spanning linear forest of `g` (disjoint simple
/// paths covering every vertex, each consecutive pair adjacent).
pub fn verify_linear_forest<G: HostGraph + ?Sized>(
    g: &G,
    paths: &[Vec<usize>],
) -> Result<(), WitnessViolation> {
    if paths.iter().any(|p| p.is_empty()) {
        return Err(WitnessViolation::EmptyPath);
    }
    check_coverage(g, paths.iter().flatten().copied())?;
    for p in paths {
        for w in p.windows(2) {
            if !g.has_edge(w[0], w[1]) {
                return Err(WitnessViolation::NotAdjacent { u: w[0], v: w[1] });
            }
        }
    }
    Ok(())
}

/// Checks a spanning linear forest against pinned endpoint pairs: path `j`
/// must run between `pairs[j].0` and `pairs[j].1` (either direction).
pub fn verify_forest_endpoints<G: HostGraph + ?Sized>(
    g: &G,
    paths: &[Vec<usize>],
    pairs: &[(usize, usize)],
) -> Result<(), WitnessViolation> {
    verify_linear_forest(g, paths)?;
    if paths.len() != pairs.len() {
        return Err(WitnessViolation::WrongPathCount {
            expected: pairs.len(),
            got: paths.len(),
        });
    }
    for (index, (p, &(a, b))) in paths.iter().zip(pairs).enumerate() {
        let (first, last) = (*p.first().unwrap(), *p.last().unwrap());
        let matches = (first, last) == (a, b) || (first, last) == (b, a);
        if !matches {
            return Err(WitnessViolation::WrongEndpoints {
                index,
                got_a: first,
                got_b: last,
                want_a: a,
                want_b: b,
            });
        }
    }
    Ok(())
}

/// Checks a JSON-facing witness against its host graph.
pub fn verify_witness<G: HostGraph + ?Sized>(
    g: &G,
    witness: &Witness,
) -> Result<(), WitnessViolation> {
    match witness {
        Witness::HamiltonCycle { order, .. } => verify_hamilton_cycle(g, order),
        Witness::LinearForest { paths, .. } => verify_linear_forest(g, paths),
    }
}
