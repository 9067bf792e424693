//! Absorbing gadgets built around short odd cycles.
//!
//! An absorber for a vertex `v` is a small subgraph with two designated
//! endpoints and two endpoint-to-endpoint paths through it: one that covers
//! every gadget vertex except `v`, and one that additionally picks up `v`.
//! Swapping one path for the other splices `v` into (or out of) any longer
//! path that traverses the gadget, which is the basic step the assembler
//! uses to clean up leftover vertices.
//!
//! The gadget skeleton is an odd cycle `v x_0 x_1 .. x_l y_0 y_l .. y_1`
//! together with connector-built links joining `x_i` to `y_i` for each
//! `i >= 1`.  This module finds shortest odd cycles, labels them, builds the
//! links, produces the two switch paths, and samples disjoint translated
//! copies of a gadget across a Cayley graph.

use crate::bits::VertexSet;
use crate::cayley::CayleyGraph;
use crate::connector::{connect_avoiding, ConnectorError};
use crate::expansion::{ExpansionParams, EXPANSION_K};
use crate::graph::{two_coloring, Digraph, HostGraph};
use crate::witness::PathWitness;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use thiserror::Error;

/// Failures while building or transforming absorbers.
#[derive(Debug, Error)]
pub enum AbsorberError {
    /// The host graph has no odd cycle at all.
    #[error("host graph is bipartite: no odd cycle exists")]
    Bipartite,
    /// No odd cycle through the requested vertex survives the avoid set.
    #[error("no odd cycle through vertex {target} outside the avoided set")]
    NoCycleThroughTarget { target: usize },
    /// A vertex id does not fit the host graph.
    #[error("vertex {v} out of range for host of order {n}")]
    OutOfRange { v: usize, n: usize },
    /// The connector could not build one of the x-to-y links.
    #[error("connector failed on link {link}: {source}")]
    LinkFailed {
        link: usize,
        #[source]
        source: ConnectorError,
    },
    /// The connector could not supply a shortcut while shortening a cycle.
    #[error("connector failed during cycle shortening: {source}")]
    SpliceFailed {
        #[source]
        source: ConnectorError,
    },
    /// Splicing produced no strictly shorter odd cycle.
    #[error("cycle shortening stalled at length {length} with cap {cap}")]
    ShorteningStalled { length: usize, cap: usize },
    /// A structural check failed.
    #[error("invalid absorber: {0}")]
    Invalid(String),
}

// ---------------------------------------------------------------------------
// Odd cycle search
// ---------------------------------------------------------------------------

/// Breadth-first distances and discovery parents, skipping `avoid`.
fn bfs_with_parents<G: HostGraph + ?Sized>(
    g: &G,
    root: usize,
    avoid: &VertexSet,
) -> (Vec<usize>, Vec<usize>) {
    let n = g.order();
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    if avoid.contains(root) {
        return (dist, parent);
    }
    dist[root] = 0;
    parent[root] = root;
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for w in g.neighbors(u) {
            if dist[w] == usize::MAX && !avoid.contains(w) {
                dist[w] = dist[u] + 1;
                parent[w] = u;
                queue.push_back(w);
            }
        }
    }
    (dist, parent)
}

/// Walks the parent chain back to the root and returns root..=x.
fn root_path(parent: &[usize], mut x: usize) -> Vec<usize> {
    let mut path = vec![x];
    while parent[x] != x {
        x = parent[x];
        path.push(x);
    }
    path.reverse();
    path
}

/// Shortest odd cycle through `root` that avoids the given vertex set, as a
/// vertex list starting at `root`.  Same-level edges of the breadth-first
/// search certify odd closed walks through the root; each candidate walk is
/// checked for simplicity before it is accepted, so the result is always a
/// genuine cycle.  Returns `None` when no candidate survives, in particular
/// whenever the component of `root` is bipartite after removing `avoid`.
pub fn odd_cycle_through_avoiding<G: HostGraph + ?Sized>(
    g: &G,
    root: usize,
    avoid: &VertexSet,
) -> Option<Vec<usize>> {
    let n = g.order();
    if root >= n || avoid.contains(root) {
        return None;
    }
    let (dist, parent) = bfs_with_parents(g, root, avoid);
    let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
    for u in 0..n {
        if dist[u] == usize::MAX {
            continue;
        }
        for w in g.neighbors(u) {
            if w > u && dist[w] == dist[u] {
                candidates.push((2 * dist[u] + 1, u, w));
            }
        }
    }
    candidates.sort_unstable();
    let mut on_u = vec![false; n];
    for &(_, u, w) in &candidates {
        let pu = root_path(&parent, u);
        let pw = root_path(&parent, w);
        for &x in &pu {
            on_u[x] = true;
        }
        let disjoint = pw[1..].iter().all(|&x| !on_u[x]);
        for &x in &pu {
            on_u[x] = false;
        }
        if !disjoint {
            continue;
        }
        let mut cycle = pu;
        cycle.extend(pw[1..].iter().rev());
        return Some(cycle);
    }
    None
}

/// A shortest odd cycle of the host graph, or `None` when it is bipartite.
/// The returned length is the odd girth.  Vertex-transitive hosts are
/// scanned from a single root; every root is tried otherwise.
pub fn shortest_odd_cycle<G: HostGraph + ?Sized>(g: &G) -> Option<Vec<usize>> {
    let n = g.order();
    if n == 0 {
        return None;
    }
    let empty = VertexSet::new(n);
    if g.vertex_transitive_hint() {
        return odd_cycle_through_avoiding(g, 0, &empty);
    }
    let mut best: Option<(usize, usize)> = None;
    for root in 0..n {
        let (dist, _) = bfs_with_parents(g, root, &empty);
        for u in 0..n {
            if dist[u] == usize::MAX {
                continue;
            }
            for w in g.neighbors(u) {
                if w > u && dist[w] == dist[u] {
                    let len = 2 * dist[u] + 1;
                    if best.map_or(true, |(b, _)| len < b) {
                        best = Some((len, root));
                    }
                }
            }
        }
        if matches!(best, Some((3, _))) {
            break;
        }
    }
    // At a globally minimal walk length the extraction below cannot fail: a
    // non-simple candidate would certify a strictly shorter odd cycle.
    let (_, root) = best?;
    odd_cycle_through_avoiding(g, root, &empty)
}

/// Checks that `cycle` lists a simple cycle of the host with odd length.
fn verify_odd_cycle<G: HostGraph + ?Sized>(g: &G, cycle: &[usize]) -> Result<(), AbsorberError> {
    let n = g.order();
    if cycle.len() < 3 {
        return Err(AbsorberError::Invalid(format!(
            "cycle has {} vertices, need at least 3",
            cycle.len()
        )));
    }
    if cycle.len() % 2 == 0 {
        return Err(AbsorberError::Invalid(format!(
            "cycle length {} is even",
            cycle.len()
        )));
    }
    let mut seen = VertexSet::new(n);
    for &v in cycle {
        if v >= n {
            return Err(AbsorberError::OutOfRange { v, n });
        }
        if !seen.insert(v) {
            return Err(AbsorberError::Invalid(format!(
                "cycle repeats vertex {v}"
            )));
        }
    }
    for i in 0..cycle.len() {
        let u = cycle[i];
        let w = cycle[(i + 1) % cycle.len()];
        if !g.has_edge(u, w) {
            return Err(AbsorberError::Invalid(format!(
                "cycle step {u}-{w} is not an edge"
            )));
        }
    }
    Ok(())
}

/// Extracts a simple odd cycle from a closed walk of odd length by cutting
/// at repeated vertices.  The walk is given as its vertex sequence, with an
/// implicit closing step from the last entry back to the first.
pub fn extract_odd_cycle_from_walk(walk: &[usize]) -> Option<Vec<usize>> {
    if walk.len() % 2 == 0 || walk.len() < 3 {
        return None;
    }
    let mut first_pos = std::collections::HashMap::new();
    for (j, &v) in walk.iter().enumerate() {
        if let Some(&i) = first_pos.get(&v) {
            let inner: Vec<usize> = walk[i..j].to_vec();
            let mut outer: Vec<usize> = walk[..i].to_vec();
            outer.extend_from_slice(&walk[j..]);
            // The two closed sub-walks split the odd length, so exactly one
            // of them is odd.
            return if inner.len() % 2 == 1 {
                extract_odd_cycle_from_walk(&inner)
            } else {
                extract_odd_cycle_from_walk(&outer)
            };
        }
        first_pos.insert(v, j);
    }
    Some(walk.to_vec())
}

/// Default length cap for odd cycles used by gadget construction, from the
/// asymptotic schedule at density `sigma`.
pub fn cycle_length_cap(sigma: f64) -> usize {
    let raw = 4.0 * (EXPANSION_K * sigma.powi(-4)).ceil();
    raw.min(1e18) as usize
}

/// Repeatedly splices a connector shortcut into an odd cycle until its
/// length is at most `cap`.
///
/// Each round removes a sub-path `P` of the cycle and asks the connector for
/// a replacement `L` between its endpoints whose interior avoids `P`.  When
/// `|L| + |P|` is odd, `L` and `P` close a shorter simple odd cycle
/// directly; otherwise the walk formed by `L` and the rest of the cycle is
/// odd, and a simple odd cycle is cut out of it.  Fails honestly when no
/// strictly shorter cycle emerges.
pub fn shorten_odd_cycle<G: HostGraph + ?Sized>(
    g: &G,
    cycle: &[usize],
    params: &ExpansionParams,
    cap: usize,
) -> Result<Vec<usize>, AbsorberError> {
    if cap < 3 {
        return Err(AbsorberError::Invalid(format!(
            "cycle length cap {cap} is below 3"
        )));
    }
    verify_odd_cycle(g, cycle)?;
    let n = g.order();
    let pool = VertexSet::full(n);
    let mut current = cycle.to_vec();
    while current.len() > cap {
        let len = current.len();
        let p_len = (cap / 2).clamp(2, len - 2);
        let x = current[0];
        let y = current[p_len];
        let interior = VertexSet::from_iter(n, current[1..p_len].iter().copied());
        let link = connect_avoiding(g, x, y, &pool, &interior, params.nu, params.tau)
            .map_err(|source| AbsorberError::SpliceFailed { source })?;
        let l_len = link.edge_count();
        let replaced = if (l_len + p_len) % 2 == 1 {
            // Removed sub-path plus shortcut close an odd cycle directly.
            let mut next: Vec<usize> = current[..=p_len].to_vec();
            next.extend(link.vertices[1..l_len].iter().rev());
            next
        } else {
            // Shortcut plus the remainder of the cycle form a closed odd
            // walk; cut a simple odd cycle out of it.
            let mut walk: Vec<usize> = link.vertices.clone();
            walk.extend_from_slice(&current[p_len + 1..]);
            extract_odd_cycle_from_walk(&walk).ok_or_else(|| {
                AbsorberError::Invalid("odd walk yielded no odd cycle".into())
            })?
        };
        if replaced.len() >= len {
            return Err(AbsorberError::ShorteningStalled { length: len, cap });
        }
        verify_odd_cycle(g, &replaced)?;
        current = replaced;
    }
    Ok(current)
}

// ---------------------------------------------------------------------------
// The absorber gadget
// ---------------------------------------------------------------------------

/// A switchable gadget around one absorbable vertex.
///
/// The skeleton cycle is `target x_0 .. x_l y_0 y_l .. y_1`; `links[i-1]`
/// joins `x_i` to `y_i`.  Both switch paths run from `x_0` to `y_0`: one
/// covers every gadget vertex except `target`, the other covers all of them.
#[derive(Debug, Clone)]
pub struct Absorber {
    target: usize,
    x_side: Vec<usize>,
    y_side: Vec<usize>,
    links: Vec<PathWitness>,
    footprint: VertexSet,
}

impl Absorber {
    /// Assembles and validates a gadget from explicit parts.  `x_side` and
    /// `y_side` list `x_0..x_l` and `y_0..y_l`; `links[i-1]` must run from
    /// `x_i` to `y_i`.
    pub fn from_parts<G: HostGraph + ?Sized>(
        host: &G,
        target: usize,
        x_side: Vec<usize>,
        y_side: Vec<usize>,
        links: Vec<PathWitness>,
    ) -> Result<Absorber, AbsorberError> {
        let mut footprint = VertexSet::new(host.order());
        footprint.insert(target);
        for &v in x_side.iter().chain(&y_side) {
            if v >= host.order() {
                return Err(AbsorberError::OutOfRange {
                    v,
                    n: host.order(),
                });
            }
            footprint.insert(v);
        }
        for link in &links {
            for &v in &link.vertices {
                if v >= host.order() {
                    return Err(AbsorberError::OutOfRange {
                        v,
                        n: host.order(),
                    });
                }
                footprint.insert(v);
            }
        }
        let absorber = Absorber {
            target,
            x_side,
            y_side,
            links,
            footprint,
        };
        absorber.validate(host)?;
        Ok(absorber)
    }

    /// The vertex this gadget can splice in or leave out.
    pub fn target(&self) -> usize {
        self.target
    }

    /// Endpoints `(x_0, y_0)` shared by both switch paths.
    pub fn endpoints(&self) -> (usize, usize) {
        (self.x_side[0], self.y_side[0])
    }

    /// Number of x-to-y links (the `l` in the skeleton labelling).
    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// The links joining `x_i` to `y_i`, in order of `i`.
    pub fn links(&self) -> &[PathWitness] {
        &self.links
    }

    /// Cycle vertices `x_0..x_l`.
    pub fn x_side(&self) -> &[usize] {
        &self.x_side
    }

    /// Cycle vertices `y_0..y_l`.
    pub fn y_side(&self) -> &[usize] {
        &self.y_side
    }

    /// Every vertex of the gadget, including `target`.
    pub fn footprint(&self) -> &VertexSet {
        &self.footprint
    }

    /// The skeleton cycle `target x_0 .. x_l y_0 y_l .. y_1`.
    pub fn cycle(&self) -> Vec<usize> {
        let l = self.links.len();
        let mut cycle = Vec::with_capacity(2 * l + 3);
        cycle.push(self.target);
        cycle.extend_from_slice(&self.x_side);
        cycle.push(self.y_side[0]);
        for i in (1..=l).rev() {
            cycle.push(self.y_side[i]);
        }
        cycle
    }

    /// One of the two switch paths from `x_0` to `y_0`.  With
    /// `include_target` false the path covers every gadget vertex except
    /// `target`; with it true the path covers all of them.  The traversal
    /// alternates between the two cycle sides, walking each link forwards or
    /// backwards depending on its index parity.
    pub fn switch_path(&self, include_target: bool) -> PathWitness {
        let l = self.links.len();
        let mut out = Vec::with_capacity(self.footprint.len());
        out.push(self.x_side[0]);
        if include_target {
            out.push(self.target);
        }
        for i in 1..=l {
            let link = &self.links[i - 1];
            let odd = i % 2 == 1;
            let forward = odd != include_target;
            if forward {
                out.extend(link.vertices.iter().copied());
            } else {
                out.extend(link.vertices.iter().rev().copied());
            }
        }
        out.push(self.y_side[0]);
        PathWitness::new(out)
    }

    /// Full structural check against a host graph: the skeleton must be an
    /// odd cycle, links must join the right endpoints and stay internally
    /// disjoint, and both switch paths must be genuine paths covering
    /// exactly the advertised vertex sets.
    pub fn validate<G: HostGraph + ?Sized>(&self, host: &G) -> Result<(), AbsorberError> {
        let n = host.order();
        if self.x_side.is_empty() || self.x_side.len() != self.y_side.len() {
            return Err(AbsorberError::Invalid(format!(
                "side lengths {} and {} must match and be positive",
                self.x_side.len(),
                self.y_side.len()
            )));
        }
        if self.links.len() + 1 != self.x_side.len() {
            return Err(AbsorberError::Invalid(format!(
                "{} links do not fit {} cycle positions per side",
                self.links.len(),
                self.x_side.len()
            )));
        }
        let cycle = self.cycle();
        verify_odd_cycle(host, &cycle)?;
        let cycle_set = VertexSet::from_iter(n, cycle.iter().copied());

        let mut expected = cycle_set.clone();
        let mut link_interiors = VertexSet::new(n);
        for (idx, link) in self.links.iter().enumerate() {
            let i = idx + 1;
            if link.vertices.len() < 2 {
                return Err(AbsorberError::Invalid(format!(
                    "link {i} has fewer than 2 vertices"
                )));
            }
            if link.first() != self.x_side[i] || link.last() != self.y_side[i] {
                return Err(AbsorberError::Invalid(format!(
                    "link {i} joins {}-{} instead of {}-{}",
                    link.first(),
                    link.last(),
                    self.x_side[i],
                    self.y_side[i]
                )));
            }
            let mut seen = VertexSet::new(n);
            for pair in link.vertices.windows(2) {
                if !host.has_edge(pair[0], pair[1]) {
                    return Err(AbsorberError::Invalid(format!(
                        "link {i} step {}-{} is not an edge",
                        pair[0], pair[1]
                    )));
                }
            }
            for &v in &link.vertices {
                if v >= n {
                    return Err(AbsorberError::OutOfRange { v, n });
                }
                if !seen.insert(v) {
                    return Err(AbsorberError::Invalid(format!(
                        "link {i} repeats vertex {v}"
                    )));
                }
            }
            for &v in &link.vertices[1..link.vertices.len() - 1] {
                if cycle_set.contains(v) {
                    return Err(AbsorberError::Invalid(format!(
                        "link {i} interior touches cycle vertex {v}"
                    )));
                }
                if !link_interiors.insert(v) {
                    return Err(AbsorberError::Invalid(format!(
                        "links share interior vertex {v}"
                    )));
                }
                expected.insert(v);
            }
        }
        if self.footprint != expected {
            return Err(AbsorberError::Invalid(
                "footprint does not match cycle plus link interiors".into(),
            ));
        }

        for include in [false, true] {
            let path = self.switch_path(include);
            let label = if include { "inclusive" } else { "avoiding" };
            if path.first() != self.x_side[0] || path.last() != self.y_side[0] {
                return Err(AbsorberError::Invalid(format!(
                    "{label} switch path has wrong endpoints"
                )));
            }
            let mut seen = VertexSet::new(n);
            for &v in &path.vertices {
                if !seen.insert(v) {
                    return Err(AbsorberError::Invalid(format!(
                        "{label} switch path repeats vertex {v}"
                    )));
                }
            }
            for pair in path.vertices.windows(2) {
                if !host.has_edge(pair[0], pair[1]) {
                    return Err(AbsorberError::Invalid(format!(
                        "{label} switch path step {}-{} is not an edge",
                        pair[0], pair[1]
                    )));
                }
            }
            let mut want = self.footprint.clone();
            if !include {
                want.remove(self.target);
            }
            if seen != want {
                return Err(AbsorberError::Invalid(format!(
                    "{label} switch path covers the wrong vertex set"
                )));
            }
        }
        Ok(())
    }
}

/// Builds an absorber for `target`: finds a shortest odd cycle through it
/// that avoids `forbidden`, labels the cycle, and asks the connector for the
/// x-to-y links one at a time, each avoiding everything built so far.
pub fn build_absorber<G: HostGraph + ?Sized>(
    host: &G,
    target: usize,
    params: &ExpansionParams,
    forbidden: &VertexSet,
) -> Result<Absorber, AbsorberError> {
    let n = host.order();
    if target >= n {
        return Err(AbsorberError::OutOfRange { v: target, n });
    }
    if forbidden.contains(target) {
        return Err(AbsorberError::Invalid(format!(
            "target {target} is in the forbidden set"
        )));
    }
    let cycle = match odd_cycle_through_avoiding(host, target, forbidden) {
        Some(c) => c,
        None => {
            return Err(if two_coloring(host).is_ok() {
                AbsorberError::Bipartite
            } else {
                AbsorberError::NoCycleThroughTarget { target }
            });
        }
    };
    debug_assert_eq!(cycle[0], target);
    let l = (cycle.len() - 3) / 2;
    let x_side: Vec<usize> = cycle[1..=l + 1].to_vec();
    let mut y_side = vec![cycle[l + 2]];
    for i in 1..=l {
        y_side.push(cycle[2 * l + 3 - i]);
    }

    let mut blocked = forbidden.clone();
    for &v in &cycle {
        blocked.insert(v);
    }
    let pool = VertexSet::full(n);
    let mut links = Vec::with_capacity(l);
    for i in 1..=l {
        let (xi, yi) = (x_side[i], y_side[i]);
        let mut avoid = blocked.clone();
        avoid.remove(xi);
        avoid.remove(yi);
        let link = connect_avoiding(host, xi, yi, &pool, &avoid, params.nu, params.tau)
            .map_err(|source| AbsorberError::LinkFailed { link: i, source })?;
        for &v in &link.vertices {
            blocked.insert(v);
        }
        links.push(link);
    }
    Absorber::from_parts(host, target, x_side, y_side, links)
}

/// Maps an absorber through left translation by `g` and revalidates it on
/// the Cayley host.  Left translations are graph automorphisms, so validity
/// is preserved and the endpoints move to the translated endpoints.
pub fn translate_absorber(
    cg: &CayleyGraph,
    absorber: &Absorber,
    g: usize,
) -> Result<Absorber, AbsorberError> {
    let group = cg.group();
    let n = group.order();
    if g >= n {
        return Err(AbsorberError::OutOfRange { v: g, n });
    }
    let shift = |v: usize| group.op(g, v);
    let links = absorber
        .links
        .iter()
        .map(|p| PathWitness::new(p.vertices.iter().map(|&v| shift(v)).collect()))
        .collect();
    Absorber::from_parts(
        cg,
        shift(absorber.target),
        absorber.x_side.iter().map(|&v| shift(v)).collect(),
        absorber.y_side.iter().map(|&v| shift(v)).collect(),
        links,
    )
}

// ---------------------------------------------------------------------------
// Translated families
// ---------------------------------------------------------------------------

/// The part of a gadget that translation needs to track: its vertex set and
/// the three landmark vertices.
#[derive(Debug, Clone)]
pub struct TranslateTemplate {
    /// Every vertex of the gadget, including the absorbable one.
    pub footprint: Vec<usize>,
    /// The absorbable vertex.
    pub anchor: usize,
    /// Switch-path endpoint a chain enters through.
    pub entry: usize,
    /// Switch-path endpoint a chain leaves through.
    pub exit: usize,
}

impl TranslateTemplate {
    /// Validates the landmark structure: distinct footprint vertices that
    /// contain all three landmarks.
    pub fn new(
        footprint: Vec<usize>,
        anchor: usize,
        entry: usize,
        exit: usize,
    ) -> Result<TranslateTemplate, AbsorberError> {
        let mut seen = std::collections::HashSet::new();
        for &v in &footprint {
            if !seen.insert(v) {
                return Err(AbsorberError::Invalid(format!(
                    "template footprint repeats vertex {v}"
                )));
            }
        }
        for v in [anchor, entry, exit] {
            if !seen.contains(&v) {
                return Err(AbsorberError::Invalid(format!(
                    "template landmark {v} is not in the footprint"
                )));
            }
        }
        Ok(TranslateTemplate {
            footprint,
            anchor,
            entry,
            exit,
        })
    }

    /// Template of an existing absorber.
    pub fn from_absorber(absorber: &Absorber) -> TranslateTemplate {
        let (entry, exit) = absorber.endpoints();
        TranslateTemplate {
            footprint: absorber.footprint().to_vec(),
            anchor: absorber.target(),
            entry,
            exit,
        }
    }
}

/// Why a sampled translate was rejected by the greedy disjointness pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    /// The translated footprint hits `vertex`, already owned by the earlier
    /// surviving sample at index `with`.
    Overlap { vertex: usize, with: usize },
    /// The translated footprint hits a protected vertex.
    Protected { vertex: usize },
}

/// Landmarks of one surviving translate.
#[derive(Debug, Clone, Copy)]
pub struct ChainLandmarks {
    /// The sampled group element.
    pub element: usize,
    /// Translated absorbable vertex.
    pub anchor: usize,
    /// Translated entry endpoint.
    pub entry: usize,
    /// Translated exit endpoint.
    pub exit: usize,
}

/// Degree concentration of one landmark set, measured over the union of all
/// sampled translates (before the disjointness pass).
#[derive(Debug, Clone, Serialize)]
pub struct LandmarkStats {
    /// Expected degree into the set: density times samples times set width.
    pub center: f64,
    /// Concentration band `10 w sqrt(m ln n)` for width `w`.
    pub band: f64,
    /// Smallest degree into the set over all host vertices.
    pub min_count: usize,
    /// Largest degree into the set over all host vertices.
    pub max_count: usize,
    /// Largest deviation `|degree - center|` observed.
    pub max_deviation: f64,
    /// Host vertices whose deviation exceeds the band.
    pub violations: usize,
}

/// Concentration measurements for all four landmark sets.
#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationReport {
    pub anchors: LandmarkStats,
    pub entries: LandmarkStats,
    pub exits: LandmarkStats,
    pub footprint: LandmarkStats,
    /// Number of sampled translates.
    pub sample_count: usize,
    /// Number that survived the disjointness pass.
    pub surviving_count: usize,
}

/// A family of translated gadget copies with pairwise disjoint footprints.
#[derive(Debug, Clone)]
pub struct TranslateFamily {
    template: TranslateTemplate,
    elements: Vec<usize>,
    surviving: Vec<usize>,
    drops: Vec<(usize, DropReason)>,
    landmarks: Vec<ChainLandmarks>,
    anchors: VertexSet,
    entries: VertexSet,
    exits: VertexSet,
    footprint_union: VertexSet,
    report: ConcentrationReport,
}

impl TranslateFamily {
    /// The template the family was built from.
    pub fn template(&self) -> &TranslateTemplate {
        &self.template
    }

    /// All sampled group elements, in sample order.
    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    /// Indices into `elements` that survived the disjointness pass.
    pub fn surviving(&self) -> &[usize] {
        &self.surviving
    }

    /// Dropped sample indices with their collision witnesses.
    pub fn drops(&self) -> &[(usize, DropReason)] {
        &self.drops
    }

    /// Landmarks of the surviving translates, in survival order.
    pub fn landmarks(&self) -> &[ChainLandmarks] {
        &self.landmarks
    }

    /// Translated absorbable vertices of the survivors.
    pub fn anchors(&self) -> &VertexSet {
        &self.anchors
    }

    /// Translated entry endpoints of the survivors.
    pub fn entries(&self) -> &VertexSet {
        &self.entries
    }

    /// Translated exit endpoints of the survivors.
    pub fn exits(&self) -> &VertexSet {
        &self.exits
    }

    /// Union of the survivors' footprints.
    pub fn footprint_union(&self) -> &VertexSet {
        &self.footprint_union
    }

    /// Concentration measurements over all samples.
    pub fn report(&self) -> &ConcentrationReport {
        &self.report
    }

    /// Digraph over the surviving translates with an arc `i -> j` whenever
    /// the host joins copy `i`'s exit endpoint to copy `j`'s entry endpoint.
    /// Directed paths here chain gadget copies end to end.
    pub fn chain_digraph<G: HostGraph + ?Sized>(&self, host: &G) -> Digraph {
        let k = self.landmarks.len();
        let mut d = Digraph::new(k);
        for i in 0..k {
            for j in 0..k {
                if i != j && host.has_edge(self.landmarks[i].exit, self.landmarks[j].entry) {
                    d.add_arc(i, j);
                }
            }
        }
        d
    }
}

/// Default number of translates to sample for a host of order `n`.
pub fn default_translate_count(n: usize) -> usize {
    ((n as f64).powf(0.6).ceil() as usize).max(1)
}

fn landmark_stats<G: HostGraph + ?Sized>(
    host: &G,
    set: &VertexSet,
    sigma: f64,
    m: usize,
    width: usize,
) -> LandmarkStats {
    let n = host.order();
    let center = sigma * m as f64 * width as f64;
    let band = 10.0 * width as f64 * (m as f64 * (n as f64).ln()).sqrt();
    let mut min_count = usize::MAX;
    let mut max_count = 0usize;
    let mut max_deviation = 0f64;
    let mut violations = 0usize;
    for v in 0..n {
        let c = host.count_neighbors_in(v, set);
        min_count = min_count.min(c);
        max_count = max_count.max(c);
        let dev = (c as f64 - center).abs();
        max_deviation = max_deviation.max(dev);
        if dev > band {
            violations += 1;
        }
    }
    LandmarkStats {
        center,
        band,
        min_count,
        max_count,
        max_deviation,
        violations,
    }
}

/// Samples `m` translates of a gadget template uniformly with repetition,
/// keeps a maximal prefix-greedy subfamily whose footprints are pairwise
/// disjoint and avoid `protected`, and measures degree concentration of the
/// landmark sets over the full sample.
pub fn sample_translates(
    cg: &CayleyGraph,
    template: &TranslateTemplate,
    m: usize,
    seed: u64,
    protected: &VertexSet,
) -> Result<TranslateFamily, AbsorberError> {
    let group = cg.group();
    let n = group.order();
    if m == 0 {
        return Err(AbsorberError::Invalid("sample count must be positive".into()));
    }
    for &v in template
        .footprint
        .iter()
        .chain([template.anchor, template.entry, template.exit].iter())
    {
        if v >= n {
            return Err(AbsorberError::OutOfRange { v, n });
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let elements: Vec<usize> = (0..m).map(|_| rng.gen_range(0..n)).collect();

    // Landmark unions over every sample, for the concentration report.
    let mut all_anchors = VertexSet::new(n);
    let mut all_entries = VertexSet::new(n);
    let mut all_exits = VertexSet::new(n);
    let mut all_footprint = VertexSet::new(n);
    for &g in &elements {
        all_anchors.insert(group.op(g, template.anchor));
        all_entries.insert(group.op(g, template.entry));
        all_exits.insert(group.op(g, template.exit));
        for &f in &template.footprint {
            all_footprint.insert(group.op(g, f));
        }
    }
    let sigma = cg.density();
    let width = template.footprint.len();

    // Greedy disjointness pass in sample order.
    let mut owner: Vec<usize> = vec![usize::MAX; n];
    let mut surviving = Vec::new();
    let mut drops = Vec::new();
    let mut landmarks = Vec::new();
    let mut anchors = VertexSet::new(n);
    let mut entries = VertexSet::new(n);
    let mut exits = VertexSet::new(n);
    let mut footprint_union = VertexSet::new(n);
    for (idx, &g) in elements.iter().enumerate() {
        let translated: Vec<usize> = template.footprint.iter().map(|&f| group.op(g, f)).collect();
        let mut reason = None;
        for &v in &translated {
            if protected.contains(v) {
                reason = Some(DropReason::Protected { vertex: v });
                break;
            }
            if owner[v] != usize::MAX {
                reason = Some(DropReason::Overlap {
                    vertex: v,
                    with: owner[v],
                });
                break;
            }
        }
        if let Some(reason) = reason {
            drops.push((idx, reason));
            continue;
        }
        for &v in &translated {
            owner[v] = idx;
            footprint_union.insert(v);
        }
        let lm = ChainLandmarks {
            element: g,
            anchor: group.op(g, template.anchor),
            entry: group.op(g, template.entry),
            exit: group.op(g, template.exit),
        };
        anchors.insert(lm.anchor);
        entries.insert(lm.entry);
        exits.insert(lm.exit);
        landmarks.push(lm);
        surviving.push(idx);
    }

    let report = ConcentrationReport {
        anchors: landmark_stats(cg, &all_anchors, sigma, m, 1),
        entries: landmark_stats(cg, &all_entries, sigma, m, 1),
        exits: landmark_stats(cg, &all_exits, sigma, m, 1),
        footprint: landmark_stats(cg, &all_footprint, sigma, m, width),
        sample_count: m,
        surviving_count: surviving.len(),
    };
    Ok(TranslateFamily {
        template: template.clone(),
        elements,
        surviving,
        drops,
        landmarks,
        anchors,
        entries,
        exits,
        footprint_union,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::CayleyGraph;
    use crate::group::{build_group, GeneratorSet, GroupSpec};
    use crate::graph::{Graph, Navigable};
    use proptest::prelude::*;
    use rand::Rng;
    use std::sync::Arc;

    fn params(nu: f64, tau: f64) -> ExpansionParams {
        ExpansionParams {
            nu,
            tau,
            alpha: nu + tau,
        }
    }

    /// Odd girth by counting closed walks: the least odd power of the
    /// adjacency matrix with a positive trace.
    fn odd_girth_by_walk_counts(g: &Graph) -> Option<usize> {
        let n = g.order();
        let mut a = vec![vec![0u128; n]; n];
        for u in 0..n {
            for w in g.neighbors(u) {
                a[u][w] = 1;
            }
        }
        let mut power = a.clone();
        for k in 2..=n {
            let mut next = vec![vec![0u128; n]; n];
            for i in 0..n {
                for t in 0..n {
                    if power[i][t] == 0 {
                        continue;
                    }
                    let p = power[i][t];
                    for (j, cell) in next[i].iter_mut().enumerate() {
                        *cell += p * a[t][j];
                    }
                }
            }
            power = next;
            if k % 2 == 1 && (0..n).any(|i| power[i][i] > 0) {
                return Some(k);
            }
        }
        None
    }

    fn assert_valid_odd_cycle(g: &Graph, cycle: &[usize]) {
        verify_odd_cycle(g, cycle).unwrap();
    }

    fn z_circulant(n: u64, offsets: &[u64]) -> CayleyGraph {
        let group = Arc::new(build_group(&GroupSpec::Cyclic(n)).unwrap());
        let mut elems = Vec::new();
        for &o in offsets {
            elems.push(o as usize);
            elems.push((n - o) as usize % n as usize);
        }
        elems.sort_unstable();
        elems.dedup();
        let gens = GeneratorSet::new(&group, &elems).unwrap();
        CayleyGraph::new(group, gens)
    }

    #[test]
    fn odd_cycle_lengths_on_small_cycles() {
        assert_eq!(shortest_odd_cycle(&Graph::cycle(5)).unwrap().len(), 5);
        assert!(shortest_odd_cycle(&Graph::cycle(6)).is_none());
        assert_eq!(shortest_odd_cycle(&Graph::cycle(7)).unwrap().len(), 7);
    }

    #[test]
    fn two_generator_circulant_has_triangle() {
        let g = Graph::circulant(7, &[1, 2]);
        let cycle = shortest_odd_cycle(&g).unwrap();
        assert_eq!(cycle, vec![0, 1, 2]);
    }

    #[test]
    fn walk_count_oracle_agrees_on_catalog() {
        let graphs = vec![
            Graph::cycle(5),
            Graph::cycle(6),
            Graph::cycle(7),
            Graph::cycle(9),
            Graph::cycle(11),
            Graph::complete(5),
            Graph::complete(7),
            Graph::circulant(8, &[1, 2]),
            Graph::circulant(10, &[2, 5]),
            Graph::circulant(12, &[3, 4]),
            Graph::circulant(13, &[1, 5]),
            Graph::bipartite_circulant(4, &[0, 1]),
        ];
        for g in &graphs {
            let expected = odd_girth_by_walk_counts(g);
            let found = shortest_odd_cycle(g);
            match (expected, &found) {
                (None, None) => {}
                (Some(len), Some(cycle)) => {
                    assert_eq!(cycle.len(), len);
                    assert_valid_odd_cycle(g, cycle);
                }
                other => panic!("walk oracle disagrees: {other:?}"),
            }
        }
    }

    #[test]
    fn pendant_vertex_has_no_cycle_through_it() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 0), (2, 3)]);
        let empty = VertexSet::new(4);
        assert!(odd_cycle_through_avoiding(&g, 3, &empty).is_none());
        assert_eq!(
            odd_cycle_through_avoiding(&g, 2, &empty).unwrap(),
            vec![2, 0, 1]
        );
    }

    #[test]
    fn avoid_set_reroutes_cycle_search() {
        let g = Graph::complete(5);
        let avoid = VertexSet::from_iter(5, [0]);
        let cycle = odd_cycle_through_avoiding(&g, 1, &avoid).unwrap();
        assert_eq!(cycle, vec![1, 2, 3]);
        assert!(odd_cycle_through_avoiding(&g, 0, &avoid).is_none());
    }

    #[test]
    fn bipartite_host_refuses_absorber() {
        let g = Graph::cycle(6);
        let err = build_absorber(&g, 0, &params(0.1, 0.1), &VertexSet::new(6));
        assert!(matches!(err, Err(AbsorberError::Bipartite)));
    }

    #[test]
    fn complete_graph_degenerate_absorber() {
        let g = Graph::complete(7);
        let a = build_absorber(&g, 3, &params(0.1, 0.1), &VertexSet::new(7)).unwrap();
        assert_eq!(a.target(), 3);
        assert_eq!(a.link_count(), 0);
        assert_eq!(a.cycle(), vec![3, 0, 1]);
        assert_eq!(a.switch_path(false).vertices, vec![0, 1]);
        assert_eq!(a.switch_path(true).vertices, vec![0, 3, 1]);
        a.validate(&g).unwrap();
    }

    #[test]
    fn five_cycle_with_chord_absorber() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (2, 4)]);
        let a = build_absorber(&g, 0, &params(0.1, 0.1), &VertexSet::new(5)).unwrap();
        assert_eq!(a.link_count(), 1);
        assert_eq!(a.cycle(), vec![0, 1, 2, 3, 4]);
        assert_eq!(a.links()[0].vertices, vec![2, 4]);
        assert_eq!(a.switch_path(false).vertices, vec![1, 2, 4, 3]);
        assert_eq!(a.switch_path(true).vertices, vec![1, 0, 4, 2, 3]);
        assert_eq!(a.footprint().len(), 5);
        a.validate(&g).unwrap();
    }

    #[test]
    fn even_link_count_switch_pattern() {
        // Skeleton 7-cycle 0..6 with two links through fresh vertices 7, 8.
        let g = Graph::from_edges(
            9,
            [
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 5),
                (5, 6),
                (6, 0),
                (2, 7),
                (7, 6),
                (3, 8),
                (8, 5),
            ],
        );
        let links = vec![
            PathWitness::new(vec![2, 7, 6]),
            PathWitness::new(vec![3, 8, 5]),
        ];
        let a = Absorber::from_parts(&g, 0, vec![1, 2, 3], vec![4, 6, 5], links).unwrap();
        assert_eq!(a.cycle(), vec![0, 1, 2, 3, 4, 5, 6]);
        assert_eq!(a.switch_path(false).vertices, vec![1, 2, 7, 6, 5, 8, 3, 4]);
        assert_eq!(
            a.switch_path(true).vertices,
            vec![1, 0, 6, 7, 2, 3, 8, 5, 4]
        );
    }

    #[test]
    fn triangle_free_circulant_absorber() {
        let cg = z_circulant(101, &[34, 50]);
        let cycle = shortest_odd_cycle(&cg).unwrap();
        assert_eq!(cycle, vec![0, 51, 1, 68, 34]);
        let a = build_absorber(&cg, 0, &params(0.005, 0.02), &VertexSet::new(101)).unwrap();
        assert_eq!(a.link_count(), 1);
        assert_eq!(a.endpoints(), (51, 68));
        let link = &a.links()[0];
        assert_eq!(link.first(), 1);
        assert_eq!(link.last(), 34);
        assert!(link.edge_count() <= params(0.005, 0.02).max_path_length());
        assert_eq!(a.footprint().len(), 5 + link.vertices.len() - 2);
        a.validate(&cg).unwrap();
    }

    #[test]
    fn translations_preserve_validity() {
        let cg = z_circulant(15, &[1, 2]);
        let a = build_absorber(&cg, 0, &params(0.05, 0.05), &VertexSet::new(15)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(0xabe1);
        for _ in 0..100 {
            let g = rng.gen_range(0..15);
            let moved = translate_absorber(&cg, &a, g).unwrap();
            assert_eq!(moved.target(), (g + a.target()) % 15);
            let (x0, y0) = a.endpoints();
            assert_eq!(moved.endpoints(), ((g + x0) % 15, (g + y0) % 15));
        }
    }

    #[test]
    fn translations_work_on_nonabelian_groups() {
        let group = Arc::new(build_group(&GroupSpec::Dihedral(6)).unwrap());
        let n = group.order();
        let r = (0..n)
            .find(|&x| group.element_order(x) == 6)
            .expect("rotation of order 6");
        let r2 = group.op(r, r);
        let r4 = group.op(r2, r2);
        let r5 = group.op(r4, r);
        let powers = [0, r, r2, group.op(r2, r), r4, r5];
        let s = (0..n)
            .find(|&x| group.element_order(x) == 2 && !powers.contains(&x))
            .expect("reflection");
        let gens = GeneratorSet::new(&group, &[r, r2, r4, r5, s]).unwrap();
        let cg = CayleyGraph::new(group.clone(), gens);
        let a = build_absorber(&cg, 0, &params(0.05, 0.05), &VertexSet::new(n)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(0xd1ed);
        for _ in 0..100 {
            let g = rng.gen_range(0..n);
            let moved = translate_absorber(&cg, &a, g).unwrap();
            assert_eq!(moved.target(), group.op(g, a.target()));
        }
    }

    #[test]
    fn splice_shortens_long_cycle() {
        let g = Graph::complete(15);
        let cycle: Vec<usize> = (0..15).collect();
        let short = shorten_odd_cycle(&g, &cycle, &params(0.1, 0.1), 5).unwrap();
        assert_eq!(short, vec![0, 1, 2]);
    }

    #[test]
    fn splice_even_walk_branch() {
        // 9-cycle plus the chord 0-3: the shortcut has even length relative
        // to the removed arc, so the odd cycle is cut out of the walk.
        let mut edges: Vec<(usize, usize)> = (0..9).map(|i| (i, (i + 1) % 9)).collect();
        edges.push((0, 3));
        let g = Graph::from_edges(9, edges);
        let cycle: Vec<usize> = (0..9).collect();
        let short = shorten_odd_cycle(&g, &cycle, &params(0.1, 0.1), 7).unwrap();
        assert_eq!(short, vec![0, 3, 4, 5, 6, 7, 8]);
    }

    #[test]
    fn splice_stalls_honestly() {
        let g = Graph::cycle(5);
        let cycle: Vec<usize> = (0..5).collect();
        let err = shorten_odd_cycle(&g, &cycle, &params(0.1, 0.1), 3);
        assert!(matches!(
            err,
            Err(AbsorberError::ShorteningStalled { length: 5, cap: 3 })
        ));
    }

    #[test]
    fn short_cycle_is_left_untouched() {
        let g = Graph::cycle(5);
        let cycle: Vec<usize> = (0..5).collect();
        let same = shorten_odd_cycle(&g, &cycle, &params(0.1, 0.1), 5).unwrap();
        assert_eq!(same, cycle);
    }

    #[test]
    fn walk_extraction_cuts_repeats() {
        // Closed walk revisiting vertex 8: the odd piece is the 7-cycle.
        let walk = vec![0, 8, 2, 3, 4, 5, 6, 7, 8];
        assert_eq!(
            extract_odd_cycle_from_walk(&walk).unwrap(),
            vec![8, 2, 3, 4, 5, 6, 7]
        );
        assert_eq!(extract_odd_cycle_from_walk(&[0, 1, 2]).unwrap(), vec![0, 1, 2]);
        assert!(extract_odd_cycle_from_walk(&[0, 1, 2, 3]).is_none());
    }

    #[test]
    fn single_sample_survives_without_collisions() {
        let cg = z_circulant(97, &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
        let a = build_absorber(&cg, 0, &params(0.01, 0.02), &VertexSet::new(97)).unwrap();
        let template = TranslateTemplate::from_absorber(&a);
        let family =
            sample_translates(&cg, &template, 1, 0x5eed, &VertexSet::new(97)).unwrap();
        assert_eq!(family.surviving(), &[0]);
        assert!(family.drops().is_empty());
        assert_eq!(family.footprint_union().len(), template.footprint.len());
    }

    #[test]
    fn greedy_pass_keeps_disjoint_translates_and_witnesses_drops() {
        let cg = z_circulant(97, &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
        let group = cg.group().clone();
        let a = build_absorber(&cg, 0, &params(0.01, 0.02), &VertexSet::new(97)).unwrap();
        let template = TranslateTemplate::from_absorber(&a);
        let protected = VertexSet::from_iter(97, [50, 51]);
        let family = sample_translates(&cg, &template, 60, 0xfa111e5, &protected).unwrap();

        assert_eq!(
            family.surviving().len() + family.drops().len(),
            family.elements().len()
        );
        let footprint_of = |idx: usize| -> VertexSet {
            let g = family.elements()[idx];
            VertexSet::from_iter(
                97,
                template.footprint.iter().map(|&f| group.op(g, f)),
            )
        };
        let survivors: Vec<VertexSet> = family.surviving().iter().map(|&i| footprint_of(i)).collect();
        for (i, a_set) in survivors.iter().enumerate() {
            assert!(a_set.is_disjoint(&protected));
            for b_set in &survivors[i + 1..] {
                assert!(a_set.is_disjoint(b_set));
            }
        }
        for &(idx, reason) in family.drops() {
            let ts = footprint_of(idx);
            match reason {
                DropReason::Protected { vertex } => {
                    assert!(ts.contains(vertex) && protected.contains(vertex));
                }
                DropReason::Overlap { vertex, with } => {
                    assert!(ts.contains(vertex));
                    assert!(family.surviving().contains(&with));
                    assert!(with < idx);
                    assert!(footprint_of(with).contains(vertex));
                }
            }
        }
        assert_eq!(
            family.footprint_union().len(),
            family.surviving().len() * template.footprint.len()
        );
    }

    #[test]
    fn concentration_report_stays_in_band() {
        let offsets: Vec<u64> = (1..=50).collect();
        let cg = z_circulant(500, &offsets);
        let template = TranslateTemplate::new((0..10).collect(), 0, 1, 2).unwrap();
        let m = default_translate_count(500);
        assert_eq!(m, 42);
        let family =
            sample_translates(&cg, &template, m, 0xc0ffee, &VertexSet::new(500)).unwrap();
        let report = family.report();
        assert_eq!(report.sample_count, 42);
        assert!((report.anchors.center - 8.4).abs() < 1e-9);
        assert!((report.footprint.center - 84.0).abs() < 1e-9);
        for stats in [
            &report.anchors,
            &report.entries,
            &report.exits,
            &report.footprint,
        ] {
            assert_eq!(stats.violations, 0);
            assert!(stats.max_deviation <= stats.band);
        }
    }

    #[test]
    fn chain_digraph_matches_host_adjacency() {
        let cg = z_circulant(97, &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
        let a = build_absorber(&cg, 0, &params(0.01, 0.02), &VertexSet::new(97)).unwrap();
        let template = TranslateTemplate::from_absorber(&a);
        let family =
            sample_translates(&cg, &template, 40, 0xcab1e, &VertexSet::new(97)).unwrap();
        let chain = family.chain_digraph(&cg);
        let lms = family.landmarks();
        assert_eq!(chain.order(), lms.len());
        for i in 0..lms.len() {
            for j in 0..lms.len() {
                let expect = i != j && cg.has_edge(lms[i].exit, lms[j].entry);
                assert_eq!(chain.has_arc(i, j), expect, "arc {i}->{j}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn odd_cycle_matches_walk_oracle(
            n in 4usize..12,
            bits in proptest::collection::vec(any::<bool>(), 66),
        ) {
            let mut edges = Vec::new();
            let mut k = 0;
            for u in 0..n {
                for w in (u + 1)..n {
                    if bits[k] {
                        edges.push((u, w));
                    }
                    k += 1;
                }
            }
            let g = Graph::from_edges(n, edges);
            let expected = odd_girth_by_walk_counts(&g);
            match (expected, shortest_odd_cycle(&g)) {
                (None, None) => {}
                (Some(len), Some(cycle)) => {
                    prop_assert_eq!(cycle.len(), len);
                    verify_odd_cycle(&g, &cycle).unwrap();
                }
                other => prop_assert!(false, "disagreement: {:?}", other),
            }
        }
    }
}
