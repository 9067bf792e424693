//! Short connecting paths through a vertex pool, via layered robust
//! neighborhoods.
//!
//! The structure mirrors the greedy argument for robust expanders: grow
//! `R_1 = N(u)`, `R_{i+1} = R_i union RN_nu(R_i)` until a layer covers
//! more than `(1 - tau) n` vertices, then walk backward from `v`, each
//! step descending into a strictly earlier layer, keeping every internal
//! vertex inside the caller's pool.  Each layer must grow by at least
//! `ceil(nu n)` vertices; a layer that fails to do so is a certified
//! robust-expansion violation and is returned as such.
//!
//! Paths found this way have length at most `ceil(1/nu) + 1`.  The walk
//! uses a small backtracking budget: candidates are tried in ascending
//! vertex id, and a dead end backs up rather than failing outright.

use crate::bits::VertexSet;
use crate::expansion::{ceil_count, robust_neighborhood, COUNT_EPS};
use crate::graph::HostGraph;
use crate::witness::PathWitness;

/// Total candidate expansions allowed in one backward search.
pub const DESCENT_BUDGET: usize = 400;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum ConnectorError {
    #[error("minimum degree {min_degree} is below the required (nu + tau) n = {required}")]
    MinDegree { min_degree: usize, required: usize },
    #[error("layer {layer} stalled; its vertex set violates robust expansion")]
    Stalled { layer: usize, stalled: Vec<usize> },
    #[error("endpoints coincide: {v}")]
    SameEndpoints { v: usize },
    #[error("vertex {v} out of range for graph of order {n}")]
    OutOfRange { v: usize, n: usize },
    #[error("endpoint {v} is forbidden")]
    ForbiddenEndpoint { v: usize },
    #[error(
        "no path from {from} to {to}: {first_step_candidates} first-step candidates, \
         deepest step reached {deepest_step} (pool too thin)"
    )]
    NoPath {
        from: usize,
        to: usize,
        deepest_step: usize,
        first_step_candidates: usize,
    },
    #[error("endpoint {v} appears in more than one pair")]
    DuplicateEndpoint { v: usize },
    #[error("connection budget exceeded: {used} internal vertices used, budget {budget}")]
    BudgetExceeded { used: usize, budget: usize },
}

/// The layered reach structure from a source vertex: `R_1 = N(u)` and
/// `R_{i+1} = R_i union RN_nu(R_i)`, stored until the first layer covering
/// more than `(1 - tau) n` vertices.
#[derive(Clone, Debug)]
pub struct LayerStructure {
    pub source: usize,
    /// `layers[i]` is `R_{i+1}`; the last entry exceeds the size target.
    pub layers: Vec<VertexSet>,
}

impl LayerStructure {
    /// Number of layers `t`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// The final layer `R_t`.
    pub fn deepest(&self) -> &VertexSet {
        self.layers.last().expect("at least one layer")
    }

    /// One-based index of the first layer containing each vertex
    /// (`u32::MAX` for vertices outside `R_t`).
    fn first_layer_index(&self, n: usize) -> Vec<u32> {
        let mut idx = vec![u32::MAX; n];
        for (i, layer) in self.layers.iter().enumerate() {
            for v in layer.iter() {
                if idx[v] == u32::MAX {
                    idx[v] = (i + 1) as u32;
                }
            }
        }
        idx
    }
}

/// Grows the layer structure from `u`.  Requires minimum degree at least
/// `(nu + tau) n` so the first layer already sits inside the expansion
/// window; stalls are returned with the offending layer, which is a
/// robust-expansion counterexample.
pub fn layered_reach<G: HostGraph + ?Sized>(
    g: &G,
    u: usize,
    nu: f64,
    tau: f64,
) -> Result<LayerStructure, ConnectorError> {
    let n = g.order();
    if u >= n {
        return Err(ConnectorError::OutOfRange { v: u, n });
    }
    let required = ceil_count((nu + tau) * n as f64);
    let min_degree = g.min_degree();
    if min_degree < required {
        return Err(ConnectorError::MinDegree {
            min_degree,
            required,
        });
    }
    let target = (1.0 - tau) * n as f64 + COUNT_EPS;
    let growth = ceil_count(nu * n as f64);
    let mut layers = Vec::new();
    let mut current = VertexSet::from_iter(n, g.neighbors(u));
    loop {
        let reached = current.len() as f64 > target;
        layers.push(current.clone());
        if reached {
            return Ok(LayerStructure { source: u, layers });
        }
        let mut next = robust_neighborhood(g, &current, nu);
        next.union_with(&current);
        if next.len() < current.len() + growth {
            let layer = layers.len();
            return Err(ConnectorError::Stalled {
                layer,
                stalled: current.to_vec(),
            });
        }
        if layers.len() > n {
            // Unreachable: each layer adds at least one vertex.
            unreachable!("layer count exceeded vertex count");
        }
        current = next;
    }
}

struct Descent<'a, G: HostGraph + ?Sized> {
    g: &'a G,
    layer_of: &'a [u32],
    pool: &'a VertexSet,
    forbidden: &'a VertexSet,
    u: usize,
    v: usize,
    budget: usize,
    deepest: usize,
}

impl<'a, G: HostGraph + ?Sized> Descent<'a, G> {
    fn viable(&self, c: usize, bound: u32) -> bool {
        self.layer_of[c] <= bound
            && c != self.u
            && c != self.v
            && self.pool.contains(c)
            && !self.forbidden.contains(c)
    }

    /// Extends the partial path ending at `w` (first layer index `j`)
    /// toward `u`.  Returns true when `w` lies in `N(u)`; `picks` then
    /// holds the internals in order of selection (from the `v` side).
    fn descend(&mut self, w: usize, j: u32, picks: &mut Vec<usize>) -> bool {
        if j == 1 {
            return true;
        }
        let bound = j - 1;
        for c in self.g.neighbors(w) {
            if !self.viable(c, bound) || self.budget == 0 {
                continue;
            }
            self.budget -= 1;
            picks.push(c);
            self.deepest = self.deepest.max(picks.len());
            if self.descend(c, self.layer_of[c], picks) {
                return true;
            }
            picks.pop();
        }
        false
    }
}

/// Finds a `(u, v)`-path of length at most `ceil(1/nu) + 1` whose internal
/// vertices all lie in `pool` minus `forbidden`.  Adjacent endpoints short
/// circuit to the direct edge.
pub fn connect_avoiding<G: HostGraph + ?Sized>(
    g: &G,
    u: usize,
    v: usize,
    pool: &VertexSet,
    forbidden: &VertexSet,
    nu: f64,
    tau: f64,
) -> Result<PathWitness, ConnectorError> {
    let n = g.order();
    for &x in &[u, v] {
        if x >= n {
            return Err(ConnectorError::OutOfRange { v: x, n });
        }
        if forbidden.contains(x) {
            return Err(ConnectorError::ForbiddenEndpoint { v: x });
        }
    }
    if u == v {
        return Err(ConnectorError::SameEndpoints { v });
    }
    if g.has_edge(u, v) {
        return Ok(PathWitness::new(vec![u, v]));
    }
    let layers = layered_reach(g, u, nu, tau)?;
    let layer_of = layers.first_layer_index(n);
    let mut descent = Descent {
        g,
        layer_of: &layer_of,
        pool,
        forbidden,
        u,
        v,
        budget: DESCENT_BUDGET,
        deepest: 0,
    };
    let mut first_step_candidates = 0usize;
    let mut picks: Vec<usize> = Vec::new();
    for c in g.neighbors(v) {
        if !descent.viable(c, u32::MAX - 1) || descent.layer_of[c] == u32::MAX {
            continue;
        }
        first_step_candidates += 1;
        picks.push(c);
        descent.deepest = descent.deepest.max(1);
        if descent.descend(c, descent.layer_of[c], &mut picks) {
            let mut vertices = Vec::with_capacity(picks.len() + 2);
            vertices.push(u);
            vertices.extend(picks.iter().rev());
            vertices.push(v);
            return Ok(PathWitness::new(vertices));
        }
        picks.pop();
        if descent.budget == 0 {
            break;
        }
    }
    Err(ConnectorError::NoPath {
        from: u,
        to: v,
        deepest_step: descent.deepest,
        first_step_candidates,
    })
}

/// Connects each pair in order, forbidding all endpoints and every vertex
/// already used internally, and enforcing a total budget on internal
/// vertices.  The resulting paths are pairwise vertex-disjoint.
pub fn connect_batch<G: HostGraph + ?Sized>(
    g: &G,
    pairs: &[(usize, usize)],
    pool: &VertexSet,
    nu: f64,
    tau: f64,
    budget: usize,
) -> Result<Vec<PathWitness>, ConnectorError> {
    let n = g.order();
    let mut endpoint_set = VertexSet::new(n);
    for &(a, b) in pairs {
        for x in [a, b] {
            if x >= n {
                return Err(ConnectorError::OutOfRange { v: x, n });
            }
            if !endpoint_set.insert(x) {
                return Err(ConnectorError::DuplicateEndpoint { v: x });
            }
        }
    }
    let mut forbidden = VertexSet::new(n);
    let mut used = 0usize;
    let mut out = Vec::with_capacity(pairs.len());
    for &(a, b) in pairs {
        // Endpoints of other pairs may not appear inside a path; the
        // current endpoints are excluded by the connector itself.
        let mut blocked = forbidden.clone();
        blocked.union_with(&endpoint_set);
        blocked.remove(a);
        blocked.remove(b);
        let path = connect_avoiding(g, a, b, pool, &blocked, nu, tau)?;
        used += path.len().saturating_sub(2); // internal vertices consumed
        if used > budget {
            return Err(ConnectorError::BudgetExceeded { used, budget });
        }
        for &w in &path.vertices[1..path.vertices.len() - 1] {
            forbidden.insert(w);
        }
        out.push(path);
    }
    Ok(out)
}

/// Checks the connector contract for a returned path: endpoints, host
/// adjacency, no repeats, internal containment in `pool` minus
/// `forbidden`, and the length bound.  Returns a description of the first
/// violation, if any.
pub fn contract_violation<G: HostGraph + ?Sized>(
    g: &G,
    path: &PathWitness,
    u: usize,
    v: usize,
    pool: &VertexSet,
    forbidden: &VertexSet,
    max_len: usize,
) -> Option<String> {
    let vs = &path.vertices;
    if vs.len() < 2 || vs[0] != u || *vs.last().unwrap() != v {
        return Some(format!("endpoints are not ({u}, {v})"));
    }
    if path.edge_count() > max_len {
        return Some(format!(
            "length {} exceeds bound {max_len}",
            path.edge_count()
        ));
    }
    let mut seen = VertexSet::new(g.order());
    for &w in vs {
        if !seen.insert(w) {
            return Some(format!("vertex {w} repeats"));
        }
    }
    for pair in vs.windows(2) {
        if !g.has_edge(pair[0], pair[1]) {
            return Some(format!("({}, {}) is not an edge", pair[0], pair[1]));
        }
    }
    for &w in &vs[1..vs.len() - 1] {
        if !pool.contains(w) {
            return Some(format!("internal vertex {w} outside pool"));
        }
        if forbidden.contains(w) {
            return Some(format!("internal vertex {w} is forbidden"));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::CayleyGraph;
    use crate::graph::Graph;
    use crate::group::{build_group, GeneratorSet, GroupSpec};
    use std::sync::Arc;

    fn all_vertices(n: usize) -> VertexSet {
        VertexSet::full(n)
    }

    fn complete_minus_matching(n: usize) -> Graph {
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                if v != u + n / 2 {
                    g.add_edge(u, v);
                }
            }
        }
        g
    }

    #[test]
    fn layers_on_complete_graph() {
        let g = Graph::complete(9);
        let ls = layered_reach(&g, 0, 0.1, 0.2).unwrap();
        assert_eq!(ls.depth(), 1);
        assert_eq!(ls.deepest().len(), 8);
        assert!(!ls.deepest().contains(0));
    }

    #[test]
    fn layers_grow_past_missing_matching() {
        // K_8 minus a perfect matching: |R_1| = 6 which does not exceed
        // (1 - 0.2) * 8 = 6.4, so a second layer is needed; it reaches
        // everything.
        let g = complete_minus_matching(8);
        let ls = layered_reach(&g, 0, 0.1, 0.2).unwrap();
        assert_eq!(ls.depth(), 2);
        assert_eq!(ls.layers[0].len(), 6);
        assert_eq!(ls.layers[1].len(), 8);
        // Growth met the per-layer quota of ceil(nu n) = 1.
        assert!(ls.layers[1].len() >= ls.layers[0].len() + 1);
    }

    #[test]
    fn cycle_stalls_with_counterexample() {
        // C_8 at nu = 1/4, tau = 0: the degree precondition passes, but
        // R_1 = {1, 7} only reaches {0}, short of the quota of 2.
        let g = Graph::cycle(8);
        match layered_reach(&g, 0, 0.25, 0.0) {
            Err(ConnectorError::Stalled { layer, stalled }) => {
                assert_eq!(layer, 1);
                assert_eq!(stalled, vec![1, 7]);
            }
            other => panic!("expected stall, got {other:?}"),
        }
        // At tau = 0.25 the degree precondition itself fails.
        assert!(matches!(
            layered_reach(&g, 0, 0.3, 0.25),
            Err(ConnectorError::MinDegree {
                min_degree: 2,
                required: 5
            })
        ));
    }

    #[test]
    fn adjacent_endpoints_take_the_direct_edge() {
        let g = Graph::cycle(8);
        let empty = VertexSet::new(8);
        let p = connect_avoiding(&g, 0, 1, &empty, &empty, 0.25, 0.0).unwrap();
        assert_eq!(p.vertices, vec![0, 1]);
    }

    #[test]
    fn near_complete_graph_connects_in_two_steps() {
        let mut g = Graph::complete(10);
        let mut h = Graph::new(10);
        for (u, v) in g.edge_list() {
            if (u, v) != (0, 5) {
                h.add_edge(u, v);
            }
        }
        g = h;
        let pool = all_vertices(10);
        let none = VertexSet::new(10);
        let p = connect_avoiding(&g, 0, 5, &pool, &none, 0.1, 0.2).unwrap();
        assert_eq!(p.vertices, vec![0, 1, 5]);
        assert!(contract_violation(&g, &p, 0, 5, &pool, &none, 11).is_none());
    }

    #[test]
    fn forbidden_vertices_are_avoided() {
        let mut g = Graph::complete(10);
        let mut h = Graph::new(10);
        for (u, v) in g.edge_list() {
            if (u, v) != (0, 5) {
                h.add_edge(u, v);
            }
        }
        g = h;
        let pool = all_vertices(10);
        let forbidden = VertexSet::from_iter(10, [1, 2, 3]);
        let p = connect_avoiding(&g, 0, 5, &pool, &forbidden, 0.1, 0.2).unwrap();
        assert_eq!(p.vertices, vec![0, 4, 5]);
    }

    #[test]
    fn empty_pool_fails_structurally() {
        let mut g = Graph::complete(6);
        let mut h = Graph::new(6);
        for (u, v) in g.edge_list() {
            if (u, v) != (0, 3) {
                h.add_edge(u, v);
            }
        }
        g = h;
        let empty = VertexSet::new(6);
        match connect_avoiding(&g, 0, 3, &empty, &empty, 0.1, 0.2) {
            Err(ConnectorError::NoPath {
                from: 0,
                to: 3,
                first_step_candidates: 0,
                ..
            }) => {}
            other => panic!("expected NoPath, got {other:?}"),
        }
    }

    #[test]
    fn endpoint_validation() {
        let g = Graph::complete(5);
        let pool = all_vertices(5);
        let mut forbidden = VertexSet::new(5);
        forbidden.insert(2);
        assert!(matches!(
            connect_avoiding(&g, 2, 4, &pool, &forbidden, 0.1, 0.2),
            Err(ConnectorError::ForbiddenEndpoint { v: 2 })
        ));
        assert!(matches!(
            connect_avoiding(&g, 3, 3, &pool, &VertexSet::new(5), 0.1, 0.2),
            Err(ConnectorError::SameEndpoints { v: 3 })
        ));
        assert!(matches!(
            connect_avoiding(&g, 0, 9, &pool, &VertexSet::new(5), 0.1, 0.2),
            Err(ConnectorError::OutOfRange { v: 9, n: 5 })
        ));
    }

    #[test]
    fn cayley_instance_respects_pool_and_length() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let group = Arc::new(build_group(&GroupSpec::Cyclic(29)).unwrap());
        let elems: Vec<usize> = (1..=8).flat_map(|k| [k, 29 - k]).collect();
        let gens = GeneratorSet::new(&group, &elems).unwrap();
        let cay = CayleyGraph::new(group, gens);
        let sigma = cay.density();
        let zeta = sigma.powi(3) / 2000.0;
        let tau = 0.25;
        let nu = crate::expansion::implied_robustness(zeta, tau);
        let max_len = ceil_count(1.0 / nu) + 1;

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut ids: Vec<usize> = (0..29).collect();
        ids.shuffle(&mut rng);
        let pool = VertexSet::from_iter(29, ids[..20].iter().copied());
        let forbidden = VertexSet::from_iter(
            29,
            ids[20..23].iter().copied().filter(|&x| x != 3 && x != 17),
        );
        let p = connect_avoiding(&cay, 3, 17, &pool, &forbidden, nu, tau).unwrap();
        assert!(
            contract_violation(&cay, &p, 3, 17, &pool, &forbidden, max_len).is_none(),
            "{p:?}"
        );
    }

    #[test]
    fn batch_produces_disjoint_paths() {
        let mut g = Graph::new(12);
        let skip = [(0usize, 6usize), (1, 7), (2, 8)];
        for u in 0..12 {
            for v in u + 1..12 {
                if !skip.contains(&(u, v)) {
                    g.add_edge(u, v);
                }
            }
        }
        let pool = all_vertices(12);
        let paths = connect_batch(&g, &skip, &pool, 0.1, 0.2, 10).unwrap();
        assert_eq!(paths.len(), 3);
        assert_eq!(paths[0].vertices, vec![0, 3, 6]);
        assert_eq!(paths[1].vertices, vec![1, 4, 7]);
        assert_eq!(paths[2].vertices, vec![2, 5, 8]);
    }

    #[test]
    fn batch_budget_and_duplicates() {
        let mut g = Graph::complete(8);
        let mut h = Graph::new(8);
        for (u, v) in g.edge_list() {
            if (u, v) != (0, 4) {
                h.add_edge(u, v);
            }
        }
        g = h;
        let pool = all_vertices(8);
        // An adjacent pair costs one edge and no internals: fine at any
        // budget including the path edge count itself.
        let ok = connect_batch(&g, &[(1, 5)], &pool, 0.1, 0.2, 0).unwrap();
        assert_eq!(ok[0].vertices, vec![1, 5]);
        // A non-adjacent pair consumes one internal vertex: budget 0
        // fails.
        assert!(matches!(
            connect_batch(&g, &[(0, 4)], &pool, 0.1, 0.2, 0),
            Err(ConnectorError::BudgetExceeded { used: 1, budget: 0 })
        ));
        assert!(matches!(
            connect_batch(&g, &[(0, 4), (4, 7)], &pool, 0.1, 0.2, 10),
            Err(ConnectorError::DuplicateEndpoint { v: 4 })
        ));
    }
}
