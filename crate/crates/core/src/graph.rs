//! Undirected graphs, digraphs and the traversal traits shared by the
//! expansion, connector and assembly machinery.
//!
//! Adjacency is stored as one [`VertexSet`] row per vertex, so neighborhood
//! intersections (the hot operation behind robust neighborhoods and cut
//! enumeration) are word-parallel.  Algorithms that only need neighbor
//! iteration are written against [`HostGraph`] / [`Navigable`] so they run
//! unchanged on explicit graphs, implicit Cayley graphs and digraphs.

use crate::bits::VertexSet;
use serde::{Deserialize, Serialize};

/// Read-only view of an undirected graph.
pub trait HostGraph {
    fn order(&self) -> usize;
    fn degree(&self, v: usize) -> usize;
    fn has_edge(&self, u: usize, v: usize) -> bool;
    /// Neighbors of `v` in ascending order.
    fn neighbors(&self, v: usize) -> Vec<usize>;

    /// `|N(v) ∩ set|`.  Implementations with bitset rows override this with a
    /// word-parallel count.
    fn count_neighbors_in(&self, v: usize, set: &VertexSet) -> usize {
        self.neighbors(v).iter().filter(|&&w| set.contains(w)).count()
    }

    fn min_degree(&self) -> usize {
        (0..self.order()).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    fn max_degree(&self) -> usize {
        (0..self.order()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// Common degree of all vertices, if the graph is regular.
    fn regularity(&self) -> Option<usize> {
        let n = self.order();
        if n == 0 {
            return Some(0);
        }
        let d = self.degree(0);
        (1..n).all(|v| self.degree(v) == d).then_some(d)
    }

    /// True when the implementation guarantees a vertex-transitive graph, in
    /// which case per-vertex invariants may be checked at a single vertex.
    fn vertex_transitive_hint(&self) -> bool {
        false
    }
}

/// Read-only view of a digraph.  Undirected graphs implement this with
/// `succ = pred = neighbors`, so path machinery written against `Navigable`
/// serves both settings.
pub trait Navigable {
    /// Number of vertices (named apart from [`HostGraph::order`] so types
    /// implementing both stay unambiguous).
    fn vertex_count(&self) -> usize;
    /// Out-neighbors in ascending order.
    fn succ(&self, v: usize) -> Vec<usize>;
    /// In-neighbors in ascending order.
    fn pred(&self, v: usize) -> Vec<usize>;
    fn has_arc(&self, u: usize, v: usize) -> bool;
    fn out_degree(&self, v: usize) -> usize;
    fn in_degree(&self, v: usize) -> usize;

    /// `|pred(v) ∩ set|`: how many arcs enter `v` from `set`.
    fn count_pred_in(&self, v: usize, set: &VertexSet) -> usize {
        self.pred(v).iter().filter(|&&w| set.contains(w)).count()
    }

    fn min_semidegree(&self) -> usize {
        (0..self.vertex_count())
            .map(|v| self.out_degree(v).min(self.in_degree(v)))
            .min()
            .unwrap_or(0)
    }
}

impl<G: HostGraph> Navigable for G {
    fn vertex_count(&self) -> usize {
        HostGraph::order(self)
    }
    fn succ(&self, v: usize) -> Vec<usize> {
        self.neighbors(v)
    }
    fn pred(&self, v: usize) -> Vec<usize> {
        self.neighbors(v)
    }
    fn has_arc(&self, u: usize, v: usize) -> bool {
        self.has_edge(u, v)
    }
    fn out_degree(&self, v: usize) -> usize {
        self.degree(v)
    }
    fn in_degree(&self, v: usize) -> usize {
        self.degree(v)
    }
    fn count_pred_in(&self, v: usize, set: &VertexSet) -> usize {
        self.count_neighbors_in(v, set)
    }
}

/// Simple undirected graph with bitset adjacency rows.
#[derive(Clone)]
pub struct Graph {
    n: usize,
    rows: Vec<VertexSet>,
    edges: usize,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            n,
            rows: (0..n).map(|_| VertexSet::new(n)).collect(),
            edges: 0,
        }
    }

    /// Adds the edge `{u, v}`; ignores duplicates.  Panics on loops.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert!(u != v, "loops are not supported");
        if self.rows[u].insert(v) {
            self.rows[v].insert(u);
            self.edges += 1;
        }
    }

    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(n: usize, edges: I) -> Self {
        let mut g = Graph::new(n);
        for (u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v);
            }
        }
        g
    }

    /// Circulant graph on `Z_n` with connection offsets `offsets` (taken
    /// symmetrically, so `[1]` yields the cycle `C_n`).
    pub fn circulant(n: usize, offsets: &[usize]) -> Self {
        let mut g = Graph::new(n);
        for v in 0..n {
            for &d in offsets {
                let d = d % n;
                if d != 0 {
                    g.add_edge(v, (v + d) % n);
                }
            }
        }
        g
    }

    pub fn cycle(n: usize) -> Self {
        Graph::circulant(n, &[1])
    }

    /// Balanced bipartite circulant: parts `{0..m}` and `{m..2m}`, with
    /// `i ~ m + ((i + d) mod m)` for each offset `d`.
    pub fn bipartite_circulant(m: usize, offsets: &[usize]) -> Self {
        let mut g = Graph::new(2 * m);
        for i in 0..m {
            for &d in offsets {
                g.add_edge(i, m + (i + d) % m);
            }
        }
        g
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn neighbor_row(&self, v: usize) -> &VertexSet {
        &self.rows[v]
    }

    /// Number of edges with one endpoint in `x` and the other outside.
    pub fn cut_size(&self, x: &VertexSet) -> usize {
        let mut crossing = 0;
        for v in x.iter() {
            crossing += self.degree(v) - self.rows[v].intersection_len(x);
        }
        crossing
    }

    /// Induced subgraph on `verts` (deduplicated, ascending).  Returns the
    /// subgraph together with the original id of each new vertex.
    pub fn induced(&self, verts: &VertexSet) -> (Graph, Vec<usize>) {
        let ids = verts.to_vec();
        let mut index = vec![usize::MAX; self.n];
        for (i, &v) in ids.iter().enumerate() {
            index[v] = i;
        }
        let mut g = Graph::new(ids.len());
        for (i, &v) in ids.iter().enumerate() {
            for w in self.rows[v].iter() {
                if w > v && index[w] != usize::MAX {
                    g.add_edge(i, index[w]);
                }
            }
        }
        (g, ids)
    }

    /// Edges as sorted `(u, v)` pairs with `u < v`.
    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edges);
        for u in 0..self.n {
            for v in self.rows[u].iter() {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Plain-text export: one `u v` line per edge.
    pub fn to_edge_list_text(&self) -> String {
        let mut s = String::new();
        for (u, v) in self.edge_list() {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.n,
            adj: (0..self.n).map(|v| self.neighbors(v)).collect(),
        }
    }
}

impl HostGraph for Graph {
    fn order(&self) -> usize {
        self.n
    }
    fn degree(&self, v: usize) -> usize {
        self.rows[v].len()
    }
    fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u].contains(v)
    }
    fn neighbors(&self, v: usize) -> Vec<usize> {
        self.rows[v].to_vec()
    }
    fn count_neighbors_in(&self, v: usize, set: &VertexSet) -> usize {
        self.rows[v].intersection_len(set)
    }
}

/// JSON adjacency form of an undirected graph.
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct GraphJson {
    pub n: usize,
    pub adj: Vec<Vec<usize>>,
}

impl GraphJson {
    pub fn to_graph(&self) -> Result<Graph, String> {
        if self.adj.len() != self.n {
            return Err(format!(
                "adjacency has {} rows for {} vertices",
                self.adj.len(),
                self.n
            ));
        }
        let mut g = Graph::new(self.n);
        for (u, row) in self.adj.iter().enumerate() {
            for &v in row {
                if v >= self.n {
                    return Err(format!("vertex {v} out of range 0..{}", self.n));
                }
                if v == u {
                    return Err(format!("loop at vertex {u}"));
                }
                g.add_edge(u, v);
            }
        }
        for (u, row) in self.adj.iter().enumerate() {
            for &v in row {
                if !self.adj[v].contains(&u) {
                    return Err(format!("edge {u}-{v} is not symmetric"));
                }
            }
        }
        Ok(g)
    }
}

/// Simple digraph (no loops, no parallel arcs) with bitset rows in both
/// directions.
#[derive(Clone)]
pub struct Digraph {
    n: usize,
    out_rows: Vec<VertexSet>,
    in_rows: Vec<VertexSet>,
    arcs: usize,
}

impl Digraph {
    pub fn new(n: usize) -> Self {
        Digraph {
            n,
            out_rows: (0..n).map(|_| VertexSet::new(n)).collect(),
            in_rows: (0..n).map(|_| VertexSet::new(n)).collect(),
            arcs: 0,
        }
    }

    /// Adds the arc `u → v`; ignores duplicates.  Panics on loops.
    pub fn add_arc(&mut self, u: usize, v: usize) {
        assert!(u != v, "loops are not supported");
        if self.out_rows[u].insert(v) {
            self.in_rows[v].insert(u);
            self.arcs += 1;
        }
    }

    pub fn remove_arc(&mut self, u: usize, v: usize) {
        if self.out_rows[u].remove(v) {
            self.in_rows[v].remove(u);
            self.arcs -= 1;
        }
    }

    /// Views an undirected graph as a digraph with both orientations of
    /// every edge.
    pub fn doubled(g: &Graph) -> Self {
        let mut d = Digraph::new(g.order());
        for (u, v) in g.edge_list() {
            d.add_arc(u, v);
            d.add_arc(v, u);
        }
        d
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn arc_count(&self) -> usize {
        self.arcs
    }

    pub fn out_row(&self, v: usize) -> &VertexSet {
        &self.out_rows[v]
    }

    pub fn in_row(&self, v: usize) -> &VertexSet {
        &self.in_rows[v]
    }

    /// Induced subdigraph on `verts`; returns it with the original ids.
    pub fn induced(&self, verts: &VertexSet) -> (Digraph, Vec<usize>) {
        let ids = verts.to_vec();
        let mut index = vec![usize::MAX; self.n];
        for (i, &v) in ids.iter().enumerate() {
            index[v] = i;
        }
        let mut d = Digraph::new(ids.len());
        for (i, &v) in ids.iter().enumerate() {
            for w in self.out_rows[v].iter() {
                if index[w] != usize::MAX {
                    d.add_arc(i, index[w]);
                }
            }
        }
        (d, ids)
    }

    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.arcs);
        for u in 0..self.n {
            for v in self.out_rows[u].iter() {
                out.push((u, v));
            }
        }
        out
    }

    /// Random `d`-regular simple digraph (all in- and out-degrees exactly
    /// `d`, no loops) built as a union of `d` loop-free permutations, with
    /// local swap repair to avoid parallel arcs.
    pub fn random_regular(n: usize, d: usize, rng: &mut impl rand::Rng) -> Self {
        use rand::seq::SliceRandom;
        assert!(d < n, "degree must be below the order");
        let mut dg = Digraph::new(n);
        for _ in 0..d {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(rng);
            // Repair loops and duplicate arcs by swapping targets.
            let mut attempts = 0usize;
            loop {
                let mut bad = Vec::new();
                for u in 0..n {
                    if perm[u] == u || dg.out_rows[u].contains(perm[u]) {
                        bad.push(u);
                    }
                }
                if bad.is_empty() {
                    break;
                }
                attempts += 1;
                assert!(attempts < 10_000, "regular digraph repair did not converge");
                for &u in &bad {
                    let w = rng.gen_range(0..n);
                    perm.swap(u, w);
                }
            }
            for u in 0..n {
                dg.add_arc(u, perm[u]);
            }
        }
        dg
    }
}

impl Navigable for Digraph {
    fn vertex_count(&self) -> usize {
        self.n
    }
    fn succ(&self, v: usize) -> Vec<usize> {
        self.out_rows[v].to_vec()
    }
    fn pred(&self, v: usize) -> Vec<usize> {
        self.in_rows[v].to_vec()
    }
    fn has_arc(&self, u: usize, v: usize) -> bool {
        self.out_rows[u].contains(v)
    }
    fn out_degree(&self, v: usize) -> usize {
        self.out_rows[v].len()
    }
    fn in_degree(&self, v: usize) -> usize {
        self.in_rows[v].len()
    }
    fn count_pred_in(&self, v: usize, set: &VertexSet) -> usize {
        self.in_rows[v].intersection_len(set)
    }
}

/// BFS distances from `root`; `None` marks unreachable vertices.
pub fn bfs_distances<G: HostGraph + ?Sized>(g: &G, root: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; g.order()];
    dist[root] = Some(0);
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v].unwrap();
        for w in g.neighbors(v) {
            if dist[w].is_none() {
                dist[w] = Some(dv + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

pub fn is_connected<G: HostGraph + ?Sized>(g: &G) -> bool {
    let n = g.order();
    n <= 1 || bfs_distances(g, 0).iter().all(|d| d.is_some())
}

/// Proper 2-coloring from BFS layers.  Returns the color classes, or a
/// monochromatic edge when the graph is not bipartite.  Requires a connected
/// graph for a canonical answer; disconnected graphs are colored
/// per-component with vertex 0's component first.
pub fn two_coloring<G: HostGraph + ?Sized>(g: &G) -> Result<(VertexSet, VertexSet), (usize, usize)> {
    let n = g.order();
    let mut color = vec![u8::MAX; n];
    let mut parts = (VertexSet::new(n), VertexSet::new(n));
    for root in 0..n {
        if color[root] != u8::MAX {
            continue;
        }
        color[root] = 0;
        parts.0.insert(root);
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for w in g.neighbors(v) {
                if color[w] == u8::MAX {
                    color[w] = 1 - color[v];
                    if color[w] == 0 {
                        parts.0.insert(w);
                    } else {
                        parts.1.insert(w);
                    }
                    queue.push_back(w);
                } else if color[w] == color[v] {
                    return Err((v.min(w), v.max(w)));
                }
            }
        }
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_basics() {
        let g = Graph::cycle(8);
        assert_eq!(g.order(), 8);
        assert_eq!(g.edge_count(), 8);
        assert_eq!(g.regularity(), Some(2));
        assert_eq!(g.neighbors(0), vec![1, 7]);
        assert!(is_connected(&g));
    }

    #[test]
    fn complete_graph_cut() {
        let g = Graph::complete(5);
        let x = VertexSet::from_iter(5, [0, 1]);
        assert_eq!(g.cut_size(&x), 6);
    }

    #[test]
    fn induced_subgraph_keeps_ids() {
        let g = Graph::cycle(6);
        let (h, ids) = g.induced(&VertexSet::from_iter(6, [0, 1, 2, 4]));
        assert_eq!(ids, vec![0, 1, 2, 4]);
        assert_eq!(h.edge_count(), 2); // 0-1 and 1-2 survive
        assert!(h.has_edge(0, 1) && h.has_edge(1, 2));
    }

    #[test]
    fn two_coloring_even_cycle() {
        let g = Graph::cycle(6);
        let (a, b) = two_coloring(&g).unwrap();
        assert_eq!(a.to_vec(), vec![0, 2, 4]);
        assert_eq!(b.to_vec(), vec![1, 3, 5]);
    }

    #[test]
    fn two_coloring_odd_cycle_fails() {
        let g = Graph::cycle(5);
        assert!(two_coloring(&g).is_err());
    }

    #[test]
    fn doubled_digraph() {
        let d = Digraph::doubled(&Graph::cycle(4));
        assert_eq!(d.arc_count(), 8);
        assert_eq!(d.succ(0), vec![1, 3]);
        assert_eq!(d.pred(0), vec![1, 3]);
    }

    #[test]
    fn random_regular_digraph_is_regular() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let d = Digraph::random_regular(50, 6, &mut rng);
        for v in 0..50 {
            assert_eq!(d.out_degree(v), 6);
            assert_eq!(d.in_degree(v), 6);
            assert!(!d.has_arc(v, v));
        }
    }

    #[test]
    fn graph_json_roundtrip_and_validation() {
        let g = Graph::cycle(5);
        let js = serde_json::to_string(&g.to_json()).unwrap();
        let back: GraphJson = serde_json::from_str(&js).unwrap();
        let h = back.to_graph().unwrap();
        assert_eq!(h.edge_list(), g.edge_list());

        let bad = GraphJson {
            n: 2,
            adj: vec![vec![1], vec![]],
        };
        assert!(bad.to_graph().is_err());
    }

    #[test]
    fn edge_list_text_format() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]);
        assert_eq!(g.to_edge_list_text(), "0 1\n1 2\n");
    }
}
