//! Cayley graphs and their coset structure.
//!
//! `Cay(G, S)` has the group elements as vertices and an edge `{g, gs}` for
//! every generator `s`; a symmetric identity-free `S` makes this a simple
//! `|S|`-regular graph.  Adjacency rows are materialized as bitsets up to a
//! size threshold; beyond it neighborhoods are computed from group
//! operations on demand, so million-element cyclic groups stay cheap.
//!
//! The coset views are what the decomposition pipeline consumes: the induced
//! graph on a right coset `Hr` is itself a Cayley graph of `H` under the
//! conjugated generator set `rSr^{-1} ∩ H` (exact for every subgroup, normal
//! or not), and the auxiliary graph on cosets records which generator first
//! links each pair of cosets.

use crate::bits::VertexSet;
use crate::graph::{two_coloring, Graph, HostGraph};
use crate::group::{CosetPartition, GeneratorSet, Group, GroupError, Subgroup};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Largest order for which adjacency bitset rows are precomputed
/// (`n^2 / 8` bytes; 16384 vertices cost 32 MiB).
pub const ADJACENCY_ROWS_MAX: usize = 16_384;

/// A Cayley graph `Cay(G, S)`.
#[derive(Clone)]
pub struct CayleyGraph {
    group: Arc<Group>,
    gens: GeneratorSet,
    rows: Option<Vec<VertexSet>>,
}

impl CayleyGraph {
    /// Builds the graph, materializing adjacency rows when the order is at
    /// most [`ADJACENCY_ROWS_MAX`].
    pub fn new(group: Arc<Group>, gens: GeneratorSet) -> CayleyGraph {
        let rows = (group.order() <= ADJACENCY_ROWS_MAX).then(|| {
            (0..group.order())
                .map(|v| {
                    VertexSet::from_iter(
                        group.order(),
                        gens.elements().iter().map(|&s| group.op(v, s)),
                    )
                })
                .collect()
        });
        CayleyGraph { group, gens, rows }
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.gens
    }

    /// `|S| / |G|`.
    pub fn density(&self) -> f64 {
        self.gens.density(&self.group)
    }

    /// Common degree `|S|`.
    pub fn degree_value(&self) -> usize {
        self.gens.len()
    }

    /// True exactly when `S` generates `G`.
    pub fn is_connected_graph(&self) -> Result<bool, GroupError> {
        Ok(self
            .group
            .closure(self.gens.elements())?
            .is_whole_group(&self.group))
    }

    /// Materializes an explicit graph (for the oracle and exports).
    pub fn to_graph(&self) -> Graph {
        let n = self.group.order();
        let mut g = Graph::new(n);
        for v in 0..n {
            for &s in self.gens.elements() {
                let w = self.group.op(v, s);
                if v < w {
                    g.add_edge(v, w);
                }
            }
        }
        g
    }

    /// The bipartition from an index-2 subgroup disjoint from `S`, if one
    /// exists.  For a connected Cayley graph this is exactly the graph
    /// bipartition: the subgroup of even words `⟨{st : s,t ∈ S}⟩` has index
    /// 2 with `S` in the other coset iff the graph is bipartite.
    pub fn bipartite_structure(&self) -> Result<Option<(Subgroup, Vec<usize>)>, GroupError> {
        let s = self.gens.elements();
        if s.is_empty() {
            return Ok(None);
        }
        let mut pair_products = Vec::with_capacity(s.len() * s.len());
        for &a in s {
            for &b in s {
                pair_products.push(self.group.op(a, b));
            }
        }
        let even = self.group.closure(&pair_products)?;
        if even.index_in(&self.group) != 2 {
            return Ok(None);
        }
        if s.iter().any(|&x| even.contains(x)) {
            return Ok(None);
        }
        let other: Vec<usize> = (0..self.group.order())
            .filter(|&x| !even.contains(x))
            .collect();
        Ok(Some((even, other)))
    }
}

impl HostGraph for CayleyGraph {
    fn order(&self) -> usize {
        self.group.order()
    }

    fn degree(&self, _v: usize) -> usize {
        self.gens.len()
    }

    fn has_edge(&self, u: usize, v: usize) -> bool {
        if u == v {
            return false;
        }
        self.gens.contains(self.group.op(self.group.inv(u), v))
    }

    fn neighbors(&self, v: usize) -> Vec<usize> {
        match &self.rows {
            Some(rows) => rows[v].to_vec(),
            None => {
                let mut out: Vec<usize> = self
                    .gens
                    .elements()
                    .iter()
                    .map(|&s| self.group.op(v, s))
                    .collect();
                out.sort_unstable();
                out.dedup();
                out
            }
        }
    }

    fn count_neighbors_in(&self, v: usize, set: &VertexSet) -> usize {
        match &self.rows {
            Some(rows) => rows[v].intersection_len(set),
            None => self
                .gens
                .elements()
                .iter()
                .filter(|&&s| set.contains(self.group.op(v, s)))
                .count(),
        }
    }

    fn regularity(&self) -> Option<usize> {
        Some(self.gens.len())
    }

    fn vertex_transitive_hint(&self) -> bool {
        true
    }
}

/// The induced graph on the right coset `H·rep`, exposed as a Cayley graph
/// of `H` itself.
pub struct CosetCluster {
    /// `Cay(H, rSr^{-1} ∩ H)` with `H` relabeled to `0..|H|`.
    pub graph: CayleyGraph,
    /// Host vertex behind each cluster vertex: cluster `i` is `members[i]·rep`.
    pub host_ids: Vec<usize>,
    /// The conjugated generators as parent-group elements.
    pub conjugated_generators: Vec<usize>,
}

/// Builds the cluster view of the coset `sub·rep`.  The map `h·rep ↦ h`
/// carries induced host edges to `Cay(H, Ŝ)` edges exactly, where
/// `Ŝ = rep·S·rep^{-1} ∩ H`.
pub fn coset_cluster(
    group: &Arc<Group>,
    gens: &GeneratorSet,
    sub: &Subgroup,
    rep: usize,
) -> Result<CosetCluster, GroupError> {
    let (h_group, members) = group.subgroup_group(sub);
    let mut local = vec![u32::MAX; group.order()];
    for (i, &m) in members.iter().enumerate() {
        local[m] = i as u32;
    }
    let mut conjugated: Vec<usize> = gens
        .elements()
        .iter()
        .map(|&s| group.conjugate(rep, s))
        .filter(|&c| sub.contains(c))
        .collect();
    conjugated.sort_unstable();
    conjugated.dedup();
    let local_gens: Vec<usize> = conjugated.iter().map(|&c| local[c] as usize).collect();
    let h_group = Arc::new(h_group);
    let cluster_gens = GeneratorSet::new(&h_group, &local_gens)?;
    let host_ids: Vec<usize> = members.iter().map(|&h| group.op(h, rep)).collect();
    Ok(CosetCluster {
        graph: CayleyGraph::new(h_group, cluster_gens),
        host_ids,
        conjugated_generators: conjugated,
    })
}

/// Quotient-like view of a Cayley graph on the right cosets of a subgroup:
/// cosets are the vertices, and two distinct cosets are adjacent when some
/// generator carries a member of one into the other.  Each edge remembers
/// the smallest witnessing generator.
pub struct AuxCosetGraph {
    pub graph: Graph,
    /// Smallest generator witnessing each aux edge, keyed by `(i, j)` with
    /// `i < j`.
    pub witness: BTreeMap<(usize, usize), usize>,
}

impl AuxCosetGraph {
    pub fn witness_generator(&self, i: usize, j: usize) -> Option<usize> {
        self.witness.get(&(i.min(j), i.max(j))).copied()
    }
}

/// Builds the auxiliary coset graph for a partition into right cosets.
pub fn aux_coset_graph(
    group: &Group,
    gens: &GeneratorSet,
    partition: &CosetPartition,
) -> AuxCosetGraph {
    let k = partition.count();
    let mut graph = Graph::new(k);
    let mut witness: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for i in 0..k {
        for &x in partition.coset(i) {
            for &s in gens.elements() {
                let j = partition.coset_of(group.op(x, s));
                if j != i {
                    graph.add_edge(i, j);
                    let key = (i.min(j), i.max(j));
                    witness
                        .entry(key)
                        .and_modify(|w| *w = (*w).min(s))
                        .or_insert(s);
                }
            }
        }
    }
    AuxCosetGraph { graph, witness }
}

/// All host edges realizing an aux edge with generator `s`: pairs
/// `(x, x·s)` with `x` in coset `i` and `x·s` in coset `j`.
pub fn coset_edge_pairs(
    group: &Group,
    partition: &CosetPartition,
    i: usize,
    j: usize,
    s: usize,
) -> Vec<(usize, usize)> {
    partition
        .coset(i)
        .iter()
        .map(|&x| (x, group.op(x, s)))
        .filter(|&(_, y)| partition.coset_of(y) == j)
        .collect()
}

/// Convenience: the bipartition of a connected Cayley graph via BFS
/// 2-coloring, with the identity's class first.
pub fn cayley_bipartition(
    cay: &CayleyGraph,
) -> Result<(VertexSet, VertexSet), (usize, usize)> {
    two_coloring(cay)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{is_connected, Navigable};
    use crate::group::{build_group, right_cosets, GroupSpec};

    fn cay(spec: &GroupSpec, gens: &[usize]) -> CayleyGraph {
        let g = Arc::new(build_group(spec).unwrap());
        let s = GeneratorSet::new(&g, gens).unwrap();
        CayleyGraph::new(g, s)
    }

    #[test]
    fn cyclic_pm_one_is_the_cycle() {
        let c = cay(&GroupSpec::Cyclic(8), &[1, 7]);
        assert_eq!(c.to_graph().edge_list(), Graph::cycle(8).edge_list());
        assert_eq!(c.regularity(), Some(2));
        assert!(c.vertex_transitive_hint());
        assert!(c.is_connected_graph().unwrap());
    }

    #[test]
    fn circulant_neighborhoods() {
        let c = cay(&GroupSpec::Cyclic(7), &[1, 2, 5, 6]);
        assert_eq!(c.neighbors(0), vec![1, 2, 5, 6]);
        assert!(c.has_edge(0, 2));
        assert!(!c.has_edge(0, 3));
        assert!(!c.has_edge(0, 0));
        // Triangle 0-1-2.
        assert!(c.has_edge(0, 1) && c.has_edge(1, 2) && c.has_edge(0, 2));
        let set = VertexSet::from_iter(7, [1, 2, 3]);
        assert_eq!(c.count_neighbors_in(0, &set), 2);
    }

    #[test]
    fn implicit_rows_match_materialized_rows() {
        let g = Arc::new(build_group(&GroupSpec::Cyclic(40)).unwrap());
        let s = GeneratorSet::new(&g, &[1, 3, 37, 39]).unwrap();
        let with_rows = CayleyGraph::new(Arc::clone(&g), s.clone());
        let mut without_rows = CayleyGraph::new(g, s);
        without_rows.rows = None;
        for v in 0..40 {
            assert_eq!(with_rows.neighbors(v), without_rows.neighbors(v));
            let set = VertexSet::from_iter(40, (0..40).filter(|x| x % 3 == 0));
            assert_eq!(
                with_rows.count_neighbors_in(v, &set),
                without_rows.count_neighbors_in(v, &set)
            );
        }
    }

    #[test]
    fn transposition_generators_give_k33() {
        let g = Arc::new(build_group(&GroupSpec::Symmetric(3)).unwrap());
        let transpositions: Vec<usize> = (1..6).filter(|&x| g.element_order(x) == 2).collect();
        assert_eq!(transpositions.len(), 3);
        let s = GeneratorSet::new(&g, &transpositions).unwrap();
        let c = CayleyGraph::new(g, s);
        assert_eq!(c.regularity(), Some(3));
        let (a, b) = cayley_bipartition(&c).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(b.len(), 3);
        // Complete bipartite: every cross pair is an edge.
        for u in a.iter() {
            for v in b.iter() {
                assert!(c.has_edge(u, v));
            }
        }
        // The index-2 subgroup view agrees.
        let (even, other) = c.bipartite_structure().unwrap().unwrap();
        assert_eq!(even.order(), 3);
        assert_eq!(other.len(), 3);
        assert_eq!(even.member_set().to_vec(), a.to_vec());
    }

    #[test]
    fn bipartite_structure_absent_for_odd_cycle() {
        let c = cay(&GroupSpec::Cyclic(5), &[1, 4]);
        assert!(c.bipartite_structure().unwrap().is_none());
        assert!(cayley_bipartition(&c).is_err());
    }

    #[test]
    fn left_translation_carries_neighborhoods() {
        let g = Arc::new(build_group(&GroupSpec::Dihedral(5)).unwrap());
        let s = GeneratorSet::symmetrized(&g, &[1, 5]).unwrap();
        let c = CayleyGraph::new(Arc::clone(&g), s);
        for t in [2usize, 7] {
            for x in 0..g.order() {
                let mut translated: Vec<usize> =
                    c.neighbors(x).iter().map(|&w| g.op(t, w)).collect();
                translated.sort_unstable();
                assert_eq!(translated, c.neighbors(g.op(t, x)));
            }
        }
    }

    #[test]
    fn coset_cluster_is_exactly_the_induced_graph() {
        // Across abelian, non-normal and normal subgroup cases alike, the
        // cluster graph must replicate induced host adjacency.
        let cases: Vec<(GroupSpec, Vec<usize>, Vec<usize>)> = vec![
            (GroupSpec::Cyclic(12), vec![1, 3, 9, 11], vec![3]),
            (GroupSpec::Dihedral(4), vec![1, 7, 4], vec![4, 1]),
            (GroupSpec::Quaternion, vec![2, 3, 4, 5], vec![2]),
            (GroupSpec::Symmetric(4), vec![1, 2, 5, 9], vec![9, 2]),
        ];
        for (spec, gen_seed, sub_seed) in cases {
            let g = Arc::new(build_group(&spec).unwrap());
            let s = GeneratorSet::symmetrized(&g, &gen_seed).unwrap();
            let c = CayleyGraph::new(Arc::clone(&g), s.clone());
            let sub = g.closure(&sub_seed).unwrap();
            let partition = right_cosets(&g, &sub);
            for idx in 0..partition.count() {
                let rep = partition.representative(idx);
                let cluster = coset_cluster(&g, &s, &sub, rep).unwrap();
                let m = cluster.host_ids.len();
                assert_eq!(m, sub.order());
                // Host ids enumerate the coset exactly.
                let mut sorted = cluster.host_ids.clone();
                sorted.sort_unstable();
                assert_eq!(sorted, partition.coset(idx));
                for a in 0..m {
                    for b in 0..m {
                        assert_eq!(
                            cluster.graph.has_edge(a, b),
                            c.has_edge(cluster.host_ids[a], cluster.host_ids[b]),
                            "{spec:?} coset {idx} pair ({a},{b})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn abelian_cluster_generators_are_intersection() {
        let g = Arc::new(build_group(&GroupSpec::Cyclic(12)).unwrap());
        let s = GeneratorSet::new(&g, &[1, 3, 9, 11]).unwrap();
        let sub = g.closure(&[3]).unwrap();
        let cluster = coset_cluster(&g, &s, &sub, 1).unwrap();
        // In an abelian group conjugation is trivial: Ŝ = S ∩ H.
        assert_eq!(cluster.conjugated_generators, vec![3, 9]);
        // Cay(Z_4, ±1) is the 4-cycle.
        assert_eq!(cluster.graph.to_graph().edge_list(), Graph::cycle(4).edge_list());
        assert_eq!(cluster.host_ids, vec![1, 4, 7, 10]);
    }

    #[test]
    fn color_class_cluster_is_edgeless() {
        // In the K_{3,3} picture the cluster on a color class has no edges:
        // conjugates of transpositions are transpositions, never in A_3.
        let g = Arc::new(build_group(&GroupSpec::Symmetric(3)).unwrap());
        let transpositions: Vec<usize> = (1..6).filter(|&x| g.element_order(x) == 2).collect();
        let s = GeneratorSet::new(&g, &transpositions).unwrap();
        let a3_gen = (1..6).find(|&x| g.element_order(x) == 3).unwrap();
        let sub = g.closure(&[a3_gen]).unwrap();
        let cluster = coset_cluster(&g, &s, &sub, 0).unwrap();
        assert!(cluster.conjugated_generators.is_empty());
        assert_eq!(cluster.graph.to_graph().edge_count(), 0);
    }

    #[test]
    fn aux_coset_graph_triangle_with_minimal_witnesses() {
        let g = Arc::new(build_group(&GroupSpec::Cyclic(6)).unwrap());
        let s = GeneratorSet::new(&g, &[2, 4]).unwrap();
        let sub = g.closure(&[3]).unwrap();
        let partition = right_cosets(&g, &sub);
        assert_eq!(partition.count(), 3);
        let aux = aux_coset_graph(&g, &s, &partition);
        assert_eq!(aux.graph.edge_count(), 3);
        // 0*2 = 2 lands in coset {2,5}; 1*4 = 5 also does; the minimal
        // witness for cosets ({0,3},{2,5}) is generator 2.
        assert_eq!(aux.witness_generator(0, 2), Some(2));
        assert_eq!(aux.witness_generator(0, 1), Some(2));
        assert_eq!(aux.witness_generator(1, 2), Some(2));
    }

    #[test]
    fn aux_connectivity_is_necessary_not_sufficient() {
        // With S = {2,4} in Z_6 the Cayley graph splits into two triangles,
        // yet the aux graph over the cosets of {0,3} is a connected
        // triangle: aux connectivity cannot certify graph connectivity.
        let c = cay(&GroupSpec::Cyclic(6), &[2, 4]);
        assert!(!c.is_connected_graph().unwrap());
        assert!(!is_connected(&c.to_graph()));
        let sub = c.group().closure(&[3]).unwrap();
        let partition = right_cosets(c.group(), &sub);
        let aux = aux_coset_graph(c.group(), c.generators(), &partition);
        assert!(is_connected(&aux.graph));

        // The true direction: a connected Cayley graph always yields a
        // connected aux graph (neighbors project onto aux edges or stay
        // inside a coset).
        let connected = cay(&GroupSpec::Cyclic(6), &[1, 5]);
        let aux2 = aux_coset_graph(connected.group(), connected.generators(), &partition);
        assert!(is_connected(&aux2.graph));
    }

    #[test]
    fn coset_edge_pairs_form_a_matching_for_fixed_generator() {
        let g = Arc::new(build_group(&GroupSpec::Cyclic(8)).unwrap());
        let s = GeneratorSet::new(&g, &[1, 7]).unwrap();
        let sub = g.closure(&[4]).unwrap();
        let partition = right_cosets(&g, &sub);
        let aux = aux_coset_graph(&g, &s, &partition);
        let (i, j) = (0, 1);
        let w = aux.witness_generator(i, j).unwrap();
        let pairs = coset_edge_pairs(&g, &partition, i, j, w);
        assert_eq!(pairs.len(), partition.coset(i).len());
        // Distinct sources, distinct targets: x ↦ x·s is injective.
        let mut sources: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let mut targets: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        sources.dedup();
        targets.sort_unstable();
        targets.dedup();
        assert_eq!(sources.len(), pairs.len());
        assert_eq!(targets.len(), pairs.len());
        for &(x, y) in &pairs {
            assert!(partition.coset_of(x) == i && partition.coset_of(y) == j);
        }
    }

    #[test]
    fn degree_and_density() {
        let c = cay(&GroupSpec::Cyclic(10), &[1, 3, 7, 9]);
        assert_eq!(c.degree_value(), 4);
        assert_eq!(HostGraph::degree(&c, 5), 4);
        assert_eq!(Navigable::out_degree(&c, 5), 4);
        assert!((c.density() - 0.4).abs() < 1e-12);
    }
}
