//! End-to-end assembly: spanning linear forests with prescribed endpoints
//! and Hamilton cycles on connected Cayley graphs.
//!
//! Three layers live here.  The forest builders (`forest_nonbipartite`,
//! `forest_bipartite`) cover the host by paths joining given endpoint pairs:
//! the non-bipartite route runs the absorber-translate pipeline (gadget,
//! random translates, chain cover, residual cover, anchored connections,
//! final switch), the bipartite route contracts a perfect matching induced
//! by one generator and solves a directed path problem on the contraction.
//! The skeleton layer (`build_skeleton`, `skeleton_hamilton`) splices
//! per-coset cluster cycles along a spanning tree of the coset graph.
//! `hamilton_cycle` drives the whole stack and falls back to the exact
//! oracle on small instances, so every returned witness is validated and
//! every failure is a structured report rather than a wrong answer.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use thiserror::Error;

use crate::absorber::{
    build_absorber, default_translate_count, sample_translates, translate_absorber, Absorber,
    TranslateFamily, TranslateTemplate,
};
use crate::bits::VertexSet;
use crate::cayley::{aux_coset_graph, coset_cluster, coset_edge_pairs, CayleyGraph};
use crate::connector::connect_avoiding;
use crate::expansion::{
    regularity_decomposition, strong_out_expansion_probe, ExpansionParams, DEFAULT_EPSILON,
};
use crate::graph::{is_connected, two_coloring, Digraph, Graph, HostGraph, Navigable};
use crate::group::{greedy_generators, right_cosets, GeneratorSet, GroupError, Subgroup};
use crate::oracle::{
    cycle_traverses_pairs, exact_cycle_through_matching, exact_forest_with_endpoints,
    exact_hamilton_cycle, exact_hamilton_path_digraph, verify_forest_endpoints,
    verify_hamilton_cycle, OracleError, MATCHING_LIMIT, ORACLE_VERTEX_LIMIT,
};
use crate::pathcover::{path_cover_almost_regular, path_cover_undirected, AlmostRegularProfile};
use crate::witness::{HamiltonCycle, LinearForest, PathWitness, WitnessMode};

/// Instances at or below this order are handed to the exact oracle instead
/// of the constructive pipeline.
pub const DEFAULT_ORACLE_THRESHOLD: usize = 20;

/// Directed instances at or below this order use the exact subset DP instead
/// of the guided depth-first search.
pub const SEARCH_DP_MAX: usize = ORACLE_VERTEX_LIMIT;

const DEFAULT_SEARCH_RESTARTS: usize = 24;
const DEFAULT_SEARCH_BUDGET: u64 = 200_000;
/// How many starting neighbors a plain-cycle solve tries before giving up.
const CYCLE_CLOSE_ATTEMPTS: usize = 3;
const PROBE_TRIALS: usize = 64;
/// Resampling attempts for the translate-based forest route; each retry
/// doubles the translate sample budget.
const FOREST_ATTEMPTS: usize = 3;

/// Which stage of the pipeline an error came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Gadget,
    Translates,
    ChainCover,
    RestCover,
    Connect,
    Contract,
    Search,
    Decompose,
    Skeleton,
    Cluster,
    Splice,
    Validate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Gadget => "gadget",
            Stage::Translates => "translate sampling",
            Stage::ChainCover => "chain cover",
            Stage::RestCover => "residual cover",
            Stage::Connect => "connection",
            Stage::Contract => "contraction",
            Stage::Search => "directed search",
            Stage::Decompose => "decomposition",
            Stage::Skeleton => "skeleton",
            Stage::Cluster => "cluster solve",
            Stage::Splice => "splice",
            Stage::Validate => "validation",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum AssemblerError {
    #[error("vertex {v} out of range 0..{n}")]
    OutOfRange { v: usize, n: usize },
    #[error("endpoint {v} appears twice")]
    DuplicateEndpoint { v: usize },
    #[error("{got} endpoint pairs outside the supported range 1..={max}")]
    BadPairCount { got: usize, max: usize },
    #[error("host graph is not connected")]
    Disconnected,
    #[error("host graph is bipartite; use the bipartite forest routine")]
    BipartiteHost,
    #[error("host graph is not bipartite; use the non-bipartite forest routine")]
    NotBipartite,
    #[error(
        "endpoints {a} and {b} lie in the same side of the bipartition; \
         no spanning path can join them"
    )]
    SamePartEndpoints { a: usize, b: usize },
    #[error("no solution exists: {0}")]
    Infeasible(String),
    #[error("{stage} stage failed: {detail}")]
    Stage { stage: Stage, detail: String },
    #[error(
        "exhaustive search found no Hamilton cycle in a connected Cayley graph \
         of order {n}; this contradicts the expected Hamiltonicity, preserve \
         the instance"
    )]
    NotHamiltonian { n: usize },
    #[error("a cycle needs at least 3 vertices, host has {n}")]
    TooSmall { n: usize },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

fn stage_err(stage: Stage, detail: impl fmt::Display) -> AssemblerError {
    AssemblerError::Stage {
        stage,
        detail: detail.to_string(),
    }
}

/// Knobs shared by every pipeline entry point.  `for_host` fills in the
/// desk-scale schedule; large-deployment callers override the fields.
#[derive(Clone, Debug)]
pub struct PipelineParams {
    pub expansion: ExpansionParams,
    /// Number of translate samples; `None` means `ceil(n^0.6)`.
    pub translate_count: Option<usize>,
    pub seed: u64,
    /// Orders at or below this go straight to the exact oracle.
    pub oracle_threshold: usize,
    pub search_restarts: usize,
    pub search_budget: u64,
}

impl PipelineParams {
    /// Parameters scaled to the host: the connective reach grows like `d/8`
    /// capped at 4 absorbing steps, and the window/density knobs follow the
    /// edge density.
    pub fn for_host(cg: &CayleyGraph, seed: u64) -> PipelineParams {
        let n = cg.group().order().max(2);
        let d = cg.degree_value();
        let sigma = cg.density();
        let t_star = (d as f64 / 8.0).clamp(1.0, 4.0);
        PipelineParams {
            expansion: ExpansionParams {
                nu: t_star / n as f64,
                tau: sigma / 100.0,
                alpha: sigma,
            },
            translate_count: None,
            seed,
            oracle_threshold: DEFAULT_ORACLE_THRESHOLD,
            search_restarts: DEFAULT_SEARCH_RESTARTS,
            search_budget: DEFAULT_SEARCH_BUDGET,
        }
    }

    pub fn with_oracle_threshold(mut self, threshold: usize) -> PipelineParams {
        self.oracle_threshold = threshold;
        self
    }
}

/// Largest admissible number of endpoint pairs for a host of order `n`.
pub fn max_forest_pairs(n: usize) -> usize {
    ((10.0 * (n.max(2) as f64).ln()).floor() as usize).max(1)
}

fn check_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<(), AssemblerError> {
    let max = max_forest_pairs(n);
    if pairs.is_empty() || pairs.len() > max {
        return Err(AssemblerError::BadPairCount {
            got: pairs.len(),
            max,
        });
    }
    let mut seen = VertexSet::new(n);
    for &(a, b) in pairs {
        for v in [a, b] {
            if v >= n {
                return Err(AssemblerError::OutOfRange { v, n });
            }
            if seen.contains(v) {
                return Err(AssemblerError::DuplicateEndpoint { v });
            }
            seen.insert(v);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Non-bipartite forests: the absorber-translate pipeline.
// ---------------------------------------------------------------------------

/// Telemetry for a forest built by the non-bipartite pipeline.
#[derive(Clone, Debug, Serialize)]
pub struct ForestReport {
    pub mode: WitnessMode,
    pub pairs: usize,
    pub translate_samples: usize,
    pub translate_survivors: usize,
    pub chain_paths: usize,
    pub rest_paths: usize,
    pub path_splits: usize,
    pub connector_paths: usize,
    pub connector_direct: usize,
    pub connector_internals: usize,
    pub connector_pool: usize,
    pub absorbed: usize,
}

impl ForestReport {
    fn oracle(pairs: usize) -> ForestReport {
        ForestReport {
            mode: WitnessMode::Oracle,
            pairs,
            translate_samples: 0,
            translate_survivors: 0,
            chain_paths: 0,
            rest_paths: 0,
            path_splits: 0,
            connector_paths: 0,
            connector_direct: 0,
            connector_internals: 0,
            connector_pool: 0,
            absorbed: 0,
        }
    }
}

/// A segment waiting to be threaded into the final big chain.  Chain
/// segments traverse whole translated gadgets and are only materialized
/// after the switch decisions; rest segments are explicit vertex lists and
/// may be reversed freely.
enum Segment {
    Chain { translates: Vec<usize> },
    Rest { vertices: Vec<usize> },
}

impl Segment {
    fn head(&self, family: &TranslateFamily) -> usize {
        match self {
            Segment::Chain { translates } => family.landmarks()[translates[0]].entry,
            Segment::Rest { vertices } => vertices[0],
        }
    }

    fn tail(&self, family: &TranslateFamily) -> usize {
        match self {
            Segment::Chain { translates } => {
                family.landmarks()[*translates.last().unwrap()].exit
            }
            Segment::Rest { vertices } => *vertices.last().unwrap(),
        }
    }
}

/// Spanning linear forest of a connected non-bipartite Cayley graph whose
/// `j`-th path joins `pairs[j]`.  Small hosts go to the exact oracle; all
/// others run the constructive pipeline.
pub fn forest_nonbipartite(
    cg: &CayleyGraph,
    pairs: &[(usize, usize)],
    params: &PipelineParams,
) -> Result<(LinearForest, ForestReport), AssemblerError> {
    let n = cg.group().order();
    check_pairs(n, pairs)?;
    if !cg.is_connected_graph()? {
        return Err(AssemblerError::Disconnected);
    }
    if two_coloring(cg).is_ok() {
        return Err(AssemblerError::BipartiteHost);
    }
    if n <= params.oracle_threshold {
        return oracle_forest(cg, pairs);
    }

    // Every junction can consume anchors, and the junction count grows
    // with the pair count, so the sample budget must too.  Survivors are
    // capped by footprint packing either way; extra samples only help.
    let base_m = params
        .translate_count
        .unwrap_or_else(|| default_translate_count(n) + 8 * pairs.len());
    // A thin anchor pool is a sampling accident as often as a structural
    // obstruction, so stage failures retry with a doubled budget and a
    // fresh sample seed before giving up.  The first attempt uses the
    // caller's seed unchanged, keeping successful runs reproducible
    // across releases that alter only the retry policy.
    let mut last_err = None;
    for attempt in 0..FOREST_ATTEMPTS {
        let m = base_m << attempt;
        let seed = params.seed ^ (attempt as u64).wrapping_mul(0xd1b5_4a32_d192_ed03);
        match forest_nonbipartite_attempt(cg, pairs, params, m, seed) {
            Ok(out) => return Ok(out),
            Err(err @ AssemblerError::Stage { .. }) => last_err = Some(err),
            Err(err) => return Err(err),
        }
    }
    Err(last_err.expect("loop ran at least once"))
}

fn forest_nonbipartite_attempt(
    cg: &CayleyGraph,
    pairs: &[(usize, usize)],
    params: &PipelineParams,
    m: usize,
    sample_seed: u64,
) -> Result<(LinearForest, ForestReport), AssemblerError> {
    let n = cg.group().order();
    let k = pairs.len();
    let mut endpoints = VertexSet::new(n);
    for &(a, b) in pairs {
        endpoints.insert(a);
        endpoints.insert(b);
    }

    // Stage 1: absorber gadget plus random translates.
    let target = (0..n)
        .find(|&v| !endpoints.contains(v))
        .ok_or_else(|| stage_err(Stage::Gadget, "every vertex is an endpoint"))?;
    let absorber = build_absorber(cg, target, &params.expansion, &endpoints)
        .map_err(|e| stage_err(Stage::Gadget, e))?;
    let template = TranslateTemplate::from_absorber(&absorber);
    let family = sample_translates(cg, &template, m, sample_seed, &endpoints)
        .map_err(|e| stage_err(Stage::Translates, e))?;
    let survivors = family.surviving().len();
    if survivors == 0 {
        return Err(stage_err(
            Stage::Translates,
            format!("all {m} sampled translates were dropped"),
        ));
    }
    let gadgets: Vec<Absorber> = family
        .landmarks()
        .iter()
        .map(|lm| translate_absorber(cg, &absorber, lm.element))
        .collect::<Result<_, _>>()
        .map_err(|e| stage_err(Stage::Translates, e))?;

    // Stage 2a: cover the chain digraph; each directed path becomes one
    // segment traversing its translates in order.
    let chain = family.chain_digraph(cg);
    let chain_forest = cover_digraph(&chain).map_err(|e| stage_err(Stage::ChainCover, e))?;
    let chain_paths = chain_forest.len();
    let mut segments: Vec<Segment> = chain_forest
        .into_iter()
        .map(|translates| Segment::Chain { translates })
        .collect();

    // Stage 2b: cover what is left of the host outside the gadget territory.
    let mut outside = VertexSet::full(n);
    outside.difference_with(family.footprint_union());
    outside.difference_with(&endpoints);
    let rest_verts = outside.to_vec();
    let mut rest_segs: Vec<Vec<usize>> = if rest_verts.is_empty() {
        Vec::new()
    } else {
        let local = induced_graph(cg, &rest_verts);
        let (forest, _) = cover_undirected_measured(&local)
            .map_err(|e| stage_err(Stage::RestCover, e))?;
        forest
            .paths
            .iter()
            .map(|p| p.vertices.iter().map(|&v| rest_verts[v]).collect())
            .collect()
    };
    let rest_paths = rest_segs.len();

    // Give the first k-1 pairs their own segment, splitting long ones when
    // the cover came back too coarse.  Whatever remains joins the big chain.
    let mut path_splits = 0;
    while rest_segs.len() < k - 1 {
        let longest = (0..rest_segs.len()).max_by_key(|&i| rest_segs[i].len());
        match longest {
            Some(i) if rest_segs[i].len() >= 2 => {
                let half = rest_segs[i].len() / 2;
                let back = rest_segs[i].split_off(half);
                rest_segs.push(back);
                path_splits += 1;
            }
            _ => break,
        }
    }
    // Each pair takes the remaining segment, in whichever orientation,
    // whose ends are host-adjacent to the pair's endpoints: junctions that
    // close with a direct edge leave the anchor pool untouched.
    let mut assigned: Vec<Option<Vec<usize>>> = Vec::with_capacity(k.saturating_sub(1));
    for &(a, b) in pairs.iter().take(k - 1) {
        let mut best: Option<(usize, bool, usize)> = None;
        for (i, seg) in rest_segs.iter().enumerate() {
            let (head, tail) = (seg[0], *seg.last().unwrap());
            let fwd = usize::from(cg.has_edge(a, head)) + usize::from(cg.has_edge(tail, b));
            let bwd = usize::from(cg.has_edge(a, tail)) + usize::from(cg.has_edge(head, b));
            let (score, reversed) = if fwd >= bwd { (fwd, false) } else { (bwd, true) };
            if best.map_or(true, |(_, _, s)| score > s) {
                best = Some((i, reversed, score));
            }
            if score == 2 {
                break;
            }
        }
        match best {
            Some((i, reversed, _)) => {
                let mut seg = rest_segs.swap_remove(i);
                if reversed {
                    seg.reverse();
                }
                assigned.push(Some(seg));
            }
            None => assigned.push(None),
        }
    }
    for seg in rest_segs.drain(..) {
        segments.push(Segment::Rest { vertices: seg });
    }

    // Order the big chain greedily by host adjacency so most junctions close
    // with a single edge instead of an anchored connector path.
    let (last_a, last_b) = pairs[k - 1];
    let ordered = order_segments(cg, &family, last_a, segments);

    // Stage 3: anchored connections, executed in final traversal order so
    // the used-anchor set grows monotonically.
    let pool = family.anchors().clone();
    let mut used = VertexSet::new(n);
    let mut report_conn = (0usize, 0usize, 0usize); // paths, direct, internals
    let mut connect = |u: usize, v: usize, used: &mut VertexSet| -> Result<PathWitness, AssemblerError> {
        let path = connect_avoiding(cg, u, v, &pool, used, params.expansion.nu, params.expansion.tau)
            .map_err(|e| stage_err(Stage::Connect, format!("joining {u} to {v}: {e}")))?;
        report_conn.0 += 1;
        if path.len() == 2 {
            report_conn.1 += 1;
        }
        for &x in &path.vertices[1..path.vertices.len() - 1] {
            used.insert(x);
            report_conn.2 += 1;
        }
        Ok(path)
    };

    // Pair paths j < k-1 first: either through their own rest segment or as
    // one direct anchored connection.
    let mut halves: Vec<(Option<PathWitness>, Option<PathWitness>)> = Vec::new();
    for (j, seg) in assigned.iter().enumerate() {
        let (a, b) = pairs[j];
        match seg {
            Some(verts) => {
                let first = connect(a, verts[0], &mut used)?;
                let second = connect(*verts.last().unwrap(), b, &mut used)?;
                halves.push((Some(first), Some(second)));
            }
            None => {
                let only = connect(a, b, &mut used)?;
                halves.push((Some(only), None));
            }
        }
    }
    // The big chain for the last pair.
    let mut junctions: Vec<PathWitness> = Vec::new();
    let mut cursor = last_a;
    for seg in &ordered {
        let head = seg.head(&family);
        junctions.push(connect(cursor, head, &mut used)?);
        cursor = seg.tail(&family);
    }
    let closing = connect(cursor, last_b, &mut used)?;

    // Stage 4: translates whose anchor was not consumed by a connector
    // switch to the inclusion path, so every anchor is covered exactly once.
    let include: Vec<bool> = family
        .landmarks()
        .iter()
        .map(|lm| !used.contains(lm.anchor))
        .collect();
    let absorbed = include.iter().filter(|&&x| x).count();

    // Materialize the final paths.
    let mut lists: Vec<Vec<usize>> = Vec::with_capacity(k);
    for (j, seg) in assigned.into_iter().enumerate() {
        let (first, second) = &halves[j];
        let mut path = first.as_ref().unwrap().vertices.clone();
        if let Some(verts) = seg {
            path.extend_from_slice(&verts[1..]);
            path.extend_from_slice(&second.as_ref().unwrap().vertices[1..]);
        }
        lists.push(path);
    }
    let mut big = vec![last_a];
    for (seg, junction) in ordered.iter().zip(&junctions) {
        big.extend_from_slice(&junction.vertices[1..]);
        match seg {
            Segment::Chain { translates } => {
                for (pos, &t) in translates.iter().enumerate() {
                    let walk = gadgets[t].switch_path(include[t]);
                    let skip = usize::from(pos == 0);
                    big.extend_from_slice(&walk.vertices[skip..]);
                }
            }
            Segment::Rest { vertices } => big.extend_from_slice(&vertices[1..]),
        }
    }
    big.extend_from_slice(&closing.vertices[1..]);
    lists.push(big);

    verify_forest_endpoints(cg, &lists, pairs)
        .map_err(|e| stage_err(Stage::Validate, format!("{e:?}")))?;
    let forest = LinearForest {
        paths: lists.into_iter().map(PathWitness::new).collect(),
    };
    Ok((
        forest,
        ForestReport {
            mode: WitnessMode::Pipeline,
            pairs: k,
            translate_samples: m,
            translate_survivors: survivors,
            chain_paths,
            rest_paths,
            path_splits,
            connector_paths: report_conn.0,
            connector_direct: report_conn.1,
            connector_internals: report_conn.2,
            connector_pool: pool.len(),
            absorbed,
        },
    ))
}

fn oracle_forest(
    cg: &CayleyGraph,
    pairs: &[(usize, usize)],
) -> Result<(LinearForest, ForestReport), AssemblerError> {
    let g = cg.to_graph();
    match exact_forest_with_endpoints(&g, pairs)? {
        Some(forest) => {
            let lists: Vec<Vec<usize>> = forest.paths.iter().map(|p| p.vertices.clone()).collect();
            verify_forest_endpoints(cg, &lists, pairs)
                .map_err(|e| stage_err(Stage::Validate, format!("{e:?}")))?;
            Ok((forest, ForestReport::oracle(pairs.len())))
        }
        None => Err(AssemblerError::Infeasible(
            "exhaustive search found no spanning forest with these endpoints".into(),
        )),
    }
}

/// Greedy adjacency ordering of the remaining segments starting from `from`.
/// Rest segments may be reversed when their far end matches.
fn order_segments(
    cg: &CayleyGraph,
    family: &TranslateFamily,
    from: usize,
    mut segments: Vec<Segment>,
) -> Vec<Segment> {
    let mut ordered = Vec::with_capacity(segments.len());
    let mut cursor = from;
    while !segments.is_empty() {
        let mut pick = None;
        for (i, seg) in segments.iter().enumerate() {
            if cg.has_edge(cursor, seg.head(family)) {
                pick = Some((i, false));
                break;
            }
            if matches!(seg, Segment::Rest { .. }) && cg.has_edge(cursor, seg.tail(family)) {
                pick = Some((i, true));
                break;
            }
        }
        let (i, flip) = pick.unwrap_or((0, false));
        let mut seg = segments.swap_remove(i);
        if flip {
            if let Segment::Rest { vertices } = &mut seg {
                vertices.reverse();
            }
        }
        cursor = seg.tail(family);
        ordered.push(seg);
    }
    ordered
}

/// Path cover of an arbitrary digraph: measures the degree spread and runs
/// the almost-regular cover.  Returns the paths as vertex-id lists.
fn cover_digraph(dg: &Digraph) -> Result<Vec<Vec<usize>>, AssemblerError> {
    let n = dg.order();
    if n == 0 {
        return Ok(Vec::new());
    }
    let lo = (0..n)
        .map(|v| dg.out_degree(v).min(dg.in_degree(v)))
        .min()
        .unwrap();
    let hi = (0..n)
        .map(|v| dg.out_degree(v).max(dg.in_degree(v)))
        .max()
        .unwrap();
    let d = (lo + hi + 1) / 2;
    let dev = (d - lo).max(hi - d);
    let profile = AlmostRegularProfile::measure(dg, d, dev)
        .map_err(|e| stage_err(Stage::ChainCover, e))?;
    let (forest, _) =
        path_cover_almost_regular(dg, &profile).map_err(|e| stage_err(Stage::ChainCover, e))?;
    Ok(forest.paths.iter().map(|p| p.vertices.clone()).collect())
}

/// Undirected cover with the degree window measured from the graph itself.
fn cover_undirected_measured(
    g: &Graph,
) -> Result<(LinearForest, crate::pathcover::AlmostRegularReport), AssemblerError> {
    let n = g.order();
    let lo = (0..n).map(|v| g.degree(v)).min().unwrap_or(0);
    let hi = (0..n).map(|v| g.degree(v)).max().unwrap_or(0);
    let d = (lo + hi + 1) / 2;
    let dev = (d - lo).max(hi - d);
    path_cover_undirected(g, d, dev).map_err(|e| stage_err(Stage::RestCover, e))
}

/// Subgraph induced on `verts`; local vertex `i` is `verts[i]`.
fn induced_graph<G: HostGraph + ?Sized>(host: &G, verts: &[usize]) -> Graph {
    let mut local = vec![usize::MAX; host.order()];
    for (i, &v) in verts.iter().enumerate() {
        local[v] = i;
    }
    let mut g = Graph::new(verts.len());
    for (i, &v) in verts.iter().enumerate() {
        for w in host.neighbors(v) {
            if w > v && local[w] != usize::MAX {
                g.add_edge(i, local[w]);
            }
        }
    }
    g
}

// ---------------------------------------------------------------------------
// Bipartite forests: contraction along one generator.
// ---------------------------------------------------------------------------

/// A perfect matching `h -> h*g` contracted to one directed node per edge.
/// Node `i` stands for the host edge `(heads[i], tails[i])`; an arc `i -> j`
/// records the host edge between `tails[i]` and `heads[j]`.
#[derive(Clone)]
pub struct Contraction {
    pub digraph: Digraph,
    pub heads: Vec<usize>,
    pub tails: Vec<usize>,
    /// `node_of[h]` is the node with head `h`, `usize::MAX` elsewhere.
    pub node_of: Vec<usize>,
    pub generator: usize,
}

impl Contraction {
    pub fn node_count(&self) -> usize {
        self.heads.len()
    }

    /// Expands a node sequence back to the alternating host walk
    /// `head_0, tail_0, head_1, tail_1, ...`.
    pub fn uncontract(&self, nodes: &[usize]) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * nodes.len());
        for &i in nodes {
            out.push(self.heads[i]);
            out.push(self.tails[i]);
        }
        out
    }
}

/// Contracts the matching `{(h, h*g) : h in heads}`.  The heads must be one
/// side of a perfect matching: right-translation by `g` must carry them onto
/// exactly the remaining vertices.
pub fn contract_matching(
    cg: &CayleyGraph,
    heads: &[usize],
    generator: usize,
) -> Result<Contraction, AssemblerError> {
    let group = cg.group();
    let n = group.order();
    let mut node_of = vec![usize::MAX; n];
    for (i, &h) in heads.iter().enumerate() {
        if h >= n {
            return Err(AssemblerError::OutOfRange { v: h, n });
        }
        if node_of[h] != usize::MAX {
            return Err(stage_err(Stage::Contract, format!("head {h} repeated")));
        }
        node_of[h] = i;
    }
    let tails: Vec<usize> = heads.iter().map(|&h| group.op(h, generator)).collect();
    let mut covered = VertexSet::from_iter(n, heads.iter().copied());
    for &t in &tails {
        if covered.contains(t) {
            return Err(stage_err(
                Stage::Contract,
                format!("generator {generator} does not induce a perfect matching: {t} covered twice"),
            ));
        }
        covered.insert(t);
    }
    if covered.len() != n {
        return Err(stage_err(
            Stage::Contract,
            format!("matching covers {} of {n} vertices", covered.len()),
        ));
    }
    let mut digraph = Digraph::new(heads.len());
    for (i, &t) in tails.iter().enumerate() {
        for w in cg.neighbors(t) {
            let j = node_of[w];
            if j != usize::MAX && j != i {
                digraph.add_arc(i, j);
            }
        }
    }
    Ok(Contraction {
        digraph,
        heads: heads.to_vec(),
        tails,
        node_of,
        generator,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SearchStats {
    /// True when the exact subset DP solved the instance.
    pub exact: bool,
    pub restarts: usize,
    pub expansions: u64,
}

/// Telemetry for a forest built by the bipartite contraction route.
#[derive(Clone, Debug, Serialize)]
pub struct BipartiteForestReport {
    pub mode: WitnessMode,
    pub pairs: usize,
    pub contraction_generator: Option<usize>,
    pub contracted_order: usize,
    pub connector_nodes: usize,
    pub search: Option<SearchStats>,
    pub min_semidegree: usize,
    /// Size of a sampled set violating strong out-expansion on the residual
    /// digraph, if the probe found one.  Advisory: sparse contractions fail
    /// the probe yet stay solvable, so this never gates the search.
    pub expansion_violation: Option<usize>,
}

/// Spanning linear forest of a connected bipartite Cayley graph.  Every pair
/// must straddle the bipartition; the pipeline contracts the matching of one
/// generator and works on the contracted digraph.
pub fn forest_bipartite(
    cg: &CayleyGraph,
    pairs: &[(usize, usize)],
    params: &PipelineParams,
) -> Result<(LinearForest, BipartiteForestReport), AssemblerError> {
    let group = cg.group();
    let n = group.order();
    check_pairs(n, pairs)?;
    if !cg.is_connected_graph()? {
        return Err(AssemblerError::Disconnected);
    }
    let (even, _) = cg
        .bipartite_structure()?
        .ok_or(AssemblerError::NotBipartite)?;
    // Normalize each pair to (head-part, tail-part).
    let mut norm = Vec::with_capacity(pairs.len());
    for &(a, b) in pairs {
        match (even.contains(a), even.contains(b)) {
            (true, false) => norm.push((a, b)),
            (false, true) => norm.push((b, a)),
            _ => return Err(AssemblerError::SamePartEndpoints { a, b }),
        }
    }
    if n <= params.oracle_threshold {
        let (forest, base) = oracle_forest(cg, pairs)?;
        return Ok((
            forest,
            BipartiteForestReport {
                mode: WitnessMode::Oracle,
                pairs: base.pairs,
                contraction_generator: None,
                contracted_order: 0,
                connector_nodes: 0,
                search: None,
                min_semidegree: 0,
                expansion_violation: None,
            },
        ));
    }

    // A generator works when no translated start endpoint collides with an
    // end endpoint; then all 2k contracted terminals are distinct.
    let ends = VertexSet::from_iter(n, norm.iter().map(|&(_, b)| b));
    let generator = cg
        .generators()
        .elements()
        .iter()
        .copied()
        .find(|&g| norm.iter().all(|&(a, _)| !ends.contains(group.op(a, g))))
        .ok_or_else(|| {
            stage_err(
                Stage::Contract,
                "every generator carries some start endpoint onto an end endpoint",
            )
        })?;
    let heads = even.members().to_vec();
    let contraction = contract_matching(cg, &heads, generator)?;
    let d = &contraction.digraph;
    let nodes = contraction.node_count();

    let k = norm.len();
    let terminals: Vec<(usize, usize)> = norm
        .iter()
        .map(|&(a, b)| {
            let v = contraction.node_of[a];
            let u = contraction.node_of[group.op(b, group.inv(generator))];
            debug_assert!(v != usize::MAX && u != usize::MAX);
            (v, u)
        })
        .collect();

    // Directed connectors for all but the last pair, then a Hamilton path of
    // the residual digraph for the last one.
    let mut used = VertexSet::new(nodes);
    let mut terminal_set = VertexSet::new(nodes);
    for &(v, u) in &terminals {
        terminal_set.insert(v);
        terminal_set.insert(u);
    }
    let mut node_paths: Vec<Vec<usize>> = Vec::with_capacity(k);
    for &(v, u) in terminals.iter().take(k - 1) {
        let mut blocked = used.clone();
        blocked.union_with(&terminal_set);
        blocked.remove(v);
        blocked.remove(u);
        let path = directed_bfs_path(d, v, u, &blocked).ok_or_else(|| {
            stage_err(
                Stage::Connect,
                format!("no directed route between contracted nodes {v} and {u}"),
            )
        })?;
        for &x in &path {
            used.insert(x);
        }
        node_paths.push(path);
    }

    let remaining: Vec<usize> = (0..nodes).filter(|&x| !used.contains(x)).collect();
    let mut local = vec![usize::MAX; nodes];
    for (i, &x) in remaining.iter().enumerate() {
        local[x] = i;
    }
    let mut sub = Digraph::new(remaining.len());
    for (i, &x) in remaining.iter().enumerate() {
        for y in d.succ(x) {
            if local[y] != usize::MAX {
                sub.add_arc(i, local[y]);
            }
        }
    }
    let (last_v, last_u) = *terminals.last().unwrap();
    let min_semidegree = sub.min_semidegree();
    let expansion_violation = strong_out_expansion_probe(
        &sub,
        params.expansion.nu,
        params.expansion.tau,
        PROBE_TRIALS,
        params.seed ^ 0xa5a5,
    )
    .map(|set| set.len());
    let (sub_path, stats) = hamilton_path_directed(
        &sub,
        local[last_v],
        local[last_u],
        params.search_restarts,
        params.search_budget,
        params.seed,
    )?;
    node_paths.push(sub_path.into_iter().map(|i| remaining[i]).collect());

    let lists: Vec<Vec<usize>> = node_paths
        .iter()
        .map(|p| contraction.uncontract(p))
        .collect();
    verify_forest_endpoints(cg, &lists, pairs)
        .map_err(|e| stage_err(Stage::Validate, format!("{e:?}")))?;
    let connector_nodes = used.len();
    Ok((
        LinearForest {
            paths: lists.into_iter().map(PathWitness::new).collect(),
        },
        BipartiteForestReport {
            mode: WitnessMode::Pipeline,
            pairs: k,
            contraction_generator: Some(generator),
            contracted_order: nodes,
            connector_nodes,
            search: Some(stats),
            min_semidegree,
            expansion_violation,
        },
    ))
}

/// Shortest directed path avoiding `blocked`, by BFS.
fn directed_bfs_path(d: &Digraph, from: usize, to: usize, blocked: &VertexSet) -> Option<Vec<usize>> {
    let n = d.order();
    if blocked.contains(from) || blocked.contains(to) {
        return None;
    }
    let mut prev = vec![usize::MAX; n];
    let mut seen = blocked.clone();
    seen.insert(from);
    let mut queue = std::collections::VecDeque::from([from]);
    while let Some(x) = queue.pop_front() {
        if x == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = prev[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for y in d.succ(x) {
            if !seen.contains(y) {
                seen.insert(y);
                prev[y] = x;
                queue.push_back(y);
            }
        }
    }
    None
}

/// Hamilton path from `from` to `to` in a digraph.  Small instances use the
/// exact subset DP; larger ones run a guided depth-first search that expands
/// scarce successors first, with seeded restarts.  A budget-exhausted search
/// reports the longest path it saw; an exhausted DP is a proof of
/// infeasibility.
pub fn hamilton_path_directed(
    d: &Digraph,
    from: usize,
    to: usize,
    restarts: usize,
    budget: u64,
    seed: u64,
) -> Result<(Vec<usize>, SearchStats), AssemblerError> {
    let n = d.order();
    for &x in &[from, to] {
        if x >= n {
            return Err(AssemblerError::OutOfRange { v: x, n });
        }
    }
    if n == 1 {
        return Ok((
            vec![from],
            SearchStats {
                exact: true,
                restarts: 0,
                expansions: 0,
            },
        ));
    }
    if from == to {
        return Err(AssemblerError::DuplicateEndpoint { v: from });
    }
    if n <= SEARCH_DP_MAX {
        return match exact_hamilton_path_digraph(d, Some(from), Some(to))? {
            Some(path) => Ok((
                path,
                SearchStats {
                    exact: true,
                    restarts: 0,
                    expansions: 0,
                },
            )),
            None => Err(AssemblerError::Infeasible(format!(
                "no directed Hamilton path joins {from} to {to} (exhaustive)"
            ))),
        };
    }

    let succs: Vec<Vec<usize>> = (0..n).map(|v| d.succ(v)).collect();
    let mut longest = 1usize;
    let mut expansions = 0u64;
    for restart in 0..restarts.max(1) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ (restart as u64).wrapping_mul(0x9e37_79b9));
        let mut visited = VertexSet::new(n);
        visited.insert(from);
        let mut path = vec![from];
        let mut frames: Vec<Vec<usize>> = vec![candidate_order(
            &succs, &visited, from, to, n, 1, &mut rng,
        )];
        let mut left = budget;
        while let Some(frame) = frames.last_mut() {
            if path.len() == n {
                return Ok((
                    path,
                    SearchStats {
                        exact: false,
                        restarts: restart,
                        expansions,
                    },
                ));
            }
            match frame.pop() {
                Some(w) => {
                    visited.insert(w);
                    path.push(w);
                    longest = longest.max(path.len());
                    expansions += 1;
                    frames.push(candidate_order(
                        &succs,
                        &visited,
                        w,
                        to,
                        n,
                        path.len(),
                        &mut rng,
                    ));
                    if left == 0 {
                        break;
                    }
                    left -= 1;
                }
                None => {
                    frames.pop();
                    let v = path.pop().unwrap();
                    visited.remove(v);
                }
            }
        }
    }
    Err(stage_err(
        Stage::Search,
        format!(
            "budget exhausted after {restarts} restarts; longest path found \
             covers {longest} of {n} vertices"
        ),
    ))
}

/// Unvisited successors of `v`, ordered so the scarcest continuation is
/// tried first (popped last-to-first).  The target is held back until it is
/// the only vertex left.
fn candidate_order(
    succs: &[Vec<usize>],
    visited: &VertexSet,
    v: usize,
    to: usize,
    n: usize,
    path_len: usize,
    rng: &mut ChaCha20Rng,
) -> Vec<usize> {
    if path_len == n - 1 {
        return if succs[v].contains(&to) {
            vec![to]
        } else {
            Vec::new()
        };
    }
    let mut scored: Vec<(usize, u32, usize)> = succs[v]
        .iter()
        .copied()
        .filter(|&w| w != to && !visited.contains(w))
        .map(|w| {
            let onward = succs[w]
                .iter()
                .filter(|&&x| !visited.contains(x) && x != w)
                .count();
            (onward, rng.gen::<u32>(), w)
        })
        .collect();
    // Descending sort: candidates pop from the back, so the fewest-onward
    // vertex is expanded first.
    scored.sort_unstable_by(|a, b| b.cmp(a));
    scored.into_iter().map(|(_, _, w)| w).collect()
}

// ---------------------------------------------------------------------------
// Coset skeleton: spanning tree of clusters with disjoint connecting edges.
// ---------------------------------------------------------------------------

/// One coset cluster of a skeleton, materialized as a local graph.
#[derive(Clone)]
pub struct SkeletonCluster {
    /// Index of the coset this cluster came from.
    pub coset: usize,
    /// Host vertex behind each local vertex.
    pub host_ids: Vec<usize>,
    pub graph: Graph,
    /// One side of the cluster bipartition (local ids) when the cluster is
    /// connected and bipartite with both sides nonempty; `None` otherwise.
    pub parts: Option<VertexSet>,
}

/// A tree edge between two clusters, realized by two vertex-disjoint host
/// edges.  Each pair is `(parent-side vertex, child-side vertex)`.
#[derive(Clone, Copy, Debug)]
pub struct SkeletonEdge {
    pub parent: usize,
    pub child: usize,
    pub first: (usize, usize),
    pub second: (usize, usize),
}

/// Spanning tree of coset clusters.  `order` is a root-first traversal;
/// `parent_edge[c]` realizes the tree edge from `c`'s parent into `c`.
#[derive(Clone)]
pub struct TreeSkeleton {
    pub clusters: Vec<SkeletonCluster>,
    pub root: usize,
    pub order: Vec<usize>,
    pub parent_edge: Vec<Option<SkeletonEdge>>,
    pub tree_degree: usize,
    /// Symmetrized generator subset whose coset graph carried the tree.
    pub generator_basis: Vec<usize>,
}

impl TreeSkeleton {
    fn locator(&self) -> Vec<(usize, usize)> {
        let n = self
            .clusters
            .iter()
            .flat_map(|c| c.host_ids.iter().copied())
            .max()
            .map_or(0, |m| m + 1);
        let mut loc = vec![(usize::MAX, usize::MAX); n];
        for (ci, c) in self.clusters.iter().enumerate() {
            for (li, &h) in c.host_ids.iter().enumerate() {
                loc[h] = (ci, li);
            }
        }
        loc
    }

    /// Structural checks: clusters partition the host, local graphs match
    /// induced host edges, the tree is a tree, and the connecting edges are
    /// real, disjoint, and part-respecting.
    pub fn validate<G: HostGraph + ?Sized>(&self, host: &G) -> Result<(), String> {
        let n = host.order();
        let mut owner = vec![usize::MAX; n];
        for (ci, c) in self.clusters.iter().enumerate() {
            if c.graph.order() != c.host_ids.len() {
                return Err(format!("cluster {ci}: local order mismatch"));
            }
            for &h in &c.host_ids {
                if h >= n || owner[h] != usize::MAX {
                    return Err(format!("cluster {ci}: vertex {h} repeated or out of range"));
                }
                owner[h] = ci;
            }
            for (li, &h) in c.host_ids.iter().enumerate() {
                for lj in c.graph.neighbors(li) {
                    if !host.has_edge(h, c.host_ids[lj]) {
                        return Err(format!(
                            "cluster {ci}: local edge ({li},{lj}) has no host edge"
                        ));
                    }
                }
            }
        }
        if owner.contains(&usize::MAX) {
            return Err("clusters do not cover the host".into());
        }
        let k = self.clusters.len();
        if self.order.len() != k || self.order.first() != Some(&self.root) {
            return Err("traversal order must start at the root and cover all clusters".into());
        }
        let mut placed = vec![false; k];
        placed[self.root] = true;
        if self.parent_edge[self.root].is_some() {
            return Err("root must not have a parent edge".into());
        }
        let mut edge_ends = VertexSet::new(n);
        for &c in &self.order[1..] {
            let e = self.parent_edge[c]
                .as_ref()
                .ok_or(format!("cluster {c} has no parent edge"))?;
            if e.child != c || !placed[e.parent] {
                return Err(format!("edge into {c} is out of tree order"));
            }
            placed[c] = true;
            for (end, cluster) in [
                (e.first.0, e.parent),
                (e.second.0, e.parent),
                (e.first.1, e.child),
                (e.second.1, e.child),
            ] {
                if owner[end] != cluster {
                    return Err(format!("edge endpoint {end} is not in cluster {cluster}"));
                }
                if edge_ends.contains(end) {
                    return Err(format!("connecting edges share vertex {end}"));
                }
                edge_ends.insert(end);
            }
            for (u, v) in [e.first, e.second] {
                if !host.has_edge(u, v) {
                    return Err(format!("connecting pair ({u},{v}) is not a host edge"));
                }
            }
        }
        // Part constraints: the two ends inside a bipartite cluster must lie
        // in opposite sides, or the cluster cycle cannot take both.
        let loc = self.locator();
        for e in self.parent_edge.iter().flatten() {
            for (cluster, a, b) in [
                (e.parent, e.first.0, e.second.0),
                (e.child, e.first.1, e.second.1),
            ] {
                if let Some(parts) = &self.clusters[cluster].parts {
                    let (la, lb) = (loc[a].1, loc[b].1);
                    if parts.contains(la) == parts.contains(lb) {
                        return Err(format!(
                            "edge ends {a} and {b} sit in one side of cluster {cluster}"
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

fn cluster_parts(graph: &crate::cayley::CayleyGraph) -> Option<VertexSet> {
    if !is_connected(graph) {
        return None;
    }
    match two_coloring(graph) {
        Ok((a, b)) if !a.is_empty() && !b.is_empty() => Some(a),
        _ => None,
    }
}

/// Builds a skeleton over the right cosets of `sub`: a minimal symmetrized
/// generator basis, a BFS tree of the coset graph, and per tree edge two
/// disjoint part-respecting host edges picked greedily.
pub fn build_skeleton(cg: &CayleyGraph, sub: &Subgroup) -> Result<TreeSkeleton, AssemblerError> {
    let group = cg.group();
    let partition = right_cosets(group, sub);
    let count = partition.count();

    let mut clusters = Vec::with_capacity(count);
    for i in 0..count {
        let cc = coset_cluster(group, cg.generators(), sub, partition.representative(i))?;
        clusters.push(SkeletonCluster {
            coset: i,
            parts: cluster_parts(&cc.graph),
            host_ids: cc.host_ids,
            graph: cc.graph.to_graph(),
        });
    }
    if count == 1 {
        return Ok(TreeSkeleton {
            clusters,
            root: 0,
            order: vec![0],
            parent_edge: vec![None],
            tree_degree: 0,
            generator_basis: Vec::new(),
        });
    }

    let picked = greedy_generators(group, cg.generators())?;
    let basis = GeneratorSet::symmetrized(group, &picked)?;
    let aux = aux_coset_graph(group, &basis, &partition);

    // BFS tree of the coset graph, rooted at the identity coset.
    let mut parent = vec![usize::MAX; count];
    let mut order = vec![0usize];
    let mut seen = vec![false; count];
    seen[0] = true;
    let mut head = 0;
    while head < order.len() {
        let p = order[head];
        head += 1;
        for c in aux.graph.neighbors(p) {
            if !seen[c] {
                seen[c] = true;
                parent[c] = p;
                order.push(c);
            }
        }
    }
    if order.len() != count {
        return Err(AssemblerError::Disconnected);
    }
    let mut degree = vec![0usize; count];
    for &c in &order[1..] {
        degree[c] += 1;
        degree[parent[c]] += 1;
    }
    let tree_degree = degree.iter().copied().max().unwrap_or(0);

    // Host -> (cluster, local) map for part lookups.
    let n = group.order();
    let mut loc = vec![(usize::MAX, usize::MAX); n];
    for (ci, c) in clusters.iter().enumerate() {
        for (li, &h) in c.host_ids.iter().enumerate() {
            loc[h] = (ci, li);
        }
    }

    let mut used = VertexSet::new(n);
    let mut parent_edge: Vec<Option<SkeletonEdge>> = vec![None; count];
    for &c in &order[1..] {
        let p = parent[c];
        let s = aux.witness_generator(p, c).ok_or_else(|| {
            stage_err(Stage::Skeleton, format!("no generator joins cosets {p} and {c}"))
        })?;
        // The witness may map child onto parent; its inverse then provides
        // the parent-side pairs loading the same matching.
        let mut candidates: Vec<(usize, usize)> = Vec::new();
        for gen in [s, group.inv(s)] {
            candidates.extend(coset_edge_pairs(group, &partition, p, c, gen));
            if group.inv(s) == s {
                break;
            }
        }
        candidates.retain(|&(x, y)| !used.contains(x) && !used.contains(y));
        let crossing = |cluster: usize, a: usize, b: usize| -> bool {
            match &clusters[cluster].parts {
                Some(parts) => parts.contains(loc[a].1) != parts.contains(loc[b].1),
                None => true,
            }
        };
        let mut found = None;
        'outer: for (i1, &(x1, y1)) in candidates.iter().enumerate() {
            for &(x2, y2) in &candidates[i1 + 1..] {
                if crossing(p, x1, x2) && crossing(c, y1, y2) {
                    found = Some(((x1, y1), (x2, y2)));
                    break 'outer;
                }
            }
        }
        let (first, second) = found.ok_or_else(|| {
            stage_err(
                Stage::Skeleton,
                format!(
                    "no disjoint part-respecting edge pair joins cosets {p} and {c}; \
                     an oracle solve may still succeed"
                ),
            )
        })?;
        for v in [first.0, first.1, second.0, second.1] {
            used.insert(v);
        }
        parent_edge[c] = Some(SkeletonEdge {
            parent: p,
            child: c,
            first,
            second,
        });
    }

    Ok(TreeSkeleton {
        clusters,
        root: 0,
        order,
        parent_edge,
        tree_degree,
        generator_basis: basis.elements().to_vec(),
    })
}

/// Splices per-cluster cycles along the skeleton into one host cycle.
///
/// The solver receives a cluster index and forced pairs in local ids and
/// must return a local cycle order visiting every cluster vertex with each
/// forced pair adjacent.  Forced pairs need not be edges: every forced
/// adjacency is replaced by real connecting edges during the splice.
/// Clusters are solved leaves-first, so a child's connecting edges are
/// forced into its parent before the parent is solved.
pub fn skeleton_hamilton<F>(
    skeleton: &TreeSkeleton,
    solve: F,
) -> Result<Vec<usize>, AssemblerError>
where
    F: FnMut(usize, &[(usize, usize)]) -> Result<Vec<usize>, AssemblerError>,
{
    skeleton_hamilton_with_matching(skeleton, &[], solve)
}

/// Like [`skeleton_hamilton`], but the returned cycle additionally
/// traverses every pair in `matching` as an adjacency.
///
/// Each pair is given in host ids and must lie inside a single cluster.
/// Matching pairs are forced into the cluster solve alongside the
/// tree-derived pairs and are never opened by the splice, so they survive
/// into the final cycle verbatim; a pair that coincides with one of the
/// skeleton's connecting-edge adjacencies is rejected because the splice
/// would cut it back open.
pub fn skeleton_hamilton_with_matching<F>(
    skeleton: &TreeSkeleton,
    matching: &[(usize, usize)],
    mut solve: F,
) -> Result<Vec<usize>, AssemblerError>
where
    F: FnMut(usize, &[(usize, usize)]) -> Result<Vec<usize>, AssemblerError>,
{
    let k = skeleton.clusters.len();
    let loc = skeleton.locator();
    let mut opened: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k];
    for e in skeleton.parent_edge.iter().flatten() {
        opened[e.child].push(sorted_pair((e.first.1, e.second.1)));
        opened[e.parent].push(sorted_pair((e.first.0, e.second.0)));
    }
    let mut forced: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k];
    for &(a, b) in matching {
        let ca = loc
            .get(a)
            .filter(|&&(c, _)| c != usize::MAX)
            .ok_or(AssemblerError::OutOfRange { v: a, n: loc.len() })?
            .0;
        let cb = loc
            .get(b)
            .filter(|&&(c, _)| c != usize::MAX)
            .ok_or(AssemblerError::OutOfRange { v: b, n: loc.len() })?
            .0;
        if ca != cb {
            return Err(stage_err(
                Stage::Splice,
                format!("matching pair ({a}, {b}) straddles clusters {ca} and {cb}"),
            ));
        }
        if opened[ca].contains(&sorted_pair((a, b))) {
            return Err(stage_err(
                Stage::Splice,
                format!("matching pair ({a}, {b}) collides with a connecting-edge adjacency"),
            ));
        }
        forced[ca].push((a, b));
    }
    let mut cycles: Vec<Option<Vec<usize>>> = vec![None; k];
    for &c in skeleton.order.iter().rev() {
        if let Some(e) = &skeleton.parent_edge[c] {
            forced[c].push((e.first.1, e.second.1));
        }
        let cluster = &skeleton.clusters[c];
        let local_pairs: Vec<(usize, usize)> = forced[c]
            .iter()
            .map(|&(a, b)| (loc[a].1, loc[b].1))
            .collect();
        let local_cycle = solve(c, &local_pairs)?;
        check_cluster_cycle(cluster.graph.order(), &local_cycle, &local_pairs)
            .map_err(|why| stage_err(Stage::Cluster, format!("cluster {c}: {why}")))?;
        cycles[c] = Some(local_cycle.iter().map(|&l| cluster.host_ids[l]).collect());
        if let Some(e) = &skeleton.parent_edge[c] {
            forced[e.parent].push((e.first.0, e.second.0));
        }
    }

    let mut cycle = cycles[skeleton.root].take().unwrap();
    for &c in &skeleton.order[1..] {
        let e = skeleton.parent_edge[c].as_ref().unwrap();
        let child = cycles[c].take().unwrap();
        cycle = splice_cycles(
            cycle,
            (e.first.0, e.second.0),
            child,
            (e.first.1, e.second.1),
        )
        .map_err(|why| stage_err(Stage::Splice, format!("edge into cluster {c}: {why}")))?;
    }
    Ok(cycle)
}

fn sorted_pair((a, b): (usize, usize)) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn check_cluster_cycle(
    order: usize,
    cycle: &[usize],
    pairs: &[(usize, usize)],
) -> Result<(), String> {
    if cycle.len() != order {
        return Err(format!(
            "cycle covers {} of {order} vertices",
            cycle.len()
        ));
    }
    let mut seen = vec![false; order];
    for &v in cycle {
        if v >= order || seen[v] {
            return Err(format!("vertex {v} repeated or out of range"));
        }
        seen[v] = true;
    }
    if !cycle_traverses_pairs(cycle, pairs) {
        return Err("a forced pair is not adjacent in the cycle".into());
    }
    Ok(())
}

/// Opens the adjacency `base_pair` in `base` and `child_pair` in `child`
/// and joins the two with the cross edges `(base_pair.i, child_pair.i)`.
fn splice_cycles(
    base: Vec<usize>,
    base_pair: (usize, usize),
    child: Vec<usize>,
    child_pair: (usize, usize),
) -> Result<Vec<usize>, String> {
    let rotated = open_cycle(base, base_pair)?;
    // `rotated` runs q .. p where (p, q) was the opened adjacency.
    let p = *rotated.last().unwrap();
    let (from, to) = if p == base_pair.0 {
        child_pair
    } else {
        (child_pair.1, child_pair.0)
    };
    let mut inserted = open_cycle(child, child_pair)?;
    if inserted[0] != from {
        inserted.reverse();
    }
    debug_assert_eq!(*inserted.last().unwrap(), to);
    let mut out = rotated;
    out.extend(inserted);
    Ok(out)
}

/// Rotates a cycle so the adjacent pair `(a, b)` sits across the wrap-around,
/// returning the cycle as a path whose last and first vertices are the pair.
fn open_cycle(cycle: Vec<usize>, pair: (usize, usize)) -> Result<Vec<usize>, String> {
    let len = cycle.len();
    let at = (0..len)
        .find(|&i| {
            let (u, v) = (cycle[i], cycle[(i + 1) % len]);
            (u, v) == pair || (v, u) == pair
        })
        .ok_or(format!("pair ({}, {}) is not adjacent", pair.0, pair.1))?;
    let mut out = Vec::with_capacity(len);
    out.extend_from_slice(&cycle[at + 1..]);
    out.extend_from_slice(&cycle[..=at]);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Full Hamilton cycle pipeline.
// ---------------------------------------------------------------------------

/// Telemetry for a Hamilton cycle solve.
#[derive(Clone, Debug, Serialize)]
pub struct CycleReport {
    pub mode: WitnessMode,
    pub subgroup_order: usize,
    pub cluster_count: usize,
    pub tree_degree: usize,
    pub generator_basis: usize,
    pub fully_certified: bool,
    pub cluster_modes: Vec<WitnessMode>,
}

/// Cycle through a cluster visiting every vertex with each forced pair
/// adjacent.  Small clusters use the exact matching oracle; larger ones
/// reduce to a spanning forest whose paths run between consecutive forced
/// pairs.  Forced pairs may be virtual (non-edges).
pub fn cluster_cycle_through_pairs(
    cg: &CayleyGraph,
    forced: &[(usize, usize)],
    params: &PipelineParams,
) -> Result<(Vec<usize>, WitnessMode), AssemblerError> {
    let n = cg.group().order();
    if n <= params.oracle_threshold.max(ORACLE_VERTEX_LIMIT.min(n)) && n <= ORACLE_VERTEX_LIMIT {
        if forced.len() <= MATCHING_LIMIT {
            let g = cg.to_graph();
            return match exact_cycle_through_matching(&g, forced)? {
                Some(cycle) => Ok((cycle.order, WitnessMode::Oracle)),
                None => Err(AssemblerError::Infeasible(
                    "no cycle through the forced pairs exists (exhaustive)".into(),
                )),
            };
        }
    }
    if forced.is_empty() {
        return plain_cycle(cg, params);
    }

    // Orient the forced pairs coherently (within one side of the bipartition
    // when there is one), then join consecutive pairs by forest paths.
    let bip = cg.bipartite_structure()?;
    let oriented: Vec<(usize, usize)> = match &bip {
        Some((even, _)) => {
            let mut out = Vec::with_capacity(forced.len());
            for &(a, b) in forced {
                match (even.contains(a), even.contains(b)) {
                    (true, false) => out.push((a, b)),
                    (false, true) => out.push((b, a)),
                    _ => {
                        return Err(stage_err(
                            Stage::Cluster,
                            format!("forced pair ({a},{b}) does not straddle the bipartition"),
                        ))
                    }
                }
            }
            out
        }
        None => forced.to_vec(),
    };
    let t = oriented.len();
    let derived: Vec<(usize, usize)> = (0..t)
        .map(|i| (oriented[i].1, oriented[(i + 1) % t].0))
        .collect();
    let forest = match &bip {
        Some(_) => forest_bipartite(cg, &derived, params)?.0,
        None => forest_nonbipartite(cg, &derived, params)?.0,
    };
    let mut cycle = Vec::with_capacity(n);
    for (path, &(from, _)) in forest.paths.iter().zip(&derived) {
        let mut verts = path.vertices.clone();
        if verts[0] != from {
            verts.reverse();
        }
        cycle.extend(verts);
    }
    Ok((cycle, WitnessMode::Pipeline))
}

/// Hamilton cycle with no forced pairs: fix vertex 0, pick a neighbor `w`,
/// and close a spanning (0, w)-path with the edge back to 0.
fn plain_cycle(
    cg: &CayleyGraph,
    params: &PipelineParams,
) -> Result<(Vec<usize>, WitnessMode), AssemblerError> {
    let bip = cg.bipartite_structure()?;
    let mut last = None;
    for w in cg.neighbors(0).into_iter().take(CYCLE_CLOSE_ATTEMPTS) {
        let pair = [(0, w)];
        let attempt = match &bip {
            Some(_) => forest_bipartite(cg, &pair, params).map(|(f, _)| f),
            None => forest_nonbipartite(cg, &pair, params).map(|(f, _)| f),
        };
        match attempt {
            Ok(forest) => return Ok((forest.paths[0].vertices.clone(), WitnessMode::Pipeline)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| stage_err(Stage::Cluster, "vertex 0 has no neighbors")))
}

/// Hamilton cycle of a connected Cayley graph.  Small hosts go to the exact
/// oracle (an empty answer there is loudly reported, not worked around).
/// Larger hosts are decomposed into certified coset clusters; a single
/// cluster is solved directly, several are solved along a skeleton and
/// spliced.
pub fn hamilton_cycle(
    cg: &CayleyGraph,
    params: &PipelineParams,
) -> Result<(HamiltonCycle, CycleReport), AssemblerError> {
    let group = cg.group();
    let n = group.order();
    if n < 3 {
        return Err(AssemblerError::TooSmall { n });
    }
    if !cg.is_connected_graph()? {
        return Err(AssemblerError::Disconnected);
    }
    if n <= params.oracle_threshold {
        let g = cg.to_graph();
        return match exact_hamilton_cycle(&g)? {
            Some(cycle) => {
                verify_hamilton_cycle(cg, &cycle.order)
                    .map_err(|e| stage_err(Stage::Validate, format!("{e:?}")))?;
                Ok((
                    cycle,
                    CycleReport {
                        mode: WitnessMode::Oracle,
                        subgroup_order: n,
                        cluster_count: 1,
                        tree_degree: 0,
                        generator_basis: 0,
                        fully_certified: false,
                        cluster_modes: vec![WitnessMode::Oracle],
                    },
                ))
            }
            None => Err(AssemblerError::NotHamiltonian { n }),
        };
    }

    let decomposition = regularity_decomposition(group, cg.generators(), DEFAULT_EPSILON)
        .map_err(|e| stage_err(Stage::Decompose, e))?;
    let subgroup = decomposition.subgroup.clone();
    let cluster_count = decomposition.partition.count();

    if cluster_count == 1 {
        let (order, mode) = cluster_cycle_through_pairs(cg, &[], params)?;
        verify_hamilton_cycle(cg, &order)
            .map_err(|e| stage_err(Stage::Validate, format!("{e:?}")))?;
        return Ok((
            HamiltonCycle::new(order),
            CycleReport {
                mode: WitnessMode::Pipeline,
                subgroup_order: subgroup.order(),
                cluster_count: 1,
                tree_degree: 0,
                generator_basis: 0,
                fully_certified: decomposition.fully_certified(),
                cluster_modes: vec![mode],
            },
        ));
    }

    let skeleton = build_skeleton(cg, &subgroup)?;
    skeleton
        .validate(cg)
        .map_err(|why| stage_err(Stage::Skeleton, why))?;
    let partition = right_cosets(group, &subgroup);
    let cluster_graphs: Vec<CayleyGraph> = (0..cluster_count)
        .map(|i| {
            coset_cluster(group, cg.generators(), &subgroup, partition.representative(i))
                .map(|cc| cc.graph)
        })
        .collect::<Result<_, _>>()?;
    let mut modes = vec![WitnessMode::Oracle; cluster_count];
    let order = skeleton_hamilton(&skeleton, |idx, local_pairs| {
        let sub_params = PipelineParams {
            seed: params.seed ^ ((idx as u64 + 1).wrapping_mul(0x85eb_ca6b)),
            ..PipelineParams::for_host(&cluster_graphs[idx], params.seed)
        }
        .with_oracle_threshold(params.oracle_threshold);
        let (cycle, mode) = cluster_cycle_through_pairs(&cluster_graphs[idx], local_pairs, &sub_params)?;
        modes[idx] = mode;
        Ok(cycle)
    })?;
    verify_hamilton_cycle(cg, &order)
        .map_err(|e| stage_err(Stage::Validate, format!("{e:?}")))?;
    Ok((
        HamiltonCycle::new(order),
        CycleReport {
            mode: WitnessMode::Pipeline,
            subgroup_order: subgroup.order(),
            cluster_count,
            tree_degree: skeleton.tree_degree,
            generator_basis: skeleton.generator_basis.len(),
            fully_certified: decomposition.fully_certified(),
            cluster_modes: modes,
        },
    ))
}
