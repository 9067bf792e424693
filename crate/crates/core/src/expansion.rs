//! Expansion diagnostics: sparse cuts, spectral gap certificates, robust
//! neighborhoods and the coset regularity decomposition.
//!
//! A cut `(X, Y)` is `zeta`-sparse when `e(X, Y) <= zeta * |X| * |Y|`
//! (inclusive), where `(X, Y)` is a bipartition of the vertices.  Three
//! kinds of evidence about sparse cuts are produced, in decreasing
//! strength:
//!
//! * exact: full enumeration of all cuts (small graphs), authoritative;
//! * spectral: the bound `e(X,Y) >= (d - lambda2) |X||Y| / n` for d-regular
//!   graphs certifies every `zeta` below `(d - lambda2)/n`.  For abelian or
//!   cyclic groups `lambda2` comes from exact character sums; otherwise from
//!   power iteration, whose residual is folded into the certified margin;
//! * probed: sampled subsets, BFS balls and (for abelian groups)
//!   coset-aligned sides; a probe can refute but never certify.
//!
//! Robust expansion follows the convention `|RN(U) \ U| >= nu * n` for
//! every `U` in the size window `tau n <= |U| <= (1 - tau) n`, with the
//! robust neighborhood `RN(U) = {v : |N(v) cap U| >= nu n}`.  A graph with
//! no `zeta`-sparse cuts is automatically a `(zeta tau / 8, tau)`-robust
//! expander; see [`implied_robustness`].
//!
//! Counting thresholds round up: a fraction `x` of the vertices means
//! `ceil_count(x) = ceil(x - 1e-9)` vertices, so exact fractional
//! boundaries stay stable under floating-point noise.

use crate::bits::VertexSet;
use crate::cayley::{coset_cluster, CayleyGraph};
use crate::graph::{Digraph, HostGraph, Navigable};
use crate::group::{
    enumerate_subgroups, right_cosets, CosetPartition, GeneratorSet, Group, GroupError, Subgroup,
    DEFAULT_SUBGROUP_ENUM_LIMIT,
};
use serde::Serialize;
use std::sync::Arc;

/// Largest order for exhaustive cut enumeration (`2^n` subsets).
pub const EXACT_CUT_MAX: usize = 24;
/// Largest order for exhaustive robust-expansion checking.
pub const ROBUST_EXACT_MAX: usize = 20;
/// Slack absorbed by [`ceil_count`] / [`floor_count`].
pub const COUNT_EPS: f64 = 1e-9;
/// Power iteration stops when the residual drops below `POWER_TOL * d`.
pub const POWER_TOL: f64 = 1e-9;
pub const POWER_MAX_ITERS: usize = 100_000;
/// Calibration constant for the robustness parameters derived from the
/// generator density: a graph with no `sigma^3/2000`-sparse cuts is a
/// `(sigma^4/K, sigma/100)`-robust expander.
pub const EXPANSION_K: f64 = 1_600_000.0;
/// Character sums and power iteration are skipped beyond this much work
/// (`n * degree`), leaving only probes.
const SPECTRAL_WORK_LIMIT: usize = 200_000_000;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum ExpansionError {
    #[error("graph has {n} vertices; exhaustive enumeration handles at most {limit}")]
    TooLargeExact { n: usize, limit: usize },
    #[error("graph needs at least {min} vertices here, got {n}")]
    TooSmall { n: usize, min: usize },
    #[error("the spectral certificate needs a regular graph")]
    NotRegular,
    #[error("parts do not form a balanced regular bipartition: {0}")]
    BadBipartition(String),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// `ceil(x)` with a guard against values sitting a hair above an integer.
pub fn ceil_count(x: f64) -> usize {
    (x - COUNT_EPS).ceil().max(0.0) as usize
}

/// `floor(x)` with the symmetric guard.
pub fn floor_count(x: f64) -> usize {
    (x + COUNT_EPS).floor().max(0.0) as usize
}

/// The robustness parameter guaranteed by the absence of `zeta`-sparse
/// cuts: a graph with no such cuts is a `(zeta tau / 8, tau)`-robust
/// expander.
pub fn implied_robustness(zeta: f64, tau: f64) -> f64 {
    zeta * tau / 8.0
}

/// Bundle of connectivity parameters used by the connector and assembler.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExpansionParams {
    /// Robust-neighborhood threshold fraction.
    pub nu: f64,
    /// Size-window fraction for robust expansion.
    pub tau: f64,
    /// Minimum-degree fraction required by the layered-reach argument
    /// (`alpha >= nu + tau`).
    pub alpha: f64,
}

impl ExpansionParams {
    /// Parameters implied by the absence of `zeta`-sparse cuts at window
    /// fraction `tau`.
    pub fn from_no_sparse_cuts(zeta: f64, tau: f64) -> Self {
        let nu = implied_robustness(zeta, tau);
        ExpansionParams {
            nu,
            tau,
            alpha: nu + tau,
        }
    }

    /// The asymptotic parameter schedule for generator density `sigma`:
    /// cut threshold `sigma^3/2000`, window `sigma/100`, robustness
    /// `sigma^4/K`.
    pub fn from_density(sigma: f64) -> Self {
        ExpansionParams {
            nu: sigma.powi(4) / EXPANSION_K,
            tau: sigma / 100.0,
            alpha: sigma,
        }
    }

    /// Maximum length of a connecting path at these parameters.
    pub fn max_path_length(&self) -> usize {
        ceil_count(1.0 / self.nu) + 1
    }

    /// How many pool vertices a batch of connections may consume, for a
    /// pool of size `m`: `nu * m / 100`.
    pub fn connect_budget(&self, m: usize) -> usize {
        floor_count(self.nu * m as f64 / 100.0)
    }
}

// ---------------------------------------------------------------------------
// Exact cut enumeration
// ---------------------------------------------------------------------------

/// A cut given by one side, its crossing edge count and its density ratio
/// `e(X,Y) / (|X| |Y|)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparsestCut {
    pub side: Vec<usize>,
    pub cut_edges: usize,
    pub ratio: f64,
}

/// Exhaustively finds the minimum-ratio cut.  Ties prefer the
/// lexicographically smallest side (as a sorted vertex list).  Subsets are
/// visited in Gray-code order so each step updates the crossing count in
/// constant time.
pub fn sparsest_cut_exact<G: HostGraph + ?Sized>(g: &G) -> Result<SparsestCut, ExpansionError> {
    let n = g.order();
    if n > EXACT_CUT_MAX {
        return Err(ExpansionError::TooLargeExact {
            n,
            limit: EXACT_CUT_MAX,
        });
    }
    if n < 2 {
        return Err(ExpansionError::TooSmall { n, min: 2 });
    }
    let adj = neighbor_masks(g);
    let deg: Vec<i64> = (0..n).map(|v| g.degree(v) as i64).collect();

    let full: u32 = (1u32 << n) - 1;
    let mut x: u32 = 0;
    let mut cut: i64 = 0;
    let mut size: i64 = 0;
    let mut best: Option<(f64, u32, i64)> = None;
    for k in 1u32..=full {
        let bit = k.trailing_zeros() as usize;
        let vmask = 1u32 << bit;
        if x & vmask == 0 {
            cut += deg[bit] - 2 * i64::from((adj[bit] & x).count_ones());
            x |= vmask;
            size += 1;
        } else {
            x &= !vmask;
            cut -= deg[bit] - 2 * i64::from((adj[bit] & x).count_ones());
            size -= 1;
        }
        if x == 0 || x == full {
            continue;
        }
        let denom = (size * (n as i64 - size)) as f64;
        let ratio = cut as f64 / denom;
        let better = match &best {
            None => true,
            Some((br, bx, _)) => {
                if ratio < br - 1e-12 {
                    true
                } else if ratio <= br + 1e-12 {
                    mask_to_vec(x) < mask_to_vec(*bx)
                } else {
                    false
                }
            }
        };
        if better {
            best = Some((ratio, x, cut));
        }
    }
    let (ratio, side_mask, cut_edges) = best.expect("n >= 2 guarantees a proper cut");
    Ok(SparsestCut {
        side: mask_to_vec(side_mask),
        cut_edges: cut_edges as usize,
        ratio,
    })
}

fn neighbor_masks<G: HostGraph + ?Sized>(g: &G) -> Vec<u32> {
    (0..g.order())
        .map(|v| g.neighbors(v).into_iter().fold(0u32, |m, w| m | (1 << w)))
        .collect()
}

fn mask_to_vec(mask: u32) -> Vec<usize> {
    (0..32).filter(|&i| mask & (1 << i) != 0).collect()
}

/// Exhaustive search for a `zeta`-sparse cut (inclusive threshold); `None`
/// certifies that no such cut exists.
pub fn find_sparse_cut_exact<G: HostGraph + ?Sized>(
    g: &G,
    zeta: f64,
) -> Result<Option<SparsestCut>, ExpansionError> {
    let best = sparsest_cut_exact(g)?;
    Ok((best.ratio <= zeta + 1e-12).then_some(best))
}

/// Crossing edges and ratio of a specific side.
pub fn cut_ratio<G: HostGraph + ?Sized>(g: &G, side: &VertexSet) -> (usize, f64) {
    let n = g.order();
    let x = side.len();
    let mut crossing = 0usize;
    for v in side.iter() {
        crossing += g.degree(v) - g.count_neighbors_in(v, side);
    }
    let denom = (x * (n - x)) as f64;
    let ratio = if denom == 0.0 {
        f64::INFINITY
    } else {
        crossing as f64 / denom
    };
    (crossing, ratio)
}

// ---------------------------------------------------------------------------
// Spectral estimates
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMethod {
    /// Exact eigenvalues from group characters.
    CharacterSum,
    /// Deflated power iteration on `A + dI`.
    PowerIteration,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralEstimate {
    /// Second largest adjacency eigenvalue.
    pub lambda2: f64,
    /// Smallest adjacency eigenvalue, when the method delivers it.
    pub lambda_min: Option<f64>,
    /// Upper bound on the error of `lambda2`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub method: SpectralMethod,
}

/// Exact spectrum extremes for an abelian-backed group: the eigenvalues of
/// the Cayley graph are the character sums `sum_s cos(2 pi <j, s>)` over
/// all frequency tuples `j`.
fn abelian_character_spectrum(group: &Group, gens: &GeneratorSet) -> Option<(f64, f64)> {
    let factors = group.abelian_factors()?.to_vec();
    let n = group.order();
    if n < 2 || gens.is_empty() || n.saturating_mul(gens.len()) > SPECTRAL_WORK_LIMIT {
        return None;
    }
    let coords: Vec<Vec<u64>> = gens
        .elements()
        .iter()
        .map(|&s| group.abelian_coordinates(s).expect("abelian backing"))
        .collect();
    let r = factors.len();
    let mut j = vec![0u64; r];
    let mut lambda2 = f64::NEG_INFINITY;
    let mut lambda_min = f64::INFINITY;
    let tau = std::f64::consts::TAU;
    loop {
        // Advance the mixed-radix frequency counter; the all-zero
        // (trivial) character is never evaluated.
        let mut i = r;
        loop {
            if i == 0 {
                return Some((lambda2, lambda_min));
            }
            i -= 1;
            j[i] += 1;
            if j[i] < factors[i] {
                break;
            }
            j[i] = 0;
        }
        let mut lambda = 0.0;
        for coord in &coords {
            let mut phase = 0.0;
            for ((&ji, &fi), &si) in j.iter().zip(&factors).zip(coord) {
                phase += ((ji * si) % fi) as f64 / fi as f64;
            }
            lambda += (tau * phase).cos();
        }
        lambda2 = lambda2.max(lambda);
        lambda_min = lambda_min.min(lambda);
    }
}

/// Exact spectrum extremes for any cyclic group via a discrete log table.
/// Covers table-backed and embedded cyclic groups, where no coordinate
/// structure is stored.
fn cyclic_character_spectrum(group: &Group, gens: &GeneratorSet) -> Option<(f64, f64)> {
    let n = group.order();
    if n < 2 || n > 100_000 || gens.is_empty() || !group.is_cyclic() {
        return None;
    }
    if n.saturating_mul(gens.len()) > SPECTRAL_WORK_LIMIT {
        return None;
    }
    let generator = (1..n).find(|&x| group.element_order(x) == n)?;
    let mut dlog = vec![0usize; n];
    let mut x = 0usize;
    for t in 0..n {
        dlog[x] = t;
        x = group.op(x, generator);
    }
    let tau = std::f64::consts::TAU;
    let logs: Vec<usize> = gens.elements().iter().map(|&s| dlog[s]).collect();
    let mut lambda2 = f64::NEG_INFINITY;
    let mut lambda_min = f64::INFINITY;
    for jdx in 1..n {
        let lambda: f64 = logs
            .iter()
            .map(|&t| (tau * ((jdx * t) % n) as f64 / n as f64).cos())
            .sum();
        lambda2 = lambda2.max(lambda);
        lambda_min = lambda_min.min(lambda);
    }
    Some((lambda2, lambda_min))
}

/// `lambda2` of a regular graph by deflated power iteration on `A + dI`,
/// run from two independent starting vectors (the larger estimate wins).
pub fn power_iteration_lambda2<G: HostGraph + ?Sized>(
    g: &G,
) -> Result<SpectralEstimate, ExpansionError> {
    let n = g.order();
    if n < 2 {
        return Err(ExpansionError::TooSmall { n, min: 2 });
    }
    let d = g.regularity().ok_or(ExpansionError::NotRegular)?;
    if n.saturating_mul(d.max(1)) > SPECTRAL_WORK_LIMIT {
        return Err(ExpansionError::TooLargeExact {
            n,
            limit: SPECTRAL_WORK_LIMIT / d.max(1),
        });
    }
    let neighbors: Vec<Vec<u32>> = (0..n)
        .map(|v| g.neighbors(v).into_iter().map(|w| w as u32).collect())
        .collect();

    let mut best: Option<(f64, f64, usize, bool)> = None;
    for seed in [0xa11c_e5eedu64, 0xb0b5_eed5u64] {
        let (mu, residual, iters, converged) = power_run(&neighbors, d, n, seed);
        let lambda2 = mu - d as f64;
        let keep = match best {
            None => true,
            Some((l2, ..)) => lambda2 > l2,
        };
        if keep {
            best = Some((lambda2, residual, iters, converged));
        }
    }
    let (lambda2, residual, iterations, converged) = best.unwrap();
    Ok(SpectralEstimate {
        lambda2,
        lambda_min: None,
        residual,
        iterations,
        converged,
        method: SpectralMethod::PowerIteration,
    })
}

fn power_run(neighbors: &[Vec<u32>], d: usize, n: usize, seed: u64) -> (f64, f64, usize, bool) {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    deflate_and_normalize(&mut v);
    let mut w = vec![0.0f64; n];
    let scale = d.max(1) as f64;
    let mut mu = 0.0;
    let mut residual = f64::INFINITY;
    let mut iters = 0;
    while iters < POWER_MAX_ITERS {
        iters += 1;
        for i in 0..n {
            let mut acc = scale * v[i];
            for &j in &neighbors[i] {
                acc += v[j as usize];
            }
            w[i] = acc;
        }
        let mean = w.iter().sum::<f64>() / n as f64;
        for wi in w.iter_mut() {
            *wi -= mean;
        }
        mu = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        residual = v
            .iter()
            .zip(&w)
            .map(|(a, b)| (b - mu * a).powi(2))
            .sum::<f64>()
            .sqrt();
        std::mem::swap(&mut v, &mut w);
        deflate_and_normalize(&mut v);
        if residual <= POWER_TOL * scale {
            return (mu, residual, iters, true);
        }
    }
    (mu, residual, iters, false)
}

fn deflate_and_normalize(v: &mut [f64]) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    for x in v.iter_mut() {
        *x -= mean;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    } else {
        // Degenerate start; fall back to a fixed deflated vector.
        v[0] = 1.0;
        if v.len() > 1 {
            v[1] = -1.0;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

/// Best available `lambda2` for a Cayley graph: exact character sums for
/// abelian or cyclic groups, power iteration otherwise.
pub fn cayley_lambda2(cay: &CayleyGraph) -> Result<SpectralEstimate, ExpansionError> {
    let group = cay.group();
    let gens = cay.generators();
    let exact =
        abelian_character_spectrum(group, gens).or_else(|| cyclic_character_spectrum(group, gens));
    if let Some((lambda2, lambda_min)) = exact {
        let residual = 1e-12 * (gens.len().max(1) as f64);
        return Ok(SpectralEstimate {
            lambda2,
            lambda_min: Some(lambda_min),
            residual,
            iterations: 0,
            converged: true,
            method: SpectralMethod::CharacterSum,
        });
    }
    power_iteration_lambda2(cay)
}

// ---------------------------------------------------------------------------
// Probes
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ProbeParams {
    pub samples: usize,
    /// Largest sampled side size.
    pub max_side: usize,
    pub seed: u64,
}

impl Default for ProbeParams {
    fn default() -> Self {
        ProbeParams {
            samples: 48,
            max_side: 4096,
            seed: 0xc07_a11ed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeOutcome {
    pub samples: usize,
    pub worst_ratio: f64,
    /// A side witnessing a `zeta`-sparse cut, when one was found.
    pub violation: Option<Vec<usize>>,
}

/// Sampled search for sparse cuts: BFS balls around spread-out roots plus
/// random subsets.  Finding a violation is definitive; finding none proves
/// nothing.
pub fn probe_sparse_cuts<G: HostGraph + ?Sized>(
    g: &G,
    zeta: f64,
    params: &ProbeParams,
) -> ProbeOutcome {
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand::SeedableRng;
    let n = g.order();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(params.seed);
    let cap = params.max_side.min(n.saturating_sub(1)).max(1);
    let mut worst = f64::INFINITY;
    let mut violation = None;
    let mut tried = 0usize;

    let consider = |side: &VertexSet, worst: &mut f64, violation: &mut Option<Vec<usize>>| {
        if side.is_empty() || side.len() >= n {
            return;
        }
        let (_, ratio) = cut_ratio(g, side);
        if ratio < *worst {
            *worst = ratio;
            if ratio <= zeta + 1e-12 && violation.is_none() {
                *violation = Some(side.to_vec());
            }
        }
    };

    // BFS balls: prefixes of breadth-first orders from spread-out roots.
    let k = n.min(8).max(1);
    for root in (0..k).map(|i| i * n / k) {
        let mut order = Vec::with_capacity(cap);
        let mut seen = VertexSet::new(n);
        seen.insert(root);
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            if order.len() >= cap {
                break;
            }
            for w in g.neighbors(v) {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        let mut side = VertexSet::new(n);
        for (i, &v) in order.iter().enumerate() {
            side.insert(v);
            // Evaluate a geometric sequence of prefix sizes.
            if (i + 1).is_power_of_two() || i + 1 == order.len() {
                tried += 1;
                consider(&side, &mut worst, &mut violation);
            }
        }
        if violation.is_some() {
            break;
        }
    }

    // Random subsets of varied size.
    if violation.is_none() {
        let mut pool: Vec<usize> = (0..n).collect();
        for _ in 0..params.samples {
            let size = rng.gen_range(1..=cap);
            pool.shuffle(&mut rng);
            let side = VertexSet::from_iter(n, pool[..size].iter().copied());
            tried += 1;
            consider(&side, &mut worst, &mut violation);
            if violation.is_some() {
                break;
            }
        }
    }
    ProbeOutcome {
        samples: tried,
        worst_ratio: worst,
        violation,
    }
}

/// Coset-aligned probe for abelian groups: sparse cuts in Cayley graphs
/// tend to follow subgroup structure, so sides made of whole cosets are
/// checked first.  Cut sizes come from the quotient, not from scanning
/// edges, so this stays cheap even on very large graphs.
fn abelian_coset_probe(cay: &CayleyGraph, zeta: f64) -> Option<ProbeOutcome> {
    let group = cay.group();
    let factors = group.abelian_factors()?.to_vec();
    let n = group.order();
    let gens = cay.generators();
    if gens.is_empty() || n < 4 {
        return None;
    }

    // Candidate subgroups: closures of single generators and of the
    // mixed-radix basis elements.
    let mut candidates: Vec<usize> = Vec::new();
    for &s in gens.elements().iter().take(4) {
        candidates.push(s);
    }
    let mut weight = 1u64;
    for f in factors.iter().rev() {
        if (weight as usize) < n {
            candidates.push(weight as usize);
        }
        weight *= f;
    }
    candidates.sort_unstable();
    candidates.dedup();

    let mut worst = f64::INFINITY;
    let mut violation: Option<Vec<usize>> = None;
    let mut samples = 0usize;
    for g0 in candidates {
        if g0 == 0 {
            continue;
        }
        let sub = match group.closure(&[g0]) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let h = sub.order();
        if h == 0 || h >= n {
            continue;
        }
        let index = n / h;
        if index < 2 || index > 4096 {
            continue;
        }
        // Side = one coset.  In an abelian group the edge (x, x+s) leaves
        // the coset of x exactly when s lies outside the subgroup, so
        // every coset has the same crossing count |H| * |S \ H|.
        let k_out = gens.elements().iter().filter(|&&s| !sub.contains(s)).count();
        samples += 1;
        let ratio = (h as f64 * k_out as f64) / (h as f64 * (n - h) as f64);
        if ratio < worst {
            worst = ratio;
            if ratio <= zeta + 1e-12 && violation.is_none() {
                violation = Some(sub.members().to_vec());
            }
        }
        // For cyclic groups the quotient is cyclic with coset i = residues
        // congruent to i, so prefix unions of cosets are interval-shaped
        // sides; their crossing counts come from the generator residues.
        if group.is_cyclic() && violation.is_none() && index <= 512 {
            let mut cnt = vec![0u64; index];
            for &s in gens.elements() {
                cnt[s % index] += 1;
            }
            for k in 2..index.min(index / 2 + 1) {
                // e(prefix, rest) = |H| * sum_{i<k} #{s : (i + s) mod index >= k}
                let mut cross = 0u64;
                for i in 0..k {
                    for (c, &m) in cnt.iter().enumerate() {
                        if (i + c) % index >= k {
                            cross += m;
                        }
                    }
                }
                samples += 1;
                let size = h * k;
                let ratio = (h as u64 * cross) as f64 / (size as f64 * (n - size) as f64);
                if ratio < worst {
                    worst = ratio;
                    if ratio <= zeta + 1e-12 && violation.is_none() {
                        violation = Some((0..n).filter(|x| x % index < k).collect());
                        break;
                    }
                }
            }
        }
        if violation.is_some() {
            break;
        }
    }
    Some(ProbeOutcome {
        samples,
        worst_ratio: worst,
        violation,
    })
}

/// [`probe_sparse_cuts`] plus coset-aligned candidates when the group
/// structure makes them cheap.
pub fn probe_sparse_cuts_cayley(cay: &CayleyGraph, zeta: f64, params: &ProbeParams) -> ProbeOutcome {
    let coset = abelian_coset_probe(cay, zeta);
    if let Some(out) = &coset {
        if out.violation.is_some() {
            return coset.unwrap();
        }
    }
    let mut merged = probe_sparse_cuts(cay, zeta, params);
    if let Some(out) = coset {
        merged.samples += out.samples;
        if out.worst_ratio < merged.worst_ratio {
            merged.worst_ratio = out.worst_ratio;
        }
    }
    merged
}

// ---------------------------------------------------------------------------
// Assessment
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutEvidence {
    /// Authoritative enumeration: the true sparsest cut.
    Exact { sparsest: SparsestCut },
    /// Eigenvalue bound: every `zeta` strictly below `certified_below` is
    /// excluded.
    Spectral {
        estimate: SpectralEstimate,
        certified_below: f64,
    },
    /// Sampling only; can refute, never certify.
    Probed { outcome: ProbeOutcome },
}

#[derive(Clone, Debug, Serialize)]
pub struct CutAssessment {
    pub zeta: f64,
    pub certified: bool,
    pub evidence: CutEvidence,
}

impl CutAssessment {
    /// The violating side when the evidence contains one.
    pub fn sparse_cut(&self) -> Option<&[usize]> {
        match &self.evidence {
            CutEvidence::Exact { sparsest } if !self.certified => Some(&sparsest.side),
            CutEvidence::Probed { outcome } => outcome.violation.as_deref(),
            _ => None,
        }
    }

    /// True when no violation was found, even if nothing was certified
    /// (probe-only evidence).
    pub fn clean(&self) -> bool {
        self.certified || self.sparse_cut().is_none()
    }
}

fn spectral_assessment(estimate: SpectralEstimate, d: usize, n: usize, zeta: f64) -> CutAssessment {
    let gap_lower = d as f64 - estimate.lambda2 - estimate.residual;
    let certified_below = (gap_lower / n as f64).max(0.0);
    CutAssessment {
        zeta,
        certified: estimate.converged && zeta < certified_below,
        evidence: CutEvidence::Spectral {
            estimate,
            certified_below,
        },
    }
}

/// Assesses whether `g` has a `zeta`-sparse cut: exact on small graphs,
/// spectral on regular graphs, sampled probes otherwise.  An uncertified
/// spectral result is returned only after a probe fails to find a
/// violation; a found violation always wins.
pub fn assess_sparse_cuts<G: HostGraph + ?Sized>(g: &G, zeta: f64) -> CutAssessment {
    let n = g.order();
    if n <= EXACT_CUT_MAX {
        if let Ok(sparsest) = sparsest_cut_exact(g) {
            return CutAssessment {
                zeta,
                certified: sparsest.ratio > zeta + 1e-12,
                evidence: CutEvidence::Exact { sparsest },
            };
        }
    }
    if let Some(d) = g.regularity() {
        if let Ok(est) = power_iteration_lambda2(g) {
            let assessment = spectral_assessment(est, d, n, zeta);
            if assessment.certified {
                return assessment;
            }
            let outcome = probe_sparse_cuts(g, zeta, &ProbeParams::default());
            if outcome.violation.is_some() {
                return CutAssessment {
                    zeta,
                    certified: false,
                    evidence: CutEvidence::Probed { outcome },
                };
            }
            return assessment;
        }
    }
    let outcome = probe_sparse_cuts(g, zeta, &ProbeParams::default());
    CutAssessment {
        zeta,
        certified: false,
        evidence: CutEvidence::Probed { outcome },
    }
}

/// Like [`assess_sparse_cuts`] but with the exact character-sum spectrum
/// and coset-aligned probes available.
pub fn assess_sparse_cuts_cayley(cay: &CayleyGraph, zeta: f64) -> CutAssessment {
    let n = cay.order();
    if n <= EXACT_CUT_MAX {
        if let Ok(sparsest) = sparsest_cut_exact(cay) {
            return CutAssessment {
                zeta,
                certified: sparsest.ratio > zeta + 1e-12,
                evidence: CutEvidence::Exact { sparsest },
            };
        }
    }
    match cayley_lambda2(cay) {
        Ok(est) => {
            let assessment = spectral_assessment(est, cay.degree_value(), n, zeta);
            if assessment.certified {
                return assessment;
            }
            let outcome = probe_sparse_cuts_cayley(cay, zeta, &ProbeParams::default());
            if outcome.violation.is_some() {
                return CutAssessment {
                    zeta,
                    certified: false,
                    evidence: CutEvidence::Probed { outcome },
                };
            }
            assessment
        }
        Err(_) => {
            let outcome = probe_sparse_cuts_cayley(cay, zeta, &ProbeParams::default());
            CutAssessment {
                zeta,
                certified: false,
                evidence: CutEvidence::Probed { outcome },
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Robust neighborhoods and robust expansion
// ---------------------------------------------------------------------------

/// Vertices with at least `ceil_count(nu * n)` in-neighbors inside `set`
/// (for undirected graphs viewed as digraphs: neighbors inside `set`).
pub fn robust_in_reach<N: Navigable + ?Sized>(d: &N, set: &VertexSet, nu: f64) -> VertexSet {
    let n = d.vertex_count();
    let t = ceil_count(nu * n as f64);
    let mut out = VertexSet::new(n);
    for v in 0..n {
        if d.count_pred_in(v, set) >= t {
            out.insert(v);
        }
    }
    out
}

/// The robust neighborhood of `set` in an undirected graph: vertices with
/// at least `ceil_count(nu * n)` neighbors inside `set`.
pub fn robust_neighborhood<G: HostGraph + ?Sized>(g: &G, set: &VertexSet, nu: f64) -> VertexSet {
    let n = g.order();
    let t = ceil_count(nu * n as f64);
    let mut out = VertexSet::new(n);
    for v in 0..n {
        if g.count_neighbors_in(v, set) >= t {
            out.insert(v);
        }
    }
    out
}

/// Robust neighborhood restricted to `candidates` (used on bipartite
/// instances to stay inside one side).
pub fn robust_neighborhood_within<G: HostGraph + ?Sized>(
    g: &G,
    set: &VertexSet,
    nu: f64,
    candidates: &VertexSet,
) -> VertexSet {
    let mut out = robust_neighborhood(g, set, nu);
    out.intersect_with(candidates);
    out
}

/// Whether `set` violates `(nu, tau)`-robust expansion: it sits in the
/// size window `tau n <= |set| <= (1 - tau) n` yet
/// `|RN(set) \ set| < ceil_count(nu n)`.
pub fn violates_robust_expansion<G: HostGraph + ?Sized>(
    g: &G,
    set: &VertexSet,
    nu: f64,
    tau: f64,
) -> bool {
    let n = g.order();
    let size = set.len();
    let lo = ceil_count(tau * n as f64).max(1);
    let hi = floor_count((1.0 - tau) * n as f64).min(n.saturating_sub(1));
    if size < lo || size > hi {
        return false;
    }
    let t = ceil_count(nu * n as f64);
    let mut rn = robust_neighborhood(g, set, nu);
    rn.difference_with(set);
    rn.len() < t
}

/// Exhaustive `(nu, tau)`-robust-expansion check for orders up to
/// [`ROBUST_EXACT_MAX`]; returns the first violating subset in mask order,
/// or `None` when the graph is a robust expander at these parameters.
pub fn robust_expansion_violation_exact<G: HostGraph + ?Sized>(
    g: &G,
    nu: f64,
    tau: f64,
) -> Result<Option<VertexSet>, ExpansionError> {
    let n = g.order();
    if n > ROBUST_EXACT_MAX {
        return Err(ExpansionError::TooLargeExact {
            n,
            limit: ROBUST_EXACT_MAX,
        });
    }
    if n == 0 {
        return Ok(None);
    }
    let adj = neighbor_masks(g);
    let t = ceil_count(nu * n as f64);
    let lo = ceil_count(tau * n as f64).max(1);
    let hi = floor_count((1.0 - tau) * n as f64).min(n - 1);
    let full: u32 = (1u32 << n) - 1;
    for mask in 1..=full {
        let size = mask.count_ones() as usize;
        if size < lo || size > hi {
            continue;
        }
        let rn_outside = (0..n)
            .filter(|&v| mask & (1 << v) == 0 && (adj[v] & mask).count_ones() as usize >= t)
            .count();
        if rn_outside < t {
            let set = VertexSet::from_iter(n, (0..n).filter(|&v| mask & (1 << v) != 0));
            return Ok(Some(set));
        }
    }
    Ok(None)
}

/// Robust-expansion check that is exhaustive for small graphs and sampled
/// (random window-sized subsets plus BFS balls) beyond.  A returned set is
/// always a genuine violation; `None` beyond the exhaustive regime only
/// means no counterexample was found.
pub fn robust_expander_probe<G: HostGraph + ?Sized>(
    g: &G,
    nu: f64,
    tau: f64,
    trials: usize,
    seed: u64,
) -> Option<VertexSet> {
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand::SeedableRng;
    let n = g.order();
    if n == 0 {
        return None;
    }
    if n <= ROBUST_EXACT_MAX {
        return robust_expansion_violation_exact(g, nu, tau).expect("size checked");
    }
    let lo = ceil_count(tau * n as f64).max(1);
    let hi = floor_count((1.0 - tau) * n as f64).min(n - 1);
    if lo > hi {
        return None;
    }

    // BFS balls truncated into the window.
    let k = n.min(8).max(1);
    for root in (0..k).map(|i| i * n / k) {
        let mut order = Vec::with_capacity(hi);
        let mut seen = VertexSet::new(n);
        seen.insert(root);
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            if order.len() >= hi {
                break;
            }
            for w in g.neighbors(v) {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        if order.len() < lo {
            // Small component: pad with unreached vertices to reach the
            // window, keeping the component fully inside the set.
            let mut extra = (0..n).filter(|v| !seen.contains(*v));
            while order.len() < lo {
                match extra.next() {
                    Some(v) => order.push(v),
                    None => break,
                }
            }
        }
        for size in [lo, (lo + hi) / 2, hi] {
            if size <= order.len() {
                let set = VertexSet::from_iter(n, order[..size].iter().copied());
                if violates_robust_expansion(g, &set, nu, tau) {
                    return Some(set);
                }
            }
        }
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<usize> = (0..n).collect();
    for _ in 0..trials {
        let size = rng.gen_range(lo..=hi);
        pool.shuffle(&mut rng);
        let set = VertexSet::from_iter(n, pool[..size].iter().copied());
        if violates_robust_expansion(g, &set, nu, tau) {
            return Some(set);
        }
    }
    None
}

/// Checks the strong out-expansion property `|RN+(U)| >= |U| + nu n` for
/// every window-sized `U` (note: `RN+(U)` itself, not `RN+(U) \ U`).
/// Exhaustive up to [`ROBUST_EXACT_MAX`] vertices, sampled beyond.  This
/// is the hypothesis under which robustly expanding digraphs are known to
/// be Hamiltonian, so it gates the direct bipartite assembly route.
pub fn strong_out_expansion_probe(
    d: &Digraph,
    nu: f64,
    tau: f64,
    trials: usize,
    seed: u64,
) -> Option<VertexSet> {
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand::SeedableRng;
    let n = d.order();
    if n == 0 {
        return None;
    }
    let t = ceil_count(nu * n as f64);
    let lo = ceil_count(tau * n as f64).max(1);
    let hi = floor_count((1.0 - tau) * n as f64).min(n - 1);
    if lo > hi {
        return None;
    }
    if n <= ROBUST_EXACT_MAX {
        let in_masks: Vec<u32> = (0..n)
            .map(|v| d.pred(v).into_iter().fold(0u32, |m, w| m | (1 << w)))
            .collect();
        let full: u32 = (1u32 << n) - 1;
        for mask in 1..=full {
            let size = mask.count_ones() as usize;
            if size < lo || size > hi {
                continue;
            }
            let rn = (0..n)
                .filter(|&v| (in_masks[v] & mask).count_ones() as usize >= t)
                .count();
            if rn < size + t {
                return Some(VertexSet::from_iter(
                    n,
                    (0..n).filter(|&v| mask & (1 << v) != 0),
                ));
            }
        }
        return None;
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x0790_e5);
    let mut pool: Vec<usize> = (0..n).collect();
    for _ in 0..trials {
        let size = rng.gen_range(lo..=hi);
        pool.shuffle(&mut rng);
        let set = VertexSet::from_iter(n, pool[..size].iter().copied());
        let rn = robust_in_reach(d, &set, nu);
        if rn.len() < size + t {
            return Some(set);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Bipartite expansion
// ---------------------------------------------------------------------------

/// One-sided expansion check for balanced regular bipartite graphs: for
/// every `X` inside part `a` with `tau n <= |X| <= (1/2 - tau) n`, the
/// robust neighborhood must satisfy `|RN(X)| >= |X| + ceil_count(nu n)`.
/// This holds whenever the graph has no `zeta`-sparse cuts and
/// `nu (n + d) < zeta tau (1 - tau) n`.  Exhaustive when `|a| <= 20`,
/// sampled beyond; returns a violating `X` or `None`.
pub fn bipartite_expansion_check(
    g: &impl HostGraph,
    a: &[usize],
    b: &[usize],
    nu: f64,
    tau: f64,
    trials: usize,
    seed: u64,
) -> Result<Option<Vec<usize>>, ExpansionError> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let n = g.order();
    if a.len() != b.len() || a.len() + b.len() != n {
        return Err(ExpansionError::BadBipartition(format!(
            "parts of size {} and {} in a graph of order {n}",
            a.len(),
            b.len()
        )));
    }
    let a_set = VertexSet::from_iter(n, a.iter().copied());
    let b_set = VertexSet::from_iter(n, b.iter().copied());
    if a.iter().any(|&v| b_set.contains(v)) {
        return Err(ExpansionError::BadBipartition(
            "parts overlap".to_string(),
        ));
    }
    for &v in a {
        if g.count_neighbors_in(v, &a_set) > 0 {
            return Err(ExpansionError::BadBipartition(format!(
                "edge inside part at vertex {v}"
            )));
        }
    }
    if g.regularity().is_none() {
        return Err(ExpansionError::BadBipartition(
            "graph is not regular".to_string(),
        ));
    }

    let t = ceil_count(nu * n as f64);
    let lo = ceil_count(tau * n as f64).max(1);
    let hi = floor_count((0.5 - tau) * n as f64).min(a.len());
    if lo > hi {
        return Ok(None); // window empty: vacuous pass
    }

    let fails = |x: &VertexSet| -> bool {
        let rn = robust_neighborhood(g, x, nu);
        rn.len() < x.len() + t
    };

    if a.len() <= ROBUST_EXACT_MAX {
        let full: u32 = (1u32 << a.len()) - 1;
        for mask in 1..=full {
            let size = mask.count_ones() as usize;
            if size < lo || size > hi {
                continue;
            }
            let x = VertexSet::from_iter(
                n,
                (0..a.len()).filter(|&i| mask & (1 << i) != 0).map(|i| a[i]),
            );
            if fails(&x) {
                return Ok(Some(x.to_vec()));
            }
        }
        return Ok(None);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xb1aa_7e17);
    let mut pool: Vec<usize> = a.to_vec();
    for _ in 0..trials {
        use rand::Rng;
        let size = rng.gen_range(lo..=hi);
        pool.shuffle(&mut rng);
        let x = VertexSet::from_iter(n, pool[..size].iter().copied());
        if fails(&x) {
            return Ok(Some(x.to_vec()));
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Regularity decomposition
// ---------------------------------------------------------------------------

/// Sparse-cut threshold used when certifying clusters: `epsilon sigma^3 /
/// 1000`, where `sigma` is the generator density of the original graph.
pub fn cluster_cut_threshold(epsilon: f64, sigma: f64) -> f64 {
    epsilon * sigma.powi(3) / 1000.0
}

pub const DEFAULT_EPSILON: f64 = 0.5;

#[derive(Clone, Debug, Serialize)]
pub struct ClusterReport {
    pub coset: usize,
    /// Size of the conjugated generator set surviving in the cluster.
    pub generators_kept: usize,
    pub assessment: CutAssessment,
}

/// A certified decomposition: the graph partitions into coset clusters,
/// each an expander-certified Cayley graph of the chosen subgroup.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub subgroup: Subgroup,
    pub partition: CosetPartition,
    pub sigma: f64,
    pub epsilon: f64,
    pub cluster_zeta: f64,
    /// False when the subgroup scan was truncated by the enumeration limit.
    pub scan_complete: bool,
    /// True when one certificate was reused across all cosets (abelian
    /// groups, where every cluster is the same graph).
    pub shared_certificate: bool,
    pub clusters: Vec<ClusterReport>,
}

impl Decomposition {
    /// True when every cluster carries exact or spectral certification;
    /// false when any cluster was accepted on clean probe evidence alone.
    pub fn fully_certified(&self) -> bool {
        self.clusters.iter().all(|c| c.assessment.certified)
    }
}

/// Why a candidate subgroup was rejected during the decomposition scan.
#[derive(Clone, Debug)]
pub enum SubgroupRejection {
    TooFewGenerators { kept: usize, needed: f64 },
    ClusterNotCertified { coset: usize },
}

#[derive(Clone, Debug)]
pub struct SubgroupAttempt {
    pub order: usize,
    pub rejection: SubgroupRejection,
}

#[derive(thiserror::Error, Debug)]
pub enum DecompositionError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(
        "no subgroup yields certifiable clusters ({} candidates tried, scan complete: {scan_complete})",
        attempts.len()
    )]
    NoCertifiableSubgroup {
        attempts: Vec<SubgroupAttempt>,
        scan_complete: bool,
    },
}

/// Scans subgroups in decreasing order and returns the first whose coset
/// clusters all (a) retain at least `(1 - epsilon) |S|` generators and (b)
/// pass the cluster sparse-cut assessment (certified, or a clean probe
/// when no certificate is computable).  The whole group itself is the
/// first candidate, so an expander input decomposes into a single cluster.
pub fn regularity_decomposition(
    group: &Arc<Group>,
    gens: &GeneratorSet,
    epsilon: f64,
) -> Result<Decomposition, DecompositionError> {
    let sigma = gens.density(group);
    let zeta = cluster_cut_threshold(epsilon, sigma);
    let min_kept = (1.0 - epsilon) * gens.len() as f64 - COUNT_EPS;
    let list = enumerate_subgroups(group, DEFAULT_SUBGROUP_ENUM_LIMIT);
    let abelian = group.is_abelian();
    let mut attempts: Vec<SubgroupAttempt> = Vec::new();
    for sub in &list.subgroups {
        if sub.order() < 3 {
            continue;
        }
        let partition = right_cosets(group, sub);
        let mut clusters: Vec<ClusterReport> = Vec::with_capacity(partition.count());
        let mut rejection: Option<SubgroupRejection> = None;
        if abelian {
            // Every cluster of an abelian group is the same graph, so one
            // certificate covers all cosets.
            let cluster = coset_cluster(group, gens, sub, partition.representative(0))?;
            let kept = cluster.graph.degree_value();
            if (kept as f64) < min_kept {
                rejection = Some(SubgroupRejection::TooFewGenerators {
                    kept,
                    needed: min_kept,
                });
            } else {
                let assessment = assess_sparse_cuts_cayley(&cluster.graph, zeta);
                if !assessment.clean() {
                    rejection = Some(SubgroupRejection::ClusterNotCertified { coset: 0 });
                } else {
                    for coset in 0..partition.count() {
                        clusters.push(ClusterReport {
                            coset,
                            generators_kept: kept,
                            assessment: assessment.clone(),
                        });
                    }
                }
            }
        } else {
            for coset in 0..partition.count() {
                let rep = partition.representative(coset);
                let cluster = coset_cluster(group, gens, sub, rep)?;
                let kept = cluster.graph.degree_value();
                if (kept as f64) < min_kept {
                    rejection = Some(SubgroupRejection::TooFewGenerators {
                        kept,
                        needed: min_kept,
                    });
                    break;
                }
                let assessment = assess_sparse_cuts_cayley(&cluster.graph, zeta);
                if !assessment.clean() {
                    rejection = Some(SubgroupRejection::ClusterNotCertified { coset });
                    break;
                }
                clusters.push(ClusterReport {
                    coset,
                    generators_kept: kept,
                    assessment,
                });
            }
        }
        match rejection {
            None => {
                return Ok(Decomposition {
                    subgroup: sub.clone(),
                    partition,
                    sigma,
                    epsilon,
                    cluster_zeta: zeta,
                    scan_complete: list.complete,
                    shared_certificate: abelian,
                    clusters,
                });
            }
            Some(r) => attempts.push(SubgroupAttempt {
                order: sub.order(),
                rejection: r,
            }),
        }
    }
    Err(DecompositionError::NoCertifiableSubgroup {
        attempts,
        scan_complete: list.complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{two_coloring, Graph};
    use crate::group::{build_group, GroupSpec};
    use proptest::prelude::*;

    fn circulant_cayley(n: u64, offsets: &[usize]) -> CayleyGraph {
        let g = Arc::new(build_group(&GroupSpec::Cyclic(n)).unwrap());
        let mut elems = Vec::new();
        for &o in offsets {
            elems.push(o);
            elems.push(g.inv(o));
        }
        let s = GeneratorSet::new(&g, &elems).unwrap();
        CayleyGraph::new(g, s)
    }

    fn two_blocks_bridged() -> Graph {
        let mut g = Graph::new(8);
        for u in 0..4 {
            for v in u + 1..4 {
                g.add_edge(u, v);
                g.add_edge(4 + u, 4 + v);
            }
        }
        g.add_edge(0, 4);
        g
    }

    #[test]
    fn counting_thresholds_are_stable() {
        assert_eq!(ceil_count(3.0), 3);
        assert_eq!(ceil_count(3.0 + 1e-10), 3);
        assert_eq!(ceil_count(2.5), 3);
        assert_eq!(ceil_count(0.2 * 35.0), 7);
        assert_eq!(ceil_count(0.0), 0);
        assert_eq!(ceil_count(1e-12), 0);
        assert_eq!(floor_count(3.0 - 1e-10), 3);
        assert_eq!(floor_count(2.5), 2);
    }

    #[test]
    fn sparsest_cut_of_even_cycle() {
        let g = Graph::cycle(8);
        let cut = sparsest_cut_exact(&g).unwrap();
        assert_eq!(cut.side, vec![0, 1, 2, 3]);
        assert_eq!(cut.cut_edges, 2);
        assert!((cut.ratio - 0.125).abs() < 1e-12);
        assert!(find_sparse_cut_exact(&g, 0.125).unwrap().is_some());
        assert!(find_sparse_cut_exact(&g, 0.12).unwrap().is_none());
    }

    #[test]
    fn sparsest_cut_of_complete_graph() {
        let g = Graph::complete(6);
        let cut = sparsest_cut_exact(&g).unwrap();
        assert!((cut.ratio - 1.0).abs() < 1e-12);
        assert_eq!(cut.side, vec![0]);
        assert!(find_sparse_cut_exact(&Graph::complete(5), 0.9)
            .unwrap()
            .is_none());
    }

    #[test]
    fn single_edge_is_not_half_sparse() {
        let g = Graph::from_edges(2, [(0, 1)]);
        assert!(find_sparse_cut_exact(&g, 0.5).unwrap().is_none());
        let cut = sparsest_cut_exact(&g).unwrap();
        assert!((cut.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sparsest_cut_of_path() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        let cut = sparsest_cut_exact(&g).unwrap();
        assert_eq!(cut.side, vec![0, 1]);
        assert!((cut.ratio - 0.25).abs() < 1e-12);
    }

    #[test]
    fn disconnected_graph_has_zero_ratio_cut() {
        let mut g = Graph::new(6);
        for (u, v) in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)] {
            g.add_edge(u, v);
        }
        let cut = sparsest_cut_exact(&g).unwrap();
        assert_eq!(cut.ratio, 0.0);
        assert_eq!(cut.side, vec![0, 1, 2]);
    }

    #[test]
    fn character_spectrum_matches_closed_forms() {
        // C_8: lambda2 = 2 cos(pi/4) = sqrt(2); lambda_min = -2.
        let c8 = circulant_cayley(8, &[1]);
        let est = cayley_lambda2(&c8).unwrap();
        assert_eq!(est.method, SpectralMethod::CharacterSum);
        assert!((est.lambda2 - 2.0 * (std::f64::consts::PI / 4.0).cos()).abs() < 1e-9);
        assert!((est.lambda_min.unwrap() + 2.0).abs() < 1e-9);

        // K_7 as a circulant over Z_7: lambda2 = -1.
        let k7 = circulant_cayley(7, &[1, 2, 3]);
        let est = cayley_lambda2(&k7).unwrap();
        assert!((est.lambda2 + 1.0).abs() < 1e-9);
    }

    #[test]
    fn power_iteration_agrees_with_characters() {
        let cay = circulant_cayley(24, &[1, 3, 8]);
        let exact = cayley_lambda2(&cay).unwrap();
        let pi = power_iteration_lambda2(&cay).unwrap();
        assert!(pi.converged);
        assert!(
            (pi.lambda2 - exact.lambda2).abs() < 1e-6,
            "pi {} vs exact {}",
            pi.lambda2,
            exact.lambda2
        );
    }

    #[test]
    fn power_iteration_on_petersen() {
        // Spectrum of the Petersen graph: 3, 1 (x5), -2 (x4).
        let mut g = Graph::new(10);
        for i in 0..5 {
            g.add_edge(i, (i + 1) % 5);
            g.add_edge(5 + i, 5 + (i + 2) % 5);
            g.add_edge(i, 5 + i);
        }
        let est = power_iteration_lambda2(&g).unwrap();
        assert!(est.converged);
        assert!((est.lambda2 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn disconnected_regular_graph_certifies_nothing() {
        let mut g = Graph::new(8);
        for b in [0usize, 4] {
            for u in 0..4 {
                for v in u + 1..4 {
                    g.add_edge(b + u, b + v);
                }
            }
        }
        let est = power_iteration_lambda2(&g).unwrap();
        assert!((est.lambda2 - 3.0).abs() < 1e-6); // lambda2 = d
        let assessment = spectral_assessment(est, 3, 8, 1e-6);
        assert!(!assessment.certified);
    }

    #[test]
    fn spectral_bound_never_exceeds_true_ratio() {
        // e(X,Y) >= (d - lambda2)|X||Y|/n, so the certified threshold is a
        // lower bound for the exact minimum ratio.
        for (n, offsets) in [(16u64, vec![1usize, 2]), (20, vec![1, 3, 7]), (12, vec![2, 3])] {
            let cay = circulant_cayley(n, &offsets);
            let exact = sparsest_cut_exact(&cay).unwrap();
            let est = cayley_lambda2(&cay).unwrap();
            let bound = (cay.degree_value() as f64 - est.lambda2) / n as f64;
            assert!(
                bound <= exact.ratio + 1e-9,
                "n={n} offsets={offsets:?}: bound {bound} ratio {}",
                exact.ratio
            );
        }
    }

    #[test]
    fn assessment_modes() {
        // Small: exact evidence.
        let c8 = circulant_cayley(8, &[1]);
        let a = assess_sparse_cuts_cayley(&c8, 0.12);
        assert!(a.certified);
        assert!(matches!(a.evidence, CutEvidence::Exact { .. }));
        let a = assess_sparse_cuts_cayley(&c8, 0.125);
        assert!(!a.certified);
        assert_eq!(a.sparse_cut(), Some(&[0usize, 1, 2, 3][..]));

        // Large: spectral evidence (exact characters).
        let big = circulant_cayley(200, &(1..=20usize).collect::<Vec<_>>());
        let a = assess_sparse_cuts_cayley(&big, 1e-4);
        assert!(a.certified, "{a:?}");
        assert!(matches!(a.evidence, CutEvidence::Spectral { .. }));
    }

    #[test]
    fn probe_finds_planted_bottleneck() {
        let g = two_blocks_bridged();
        let outcome = probe_sparse_cuts(&g, 0.07, &ProbeParams::default());
        let side = outcome.violation.expect("bottleneck should be found");
        let set = VertexSet::from_iter(8, side.iter().copied());
        let (_, ratio) = cut_ratio(&g, &set);
        assert!(ratio <= 0.07 + 1e-12);
        // Exact enumeration agrees on the true minimum.
        let exact = sparsest_cut_exact(&g).unwrap();
        assert!((exact.ratio - 1.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn coset_probe_finds_subgroup_aligned_cut() {
        // Z_2 x Z_50 with all generators inside {0} x Z_50: the two
        // copies are disconnected from each other, a ratio-0 cut along
        // the index-2 subgroup.
        let g = Arc::new(build_group(&GroupSpec::Abelian(vec![2, 50])).unwrap());
        // Element ids: (a, b) -> 50a + b; generators (0, 1) and (0, 49).
        let s = GeneratorSet::new(&g, &[1, 49]).unwrap();
        let cay = CayleyGraph::new(Arc::clone(&g), s);
        let out = probe_sparse_cuts_cayley(&cay, 1e-6, &ProbeParams::default());
        let side = out.violation.expect("coset cut should be found");
        let set = VertexSet::from_iter(100, side.iter().copied());
        let (crossing, ratio) = cut_ratio(&cay, &set);
        assert_eq!(crossing, 0);
        assert_eq!(ratio, 0.0);
    }

    #[test]
    fn robust_neighborhood_thresholds() {
        let g = Graph::cycle(8);
        let u = VertexSet::from_iter(8, [0, 1, 2]);
        // nu = 0.25: need ceil(2) = 2 neighbors inside.
        assert_eq!(robust_neighborhood(&g, &u, 0.25).to_vec(), vec![1]);
        // nu = 1/8: need 1 neighbor inside.
        assert_eq!(
            robust_neighborhood(&g, &u, 0.125).to_vec(),
            vec![0, 1, 2, 3, 7]
        );
        // nu = 0: everything qualifies.
        assert_eq!(robust_neighborhood(&g, &u, 0.0).len(), 8);

        // C_6 with a size-3 arc at threshold one.
        let c6 = Graph::cycle(6);
        let u = VertexSet::from_iter(6, [0, 1, 2]);
        assert_eq!(
            robust_neighborhood(&c6, &u, 1.0 / 6.0).to_vec(),
            vec![0, 1, 2, 3, 5]
        );
        // Empty set: empty neighborhood (at positive threshold).
        let empty = VertexSet::new(6);
        assert!(robust_neighborhood(&c6, &empty, 1.0 / 6.0).is_empty());
    }

    #[test]
    fn directed_robust_reach_uses_in_neighbors() {
        let mut d = Digraph::new(4);
        d.add_arc(0, 1);
        d.add_arc(2, 1);
        d.add_arc(1, 3);
        let u = VertexSet::from_iter(4, [0, 2]);
        // Threshold ceil(0.5 * 4) = 2: only vertex 1 has two in-neighbors
        // in U.
        assert_eq!(robust_in_reach(&d, &u, 0.5).to_vec(), vec![1]);
    }

    #[test]
    fn robust_expansion_flags_weak_graphs() {
        // C_8 fails at nu = tau = 1/4: the arc {0,1,2,3} has robust
        // neighborhood {1,2}, entirely inside itself.
        let g = Graph::cycle(8);
        let arc = VertexSet::from_iter(8, [0, 1, 2, 3]);
        assert!(violates_robust_expansion(&g, &arc, 0.25, 0.25));
        let violation = robust_expansion_violation_exact(&g, 0.25, 0.25).unwrap();
        assert!(violation.is_some());

        // K_8 passes at the same parameters, and at the gentler ones too.
        let k = Graph::complete(8);
        assert!(robust_expansion_violation_exact(&k, 0.25, 0.25)
            .unwrap()
            .is_none());
        assert!(robust_expander_probe(&k, 0.1, 0.25, 0, 0).is_none());

        // C_8 at nu = 0.3 needs 3 neighbors inside U, more than the
        // degree: every window set violates.
        assert!(robust_expander_probe(&g, 0.3, 0.25, 0, 0).is_some());
    }

    #[test]
    fn bridged_blocks_violate_robust_expansion() {
        let g = two_blocks_bridged();
        let block = VertexSet::from_iter(8, [0, 1, 2, 3]);
        assert!(violates_robust_expansion(&g, &block, 0.2, 0.25));
        let found = robust_expander_probe(&g, 0.2, 0.25, 0, 0).expect("violation");
        assert!(violates_robust_expansion(&g, &found, 0.2, 0.25));
    }

    #[test]
    fn no_sparse_cut_implies_robust_expansion_spot_check() {
        let g = Graph::cycle(8);
        let exact = sparsest_cut_exact(&g).unwrap();
        let zeta = exact.ratio * 0.99; // no zeta-sparse cut at this level
        assert!(find_sparse_cut_exact(&g, zeta).unwrap().is_none());
        for tau in [0.1, 0.25, 0.4] {
            let nu = implied_robustness(zeta, tau);
            assert!(
                robust_expansion_violation_exact(&g, nu, tau)
                    .unwrap()
                    .is_none(),
                "tau={tau}"
            );
        }
    }

    #[test]
    fn strong_out_expansion_on_doubled_complete_graph() {
        let d = Digraph::doubled(&Graph::complete(8));
        // K_8: RN+ of any midsize U is everything.
        assert!(strong_out_expansion_probe(&d, 0.1, 0.25, 0, 0).is_none());
        // A directed cycle expands by one vertex per step only.
        let mut c = Digraph::new(10);
        for i in 0..10 {
            c.add_arc(i, (i + 1) % 10);
        }
        assert!(strong_out_expansion_probe(&c, 0.2, 0.25, 0, 0).is_some());
    }

    #[test]
    fn bipartite_check_passes_complete_and_flags_cycle() {
        let kb = Graph::bipartite_circulant(4, &[0, 1, 2, 3]);
        let (a, b) = two_coloring(&kb).expect("bipartite");
        let (a, b) = (a.to_vec(), b.to_vec());
        let res = bipartite_expansion_check(&kb, &a, &b, 0.1, 0.125, 0, 0).unwrap();
        assert_eq!(res, None);

        let c8 = Graph::cycle(8);
        let (a, b) = two_coloring(&c8).expect("bipartite");
        let (a, b) = (a.to_vec(), b.to_vec());
        let res = bipartite_expansion_check(&c8, &a, &b, 0.2, 0.125, 0, 0).unwrap();
        let x = res.expect("counterexample");
        let x_set = VertexSet::from_iter(8, x.iter().copied());
        let rn = robust_neighborhood(&c8, &x_set, 0.2);
        assert!(rn.len() < x.len() + ceil_count(0.2 * 8.0));

        // Window empty: vacuous pass.
        let res = bipartite_expansion_check(&c8, &a, &b, 0.2, 0.3, 0, 0).unwrap();
        assert_eq!(res, None);
    }

    #[test]
    fn bipartite_check_validates_input() {
        let c8 = Graph::cycle(8);
        let bad = bipartite_expansion_check(&c8, &[0, 1, 2, 3], &[4, 5, 6, 7], 0.1, 0.1, 0, 0);
        assert!(matches!(bad, Err(ExpansionError::BadBipartition(_))));
        let unbalanced = bipartite_expansion_check(&c8, &[0, 2], &[1, 3, 5, 7], 0.1, 0.1, 0, 0);
        assert!(matches!(unbalanced, Err(ExpansionError::BadBipartition(_))));
    }

    #[test]
    fn bipartite_expansion_consistency_on_long_even_cycle() {
        // C_16 with zeta below the exact minimum ratio and nu chosen to
        // satisfy nu (n + d) < zeta tau (1 - tau) n.
        let g = Graph::cycle(16);
        let exact = sparsest_cut_exact(&g).unwrap();
        let zeta = exact.ratio * 0.96;
        let (tau, d, n) = (0.25, 2.0, 16.0);
        let nu = zeta * tau * (1.0 - tau) * n / (n + d) * 0.9;
        assert!(nu * (n + d) < zeta * tau * (1.0 - tau) * n);
        let (a, b) = two_coloring(&g).expect("bipartite");
        let (a, b) = (a.to_vec(), b.to_vec());
        let res = bipartite_expansion_check(&g, &a, &b, nu, tau, 0, 0).unwrap();
        assert_eq!(res, None);
    }

    #[test]
    fn expansion_params_budgets() {
        let p = ExpansionParams::from_no_sparse_cuts(0.2, 0.25);
        assert!((p.nu - 0.00625).abs() < 1e-12);
        assert_eq!(p.max_path_length(), 161);
        assert_eq!(p.connect_budget(10_000), 0); // nu m / 100 = 0.625
        assert_eq!(p.connect_budget(100_000), 6);
        let q = ExpansionParams::from_density(0.5);
        assert!((q.tau - 0.005).abs() < 1e-12);
        assert!(q.nu > 0.0 && q.nu < 1e-7);
    }

    #[test]
    fn decomposition_single_cluster_for_expander() {
        let g = Arc::new(build_group(&GroupSpec::Cyclic(12)).unwrap());
        let s = GeneratorSet::new(&g, &[1, 11]).unwrap();
        let d = regularity_decomposition(&g, &s, DEFAULT_EPSILON).unwrap();
        assert!(d.subgroup.is_whole_group(&g));
        assert_eq!(d.clusters.len(), 1);
        assert!(d.clusters[0].assessment.certified);
        assert!(d.fully_certified());
    }

    #[test]
    fn decomposition_splits_disconnected_generators() {
        // Z_6 with S = {2,4}: two triangles.  The whole group fails (zero
        // ratio cut), the order-3 subgroup keeps both generators and each
        // cluster is a triangle.
        let g = Arc::new(build_group(&GroupSpec::Cyclic(6)).unwrap());
        let s = GeneratorSet::new(&g, &[2, 4]).unwrap();
        let d = regularity_decomposition(&g, &s, DEFAULT_EPSILON).unwrap();
        assert_eq!(d.subgroup.members(), &[0, 2, 4]);
        assert_eq!(d.clusters.len(), 2);
        assert_eq!(d.clusters[0].generators_kept, 2);
        assert!(d.shared_certificate);
    }

    #[test]
    fn decomposition_retains_generators_inside_subgroup() {
        // Z_2 x Z_9 with all generators inside {0} x Z_9: the certifiable
        // subgroup keeps every generator.
        let g = Arc::new(build_group(&GroupSpec::Abelian(vec![2, 9])).unwrap());
        let s = GeneratorSet::new(&g, &[1, 8, 2, 7]).unwrap();
        let d = regularity_decomposition(&g, &s, DEFAULT_EPSILON).unwrap();
        assert_eq!(d.subgroup.order(), 9);
        assert_eq!(d.clusters.len(), 2);
        assert_eq!(d.clusters[0].generators_kept, 4);
    }

    #[test]
    fn decomposition_fails_when_nothing_certifies() {
        // Z_8 with S = {4}: a perfect matching; every subgroup either
        // loses the generator or stays disconnected.
        let g = Arc::new(build_group(&GroupSpec::Cyclic(8)).unwrap());
        let s = GeneratorSet::new(&g, &[4]).unwrap();
        match regularity_decomposition(&g, &s, DEFAULT_EPSILON) {
            Err(DecompositionError::NoCertifiableSubgroup {
                attempts,
                scan_complete,
            }) => {
                assert!(!attempts.is_empty());
                assert!(scan_complete);
                assert!(attempts
                    .iter()
                    .any(|a| matches!(a.rejection, SubgroupRejection::ClusterNotCertified { .. })));
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn robust_neighborhood_monotone(
            seed in 0u64..500,
            n in 3usize..20,
            nu in 0.0f64..0.6,
        ) {
            use rand::Rng;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut g = Graph::new(n);
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(0.4) {
                        g.add_edge(u, v);
                    }
                }
            }
            let big: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            let small: Vec<usize> = big.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
            let rn_small = robust_neighborhood(&g, &VertexSet::from_iter(n, small), nu);
            let rn_big = robust_neighborhood(&g, &VertexSet::from_iter(n, big), nu);
            prop_assert!(rn_small.is_subset(&rn_big));
        }
    }
}
