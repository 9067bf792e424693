//! Finite groups with deterministic element indexing.
//!
//! Elements are ids `0..n` with the identity always at index 0 (raw tables
//! with the identity elsewhere are relabeled on ingestion).  Three backings
//! share one interface: explicit composition tables for small or non-abelian
//! groups, a mixed-radix form for abelian groups (so `Z_n` up to the
//! configured limit needs no table), and an embedded form that views a
//! subgroup through its parent's composition.
//!
//! The module also carries the subgroup machinery the decomposition pipeline
//! relies on: closure under composition and inverses, the doubling greedy
//! that extracts a generating subset of logarithmic size, right coset
//! partitions, and a join-closure enumeration of all subgroups.

use crate::bits::VertexSet;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::sync::Arc;

/// Largest order for groups without an explicit table (cyclic and abelian).
pub const DEFAULT_IMPLICIT_ORDER_LIMIT: u64 = 1_000_000;
/// Largest order for table-backed groups (raw tables, catalog non-abelian,
/// permutation closures).
pub const DEFAULT_TABLE_ORDER_LIMIT: u64 = 10_000;
/// Largest order for generic subgroup enumeration; beyond it the result is
/// flagged incomplete.
pub const DEFAULT_SUBGROUP_ENUM_LIMIT: usize = 5_000;

#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("multiplication table is not square: row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("table entry out of range at ({row},{col}): {value} >= {n}")]
    EntryOutOfRange {
        row: usize,
        col: usize,
        value: usize,
        n: usize,
    },
    #[error("row {index} of the table is not a permutation")]
    RowNotPermutation { index: usize },
    #[error("column {index} of the table is not a permutation")]
    ColNotPermutation { index: usize },
    #[error("table has no two-sided identity element")]
    NoIdentity,
    #[error("element {element} has no two-sided inverse")]
    NoInverse { element: usize },
    #[error("associativity fails at ({a},{b},{c}): ({a}*{b})*{c} != {a}*({b}*{c})")]
    NotAssociative { a: usize, b: usize, c: usize },
    #[error("group order {order} exceeds the configured limit {limit}")]
    OrderLimit { order: u64, limit: u64 },
    #[error("bad group parameter: {what}")]
    BadParameter { what: String },
    #[error("element {element} out of range for a group of order {n}")]
    ElementOutOfRange { element: usize, n: usize },
    #[error("generator {element} is the identity")]
    IdentityGenerator { element: usize },
    #[error("generator set is not symmetric: {element} present without its inverse {inverse}")]
    NotSymmetric { element: usize, inverse: usize },
    #[error(
        "generators span a proper subgroup of order {order} (group order {n}), members {members:?}"
    )]
    NotGenerating {
        order: usize,
        n: usize,
        members: Vec<usize>,
    },
    #[error("member list does not form a subgroup: {why}")]
    NotASubgroup { why: String },
    #[error("cannot parse group spec '{input}': {why}")]
    Parse { input: String, why: String },
}

/// How many random triples the associativity check samples when the order is
/// too large for the exhaustive cubic scan.
pub const ASSOCIATIVITY_SAMPLES: usize = 100_000;
const ASSOCIATIVITY_EXHAUSTIVE_MAX: usize = 64;

// ---------------------------------------------------------------------------
// Specs and serialization
// ---------------------------------------------------------------------------

/// Recipe for constructing a group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupSpec {
    /// `Z_n`.
    Cyclic(u64),
    /// Dihedral group of a regular `n`-gon, order `2n`.
    Dihedral(u64),
    /// All permutations of `k` points, order `k!`.
    Symmetric(u32),
    /// Even permutations of `k` points, order `k!/2`.
    Alternating(u32),
    /// Quaternion group `{±1, ±i, ±j, ±k}`, order 8.
    Quaternion,
    /// Direct sum of cyclic groups with the given moduli.
    Abelian(Vec<u64>),
    /// Explicit composition table.
    Table(Vec<Vec<usize>>),
    /// Subgroup of `S_degree` generated by the given one-line permutations.
    Permutation {
        degree: usize,
        generators: Vec<Vec<usize>>,
    },
}

impl GroupSpec {
    /// Parses compact CLI syntax: `cyclic:12`, `dihedral:4`, `symmetric:4`,
    /// `alternating:4`, `quaternion`, `abelian:2,2,3`.
    pub fn parse(input: &str) -> Result<GroupSpec, GroupError> {
        let fail = |why: &str| GroupError::Parse {
            input: input.to_string(),
            why: why.to_string(),
        };
        let (name, args) = match input.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (input, None),
        };
        let one_u64 = |args: Option<&str>| -> Result<u64, GroupError> {
            args.ok_or_else(|| fail("missing parameter"))?
                .parse()
                .map_err(|_| fail("parameter is not a number"))
        };
        match name {
            "cyclic" => Ok(GroupSpec::Cyclic(one_u64(args)?)),
            "dihedral" => Ok(GroupSpec::Dihedral(one_u64(args)?)),
            "symmetric" => Ok(GroupSpec::Symmetric(one_u64(args)? as u32)),
            "alternating" => Ok(GroupSpec::Alternating(one_u64(args)? as u32)),
            "quaternion" => Ok(GroupSpec::Quaternion),
            "abelian" => {
                let parts = args.ok_or_else(|| fail("missing factors"))?;
                let factors = parts
                    .split(',')
                    .map(|p| p.trim().parse().map_err(|_| fail("bad factor")))
                    .collect::<Result<Vec<u64>, _>>()?;
                Ok(GroupSpec::Abelian(factors))
            }
            _ => Err(fail("unknown catalog name")),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            GroupSpec::Cyclic(n) => format!("cyclic({n})"),
            GroupSpec::Dihedral(n) => format!("dihedral({n})"),
            GroupSpec::Symmetric(k) => format!("symmetric({k})"),
            GroupSpec::Alternating(k) => format!("alternating({k})"),
            GroupSpec::Quaternion => "quaternion".to_string(),
            GroupSpec::Abelian(fs) => {
                let parts: Vec<String> = fs.iter().map(|f| f.to_string()).collect();
                format!("abelian({})", parts.join(","))
            }
            GroupSpec::Table(t) => format!("table(order {})", t.len()),
            GroupSpec::Permutation { degree, generators } => {
                format!("perm(degree {degree}, {} generators)", generators.len())
            }
        }
    }
}

/// On-disk JSON form of a group.
#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroupJson {
    Table { table: Vec<Vec<usize>> },
    Perm {
        degree: usize,
        generators: Vec<Vec<usize>>,
    },
    Catalog { name: String, params: Vec<u64> },
}

impl GroupJson {
    pub fn to_spec(&self) -> Result<GroupSpec, GroupError> {
        match self {
            GroupJson::Table { table } => Ok(GroupSpec::Table(table.clone())),
            GroupJson::Perm { degree, generators } => Ok(GroupSpec::Permutation {
                degree: *degree,
                generators: generators.clone(),
            }),
            GroupJson::Catalog { name, params } => {
                let spec = match (name.as_str(), params.as_slice()) {
                    ("cyclic", [n]) => GroupSpec::Cyclic(*n),
                    ("dihedral", [n]) => GroupSpec::Dihedral(*n),
                    ("symmetric", [k]) => GroupSpec::Symmetric(*k as u32),
                    ("alternating", [k]) => GroupSpec::Alternating(*k as u32),
                    ("quaternion", []) => GroupSpec::Quaternion,
                    ("abelian", fs) if !fs.is_empty() => GroupSpec::Abelian(fs.to_vec()),
                    _ => {
                        return Err(GroupError::Parse {
                            input: format!("{name} {params:?}"),
                            why: "unknown catalog entry or wrong parameter count".into(),
                        })
                    }
                };
                Ok(spec)
            }
        }
    }

    pub fn from_spec(spec: &GroupSpec) -> GroupJson {
        match spec {
            GroupSpec::Cyclic(n) => GroupJson::Catalog {
                name: "cyclic".into(),
                params: vec![*n],
            },
            GroupSpec::Dihedral(n) => GroupJson::Catalog {
                name: "dihedral".into(),
                params: vec![*n],
            },
            GroupSpec::Symmetric(k) => GroupJson::Catalog {
                name: "symmetric".into(),
                params: vec![*k as u64],
            },
            GroupSpec::Alternating(k) => GroupJson::Catalog {
                name: "alternating".into(),
                params: vec![*k as u64],
            },
            GroupSpec::Quaternion => GroupJson::Catalog {
                name: "quaternion".into(),
                params: vec![],
            },
            GroupSpec::Abelian(fs) => GroupJson::Catalog {
                name: "abelian".into(),
                params: fs.clone(),
            },
            GroupSpec::Table(t) => GroupJson::Table { table: t.clone() },
            GroupSpec::Permutation { degree, generators } => GroupJson::Perm {
                degree: *degree,
                generators: generators.clone(),
            },
        }
    }
}

// ---------------------------------------------------------------------------
// The group type
// ---------------------------------------------------------------------------

#[derive(Clone)]
enum Backing {
    /// Row-major `n x n` composition table with a precomputed inverse table.
    Table { table: Vec<u32>, inverse: Vec<u32> },
    /// Mixed-radix abelian group: element `id` decomposes into coordinates
    /// `x_i = (id / weight_i) % factor_i` and composition adds coordinates.
    Abelian { factors: Vec<u64>, weights: Vec<u64> },
    /// Subgroup viewed through its parent: local id `i` is parent element
    /// `members[i]`, with `members` ascending (so the identity is local 0).
    Embedded {
        parent: Arc<Group>,
        members: Arc<Vec<usize>>,
        local_of: Arc<Vec<u32>>,
    },
}

/// A finite group on elements `0..n` with identity 0.
#[derive(Clone)]
pub struct Group {
    n: usize,
    backing: Backing,
    name: String,
}

impl std::fmt::Debug for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Group({}, order {})", self.name, self.n)
    }
}

/// Builds and validates a group from a spec with the default order limits.
pub fn build_group(spec: &GroupSpec) -> Result<Group, GroupError> {
    build_group_with_limits(spec, DEFAULT_IMPLICIT_ORDER_LIMIT, DEFAULT_TABLE_ORDER_LIMIT)
}

/// Builds a group with explicit order limits (implicit backings and table
/// backings respectively).
pub fn build_group_with_limits(
    spec: &GroupSpec,
    implicit_limit: u64,
    table_limit: u64,
) -> Result<Group, GroupError> {
    let name = spec.describe();
    match spec {
        GroupSpec::Cyclic(n) => Group::abelian_backed(&[*n], implicit_limit, name),
        GroupSpec::Abelian(fs) => Group::abelian_backed(fs, implicit_limit, name),
        GroupSpec::Dihedral(n) => {
            if *n == 0 {
                return Err(GroupError::BadParameter {
                    what: "dihedral parameter must be >= 1".into(),
                });
            }
            let order = 2 * n;
            check_limit(order, table_limit)?;
            Ok(Group::from_table_unchecked(dihedral_table(*n as usize), name))
        }
        GroupSpec::Symmetric(k) => {
            let order = factorial_checked(*k as u64, table_limit)?;
            let perms = all_permutations(*k as usize);
            debug_assert_eq!(perms.len() as u64, order);
            Ok(Group::from_permutations(perms, name))
        }
        GroupSpec::Alternating(k) => {
            if *k < 3 {
                return Err(GroupError::BadParameter {
                    what: "alternating needs at least 3 points".into(),
                });
            }
            factorial_checked(*k as u64, table_limit.saturating_mul(2))?;
            let perms: Vec<Vec<usize>> = all_permutations(*k as usize)
                .into_iter()
                .filter(|p| permutation_is_even(p))
                .collect();
            check_limit(perms.len() as u64, table_limit)?;
            Ok(Group::from_permutations(perms, name))
        }
        GroupSpec::Quaternion => Ok(Group::from_table_unchecked(quaternion_table(), name)),
        GroupSpec::Table(rows) => {
            check_limit(rows.len() as u64, table_limit)?;
            let table = validate_table(rows)?;
            Ok(Group::from_table_unchecked(table, name))
        }
        GroupSpec::Permutation { degree, generators } => {
            let perms = permutation_closure(*degree, generators, table_limit)?;
            Ok(Group::from_permutations(perms, name))
        }
    }
}

fn check_limit(order: u64, limit: u64) -> Result<(), GroupError> {
    if order == 0 {
        return Err(GroupError::BadParameter {
            what: "group order must be at least 1".into(),
        });
    }
    if order > limit {
        return Err(GroupError::OrderLimit { order, limit });
    }
    Ok(())
}

fn factorial_checked(k: u64, limit: u64) -> Result<u64, GroupError> {
    let mut acc: u64 = 1;
    for i in 2..=k {
        acc = acc.saturating_mul(i);
        if acc > limit {
            return Err(GroupError::OrderLimit { order: acc, limit });
        }
    }
    check_limit(acc, limit)?;
    Ok(acc)
}

impl Group {
    fn abelian_backed(factors: &[u64], limit: u64, name: String) -> Result<Group, GroupError> {
        let factors: Vec<u64> = factors.iter().copied().filter(|&f| f > 1).collect();
        let mut order: u64 = 1;
        for &f in &factors {
            order = order.saturating_mul(f);
            check_limit(order, limit)?;
        }
        // Weights make the first factor most significant.
        let mut weights = vec![1u64; factors.len()];
        for i in (0..factors.len().saturating_sub(1)).rev() {
            weights[i] = weights[i + 1] * factors[i + 1];
        }
        Ok(Group {
            n: order as usize,
            backing: Backing::Abelian { factors, weights },
            name,
        })
    }

    fn from_table_unchecked(table: Vec<u32>, name: String) -> Group {
        let n = (table.len() as f64).sqrt().round() as usize;
        debug_assert_eq!(n * n, table.len());
        let mut inverse = vec![0u32; n];
        for a in 0..n {
            for b in 0..n {
                if table[a * n + b] == 0 && table[b * n + a] == 0 {
                    inverse[a] = b as u32;
                    break;
                }
            }
        }
        Group {
            n,
            backing: Backing::Table { table, inverse },
            name,
        }
    }

    fn from_permutations(mut perms: Vec<Vec<usize>>, name: String) -> Group {
        perms.sort();
        let n = perms.len();
        let index_of = |p: &[usize]| perms.binary_search_by(|q| q.as_slice().cmp(p)).unwrap() as u32;
        let mut table = vec![0u32; n * n];
        for (a, pa) in perms.iter().enumerate() {
            for (b, pb) in perms.iter().enumerate() {
                let prod = compose_permutations(pa, pb);
                table[a * n + b] = index_of(&prod);
            }
        }
        Group::from_table_unchecked(table, name)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn identity(&self) -> usize {
        0
    }

    /// Composition `a * b`.
    pub fn op(&self, a: usize, b: usize) -> usize {
        debug_assert!(a < self.n && b < self.n);
        match &self.backing {
            Backing::Table { table, .. } => table[a * self.n + b] as usize,
            Backing::Abelian { factors, weights } => {
                let (mut a, mut b, mut out) = (a as u64, b as u64, 0u64);
                for (f, w) in factors.iter().zip(weights) {
                    let xa = a / w;
                    let xb = b / w;
                    a -= xa * w;
                    b -= xb * w;
                    out += ((xa + xb) % f) * w;
                }
                out as usize
            }
            Backing::Embedded {
                parent,
                members,
                local_of,
            } => local_of[parent.op(members[a], members[b])] as usize,
        }
    }

    /// Inverse element.
    pub fn inv(&self, a: usize) -> usize {
        debug_assert!(a < self.n);
        match &self.backing {
            Backing::Table { inverse, .. } => inverse[a] as usize,
            Backing::Abelian { factors, weights } => {
                let (mut a, mut out) = (a as u64, 0u64);
                for (f, w) in factors.iter().zip(weights) {
                    let xa = a / w;
                    a -= xa * w;
                    out += ((f - xa) % f) * w;
                }
                out as usize
            }
            Backing::Embedded {
                parent,
                members,
                local_of,
            } => local_of[parent.inv(members[a])] as usize,
        }
    }

    /// `g * x * g^{-1}`.
    pub fn conjugate(&self, g: usize, x: usize) -> usize {
        self.op(self.op(g, x), self.inv(g))
    }

    /// Multiplicative order of `a`.
    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != 0 {
            x = self.op(x, a);
            k += 1;
            debug_assert!(k <= self.n);
        }
        k
    }

    /// True when the group is commutative.  Exhaustive up to order 512,
    /// sampled (all pairs involving a generating set) beyond.
    pub fn is_abelian(&self) -> bool {
        if matches!(self.backing, Backing::Abelian { .. }) {
            return true;
        }
        if self.n <= 512 {
            for a in 1..self.n {
                for b in a + 1..self.n {
                    if self.op(a, b) != self.op(b, a) {
                        return false;
                    }
                }
            }
            return true;
        }
        // A group is abelian iff a generating set commutes pairwise.
        let gens = self.minimal_generating_sequence();
        for &a in &gens {
            for b in 0..self.n {
                if self.op(a, b) != self.op(b, a) {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_cyclic(&self) -> bool {
        match &self.backing {
            Backing::Abelian { factors, .. } => {
                let mut l: u64 = 1;
                for &f in factors {
                    l = lcm(l, f);
                }
                l == self.n as u64
            }
            _ => (0..self.n).any(|a| self.element_order(a) == self.n),
        }
    }

    /// The cyclic factor moduli when the group has an explicit abelian
    /// backing.  The element with coordinates `x_i` has id
    /// `sum(x_i * weight_i)`, most significant factor first.
    pub fn abelian_factors(&self) -> Option<&[u64]> {
        match &self.backing {
            Backing::Abelian { factors, .. } => Some(factors),
            _ => None,
        }
    }

    /// Mixed-radix coordinates of an element, for abelian-backed groups.
    pub fn abelian_coordinates(&self, x: usize) -> Option<Vec<u64>> {
        match &self.backing {
            Backing::Abelian { factors, weights } => {
                let mut rem = x as u64;
                let mut coords = Vec::with_capacity(factors.len());
                for (f, w) in factors.iter().zip(weights) {
                    let c = rem / w;
                    rem -= c * w;
                    debug_assert!(c < *f);
                    coords.push(c);
                }
                Some(coords)
            }
            _ => None,
        }
    }

    /// Subgroup generated by `gens`: breadth-first closure under composition
    /// and inverses starting from the identity.
    pub fn closure(&self, gens: &[usize]) -> Result<Subgroup, GroupError> {
        for &g in gens {
            if g >= self.n {
                return Err(GroupError::ElementOutOfRange {
                    element: g,
                    n: self.n,
                });
            }
        }
        let mut step: Vec<usize> = Vec::with_capacity(gens.len() * 2);
        for &g in gens {
            step.push(g);
            step.push(self.inv(g));
        }
        step.sort_unstable();
        step.dedup();

        let mut seen = VertexSet::new(self.n);
        seen.insert(0);
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for &g in &step {
                let y = self.op(x, g);
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        Ok(Subgroup::from_sorted_members(seen.to_vec(), self.n))
    }

    /// Shortest generating sequence found by the doubling greedy over all
    /// non-identity elements; used internally for automorphism search.
    fn minimal_generating_sequence(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut span = self.closure(&[]).expect("closure of nothing");
        while span.order() < self.n {
            let next = (1..self.n)
                .find(|&x| !span.contains(x))
                .expect("proper subgroup misses some element");
            gens.push(next);
            span = self.closure(&gens).expect("in-range generators");
        }
        gens
    }

    /// All automorphisms, each as an image table.  Intended for small groups
    /// (order <= 64); the search branches over images of a minimal
    /// generating sequence and verifies the homomorphism property in full.
    pub fn automorphisms(&self) -> Vec<Vec<usize>> {
        assert!(self.n <= 64, "automorphism search is for small groups");
        let gens = self.minimal_generating_sequence();
        if gens.is_empty() {
            return vec![vec![0]];
        }
        // Express every element as parent * generator once, in BFS order.
        let mut expr: Vec<Option<(usize, usize)>> = vec![None; self.n];
        let mut order: Vec<usize> = vec![0];
        let mut seen = VertexSet::new(self.n);
        seen.insert(0);
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for (gi, &g) in gens.iter().enumerate() {
                let y = self.op(x, g);
                if seen.insert(y) {
                    expr[y] = Some((x, gi));
                    order.push(y);
                    queue.push_back(y);
                }
            }
        }
        debug_assert_eq!(order.len(), self.n);

        let orders: Vec<usize> = (0..self.n).map(|x| self.element_order(x)).collect();
        let candidates: Vec<Vec<usize>> = gens
            .iter()
            .map(|&g| (0..self.n).filter(|&x| orders[x] == orders[g]).collect())
            .collect();

        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut images = vec![0usize; gens.len()];
        self.automorphism_dfs(0, &gens, &candidates, &mut images, &expr, &order, &mut out);
        out.sort();
        out.dedup();
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn automorphism_dfs(
        &self,
        depth: usize,
        gens: &[usize],
        candidates: &[Vec<usize>],
        images: &mut Vec<usize>,
        expr: &[Option<(usize, usize)>],
        order: &[usize],
        out: &mut Vec<Vec<usize>>,
    ) {
        if depth == gens.len() {
            // Extend generator images along the BFS expressions.
            let mut phi = vec![usize::MAX; self.n];
            phi[0] = 0;
            for &x in &order[1..] {
                let (parent, gi) = expr[x].expect("non-identity has an expression");
                phi[x] = self.op(phi[parent], images[gi]);
            }
            // Bijectivity, then the full homomorphism property.
            let mut hit = vec![false; self.n];
            for &y in &phi {
                if y == usize::MAX || hit[y] {
                    return;
                }
                hit[y] = true;
            }
            for a in 0..self.n {
                for b in 0..self.n {
                    if phi[self.op(a, b)] != self.op(phi[a], phi[b]) {
                        return;
                    }
                }
            }
            out.push(phi);
            return;
        }
        for &img in &candidates[depth] {
            images[depth] = img;
            self.automorphism_dfs(depth + 1, gens, candidates, images, expr, order, out);
        }
    }

    /// Validates that `members` is closed and returns it as a `Subgroup`.
    pub fn subgroup_from_members(&self, members: &[usize]) -> Result<Subgroup, GroupError> {
        let mut sorted: Vec<usize> = members.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.first() != Some(&0) {
            return Err(GroupError::NotASubgroup {
                why: "missing the identity".into(),
            });
        }
        let set = VertexSet::from_iter(self.n, sorted.iter().copied());
        for &a in &sorted {
            if a >= self.n {
                return Err(GroupError::ElementOutOfRange { element: a, n: self.n });
            }
            if !set.contains(self.inv(a)) {
                return Err(GroupError::NotASubgroup {
                    why: format!("missing inverse of {a}"),
                });
            }
            for &b in &sorted {
                if !set.contains(self.op(a, b)) {
                    return Err(GroupError::NotASubgroup {
                        why: format!("not closed: {a}*{b} escapes"),
                    });
                }
            }
        }
        Ok(Subgroup::from_sorted_members(sorted, self.n))
    }

    /// The subgroup as a standalone group: local ids follow the ascending
    /// member order, so the identity stays at 0.  Returns the group together
    /// with the member list mapping local to parent ids.
    pub fn subgroup_group(self: &Arc<Self>, sub: &Subgroup) -> (Group, Vec<usize>) {
        let members = sub.members().to_vec();
        let mut local_of = vec![u32::MAX; self.n];
        for (i, &m) in members.iter().enumerate() {
            local_of[m] = i as u32;
        }
        let g = Group {
            n: members.len(),
            backing: Backing::Embedded {
                parent: Arc::clone(self),
                members: Arc::new(members.clone()),
                local_of: Arc::new(local_of),
            },
            name: format!("{}[subgroup of order {}]", self.name, members.len()),
        };
        (g, members)
    }
}

// ---------------------------------------------------------------------------
// Table validation and catalog tables
// ---------------------------------------------------------------------------

/// Validates a raw composition table: shape, Latin property, two-sided
/// identity, inverses and associativity (exhaustive up to order 64, a fixed
/// deterministic sample of `ASSOCIATIVITY_SAMPLES` triples beyond).  Returns
/// the flattened table relabeled so the identity has index 0.
pub fn validate_table(rows: &[Vec<usize>]) -> Result<Vec<u32>, GroupError> {
    let n = rows.len();
    if n == 0 {
        return Err(GroupError::BadParameter {
            what: "empty table".into(),
        });
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(GroupError::NotSquare {
                row: i,
                len: row.len(),
                n,
            });
        }
        for (j, &v) in row.iter().enumerate() {
            if v >= n {
                return Err(GroupError::EntryOutOfRange {
                    row: i,
                    col: j,
                    value: v,
                    n,
                });
            }
        }
    }
    for (i, row) in rows.iter().enumerate() {
        let mut seen = vec![false; n];
        for &v in row {
            if seen[v] {
                return Err(GroupError::RowNotPermutation { index: i });
            }
            seen[v] = true;
        }
    }
    for j in 0..n {
        let mut seen = vec![false; n];
        for row in rows {
            let v = row[j];
            if seen[v] {
                return Err(GroupError::ColNotPermutation { index: j });
            }
            seen[v] = true;
        }
    }
    let identity = (0..n)
        .find(|&e| (0..n).all(|x| rows[e][x] == x && rows[x][e] == x))
        .ok_or(GroupError::NoIdentity)?;
    for a in 0..n {
        let has = (0..n).any(|b| rows[a][b] == identity && rows[b][a] == identity);
        if !has {
            return Err(GroupError::NoInverse { element: a });
        }
    }
    let assoc_violation = if n <= ASSOCIATIVITY_EXHAUSTIVE_MAX {
        let mut found = None;
        'outer: for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if rows[rows[a][b]][c] != rows[a][rows[b][c]] {
                        found = Some((a, b, c));
                        break 'outer;
                    }
                }
            }
        }
        found
    } else {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_a550);
        let mut found = None;
        for _ in 0..ASSOCIATIVITY_SAMPLES {
            let (a, b, c) = (
                rng.gen_range(0..n),
                rng.gen_range(0..n),
                rng.gen_range(0..n),
            );
            if rows[rows[a][b]][c] != rows[a][rows[b][c]] {
                found = Some((a, b, c));
                break;
            }
        }
        found
    };
    if let Some((a, b, c)) = assoc_violation {
        return Err(GroupError::NotAssociative { a, b, c });
    }

    // Relabel so the identity sits at index 0 (swap labels 0 and identity).
    let relabel = |x: usize| -> u32 {
        if x == identity {
            0
        } else if x == 0 {
            identity as u32
        } else {
            x as u32
        }
    };
    let mut table = vec![0u32; n * n];
    for a in 0..n {
        for b in 0..n {
            let (ra, rb) = (relabel(a) as usize, relabel(b) as usize);
            table[ra * n + rb] = relabel(rows[a][b]);
        }
    }
    Ok(table)
}

/// Dihedral group of order `2n`: ids `0..n` are rotations `r^i`, ids
/// `n..2n` are reflections `s r^i`.
fn dihedral_table(n: usize) -> Vec<u32> {
    let order = 2 * n;
    let mut t = vec![0u32; order * order];
    let id = |rot: usize, refl: bool| -> u32 { (rot % n + if refl { n } else { 0 }) as u32 };
    for i in 0..n {
        for j in 0..n {
            // r^i * r^j = r^{i+j}
            t[i * order + j] = id(i + j, false);
            // r^i * s r^j = s r^{j-i}
            t[i * order + (n + j)] = id(n + j - i, true);
            // s r^i * r^j = s r^{i+j}
            t[(n + i) * order + j] = id(i + j, true);
            // s r^i * s r^j = r^{j-i}
            t[(n + i) * order + (n + j)] = id(n + j - i, false);
        }
    }
    t
}

/// Quaternion group on `[1, -1, i, -i, j, -j, k, -k]`.
fn quaternion_table() -> Vec<u32> {
    // Represent element id as (axis, sign): axis 0 is the scalar 1, axes
    // 1..4 are i, j, k.  id = 2*axis + (sign < 0).
    let axis = |id: usize| id / 2;
    let neg = |id: usize| id % 2 == 1;
    let make = |ax: usize, n: bool| (2 * ax + usize::from(n)) as u32;
    let mut t = vec![0u32; 64];
    for a in 0..8 {
        for b in 0..8 {
            let (ax_a, ax_b) = (axis(a), axis(b));
            let mut sign = neg(a) ^ neg(b);
            let ax = if ax_a == 0 {
                ax_b
            } else if ax_b == 0 {
                ax_a
            } else if ax_a == ax_b {
                // i*i = j*j = k*k = -1
                sign = !sign;
                0
            } else {
                // i*j = k and cyclically; the reverse order flips the sign.
                let (lo, hi) = (ax_a.min(ax_b), ax_a.max(ax_b));
                let forward = (ax_a, ax_b) == (1, 2) || (ax_a, ax_b) == (2, 3) || (ax_a, ax_b) == (3, 1);
                if !forward {
                    sign = !sign;
                }
                6 - lo - hi // the remaining axis of {1,2,3}
            };
            t[a * 8 + b] = make(ax, sign);
        }
    }
    t
}

fn all_permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    permute_rec(&mut cur, 0, &mut out);
    out.sort();
    out
}

fn permute_rec(cur: &mut Vec<usize>, i: usize, out: &mut Vec<Vec<usize>>) {
    if i == cur.len() {
        out.push(cur.clone());
        return;
    }
    for j in i..cur.len() {
        cur.swap(i, j);
        permute_rec(cur, i + 1, out);
        cur.swap(i, j);
    }
}

fn permutation_is_even(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    let mut parity = false;
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            x = p[x];
            len += 1;
        }
        parity ^= (len - 1) % 2 == 1;
    }
    !parity
}

/// `(p ∘ q)(x) = p(q(x))`.
fn compose_permutations(p: &[usize], q: &[usize]) -> Vec<usize> {
    q.iter().map(|&x| p[x]).collect()
}

fn invert_permutation(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0usize; p.len()];
    for (i, &x) in p.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

fn permutation_closure(
    degree: usize,
    generators: &[Vec<usize>],
    limit: u64,
) -> Result<Vec<Vec<usize>>, GroupError> {
    for g in generators {
        if g.len() != degree {
            return Err(GroupError::BadParameter {
                what: format!("permutation of length {} for degree {degree}", g.len()),
            });
        }
        let mut seen = vec![false; degree];
        for &x in g {
            if x >= degree || seen[x] {
                return Err(GroupError::BadParameter {
                    what: "generator is not a permutation".into(),
                });
            }
            seen[x] = true;
        }
    }
    let identity: Vec<usize> = (0..degree).collect();
    let mut step: Vec<Vec<usize>> = Vec::new();
    for g in generators {
        step.push(g.clone());
        step.push(invert_permutation(g));
    }
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::from([identity.clone()]);
    let mut queue = std::collections::VecDeque::from([identity]);
    while let Some(p) = queue.pop_front() {
        for g in &step {
            let q = compose_permutations(&p, g);
            if seen.insert(q.clone()) {
                if seen.len() as u64 > limit {
                    return Err(GroupError::OrderLimit {
                        order: seen.len() as u64,
                        limit,
                    });
                }
                queue.push_back(q);
            }
        }
    }
    Ok(seen.into_iter().collect())
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

// ---------------------------------------------------------------------------
// Subgroups, cosets, generator sets
// ---------------------------------------------------------------------------

/// A subgroup, stored as its ascending member list plus a membership bitset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgroup {
    members: Vec<usize>,
    set: VertexSet,
}

impl Subgroup {
    fn from_sorted_members(members: Vec<usize>, n: usize) -> Self {
        let set = VertexSet::from_iter(n, members.iter().copied());
        Subgroup { members, set }
    }

    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn member_set(&self) -> &VertexSet {
        &self.set
    }

    pub fn contains(&self, x: usize) -> bool {
        self.set.contains(x)
    }

    /// `[G : H]`.
    pub fn index_in(&self, group: &Group) -> usize {
        group.order() / self.order()
    }

    pub fn is_whole_group(&self, group: &Group) -> bool {
        self.order() == group.order()
    }
}

/// All subgroups of a group, possibly truncated when the order exceeds the
/// enumeration limit.
#[derive(Clone, Debug)]
pub struct SubgroupList {
    /// Sorted by decreasing order, then lexicographic member list.
    pub subgroups: Vec<Subgroup>,
    /// False when the enumeration was cut short by the order limit.
    pub complete: bool,
}

/// Enumerates subgroups.  Cyclic groups use the divisor lattice (complete at
/// any order).  Other groups use join closure: starting from all cyclic
/// subgroups, repeatedly extend a known subgroup by one new element and
/// close; every subgroup is reached because its generating set can be grown
/// element by element.  Groups larger than `limit` get a partial list
/// (trivial and whole group) flagged incomplete.
pub fn enumerate_subgroups(group: &Group, limit: usize) -> SubgroupList {
    let n = group.order();
    let mut subs: Vec<Subgroup>;
    let complete;
    if group.is_cyclic() && n >= 1 {
        subs = divisors(n as u64)
            .into_iter()
            .map(|d| {
                // The unique subgroup of order d is generated by any element
                // of that order; scan for the smallest one.
                let target = d as usize;
                let g = (0..n)
                    .find(|&x| group.element_order(x) == target)
                    .expect("cyclic group has an element of every divisor order");
                group.closure(&[g]).expect("in-range element")
            })
            .collect();
        complete = true;
    } else if n <= limit {
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut queue: Vec<Subgroup> = Vec::new();
        let trivial = group.closure(&[]).expect("empty closure");
        seen.insert(trivial.members.clone());
        queue.push(trivial);
        let mut head = 0;
        while head < queue.len() {
            let current = queue[head].clone();
            head += 1;
            for x in 1..n {
                if current.contains(x) {
                    continue;
                }
                let mut gens: Vec<usize> = current.members.clone();
                gens.push(x);
                let bigger = group.closure(&gens).expect("in-range members");
                if seen.insert(bigger.members.clone()) {
                    queue.push(bigger);
                }
            }
        }
        subs = queue;
        complete = true;
    } else {
        let trivial = group.closure(&[]).expect("empty closure");
        let whole = Subgroup::from_sorted_members((0..n).collect(), n);
        subs = vec![trivial, whole];
        complete = false;
    }
    subs.sort_by(|a, b| {
        b.order()
            .cmp(&a.order())
            .then_with(|| a.members.cmp(&b.members))
    });
    SubgroupList {
        subgroups: subs,
        complete,
    }
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
    }
    out.sort_unstable();
    out
}

/// The right coset partition `{ Hg : g in G }`, with cosets ordered by their
/// minimal element (which is also the stored representative).
#[derive(Clone, Debug)]
pub struct CosetPartition {
    subgroup: Subgroup,
    cosets: Vec<Vec<usize>>,
    representatives: Vec<usize>,
    coset_of: Vec<usize>,
}

impl CosetPartition {
    pub fn subgroup(&self) -> &Subgroup {
        &self.subgroup
    }

    pub fn count(&self) -> usize {
        self.cosets.len()
    }

    /// Members of coset `i`, ascending.
    pub fn coset(&self, i: usize) -> &[usize] {
        &self.cosets[i]
    }

    /// Minimal element of coset `i`.
    pub fn representative(&self, i: usize) -> usize {
        self.representatives[i]
    }

    /// Index of the coset containing element `x`.
    pub fn coset_of(&self, x: usize) -> usize {
        self.coset_of[x]
    }
}

/// Partitions the group into right cosets of `sub`.
pub fn right_cosets(group: &Group, sub: &Subgroup) -> CosetPartition {
    let n = group.order();
    let mut coset_of = vec![usize::MAX; n];
    let mut cosets = Vec::with_capacity(n / sub.order());
    let mut representatives = Vec::new();
    for g in 0..n {
        if coset_of[g] != usize::MAX {
            continue;
        }
        let idx = cosets.len();
        let mut members: Vec<usize> = sub.members().iter().map(|&h| group.op(h, g)).collect();
        members.sort_unstable();
        for &m in &members {
            coset_of[m] = idx;
        }
        debug_assert_eq!(members[0], g, "scan order makes g the coset minimum");
        representatives.push(g);
        cosets.push(members);
    }
    CosetPartition {
        subgroup: sub.clone(),
        cosets,
        representatives,
        coset_of,
    }
}

/// A symmetric, identity-free generator set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorSet {
    elems: Vec<usize>,
    set: VertexSet,
}

impl GeneratorSet {
    /// Validates symmetry (closed under inverses) and absence of the
    /// identity; deduplicates and sorts.
    pub fn new(group: &Group, elems: &[usize]) -> Result<GeneratorSet, GroupError> {
        let mut sorted: Vec<usize> = elems.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let n = group.order();
        for &s in &sorted {
            if s >= n {
                return Err(GroupError::ElementOutOfRange { element: s, n });
            }
            if s == group.identity() {
                return Err(GroupError::IdentityGenerator { element: s });
            }
        }
        let set = VertexSet::from_iter(n, sorted.iter().copied());
        for &s in &sorted {
            let inv = group.inv(s);
            if !set.contains(inv) {
                return Err(GroupError::NotSymmetric {
                    element: s,
                    inverse: inv,
                });
            }
        }
        Ok(GeneratorSet { elems: sorted, set })
    }

    /// Symmetrizes an arbitrary element list by adding inverses, then
    /// validates.
    pub fn symmetrized(group: &Group, elems: &[usize]) -> Result<GeneratorSet, GroupError> {
        let mut all: Vec<usize> = elems.to_vec();
        all.extend(elems.iter().map(|&s| group.inv(s)));
        GeneratorSet::new(group, &all)
    }

    /// Random symmetric identity-free set of density at least `sigma`,
    /// built by sampling inverse-closed units `{x, x^{-1}}` without
    /// replacement.
    pub fn random_symmetric(
        group: &Group,
        sigma: f64,
        rng: &mut impl rand::Rng,
    ) -> Result<GeneratorSet, GroupError> {
        use rand::seq::SliceRandom;
        let n = group.order();
        let mut units: Vec<usize> = (1..n).filter(|&x| x <= group.inv(x)).collect();
        units.shuffle(rng);
        let target = (sigma * n as f64).ceil() as usize;
        let mut elems = Vec::new();
        for u in units {
            if elems.len() >= target {
                break;
            }
            elems.push(u);
            let inv = group.inv(u);
            if inv != u {
                elems.push(inv);
            }
        }
        GeneratorSet::new(group, &elems)
    }

    pub fn elements(&self) -> &[usize] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.set.contains(x)
    }

    /// `|S| / |G|`.
    pub fn density(&self, group: &Group) -> f64 {
        self.elems.len() as f64 / group.order() as f64
    }
}

/// Doubling greedy: returns a generating subset of `gens` of size at most
/// `ceil(log2 n)` by repeatedly adding the smallest element outside the
/// current span (each addition at least doubles the span).  Errors when
/// `gens` does not generate the group, carrying the span.
pub fn greedy_generators(group: &Group, gens: &GeneratorSet) -> Result<Vec<usize>, GroupError> {
    let full = group.closure(gens.elements())?;
    if !full.is_whole_group(group) {
        return Err(GroupError::NotGenerating {
            order: full.order(),
            n: group.order(),
            members: full.members().to_vec(),
        });
    }
    let mut picked: Vec<usize> = Vec::new();
    let mut span = group.closure(&[])?;
    while !span.is_whole_group(group) {
        let next = gens
            .elements()
            .iter()
            .copied()
            .find(|&s| !span.contains(s))
            .expect("a generating set must leave a proper span");
        picked.push(next);
        let prev_order = span.order();
        span = group.closure(&picked)?;
        debug_assert!(span.order() >= 2 * prev_order, "span must at least double");
    }
    let bound = (group.order() as f64).log2().ceil() as usize;
    debug_assert!(picked.len() <= bound.max(1));
    Ok(picked)
}

/// The catalog used by the small-order sweeps: every group of order 3..=12
/// reachable through the catalog constructors.
pub fn small_catalog() -> Vec<GroupSpec> {
    let mut specs: Vec<GroupSpec> = (3..=12).map(GroupSpec::Cyclic).collect();
    specs.extend((3..=6).map(GroupSpec::Dihedral));
    specs.extend([
        GroupSpec::Abelian(vec![2, 2]),
        GroupSpec::Abelian(vec![2, 4]),
        GroupSpec::Abelian(vec![2, 2, 2]),
        GroupSpec::Abelian(vec![3, 3]),
        GroupSpec::Abelian(vec![2, 6]),
        GroupSpec::Symmetric(3),
        GroupSpec::Quaternion,
        GroupSpec::Alternating(4),
    ]);
    specs
}

/// Every symmetric identity-free generating set whose Cayley graph is
/// connected, listed up to simultaneous relabeling by a group automorphism
/// (which maps Cayley graphs to isomorphic Cayley graphs).  Each class is
/// reported by its lexicographically smallest member; the list is sorted by
/// size then lexicographically and truncated to `cap`.
///
/// Intended for small groups: the subset walk is exponential in the number
/// of inverse-closed classes and the automorphism search caps the order.
pub fn connected_symmetric_sets(group: &Group, cap: usize) -> Vec<Vec<usize>> {
    let n = group.order();
    let units: Vec<Vec<usize>> = (1..n)
        .filter(|&x| x <= group.inv(x))
        .map(|x| {
            let inv = group.inv(x);
            if inv == x {
                vec![x]
            } else {
                vec![x, inv]
            }
        })
        .collect();
    assert!(
        units.len() <= 24,
        "generating-set enumeration is for small groups"
    );
    let auts = group.automorphisms();
    let mut seen = std::collections::BTreeSet::new();
    for mask in 0u64..(1u64 << units.len()) {
        let mut elems: Vec<usize> = Vec::new();
        for (i, unit) in units.iter().enumerate() {
            if mask >> i & 1 == 1 {
                elems.extend(unit.iter().copied());
            }
        }
        elems.sort_unstable();
        match group.closure(&elems) {
            Ok(sub) if sub.order() == n => {}
            _ => continue,
        }
        let canon = auts
            .iter()
            .map(|pi| {
                let mut image: Vec<usize> = elems.iter().map(|&s| pi[s]).collect();
                image.sort_unstable();
                image
            })
            .min()
            .expect("a group has at least the identity automorphism");
        seen.insert(canon);
    }
    let mut out: Vec<Vec<usize>> = seen.into_iter().collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out.truncate(cap);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyclic(n: u64) -> Group {
        build_group(&GroupSpec::Cyclic(n)).unwrap()
    }

    #[test]
    fn cyclic_five_composition() {
        let g = cyclic(5);
        assert_eq!(g.order(), 5);
        assert_eq!(g.identity(), 0);
        assert_eq!(g.op(2, 4), 1);
        assert_eq!(g.inv(2), 3);
        assert_eq!(g.element_order(1), 5);
        assert!(g.is_abelian());
        assert!(g.is_cyclic());
    }

    #[test]
    fn symmetric_three_is_nonabelian() {
        let g = build_group(&GroupSpec::Symmetric(3)).unwrap();
        assert_eq!(g.order(), 6);
        // Two transpositions that do not commute, found by scanning.
        let pair = (1..6)
            .flat_map(|a| (1..6).map(move |b| (a, b)))
            .find(|&(a, b)| g.op(a, b) != g.op(b, a))
            .expect("S_3 is non-abelian");
        assert_ne!(g.op(pair.0, pair.1), g.op(pair.1, pair.0));
        assert!(!g.is_abelian());
    }

    #[test]
    fn raw_two_by_two_table() {
        let g = build_group(&GroupSpec::Table(vec![vec![0, 1], vec![1, 0]])).unwrap();
        assert_eq!(g.order(), 2);
        assert_eq!(g.op(1, 1), 0);
    }

    #[test]
    fn raw_table_identity_relabeled_to_zero() {
        // Z_3 written with identity at index 2.
        let rows = vec![vec![1, 2, 0], vec![2, 0, 1], vec![0, 1, 2]];
        let g = build_group(&GroupSpec::Table(rows)).unwrap();
        assert_eq!(g.op(0, 1), 1);
        assert_eq!(g.op(1, 1), 2);
        assert_eq!(g.element_order(1), 3);
    }

    #[test]
    fn nonassociative_loop_is_rejected_with_triple() {
        // Order-5 Latin square with two-sided identity 0; no group of order
        // 5 has all elements self-inverse, so associativity must fail.
        let rows = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        match build_group(&GroupSpec::Table(rows.clone())) {
            Err(GroupError::NotAssociative { a, b, c }) => {
                assert_ne!(rows[rows[a][b]][c], rows[a][rows[b][c]]);
            }
            other => panic!("expected associativity failure, got {other:?}"),
        }
    }

    #[test]
    fn missing_identity_is_rejected() {
        // Subtraction mod 3: Latin but only a right identity.
        let rows = vec![vec![0, 2, 1], vec![1, 0, 2], vec![2, 1, 0]];
        assert!(matches!(
            build_group(&GroupSpec::Table(rows)),
            Err(GroupError::NoIdentity)
        ));
    }

    #[test]
    fn order_limit_enforced() {
        assert!(matches!(
            build_group_with_limits(&GroupSpec::Cyclic(100), 50, 50),
            Err(GroupError::OrderLimit { .. })
        ));
        assert!(matches!(
            build_group(&GroupSpec::Symmetric(8)),
            Err(GroupError::OrderLimit { .. })
        ));
    }

    #[test]
    fn quaternion_structure() {
        let g = build_group(&GroupSpec::Quaternion).unwrap();
        assert_eq!(g.order(), 8);
        assert!(!g.is_abelian());
        // Exactly one involution (the element -1).
        let involutions: Vec<usize> = (1..8).filter(|&x| g.element_order(x) == 2).collect();
        assert_eq!(involutions.len(), 1);
        // i * j = k and j * i = -k.
        let (i, j) = (2, 4);
        assert_ne!(g.op(i, j), g.op(j, i));
        // (i*j) * (j*i) = k * (-k) = 1.
        assert_eq!(g.op(g.op(i, j), g.op(j, i)), 0);
    }

    #[test]
    fn dihedral_relations() {
        let g = build_group(&GroupSpec::Dihedral(4)).unwrap();
        assert_eq!(g.order(), 8);
        let r = 1; // rotation
        let s = 4; // reflection
        assert_eq!(g.element_order(r), 4);
        assert_eq!(g.element_order(s), 2);
        // s r s = r^{-1}
        assert_eq!(g.op(g.op(s, r), s), g.inv(r));
    }

    #[test]
    fn alternating_four() {
        let g = build_group(&GroupSpec::Alternating(4)).unwrap();
        assert_eq!(g.order(), 12);
        assert!(!g.is_abelian());
        // A_4 famously has no subgroup of order 6.
        let list = enumerate_subgroups(&g, DEFAULT_SUBGROUP_ENUM_LIMIT);
        assert!(list.complete);
        assert_eq!(list.subgroups.len(), 10);
        assert!(list.subgroups.iter().all(|s| s.order() != 6));
    }

    #[test]
    fn closure_examples() {
        let g = cyclic(6);
        let h = g.closure(&[2]).unwrap();
        assert_eq!(h.members(), &[0, 2, 4]);
        assert_eq!(h.index_in(&g), 2);

        let trivial = g.closure(&[]).unwrap();
        assert_eq!(trivial.members(), &[0]);

        let s3 = build_group(&GroupSpec::Symmetric(3)).unwrap();
        let transposition = (1..6).find(|&x| s3.element_order(x) == 2).unwrap();
        assert_eq!(s3.closure(&[transposition]).unwrap().order(), 2);
    }

    #[test]
    fn greedy_generators_examples() {
        let g = cyclic(16);
        let s = GeneratorSet::new(&g, &(1..16).collect::<Vec<_>>()).unwrap();
        let picked = greedy_generators(&g, &s).unwrap();
        assert_eq!(picked, vec![1]); // 1 already generates
        assert!(picked.len() <= 4);

        // A set whose small elements generate slowly: {8, 4, 2, 1, ...}.
        let g = cyclic(8);
        let s = GeneratorSet::new(&g, &[4, 2, 6, 1, 7]).unwrap();
        let picked = greedy_generators(&g, &s).unwrap();
        assert_eq!(picked, vec![1]);

        let s = GeneratorSet::new(&g, &[4, 2, 6]).unwrap();
        match greedy_generators(&g, &s) {
            Err(GroupError::NotGenerating { order, members, .. }) => {
                assert_eq!(order, 4);
                assert_eq!(members, vec![0, 2, 4, 6]);
            }
            other => panic!("expected NotGenerating, got {other:?}"),
        }
    }

    #[test]
    fn greedy_generators_doubling_bound() {
        let g = build_group(&GroupSpec::Dihedral(8)).unwrap(); // order 16
        let all: Vec<usize> = (1..16).collect();
        let s = GeneratorSet::new(&g, &all).unwrap();
        let picked = greedy_generators(&g, &s).unwrap();
        assert!(picked.len() <= 4, "got {picked:?}");
        assert!(g.closure(&picked).unwrap().is_whole_group(&g));
    }

    #[test]
    fn right_cosets_of_s3() {
        let s3 = build_group(&GroupSpec::Symmetric(3)).unwrap();
        let transposition = (1..6).find(|&x| s3.element_order(x) == 2).unwrap();
        let h = s3.closure(&[transposition]).unwrap();
        let p = right_cosets(&s3, &h);
        assert_eq!(p.count(), 3);
        for i in 0..3 {
            assert_eq!(p.coset(i).len(), 2);
            assert_eq!(p.representative(i), p.coset(i)[0]);
        }
        // The partition covers everything exactly once.
        let mut all: Vec<usize> = (0..3).flat_map(|i| p.coset(i).to_vec()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn whole_group_coset() {
        let g = cyclic(5);
        let whole = g.subgroup_from_members(&(0..5).collect::<Vec<_>>()).unwrap();
        let p = right_cosets(&g, &whole);
        assert_eq!(p.count(), 1);
    }

    #[test]
    fn subgroup_counts() {
        assert_eq!(
            enumerate_subgroups(&cyclic(6), 100).subgroups.len(),
            4 // orders 6, 3, 2, 1
        );
        assert_eq!(enumerate_subgroups(&cyclic(7), 100).subgroups.len(), 2);
        let s3 = build_group(&GroupSpec::Symmetric(3)).unwrap();
        assert_eq!(enumerate_subgroups(&s3, 100).subgroups.len(), 6);
    }

    #[test]
    fn subgroup_enumeration_sorted_and_lagrange() {
        let g = build_group(&GroupSpec::Abelian(vec![2, 4])).unwrap();
        let list = enumerate_subgroups(&g, 100);
        assert!(list.complete);
        let orders: Vec<usize> = list.subgroups.iter().map(|s| s.order()).collect();
        let mut sorted = orders.clone();
        sorted.sort_by(|a, b| b.cmp(a));
        assert_eq!(orders, sorted);
        for s in &list.subgroups {
            assert_eq!(g.order() % s.order(), 0);
        }
    }

    #[test]
    fn incomplete_enumeration_flagged() {
        let g = build_group(&GroupSpec::Abelian(vec![4, 4])).unwrap();
        let list = enumerate_subgroups(&g, 10);
        assert!(!list.complete);
        assert_eq!(list.subgroups.first().unwrap().order(), 16);
        assert_eq!(list.subgroups.last().unwrap().order(), 1);
    }

    #[test]
    fn generator_set_validation() {
        let g = cyclic(6);
        assert!(GeneratorSet::new(&g, &[1, 5]).is_ok());
        assert!(matches!(
            GeneratorSet::new(&g, &[1]),
            Err(GroupError::NotSymmetric { element: 1, inverse: 5 })
        ));
        assert!(matches!(
            GeneratorSet::new(&g, &[0, 1, 5]),
            Err(GroupError::IdentityGenerator { .. })
        ));
        let s = GeneratorSet::symmetrized(&g, &[1]).unwrap();
        assert_eq!(s.elements(), &[1, 5]);
        assert!((s.density(&g) - 2.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn left_translation_is_automorphism_on_catalog() {
        // x -> g*x permutes elements and preserves right-multiplication
        // structure: (g*x)*s = g*(x*s).
        for spec in [
            GroupSpec::Cyclic(8),
            GroupSpec::Dihedral(4),
            GroupSpec::Symmetric(3),
            GroupSpec::Quaternion,
        ] {
            let gr = build_group(&spec).unwrap();
            let n = gr.order();
            for g in 0..n {
                let mut seen = vec![false; n];
                for x in 0..n {
                    let y = gr.op(g, x);
                    assert!(!seen[y]);
                    seen[y] = true;
                    for s in 0..n {
                        assert_eq!(gr.op(gr.op(g, x), s), gr.op(g, gr.op(x, s)));
                    }
                }
            }
        }
    }

    #[test]
    fn embedded_subgroup_group() {
        let g = Arc::new(cyclic(12));
        let h = g.closure(&[3]).unwrap();
        let (hg, members) = g.subgroup_group(&h);
        assert_eq!(members, vec![0, 3, 6, 9]);
        assert_eq!(hg.order(), 4);
        assert_eq!(hg.identity(), 0);
        // local 1 is parent 3; 3+3=6 is local 2.
        assert_eq!(hg.op(1, 1), 2);
        assert_eq!(hg.inv(1), 3);
        assert!(hg.is_cyclic());
    }

    #[test]
    fn automorphisms_of_small_groups() {
        // Aut(Z_6) has order phi(6) = 2; Aut(Z_2 x Z_2) = S_3 has order 6.
        assert_eq!(cyclic(6).automorphisms().len(), 2);
        let v4 = build_group(&GroupSpec::Abelian(vec![2, 2])).unwrap();
        assert_eq!(v4.automorphisms().len(), 6);
        let s3 = build_group(&GroupSpec::Symmetric(3)).unwrap();
        assert_eq!(s3.automorphisms().len(), 6);
    }

    #[test]
    fn group_json_roundtrip() {
        for spec in [
            GroupSpec::Cyclic(9),
            GroupSpec::Quaternion,
            GroupSpec::Abelian(vec![2, 3]),
            GroupSpec::Table(vec![vec![0, 1], vec![1, 0]]),
        ] {
            let js = serde_json::to_string(&GroupJson::from_spec(&spec)).unwrap();
            let back: GroupJson = serde_json::from_str(&js).unwrap();
            assert_eq!(back.to_spec().unwrap(), spec);
        }
        let parsed: GroupJson =
            serde_json::from_str(r#"{"kind":"catalog","name":"cyclic","params":[5]}"#).unwrap();
        assert_eq!(parsed.to_spec().unwrap(), GroupSpec::Cyclic(5));
    }

    #[test]
    fn permutation_input_closure() {
        // <(0 1 2), (0 1)(2 3)> inside S_4 is A_4.
        let spec = GroupSpec::Permutation {
            degree: 4,
            generators: vec![vec![1, 2, 0, 3], vec![1, 0, 3, 2]],
        };
        let g = build_group(&spec).unwrap();
        assert_eq!(g.order(), 12);
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(GroupSpec::parse("cyclic:12").unwrap(), GroupSpec::Cyclic(12));
        assert_eq!(
            GroupSpec::parse("abelian:2,2,3").unwrap(),
            GroupSpec::Abelian(vec![2, 2, 3])
        );
        assert_eq!(GroupSpec::parse("quaternion").unwrap(), GroupSpec::Quaternion);
        assert!(GroupSpec::parse("frobnicate:3").is_err());
    }

    #[test]
    fn small_catalog_orders() {
        for spec in small_catalog() {
            let g = build_group(&spec).unwrap();
            assert!(
                (3..=12).contains(&g.order()),
                "{} has order {}",
                g.name(),
                g.order()
            );
        }
    }

    #[test]
    fn connected_symmetric_sets_on_small_cyclic_groups() {
        // C_4: only {1,3} and the full set reach every residue.
        assert_eq!(
            connected_symmetric_sets(&cyclic(4), 500),
            vec![vec![1, 3], vec![1, 2, 3]]
        );
        // C_5: multiplication by 2 maps {1,4} onto {2,3}, merging the two
        // two-element classes.
        assert_eq!(
            connected_symmetric_sets(&cyclic(5), 500),
            vec![vec![1, 4], vec![1, 2, 3, 4]]
        );
        assert_eq!(
            connected_symmetric_sets(&cyclic(6), 500),
            vec![
                vec![1, 5],
                vec![1, 3, 5],
                vec![2, 3, 4],
                vec![1, 2, 4, 5],
                vec![1, 2, 3, 4, 5]
            ]
        );
    }

    #[test]
    fn connected_symmetric_sets_are_valid_and_capped() {
        let g = build_group(&GroupSpec::Dihedral(4)).unwrap();
        let sets = connected_symmetric_sets(&g, 500);
        assert!(sets.len() > 3);
        for s in &sets {
            let gs = GeneratorSet::new(&g, s).unwrap();
            assert_eq!(g.closure(gs.elements()).unwrap().order(), 8);
        }
        let capped = connected_symmetric_sets(&g, 3);
        assert_eq!(capped[..], sets[..3]);
    }
}
