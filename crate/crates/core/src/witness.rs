//! Witness types shared across the solvers: simple paths, spanning linear
//! forests and Hamilton cycles, plus the JSON schema emitted by the CLI.
//!
//! Witnesses are plain vertex sequences.  Validation lives in
//! [`crate::oracle::verify_witness`] so that producers and the checker stay
//! independent.

use serde::{Deserialize, Serialize};

/// A simple path given by its vertex sequence (length ≥ 1; a single vertex
/// is a trivial path).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathWitness {
    pub vertices: Vec<usize>,
}

impl PathWitness {
    pub fn new(vertices: Vec<usize>) -> Self {
        PathWitness { vertices }
    }

    pub fn first(&self) -> usize {
        *self.vertices.first().expect("paths are non-empty")
    }

    pub fn last(&self) -> usize {
        *self.vertices.last().expect("paths are non-empty")
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    /// Path length as an edge count.
    pub fn edge_count(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Endpoints as an unordered pair (smaller id first).
    pub fn endpoints(&self) -> (usize, usize) {
        let (a, b) = (self.first(), self.last());
        (a.min(b), a.max(b))
    }

    pub fn reversed(&self) -> PathWitness {
        let mut v = self.vertices.clone();
        v.reverse();
        PathWitness::new(v)
    }
}

/// A collection of vertex-disjoint simple paths.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LinearForest {
    pub paths: Vec<PathWitness>,
}

impl LinearForest {
    pub fn new(paths: Vec<PathWitness>) -> Self {
        LinearForest { paths }
    }

    pub fn total_vertices(&self) -> usize {
        self.paths.iter().map(|p| p.len()).sum()
    }
}

/// A Hamilton cycle given by its cyclic vertex order (no repeated closing
/// vertex).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HamiltonCycle {
    pub order: Vec<usize>,
}

impl HamiltonCycle {
    pub fn new(order: Vec<usize>) -> Self {
        HamiltonCycle { order }
    }

    /// Rotates and reflects so the cycle starts at its smallest vertex and
    /// continues toward its smaller neighbor.  Two witnesses for the same
    /// cycle canonicalize identically.
    pub fn canonical(&self) -> HamiltonCycle {
        let n = self.order.len();
        if n == 0 {
            return self.clone();
        }
        let start = (0..n).min_by_key(|&i| self.order[i]).unwrap();
        let at = |i: isize| self.order[(start as isize + i).rem_euclid(n as isize) as usize];
        let forward = at(1) <= at(-1);
        let mut out = Vec::with_capacity(n);
        for i in 0..n as isize {
            out.push(if forward { at(i) } else { at(-i) });
        }
        HamiltonCycle { order: out }
    }
}

/// How a witness was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessMode {
    /// Built by the constructive decomposition pipeline.
    Pipeline,
    /// Built by an exact brute-force oracle.
    Oracle,
}

impl std::fmt::Display for WitnessMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WitnessMode::Pipeline => write!(f, "pipeline"),
            WitnessMode::Oracle => write!(f, "oracle"),
        }
    }
}

/// JSON-facing witness record.  `validated` is set only after the witness
/// passed [`crate::oracle::verify_witness`] against its host graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    HamiltonCycle {
        order: Vec<usize>,
        validated: bool,
        mode: WitnessMode,
    },
    LinearForest {
        paths: Vec<Vec<usize>>,
        validated: bool,
        mode: WitnessMode,
    },
}

impl Witness {
    pub fn cycle(cycle: &HamiltonCycle, validated: bool, mode: WitnessMode) -> Self {
        Witness::HamiltonCycle {
            order: cycle.order.clone(),
            validated,
            mode,
        }
    }

    pub fn forest(forest: &LinearForest, validated: bool, mode: WitnessMode) -> Self {
        Witness::LinearForest {
            paths: forest.paths.iter().map(|p| p.vertices.clone()).collect(),
            validated,
            mode,
        }
    }

    pub fn mode(&self) -> WitnessMode {
        match self {
            Witness::HamiltonCycle { mode, .. } | Witness::LinearForest { mode, .. } => *mode,
        }
    }

    pub fn validated(&self) -> bool {
        match self {
            Witness::HamiltonCycle { validated, .. } | Witness::LinearForest { validated, .. } => {
                *validated
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_cycle_is_rotation_invariant() {
        let a = HamiltonCycle::new(vec![2, 3, 4, 0, 1]);
        let b = HamiltonCycle::new(vec![1, 0, 4, 3, 2]);
        assert_eq!(a.canonical().order, vec![0, 1, 2, 3, 4]);
        assert_eq!(a.canonical(), b.canonical());
    }

    #[test]
    fn witness_json_schema() {
        let w = Witness::HamiltonCycle {
            order: vec![0, 1, 2],
            validated: true,
            mode: WitnessMode::Oracle,
        };
        let js = serde_json::to_string(&w).unwrap();
        assert_eq!(
            js,
            r#"{"type":"hamilton_cycle","order":[0,1,2],"validated":true,"mode":"oracle"}"#
        );
        let back: Witness = serde_json::from_str(&js).unwrap();
        assert_eq!(back, w);

        let f = Witness::LinearForest {
            paths: vec![vec![0, 1], vec![2]],
            validated: false,
            mode: WitnessMode::Pipeline,
        };
        let js = serde_json::to_string(&f).unwrap();
        assert_eq!(
            js,
            r#"{"type":"linear_forest","paths":[[0,1],[2]],"validated":false,"mode":"pipeline"}"#
        );
    }

    #[test]
    fn path_endpoints() {
        let p = PathWitness::new(vec![4, 2, 7]);
        assert_eq!(p.endpoints(), (4, 7));
        assert_eq!(p.reversed().vertices, vec![7, 2, 4]);
    }
}
