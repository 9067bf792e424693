//! Constructive Hamiltonicity toolkit for Cayley graphs.
//!
//! The crate builds Hamilton cycles and spanning linear forests with
//! prescribed path endpoints in Cayley graphs of finite groups.  The main
//! pipeline decomposes a graph along a dense subgroup, assembles a tree
//! skeleton over the coset clusters, solves each cluster with absorber and
//! path-cover machinery, and validates every witness with an independent
//! checker.  Exact brute-force oracles cover small instances and double as
//! ground truth for the heuristics.
//!
//! Module map:
//! - [`group`]: finite groups as composition tables, subgroups, cosets
//! - [`cayley`]: Cayley graphs, coset matchings, auxiliary coset graphs
//! - [`expansion`]: sparse cuts, spectral certificates, robust expansion
//! - [`connector`]: short paths through restricted vertex pools
//! - [`absorber`]: odd-cycle absorber gadgets and random translate families
//! - [`pathcover`]: path covers of (almost) regular digraphs
//! - [`assembler`]: linear forests, tree skeletons, the Hamilton pipeline
//! - [`oracle`]: exact small-instance solvers and witness verification
//! - [`cli`]: the `cayham` command-line front end

pub mod absorber;
pub mod assembler;
pub mod bits;
pub mod cayley;
pub mod cli;
pub mod connector;
pub mod expansion;
pub mod graph;
pub mod group;
pub mod oracle;
pub mod pathcover;
pub mod witness;
