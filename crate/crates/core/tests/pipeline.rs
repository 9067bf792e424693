//! Whole-pipeline integration runs at desk scale: dense hosts must produce
//! validated witnesses through the constructive route, sparse hosts below
//! the density regime must refuse rather than mis-solve, and fixed seeds
//! must reproduce byte-identical witnesses.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use cayham::assembler::{
    forest_bipartite, forest_nonbipartite, hamilton_cycle, AssemblerError, PipelineParams, Stage,
};
use cayham::cayley::CayleyGraph;
use cayham::group::{build_group, GeneratorSet, GroupSpec};
use cayham::oracle::{verify_forest_endpoints, verify_hamilton_cycle};
use cayham::witness::WitnessMode;

fn random_host(spec: &str, sigma: f64, seed: u64) -> CayleyGraph {
    let group = Arc::new(build_group(&GroupSpec::parse(spec).unwrap()).unwrap());
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let gens = GeneratorSet::random_symmetric(&group, sigma, &mut rng).unwrap();
    CayleyGraph::new(group, gens)
}

fn explicit_host(spec: &str, elems: &[usize]) -> CayleyGraph {
    let group = Arc::new(build_group(&GroupSpec::parse(spec).unwrap()).unwrap());
    let gens = GeneratorSet::symmetrized(&group, elems).unwrap();
    CayleyGraph::new(group, gens)
}

#[test]
fn dense_circulant_cycle_via_pipeline() {
    let cg = random_host("cyclic:150", 0.25, 3);
    let params = PipelineParams::for_host(&cg, 3);
    let (cycle, report) = hamilton_cycle(&cg, &params).unwrap();
    assert_eq!(report.mode, WitnessMode::Pipeline);
    verify_hamilton_cycle(&cg, &cycle.order).unwrap();
}

#[test]
fn dihedral_cycle_via_pipeline() {
    let cg = random_host("dihedral:25", 0.4, 1);
    assert_eq!(cg.group().order(), 50);
    assert!(!cg.group().is_abelian());
    let params = PipelineParams::for_host(&cg, 1);
    let (cycle, report) = hamilton_cycle(&cg, &params).unwrap();
    assert_eq!(report.mode, WitnessMode::Pipeline);
    verify_hamilton_cycle(&cg, &cycle.order).unwrap();
}

#[test]
fn abelian_product_cycle_via_pipeline() {
    let cg = random_host("abelian:2,60", 0.3, 2);
    assert_eq!(cg.group().order(), 120);
    let params = PipelineParams::for_host(&cg, 2);
    let (cycle, report) = hamilton_cycle(&cg, &params).unwrap();
    assert_eq!(report.mode, WitnessMode::Pipeline);
    verify_hamilton_cycle(&cg, &cycle.order).unwrap();
}

#[test]
fn sparse_odd_ring_is_refused_not_missolved() {
    // C_31 as a plain ring sits far below the density the constructive
    // route needs: the absorber cannot find a second odd cycle.  The
    // pipeline must say so instead of emitting a bogus witness.
    let cg = explicit_host("cyclic:31", &[1]);
    let params = PipelineParams::for_host(&cg, 0);
    let err = hamilton_cycle(&cg, &params).unwrap_err();
    match err {
        AssemblerError::Stage { stage, .. } => assert_eq!(stage, Stage::Gadget),
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn bipartite_dense_forest_and_cycle() {
    // All odd shifts of Z_64: bipartite with parts = parities, degree 32.
    let odd: Vec<usize> = (1..64).step_by(2).collect();
    let cg = explicit_host("cyclic:64", &odd);
    assert!(cg.bipartite_structure().unwrap().is_some());
    let params = PipelineParams::for_host(&cg, 11);

    let pairs = [(0, 9), (2, 33)];
    let (forest, report) = forest_bipartite(&cg, &pairs, &params).unwrap();
    assert_eq!(report.mode, WitnessMode::Pipeline);
    let paths: Vec<Vec<usize>> = forest.paths.iter().map(|p| p.vertices.clone()).collect();
    verify_forest_endpoints(&cg, &paths, &pairs).unwrap();

    let (cycle, report) = hamilton_cycle(&cg, &params).unwrap();
    assert_eq!(report.mode, WitnessMode::Pipeline);
    verify_hamilton_cycle(&cg, &cycle.order).unwrap();
}

#[test]
fn nonbipartite_forest_with_several_pairs() {
    let cg = random_host("cyclic:150", 0.3, 7);
    assert!(cg.bipartite_structure().unwrap().is_none());
    let params = PipelineParams::for_host(&cg, 7);
    let pairs = [(0, 75), (3, 40), (91, 17), (55, 120)];
    let (forest, report) = forest_nonbipartite(&cg, &pairs, &params).unwrap();
    assert_eq!(report.mode, WitnessMode::Pipeline);
    assert_eq!(forest.paths.len(), pairs.len());
    let paths: Vec<Vec<usize>> = forest.paths.iter().map(|p| p.vertices.clone()).collect();
    verify_forest_endpoints(&cg, &paths, &pairs).unwrap();
}

#[test]
fn fixed_seed_reproduces_the_witness() {
    let cg = random_host("cyclic:120", 0.3, 9);
    let params = PipelineParams::for_host(&cg, 9);
    let (a, _) = hamilton_cycle(&cg, &params).unwrap();
    let (b, _) = hamilton_cycle(&cg, &params).unwrap();
    assert_eq!(a.order, b.order);

    let pairs = [(0, 60), (7, 31)];
    let (fa, _) = forest_nonbipartite(&cg, &pairs, &params).unwrap();
    let (fb, _) = forest_nonbipartite(&cg, &pairs, &params).unwrap();
    assert_eq!(fa.paths, fb.paths);
}

#[test]
fn disconnected_generators_are_rejected_up_front() {
    let cg = explicit_host("cyclic:32", &[2]);
    let params = PipelineParams::for_host(&cg, 0);
    assert!(matches!(
        hamilton_cycle(&cg, &params),
        Err(AssemblerError::Disconnected)
    ));
}
