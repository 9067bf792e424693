//! The `cayham` command line front end.
//!
//! Machine output is JSON on standard out; human-oriented summaries go to
//! standard error.  Every record is emitted through serde structs with
//! fixed field order, so a fixed configuration produces byte-identical
//! output.  Exit codes: 0 when the request succeeded and every produced
//! witness validated, 1 on failures (with a JSON diagnostic on standard
//! out), 2 for command line errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::assembler::{
    forest_bipartite, forest_nonbipartite, hamilton_cycle, AssemblerError, PipelineParams,
};
use crate::cayley::CayleyGraph;
use crate::expansion::{
    assess_sparse_cuts_cayley, cayley_lambda2, cluster_cut_threshold, regularity_decomposition,
    ClusterReport, CutAssessment, DecompositionError, SpectralEstimate, DEFAULT_EPSILON,
};
use crate::graph::{GraphJson, HostGraph};
use crate::group::{
    build_group, connected_symmetric_sets, small_catalog, GeneratorSet, GroupError, GroupJson,
    GroupSpec,
};
use crate::oracle::{verify_forest_endpoints, verify_witness, OracleError};
use crate::witness::Witness;

/// Environment variable holding the sweep worker count (0 or unset means
/// one worker per available core).
pub const WORKERS_ENV: &str = "CAYHAM_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

// ---------------------------------------------------------------------------
// Command line grammar
// ---------------------------------------------------------------------------

#[derive(Parser, Debug)]
#[command(
    name = "cayham",
    version,
    about = "Hamilton cycles and endpoint-pinned spanning forests in Cayley graphs",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Resolve a group spec and emit its portable JSON form.
    GenGroup(GenGroupArgs),
    /// Build a Cayley graph and emit its adjacency record.
    Build(BuildArgs),
    /// Expansion diagnostics: spectral gap and sparse-cut assessment.
    Diagnose(DiagnoseArgs),
    /// Find a subgroup whose coset clusters are certified expanders.
    Decompose(DecomposeArgs),
    /// Produce a validated Hamilton cycle witness.
    Hamilton(HamiltonArgs),
    /// Produce a validated spanning linear forest with pinned endpoints.
    Forest(ForestArgs),
    /// Run Hamilton solves over a grid of instances, one record per line.
    Sweep(SweepArgs),
    /// Re-check a witness file against a graph file.
    Verify(VerifyArgs),
    /// Emit a built graph in an interchange format.
    Export(ExportArgs),
}

/// How to obtain the group.
#[derive(Args, Debug, Clone)]
pub struct GroupArgs {
    /// Group spec: cyclic:N, dihedral:N, symmetric:K, alternating:K,
    /// abelian:F1,F2,..., quaternion.
    #[arg(long, conflicts_with = "group_file")]
    pub group: Option<String>,
    /// JSON group file (kind: table | perm | catalog).
    #[arg(long)]
    pub group_file: Option<PathBuf>,
}

/// How to obtain the generator set.
#[derive(Args, Debug, Clone)]
pub struct GenArgs {
    /// Comma-separated generator elements; inverses are added automatically.
    #[arg(long, value_delimiter = ',', conflicts_with = "sigma")]
    pub gens: Option<Vec<usize>>,
    /// Density of a random symmetric generator set drawn from --seed.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Seed for random generator drawing and for the pipeline.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Pipeline constant overrides; unset values follow the host.
#[derive(Args, Debug, Clone, Default)]
pub struct PipelineArgs {
    /// Order at or below which the exact oracle answers directly.
    #[arg(long)]
    pub oracle_threshold: Option<usize>,
    /// Number of absorber translates to sample.
    #[arg(long)]
    pub translates: Option<usize>,
    /// Robust-neighborhood threshold fraction.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Size-window fraction for robust expansion.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Minimum-degree fraction for the layered-reach argument.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Restart count for the contracted Hamilton path search.
    #[arg(long)]
    pub search_restarts: Option<usize>,
    /// Expansion budget per restart for the contracted search.
    #[arg(long)]
    pub search_budget: Option<u64>,
}

impl PipelineArgs {
    fn apply(&self, mut params: PipelineParams) -> PipelineParams {
        if let Some(t) = self.oracle_threshold {
            params.oracle_threshold = t;
        }
        if self.translates.is_some() {
            params.translate_count = self.translates;
        }
        if let Some(v) = self.nu {
            params.expansion.nu = v;
        }
        if let Some(v) = self.tau {
            params.expansion.tau = v;
        }
        if let Some(v) = self.alpha {
            params.expansion.alpha = v;
        }
        if let Some(v) = self.search_restarts {
            params.search_restarts = v;
        }
        if let Some(v) = self.search_budget {
            params.search_budget = v;
        }
        params
    }
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Write the JSON record to this file instead of standard out.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenGroupArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    #[command(flatten)]
    pub gens: GenArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    #[command(flatten)]
    pub gens: GenArgs,
    /// Sparse-cut ratio threshold; defaults to the cluster threshold
    /// epsilon * sigma^3 / 1000 at the instance density.
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Density-loss fraction used when deriving the default zeta.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    #[command(flatten)]
    pub gens: GenArgs,
    /// Density-loss fraction: clusters keep at least (1-epsilon) of the
    /// generators and must avoid epsilon*sigma^3/1000-sparse cuts.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct HamiltonArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    #[command(flatten)]
    pub gens: GenArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct ForestArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    #[command(flatten)]
    pub gens: GenArgs,
    /// Endpoint pairs as A:B entries, e.g. --pairs 0:5,3:7.  On bipartite
    /// hosts each pair must cross the bipartition.
    #[arg(long, value_delimiter = ',', required = true)]
    pub pairs: Vec<String>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Inclusive group order range LO..HI drawn from the catalog.
    #[arg(long, default_value = "3..12")]
    pub orders: String,
    /// Restrict the sweep to a single group spec instead of the catalog.
    #[arg(long)]
    pub group: Option<String>,
    /// Enumerate every connected symmetric generating set up to
    /// automorphism instead of sampling densities.
    #[arg(long, default_value_t = false)]
    pub all_connected_gensets: bool,
    /// Cap on enumerated generating sets per group.
    #[arg(long, default_value_t = 500)]
    pub cap: usize,
    /// Densities sampled when not enumerating, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.3, 0.6])]
    pub densities: Vec<f64>,
    /// Random generator sets drawn per density.
    #[arg(long, default_value_t = 3)]
    pub per_density: usize,
    /// Base seed; each instance derives its own seed from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Graph file: a build record, or a bare {"n", "adj"} adjacency object.
    #[arg(long)]
    pub graph: PathBuf,
    /// Witness file: a solve record, or a bare witness object.
    #[arg(long)]
    pub witness: PathBuf,
    /// Endpoint pairs a forest witness must additionally respect.
    #[arg(long, value_delimiter = ',')]
    pub pairs: Option<Vec<String>>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    /// Adjacency JSON {"n", "adj"}.
    GraphJson,
    /// Plain text, one "u v" edge per line.
    Edges,
    /// Graphviz undirected graph.
    Dot,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    #[command(flatten)]
    pub gens: GenArgs,
    #[arg(long, value_enum, default_value_t = ExportFormat::GraphJson)]
    pub format: ExportFormat,
    /// Output file; required for non-JSON formats so standard out stays
    /// JSON-only.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Errors and emission
// ---------------------------------------------------------------------------

#[derive(thiserror::Error, Debug)]
pub enum CliError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Assembler(#[from] AssemblerError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{path}: {why}")]
    File { path: String, why: String },
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Group(_) => "group",
            CliError::Assembler(_) => "assembler",
            CliError::Decomposition(_) => "decomposition",
            CliError::Oracle(_) => "oracle",
            CliError::File { .. } => "file",
            CliError::Invalid(_) => "invalid",
        }
    }
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

/// Renders a record as pretty JSON with a trailing newline.
fn to_json_text<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("records serialize");
    s.push('\n');
    s
}

/// Sends already-rendered JSON to --out or standard out.
fn emit_text(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::File {
            path: path.display().to_string(),
            why: e.to_string(),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    emit_text(&to_json_text(value), out)
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::File {
        path: path.display().to_string(),
        why: e.to_string(),
    })
}

// ---------------------------------------------------------------------------
// Instance loading
// ---------------------------------------------------------------------------

/// A fully resolved problem instance.
struct Instance {
    spec: GroupSpec,
    cg: CayleyGraph,
    seed: u64,
}

#[derive(Serialize)]
struct InstanceRecord {
    group: String,
    order: usize,
    generators: Vec<usize>,
    degree: usize,
    density: f64,
    seed: u64,
}

impl Instance {
    fn record(&self) -> InstanceRecord {
        InstanceRecord {
            group: spec_to_arg(&self.spec),
            order: self.cg.group().order(),
            generators: self.cg.generators().elements().to_vec(),
            degree: self.cg.degree_value(),
            density: self.cg.density(),
            seed: self.seed,
        }
    }
}

/// Parseable command line form of a spec (inverse of [`GroupSpec::parse`]
/// for catalog-backed specs).
fn spec_to_arg(spec: &GroupSpec) -> String {
    match spec {
        GroupSpec::Cyclic(n) => format!("cyclic:{n}"),
        GroupSpec::Dihedral(n) => format!("dihedral:{n}"),
        GroupSpec::Symmetric(k) => format!("symmetric:{k}"),
        GroupSpec::Alternating(k) => format!("alternating:{k}"),
        GroupSpec::Quaternion => "quaternion".to_string(),
        GroupSpec::Abelian(fs) => {
            let parts: Vec<String> = fs.iter().map(|f| f.to_string()).collect();
            format!("abelian:{}", parts.join(","))
        }
        other => other.describe(),
    }
}

fn load_spec(args: &GroupArgs) -> Result<GroupSpec, CliError> {
    if let Some(text) = &args.group {
        return Ok(GroupSpec::parse(text)?);
    }
    if let Some(path) = &args.group_file {
        let text = read_file(path)?;
        let gj: GroupJson = serde_json::from_str(&text).map_err(|e| CliError::File {
            path: path.display().to_string(),
            why: e.to_string(),
        })?;
        return Ok(gj.to_spec()?);
    }
    Err(CliError::Invalid(
        "one of --group or --group-file is required".into(),
    ))
}

fn load_instance(group: &GroupArgs, gens: &GenArgs) -> Result<Instance, CliError> {
    let spec = load_spec(group)?;
    let g = Arc::new(build_group(&spec)?);
    let set = match (&gens.gens, gens.sigma) {
        (Some(elems), _) => GeneratorSet::symmetrized(&g, elems)?,
        (None, Some(sigma)) => {
            if !(sigma > 0.0 && sigma <= 1.0) {
                return Err(CliError::Invalid(format!(
                    "--sigma {sigma} is outside (0, 1]"
                )));
            }
            let mut rng = ChaCha20Rng::seed_from_u64(gens.seed);
            GeneratorSet::random_symmetric(&g, sigma, &mut rng)?
        }
        (None, None) => {
            return Err(CliError::Invalid(
                "one of --gens or --sigma is required".into(),
            ))
        }
    };
    Ok(Instance {
        spec,
        cg: CayleyGraph::new(g, set),
        seed: gens.seed,
    })
}

fn parse_pair(text: &str) -> Result<(usize, usize), CliError> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| CliError::Invalid(format!("pair '{text}' is not of the form A:B")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| CliError::Invalid(format!("pair '{text}' has a non-numeric endpoint")))
    };
    Ok((parse(a)?, parse(b)?))
}

fn parse_pairs(texts: &[String]) -> Result<Vec<(usize, usize)>, CliError> {
    texts.iter().map(|t| parse_pair(t)).collect()
}

/// Inclusive "LO..HI" order range.
fn parse_order_range(text: &str) -> Result<(usize, usize), CliError> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| CliError::Invalid(format!("range '{text}' is not of the form LO..HI")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| CliError::Invalid(format!("range '{text}' has a non-numeric bound")))
    };
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo > hi {
        return Err(CliError::Invalid(format!("range '{text}' is empty")));
    }
    Ok((lo, hi))
}

/// Stable per-instance seed derivation (splitmix64 step).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(index.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Parses `argv` and runs the requested subcommand, returning the process
/// exit code.  Streams follow the module contract: JSON on standard out,
/// summaries on standard error.
pub fn run_from<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version land on standard out with code 0; usage
            // errors (including unknown subcommands) exit 2 via stderr.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            let record = ErrorRecord {
                error: ErrorBody {
                    kind: err.kind(),
                    message: err.to_string(),
                },
            };
            print!("{}", to_json_text(&record));
            eprintln!("error: {err}");
            EXIT_FAIL
        }
    }
}

/// [`run_from`] on the process arguments.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::GenGroup(args) => cmd_gen_group(args),
        Command::Build(args) => cmd_build(args),
        Command::Diagnose(args) => cmd_diagnose(args),
        Command::Decompose(args) => cmd_decompose(args),
        Command::Hamilton(args) => cmd_hamilton(args),
        Command::Forest(args) => cmd_forest(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Export(args) => cmd_export(args),
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct GroupRecord {
    group: GroupJson,
    description: String,
    order: usize,
    abelian: bool,
}

fn cmd_gen_group(args: GenGroupArgs) -> Result<i32, CliError> {
    let spec = load_spec(&args.group)?;
    let g = build_group(&spec)?;
    let record = GroupRecord {
        group: GroupJson::from_spec(&spec),
        description: spec.describe(),
        order: g.order(),
        abelian: g.is_abelian(),
    };
    emit(&record, args.out.out.as_deref())?;
    eprintln!("gen-group: {} (order {})", record.description, record.order);
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct BuildRecord {
    instance: InstanceRecord,
    connected: bool,
    bipartite: bool,
    edge_count: usize,
    graph: GraphJson,
}

fn cmd_build(args: BuildArgs) -> Result<i32, CliError> {
    let inst = load_instance(&args.group, &args.gens)?;
    let graph = inst.cg.to_graph();
    let record = BuildRecord {
        instance: inst.record(),
        connected: inst.cg.is_connected_graph()?,
        bipartite: inst.cg.bipartite_structure()?.is_some(),
        edge_count: graph.edge_count(),
        graph: graph.to_json(),
    };
    emit(&record, args.out.out.as_deref())?;
    eprintln!(
        "build: {} with {} generators: n={}, {} edges, connected={}",
        record.instance.group,
        record.instance.generators.len(),
        record.instance.order,
        record.edge_count,
        record.connected
    );
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct DiagnoseRecord {
    instance: InstanceRecord,
    connected: bool,
    bipartite: bool,
    epsilon: f64,
    zeta: f64,
    spectral: Option<SpectralEstimate>,
    cuts: CutAssessment,
}

fn cmd_diagnose(args: DiagnoseArgs) -> Result<i32, CliError> {
    let inst = load_instance(&args.group, &args.gens)?;
    let zeta = args
        .zeta
        .unwrap_or_else(|| cluster_cut_threshold(args.epsilon, inst.cg.density()));
    let record = DiagnoseRecord {
        connected: inst.cg.is_connected_graph()?,
        bipartite: inst.cg.bipartite_structure()?.is_some(),
        epsilon: args.epsilon,
        zeta,
        spectral: cayley_lambda2(&inst.cg).ok(),
        cuts: assess_sparse_cuts_cayley(&inst.cg, zeta),
        instance: inst.record(),
    };
    emit(&record, args.out.out.as_deref())?;
    let verdict = if record.cuts.certified {
        "no sparse cut (certified)"
    } else if record.cuts.sparse_cut().is_some() {
        "sparse cut found"
    } else {
        "no sparse cut found (uncertified)"
    };
    eprintln!(
        "diagnose: {} at zeta={:.3e}: {}",
        record.instance.group, zeta, verdict
    );
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct DecomposeRecord {
    instance: InstanceRecord,
    epsilon: f64,
    sigma: f64,
    cluster_zeta: f64,
    subgroup_order: usize,
    cluster_count: usize,
    scan_complete: bool,
    shared_certificate: bool,
    fully_certified: bool,
    clusters: Vec<ClusterReport>,
}

fn cmd_decompose(args: DecomposeArgs) -> Result<i32, CliError> {
    let inst = load_instance(&args.group, &args.gens)?;
    let dec = regularity_decomposition(inst.cg.group(), inst.cg.generators(), args.epsilon)?;
    let record = DecomposeRecord {
        instance: inst.record(),
        epsilon: dec.epsilon,
        sigma: dec.sigma,
        cluster_zeta: dec.cluster_zeta,
        subgroup_order: dec.subgroup.order(),
        cluster_count: dec.clusters.len(),
        scan_complete: dec.scan_complete,
        shared_certificate: dec.shared_certificate,
        fully_certified: dec.fully_certified(),
        clusters: dec.clusters,
    };
    emit(&record, args.out.out.as_deref())?;
    eprintln!(
        "decompose: {} -> subgroup of order {} ({} clusters, certified={})",
        record.instance.group, record.subgroup_order, record.cluster_count, record.fully_certified
    );
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SolveRecord {
    instance: InstanceRecord,
    witness: Witness,
    report: serde_json::Value,
}

fn cmd_hamilton(args: HamiltonArgs) -> Result<i32, CliError> {
    let inst = load_instance(&args.group, &args.gens)?;
    let params = args
        .pipeline
        .apply(PipelineParams::for_host(&inst.cg, inst.seed));
    let started = Instant::now();
    let (cycle, report) = hamilton_cycle(&inst.cg, &params)?;
    let validated = verify_witness(
        &inst.cg,
        &Witness::cycle(&cycle, false, report.mode),
    )
    .is_ok();
    let record = SolveRecord {
        instance: inst.record(),
        witness: Witness::cycle(&cycle, validated, report.mode),
        report: serde_json::to_value(&report).expect("report serializes"),
    };
    emit(&record, args.out.out.as_deref())?;
    eprintln!(
        "hamilton: {} n={}: cycle via {} in {:.2?}, validated={}",
        record.instance.group,
        record.instance.order,
        report.mode,
        started.elapsed(),
        validated
    );
    Ok(if validated { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_forest(args: ForestArgs) -> Result<i32, CliError> {
    let inst = load_instance(&args.group, &args.gens)?;
    let pairs = parse_pairs(&args.pairs)?;
    let params = args
        .pipeline
        .apply(PipelineParams::for_host(&inst.cg, inst.seed));
    let started = Instant::now();
    let bipartite = inst.cg.bipartite_structure()?.is_some();
    let (forest, report, mode) = if bipartite {
        let (f, r) = forest_bipartite(&inst.cg, &pairs, &params)?;
        let mode = r.mode;
        (f, serde_json::to_value(&r).expect("report serializes"), mode)
    } else {
        let (f, r) = forest_nonbipartite(&inst.cg, &pairs, &params)?;
        let mode = r.mode;
        (f, serde_json::to_value(&r).expect("report serializes"), mode)
    };
    let path_refs: Vec<Vec<usize>> = forest.paths.iter().map(|p| p.vertices.clone()).collect();
    let validated = verify_forest_endpoints(&inst.cg, &path_refs, &pairs).is_ok();
    let record = SolveRecord {
        instance: inst.record(),
        witness: Witness::forest(&forest, validated, mode),
        report,
    };
    emit(&record, args.out.out.as_deref())?;
    eprintln!(
        "forest: {} n={} pairs={}: {} route via {} in {:.2?}, validated={}",
        record.instance.group,
        record.instance.order,
        pairs.len(),
        if bipartite { "bipartite" } else { "odd-cycle" },
        mode,
        started.elapsed(),
        validated
    );
    Ok(if validated { EXIT_OK } else { EXIT_FAIL })
}

#[derive(Serialize)]
struct VerifyRecord {
    witness_type: &'static str,
    valid: bool,
    violation: Option<String>,
}

fn cmd_verify(args: VerifyArgs) -> Result<i32, CliError> {
    let graph = load_graph_file(&args.graph)?;
    let witness = load_witness_file(&args.witness)?;
    let witness_type = match &witness {
        Witness::HamiltonCycle { .. } => "hamilton_cycle",
        Witness::LinearForest { .. } => "linear_forest",
    };
    let mut violation = verify_witness(&graph, &witness)
        .err()
        .map(|v| v.to_string());
    if violation.is_none() {
        if let Some(texts) = &args.pairs {
            let pairs = parse_pairs(texts)?;
            match &witness {
                Witness::LinearForest { paths, .. } => {
                    violation = verify_forest_endpoints(&graph, paths, &pairs)
                        .err()
                        .map(|v| v.to_string());
                }
                Witness::HamiltonCycle { .. } => {
                    violation = Some("--pairs applies to linear forest witnesses".into());
                }
            }
        }
    }
    let record = VerifyRecord {
        witness_type,
        valid: violation.is_none(),
        violation,
    };
    emit(&record, args.out.out.as_deref())?;
    eprintln!(
        "verify: {} witness on n={} graph: {}",
        record.witness_type,
        graph.order(),
        if record.valid { "valid" } else { "INVALID" }
    );
    Ok(if record.valid { EXIT_OK } else { EXIT_FAIL })
}

/// Accepts a build record (object with a "graph" field) or a bare
/// adjacency object.
fn load_graph_file(path: &Path) -> Result<crate::graph::Graph, CliError> {
    let text = read_file(path)?;
    let bad = |why: String| CliError::File {
        path: path.display().to_string(),
        why,
    };
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let graph_value = value.get("graph").unwrap_or(&value);
    let gj: GraphJson =
        serde_json::from_value(graph_value.clone()).map_err(|e| bad(e.to_string()))?;
    gj.to_graph().map_err(bad)
}

/// Accepts a solve record (object with a "witness" field) or a bare
/// witness object.
fn load_witness_file(path: &Path) -> Result<Witness, CliError> {
    let text = read_file(path)?;
    let bad = |why: String| CliError::File {
        path: path.display().to_string(),
        why,
    };
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let witness_value = value.get("witness").unwrap_or(&value);
    serde_json::from_value(witness_value.clone()).map_err(|e| bad(e.to_string()))
}

#[derive(Serialize)]
struct ExportRecord {
    format: &'static str,
    written: String,
    order: usize,
    edge_count: usize,
}

fn cmd_export(args: ExportArgs) -> Result<i32, CliError> {
    let inst = load_instance(&args.group, &args.gens)?;
    let graph = inst.cg.to_graph();
    match args.format {
        ExportFormat::GraphJson => {
            emit(&graph.to_json(), args.out.as_deref())?;
        }
        ExportFormat::Edges | ExportFormat::Dot => {
            let path = args.out.as_ref().ok_or_else(|| {
                CliError::Invalid("--out is required for non-JSON formats".into())
            })?;
            let text = match args.format {
                ExportFormat::Edges => graph.to_edge_list_text(),
                _ => to_dot(&graph),
            };
            fs::write(path, text).map_err(|e| CliError::File {
                path: path.display().to_string(),
                why: e.to_string(),
            })?;
            let record = ExportRecord {
                format: if args.format == ExportFormat::Edges {
                    "edges"
                } else {
                    "dot"
                },
                written: path.display().to_string(),
                order: graph.order(),
                edge_count: graph.edge_count(),
            };
            emit(&record, None)?;
        }
    }
    eprintln!(
        "export: {} n={} ({} edges)",
        inst.record().group,
        graph.order(),
        graph.edge_count()
    );
    Ok(EXIT_OK)
}

fn to_dot(g: &crate::graph::Graph) -> String {
    let mut s = String::from("graph cayley {\n");
    for (u, v) in g.edge_list() {
        s.push_str(&format!("  {u} -- {v};\n"));
    }
    s.push_str("}\n");
    s
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

struct SweepJob {
    index: usize,
    spec: GroupSpec,
    gens: Vec<usize>,
    seed: u64,
}

#[derive(Serialize)]
struct SweepRecord {
    index: usize,
    group: String,
    order: usize,
    generators: Vec<usize>,
    degree: usize,
    seed: u64,
    ok: bool,
    validated: bool,
    mode: Option<crate::witness::WitnessMode>,
    error: Option<String>,
}

fn sweep_groups(args: &SweepArgs) -> Result<Vec<GroupSpec>, CliError> {
    if let Some(text) = &args.group {
        return Ok(vec![GroupSpec::parse(text)?]);
    }
    let (lo, hi) = parse_order_range(&args.orders)?;
    let mut specs = Vec::new();
    for spec in small_catalog() {
        let g = build_group(&spec)?;
        if (lo..=hi).contains(&g.order()) {
            specs.push(spec);
        }
    }
    Ok(specs)
}

fn sweep_jobs(args: &SweepArgs) -> Result<Vec<SweepJob>, CliError> {
    let mut jobs = Vec::new();
    for (gi, spec) in sweep_groups(args)?.into_iter().enumerate() {
        let g = build_group(&spec)?;
        let mut sets: Vec<Vec<usize>> = Vec::new();
        if args.all_connected_gensets {
            sets.extend(connected_symmetric_sets(&g, args.cap));
        } else {
            for (di, &sigma) in args.densities.iter().enumerate() {
                if !(sigma > 0.0 && sigma <= 1.0) {
                    return Err(CliError::Invalid(format!(
                        "--densities entry {sigma} is outside (0, 1]"
                    )));
                }
                for slot in 0..args.per_density {
                    let draw = derive_seed(
                        args.seed,
                        (gi as u64) << 32 | (di as u64) << 16 | slot as u64,
                    );
                    let mut rng = ChaCha20Rng::seed_from_u64(draw);
                    let set = GeneratorSet::random_symmetric(&g, sigma, &mut rng)?;
                    sets.push(set.elements().to_vec());
                }
            }
            sets.sort();
            sets.dedup();
        }
        for set in sets {
            let index = jobs.len();
            jobs.push(SweepJob {
                index,
                spec: spec.clone(),
                gens: set,
                seed: derive_seed(args.seed, index as u64),
            });
        }
    }
    Ok(jobs)
}

fn run_sweep_job(job: &SweepJob, pipeline: &PipelineArgs) -> SweepRecord {
    let mut record = SweepRecord {
        index: job.index,
        group: spec_to_arg(&job.spec),
        order: 0,
        generators: job.gens.clone(),
        degree: 0,
        seed: job.seed,
        ok: false,
        validated: false,
        mode: None,
        error: None,
    };
    let attempt = || -> Result<(CayleyGraph, crate::witness::HamiltonCycle, crate::witness::WitnessMode), CliError> {
        let g = Arc::new(build_group(&job.spec)?);
        let set = GeneratorSet::new(&g, &job.gens)?;
        let cg = CayleyGraph::new(g, set);
        let params = pipeline.apply(PipelineParams::for_host(&cg, job.seed));
        let (cycle, report) = hamilton_cycle(&cg, &params)?;
        Ok((cg, cycle, report.mode))
    };
    match attempt() {
        Ok((cg, cycle, mode)) => {
            record.order = cg.group().order();
            record.degree = cg.degree_value();
            record.mode = Some(mode);
            record.ok = true;
            record.validated =
                verify_witness(&cg, &Witness::cycle(&cycle, false, mode)).is_ok();
        }
        Err(err) => record.error = Some(err.to_string()),
    }
    record
}

fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0)
}

fn cmd_sweep(args: SweepArgs) -> Result<i32, CliError> {
    let jobs = sweep_jobs(&args)?;
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| CliError::Invalid(format!("worker pool: {e}")))?;
    let records: Vec<SweepRecord> =
        pool.install(|| jobs.par_iter().map(|j| run_sweep_job(j, &args.pipeline)).collect());
    let mut text = String::new();
    for record in &records {
        text.push_str(&serde_json::to_string(record).expect("records serialize"));
        text.push('\n');
    }
    emit_text(&text, args.out.out.as_deref())?;
    let good = records.iter().filter(|r| r.ok && r.validated).count();
    eprintln!(
        "sweep: {}/{} instances validated in {:.2?}",
        good,
        records.len(),
        started.elapsed()
    );
    Ok(if good == records.len() {
        EXIT_OK
    } else {
        EXIT_FAIL
    })
}
