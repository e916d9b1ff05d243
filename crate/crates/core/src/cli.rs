//! Command-line front end: argument parsing, JSON certificates and the
//! on-disk block graph cache.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::designs::{
    affine_design_over, block_graph, delsarte_check, projective_design_over, srg_params_brute,
    srg_params_formula, wdb, BlockGraph, Design, DesignError, SrgError, SrgParams,
};
use crate::eigenfunctions::{
    classify_optimal, enumerate_complete_bipartite_limited, from_bipartite_pair, support_structure,
    verify_eigenfunction, wdbplus2_function, Checkpoint, EigenError, Eigenfunction, SearchLimits, SearchMode,
    StructureKind,
};
use crate::geometry::{AffSpace, GeometryError, Hyperplane, ProjSpace};
use crate::gf::{FieldSpec, GfError};
use crate::graph::Graph;
use crate::partitions::{
    balance_check, direction_class, hyperplane_lines, partition_eigenvalue, partition_to_eigenfunction,
    quotient_eigenvector, quotient_matrix, star, CameronLieblerContext, Partition2, PartitionError,
};
use crate::reguli::{
    affine_regulus_construct, common_transversals, enumerate_affine_reguli, enumerate_reguli,
    enumerate_regulus_indices, parallel_plane_class, regulus_through, RegulusError, RegulusPair, MAX_ENUM_Q,
};

pub const SCHEMA_VERSION: &str = "sv1";
pub const CACHE_ENV: &str = "STEINER_CACHE";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "steiner", version, about = "Finite geometries, Steiner block graphs and their eigenfunctions")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Field order (a prime power).
    #[arg(long, global = true, default_value_t = 2)]
    pub q: u64,
    /// Dimension of the space.
    #[arg(long, global = true, default_value_t = 3)]
    pub n: usize,
    #[arg(long, global = true, value_enum, default_value_t = SpaceKind::Proj)]
    pub space: SpaceKind,
    /// Write the JSON certificate to this file as well.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Block graph cache directory (overridden by STEINER_CACHE).
    #[arg(long, global = true)]
    pub cache: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Command-specific budget (items, candidates or pairs).
    #[arg(long, global = true)]
    pub limit: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Omit long listings from the result.
    #[arg(long, global = true)]
    pub summary: bool,
    /// Report timing_ms as 0.
    #[arg(long, global = true)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpaceKind {
    Proj,
    Aff,
}

impl SpaceKind {
    fn name(self) -> &'static str {
        match self {
            SpaceKind::Proj => "proj",
            SpaceKind::Aff => "aff",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exhaustive,
    BranchAndPrune,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate points, lines and planes.
    Geometry,
    /// Build the block graph, using the cache when possible.
    Blockgraph,
    /// Strongly regular parameters: closed form against brute force.
    Srg,
    /// Weight-distribution bound for the non-principal eigenvalues.
    Wdb {
        #[arg(long, allow_negative_numbers = true)]
        theta: Option<i64>,
    },
    /// Regulus through three skew lines, each given as `a0,a1,..:b0,b1,..`.
    Regulus {
        #[arg(long = "line", required = true)]
        lines: Vec<String>,
    },
    /// Opposite affine reguli built from three independent vectors.
    AffineRegulus {
        #[arg(long)]
        v1: String,
        #[arg(long)]
        v2: String,
        #[arg(long)]
        v3: String,
    },
    /// All regulus pairs of PG(3,q).
    EnumerateReguli,
    /// All ordered affine regulus pairs of AG(3,q).
    EnumerateAffineReguli,
    /// Induced K_{a,a} subgraphs and the optimal eigenfunctions they give.
    EnumerateOptimal,
    /// Check a JSON eigenfunction against the block graph.
    VerifyEigenfunction {
        #[arg(long)]
        input: PathBuf,
    },
    /// Eigenfunctions of support 2(q+1) from reguli and avoiding hyperplanes.
    Wdbplus2 {
        #[arg(long = "line")]
        lines: Vec<String>,
        #[arg(long)]
        hyperplane: Option<String>,
    },
    /// Every eigenfunction of a given support size, up to scaling.
    SearchSupport {
        #[arg(long, allow_negative_numbers = true)]
        theta: i64,
        #[arg(long)]
        size: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::BranchAndPrune)]
        mode: ModeArg,
        /// Continue from a checkpoint file.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Where to write the checkpoint when the budget runs out.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Quotient matrix and eigenfunction of a 2-partition.
    Equitable {
        #[command(flatten)]
        set: LineSet,
    },
    /// Balance condition for all regulus functions and named partitions.
    Balance,
    /// Cameron-Liebler test by reguli and by equitability.
    CameronLiebler {
        #[command(flatten)]
        set: LineSet,
        /// Also test this many random line sets.
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Args)]
pub struct LineSet {
    /// Lines through the point with these coordinates.
    #[arg(long)]
    pub star: Option<String>,
    /// Lines inside the hyperplane with this normal vector.
    #[arg(long)]
    pub hyperplane: Option<String>,
    /// Affine lines with this direction.
    #[arg(long)]
    pub direction: Option<String>,
    /// Explicit vertex indices.
    #[arg(long)]
    pub part: Option<String>,
    /// Replace the set by its complement.
    #[arg(long)]
    pub complement: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub witness: Value,
}

impl Check {
    fn new(name: &str, passed: bool) -> Self {
        Check {
            name: name.into(),
            passed,
            witness: Value::Null,
        }
    }

    fn with(name: &str, passed: bool, witness: Value) -> Self {
        Check {
            name: name.into(),
            passed,
            witness: if passed { Value::Null } else { witness },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema_version: String,
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub result: Value,
    pub checks: Vec<Check>,
    pub timing_ms: u64,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(String),
    Limit(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failed(_) => EXIT_CHECK_FAILED,
            CliError::Limit(_) => EXIT_LIMIT,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failed(m) => write!(f, "check failed: {m}"),
            CliError::Limit(m) => write!(f, "resource limit: {m}"),
        }
    }
}

impl From<GfError> for CliError {
    fn from(e: GfError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::LimitExceeded { .. } => CliError::Limit(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::Field(x) => x.into(),
            DesignError::Geometry(x) => x.into(),
            DesignError::AffineDimension(_) | DesignError::SymmetricDesign { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<SrgError> for CliError {
    fn from(e: SrgError) -> Self {
        match e {
            SrgError::NotAnEigenvalue(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<RegulusError> for CliError {
    fn from(e: RegulusError) -> Self {
        match e {
            RegulusError::Geometry(x) => x.into(),
            RegulusError::Design(x) => x.into(),
            RegulusError::Axiom(_) => CliError::Failed(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<EigenError> for CliError {
    fn from(e: EigenError) -> Self {
        match e {
            EigenError::LimitExceeded { .. } | EigenError::SearchLimit(_) => CliError::Limit(e.to_string()),
            EigenError::Regulus(x) => x.into(),
            EigenError::Geometry(x) => x.into(),
            EigenError::Design(x) => x.into(),
            EigenError::Srg(x) => x.into(),
            EigenError::NotAnEigenfunction(_) | EigenError::NotOptimal(_) => CliError::Failed(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<PartitionError> for CliError {
    fn from(e: PartitionError) -> Self {
        match e {
            PartitionError::Eigen(x) => x.into(),
            PartitionError::Regulus(x) => x.into(),
            PartitionError::Design(x) => x.into(),
            PartitionError::EmptyPart | PartitionError::VertexOutOfRange(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

/// What a command hands back before it is wrapped into a certificate.
struct Outcome {
    result: Value,
    checks: Vec<Check>,
    lines: Vec<String>,
}

/// Parses `argv`, runs the command and returns the process exit code.
/// Results go to stdout, progress and errors to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(&cli, err) {
        Ok(cert) => {
            let json = serde_json::to_string_pretty(&cert).expect("certificate serialises");
            if let Some(path) = &cli.common.out {
                if let Err(e) = std::fs::write(path, format!("{json}\n")) {
                    let _ = writeln!(err, "cannot write {}: {e}", path.display());
                    return EXIT_USAGE;
                }
            }
            match cli.common.format {
                Format::Json => {
                    let _ = writeln!(out, "{json}");
                }
                Format::Text => {
                    let _ = write!(out, "{}", render_text(&cert));
                }
            }
            if cert.passed() {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.code()
        }
    }
}

/// Runs the parsed command and builds its certificate.
pub fn execute(cli: &Cli, err: &mut dyn Write) -> Result<Certificate, CliError> {
    let c = &cli.common;
    if c.jobs > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(c.jobs).build_global();
    }
    let start = Instant::now();
    let mut parameters = BTreeMap::new();
    parameters.insert("q".into(), json!(c.q));
    parameters.insert("n".into(), json!(c.n));
    parameters.insert("space".into(), json!(c.space.name()));
    if let Some(l) = c.limit {
        parameters.insert("limit".into(), json!(l));
    }
    let (name, outcome) = match &cli.command {
        Command::Geometry => ("geometry", cmd_geometry(c)?),
        Command::Blockgraph => ("blockgraph", cmd_blockgraph(c, err)?),
        Command::Srg => ("srg", cmd_srg(c, err)?),
        Command::Wdb { theta } => {
            if let Some(t) = theta {
                parameters.insert("theta".into(), json!(t));
            }
            ("wdb", cmd_wdb(c, *theta, err)?)
        }
        Command::Regulus { lines } => {
            parameters.insert("lines".into(), json!(lines));
            ("regulus", cmd_regulus(c, lines)?)
        }
        Command::AffineRegulus { v1, v2, v3 } => {
            parameters.insert("vectors".into(), json!([v1, v2, v3]));
            ("affine-regulus", cmd_affine_regulus(c, [v1, v2, v3])?)
        }
        Command::EnumerateReguli => ("enumerate-reguli", cmd_enumerate_reguli(c)?),
        Command::EnumerateAffineReguli => {
            parameters.insert("space".into(), json!(SpaceKind::Aff.name()));
            ("enumerate-affine-reguli", cmd_enumerate_affine_reguli(c)?)
        }
        Command::EnumerateOptimal => ("enumerate-optimal", cmd_enumerate_optimal(c, err)?),
        Command::VerifyEigenfunction { input } => {
            parameters.insert("input".into(), json!(input.display().to_string()));
            ("verify-eigenfunction", cmd_verify(c, input, err)?)
        }
        Command::Wdbplus2 { lines, hyperplane } => {
            if !lines.is_empty() {
                parameters.insert("lines".into(), json!(lines));
            }
            if let Some(h) = hyperplane {
                parameters.insert("hyperplane".into(), json!(h));
            }
            parameters.insert("space".into(), json!("proj+aff"));
            ("wdbplus2", cmd_wdbplus2(c, lines, hyperplane.as_deref(), err)?)
        }
        Command::SearchSupport {
            theta,
            size,
            mode,
            resume,
            checkpoint,
        } => {
            parameters.insert("theta".into(), json!(theta));
            parameters.insert("size".into(), json!(size));
            let mode = match mode {
                ModeArg::Exhaustive => SearchMode::Exhaustive,
                ModeArg::BranchAndPrune => SearchMode::BranchAndPrune,
            };
            parameters.insert("mode".into(), json!(mode));
            (
                "search-support",
                cmd_search(c, *theta, *size, mode, resume.as_deref(), checkpoint.as_deref(), err)?,
            )
        }
        Command::Equitable { set } => {
            parameters.insert("set".into(), line_set_params(set));
            ("equitable", cmd_equitable(c, set, err)?)
        }
        Command::Balance => ("balance", cmd_balance(c, err)?),
        Command::CameronLiebler { set, random, seed } => {
            parameters.insert("set".into(), line_set_params(set));
            if *random > 0 {
                parameters.insert("random".into(), json!(random));
                parameters.insert("seed".into(), json!(seed));
            }
            ("cameron-liebler", cmd_cameron_liebler(c, set, *random, *seed, err)?)
        }
    };
    for l in &outcome.lines {
        let _ = writeln!(err, "{l}");
    }
    let timing_ms = if c.no_timing {
        0
    } else {
        start.elapsed().as_millis() as u64
    };
    Ok(Certificate {
        schema_version: SCHEMA_VERSION.into(),
        command: name.into(),
        parameters,
        result: outcome.result,
        checks: outcome.checks,
        timing_ms,
    })
}

pub fn render_text(cert: &Certificate) -> String {
    let mut s = format!(
        "{} [{}] {}\n",
        cert.command,
        cert.parameters
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" "),
        if cert.passed() { "ok" } else { "FAILED" }
    );
    if let Value::Object(m) = &cert.result {
        for (k, v) in m {
            if v.is_number() || v.is_string() || v.is_boolean() {
                s.push_str(&format!("  {k}: {v}\n"));
            }
        }
    }
    for c in &cert.checks {
        s.push_str(&format!("  [{}] {}\n", if c.passed { "pass" } else { "FAIL" }, c.name));
    }
    s
}

// ------------------------------------------------------------------ helpers

fn parse_ints(s: &str) -> Result<Vec<u32>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<u32>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(format!("bad vector {s:?}: {e}")))
}

fn parse_pair(s: &str) -> Result<(Vec<u32>, Vec<u32>), CliError> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("expected two vectors separated by ':' in {s:?}")))?;
    Ok((parse_ints(a)?, parse_ints(b)?))
}

fn parse_indices(s: &str) -> Result<Vec<usize>, CliError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(format!("bad index list {s:?}: {e}")))
}

fn field(c: &Common) -> Result<FieldSpec, CliError> {
    Ok(FieldSpec::of_order(c.q)?)
}

fn proj_space(c: &Common) -> Result<ProjSpace, CliError> {
    Ok(ProjSpace::new(c.n, &field(c)?)?)
}

fn aff_space(c: &Common) -> Result<AffSpace, CliError> {
    Ok(AffSpace::new(c.n, &field(c)?)?)
}

fn require_space(c: &Common, want: SpaceKind, what: &str) -> Result<(), CliError> {
    if c.space != want {
        return Err(CliError::Usage(format!("{what} needs --space {}", want.name())));
    }
    Ok(())
}

fn require_enum_q(c: &Common) -> Result<(), CliError> {
    if c.q > MAX_ENUM_Q {
        return Err(CliError::Limit(format!("enumeration is limited to q <= {MAX_ENUM_Q}")));
    }
    Ok(())
}

fn build_design(c: &Common) -> Result<Design, CliError> {
    Ok(match c.space {
        SpaceKind::Proj => projective_design_over(&proj_space(c)?)?,
        SpaceKind::Aff => affine_design_over(&aff_space(c)?)?,
    })
}

fn line_encoding(kind: SpaceKind) -> &'static str {
    match kind {
        SpaceKind::Proj => "2 x (n+1) reduced row echelon basis, row-major",
        SpaceKind::Aff => "{dir: first nonzero entry 1, base: reduced point}",
    }
}

/// Integer rendering of vertex `u` of the block graph.
fn vertex_json(bg: &BlockGraph, u: usize) -> Value {
    if let Some((_, lines)) = bg.design.projective_lines() {
        json!(lines[u])
    } else if let Some((_, lines)) = bg.design.affine_lines() {
        json!(lines[u])
    } else {
        json!(u)
    }
}

fn vertices_json(bg: &BlockGraph, us: &[usize]) -> Value {
    Value::Array(us.iter().map(|&u| vertex_json(bg, u)).collect())
}

fn function_json(bg: &BlockGraph, f: &Eigenfunction) -> Value {
    json!({
        "theta": f.theta(),
        "values": f.values().iter().map(|(u, x)| json!({
            "vertex": u,
            "line": vertex_json(bg, *u),
            "value": x.to_string(),
        })).collect::<Vec<_>>(),
    })
}

fn witness<T: Serialize>(w: &T) -> Value {
    serde_json::to_value(w).unwrap_or(Value::Null)
}

// -------------------------------------------------------------------- cache

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheFile {
    schema_version: String,
    space: String,
    n: usize,
    q: u64,
    vertices: usize,
    adjacency: String,
    checksum: String,
}

pub fn cache_dir(c: &Common) -> Option<PathBuf> {
    match std::env::var_os(CACHE_ENV) {
        Some(v) if !v.is_empty() => Some(PathBuf::from(v)),
        _ => c.cache.clone(),
    }
}

fn encode_words(words: &[u64]) -> String {
    let bytes: Vec<u8> = words.iter().flat_map(|w| w.to_le_bytes()).collect();
    hex::encode(bytes)
}

fn decode_words(s: &str) -> Option<Vec<u64>> {
    let bytes = hex::decode(s).ok()?;
    if bytes.len() % 8 != 0 {
        return None;
    }
    Some(
        bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect(),
    )
}

fn read_cache(path: &Path) -> Option<Graph> {
    let text = std::fs::read_to_string(path).ok()?;
    let file: CacheFile = serde_json::from_str(&text).ok()?;
    let g = Graph::from_raw(file.vertices, decode_words(&file.adjacency)?)?;
    (file.schema_version == SCHEMA_VERSION && g.digest() == file.checksum).then_some(g)
}

/// Builds the block graph; with a cache directory the adjacency is read
/// from (or written to) disk and compared against the fresh build.
fn load_block_graph(c: &Common, err: &mut dyn Write) -> Result<(BlockGraph, Value, Vec<Check>), CliError> {
    let mut bg = block_graph(build_design(c)?);
    let mut checks = Vec::new();
    let Some(dir) = cache_dir(c) else {
        return Ok((bg, json!({"status": "disabled"}), checks));
    };
    let file = format!("blockgraph-{}-n{}-q{}.json", c.space.name(), c.n, c.q);
    let path = dir.join(&file);
    let status = match read_cache(&path) {
        Some(g) => {
            let same = g == bg.graph;
            checks.push(Check::with(
                "cache-matches-fresh-build",
                same,
                json!({"cached": g.digest(), "fresh": bg.graph.digest()}),
            ));
            bg.graph = g;
            "hit"
        }
        None => {
            let _ = writeln!(err, "writing cache {}", path.display());
            let body = CacheFile {
                schema_version: SCHEMA_VERSION.into(),
                space: c.space.name().into(),
                n: c.n,
                q: c.q,
                vertices: bg.graph.vertex_count(),
                adjacency: encode_words(bg.graph.raw_words()),
                checksum: bg.graph.digest(),
            };
            std::fs::create_dir_all(&dir)
                .and_then(|_| std::fs::write(&path, serde_json::to_string(&body).expect("cache serialises")))
                .map_err(|e| CliError::Usage(format!("cannot write cache {}: {e}", path.display())))?;
            "written"
        }
    };
    let info = json!({"status": status, "file": file, "checksum": bg.graph.digest()});
    Ok((bg, info, checks))
}

fn params_check(bg: &BlockGraph, checks: &mut Vec<Check>) -> Result<SrgParams, CliError> {
    let formula = bg.params()?;
    let brute = srg_params_brute(&bg.graph)?;
    checks.push(Check::with(
        "srg-brute-force-equals-formula",
        brute == formula,
        json!({"brute": brute, "formula": formula}),
    ));
    Ok(brute)
}

// ----------------------------------------------------------------- commands

fn cmd_geometry(c: &Common) -> Result<Outcome, CliError> {
    let mut checks = Vec::new();
    let result = match c.space {
        SpaceKind::Proj => {
            let s = proj_space(c)?;
            let points = s.points()?;
            let lines = s.lines()?;
            checks.push(Check::new("point-count", points.len() as u64 == s.point_count()));
            checks.push(Check::new("line-count", lines.len() as u64 == s.line_count()));
            let mut r = json!({
                "point_count": points.len(),
                "line_count": lines.len(),
                "line_encoding": line_encoding(c.space),
            });
            if c.n == 3 {
                let planes = s.hyperplanes()?;
                checks.push(Check::new("plane-count", planes.len() as u64 == s.point_count()));
                r["plane_count"] = json!(planes.len());
                if !c.summary {
                    r["planes"] = json!(planes.iter().map(|h| h.normal().to_vec()).collect::<Vec<_>>());
                }
            }
            if !c.summary {
                r["points"] = json!(points);
                r["lines"] = json!(lines);
            }
            r
        }
        SpaceKind::Aff => {
            let s = aff_space(c)?;
            let points = s.points()?;
            let lines = s.lines()?;
            let planes = s.planes()?;
            checks.push(Check::new("point-count", points.len() as u64 == s.point_count()));
            checks.push(Check::new("line-count", lines.len() as u64 == s.line_count()));
            let mut r = json!({
                "point_count": points.len(),
                "line_count": lines.len(),
                "plane_count": planes.len(),
                "line_encoding": line_encoding(c.space),
            });
            if !c.summary {
                r["points"] = json!(points);
                r["lines"] = json!(lines);
                r["planes"] = json!(planes);
            }
            r
        }
    };
    Ok(Outcome {
        result,
        checks,
        lines: Vec::new(),
    })
}

fn cmd_blockgraph(c: &Common, err: &mut dyn Write) -> Result<Outcome, CliError> {
    let (bg, cache, mut checks) = load_block_graph(c, err)?;
    let params = params_check(&bg, &mut checks)?;
    let g = &bg.graph;
    let regular = (0..g.vertex_count()).all(|u| g.degree(u) as i64 == params.k);
    checks.push(Check::new("regular", regular));
    let mut result = json!({
        "v": g.vertex_count(),
        "k": params.k,
        "edges": g.edge_count(),
        "srg": [params.v, params.k, params.lambda, params.mu],
        "digest": g.digest(),
        "cache": cache,
        "line_encoding": line_encoding(c.space),
    });
    if !c.summary {
        result["vertices"] = vertices_json(&bg, &(0..g.vertex_count()).collect::<Vec<_>>());
    }
    Ok(Outcome {
        result,
        checks,
        lines: vec![format!("block graph v={} k={}", g.vertex_count(), params.k)],
    })
}

fn cmd_srg(c: &Common, err: &mut dyn Write) -> Result<Outcome, CliError> {
    let (bg, cache, mut checks) = load_block_graph(c, err)?;
    let p = params_check(&bg, &mut checks)?;
    let d = &bg.design;
    let closed = srg_params_formula(d.n_points() as u64, d.block_size() as u64)?;
    checks.push(Check::new("closed-form-matches-design", closed == p));
    let delsarte = delsarte_check(&bg, &p);
    checks.push(Check::new("pencils-are-delsarte-cliques", delsarte.pencils_meet_bound));
    let complement = p.complement()?;
    Ok(Outcome {
        result: json!({
            "design": {"points": d.n_points(), "block_size": d.block_size(), "blocks": d.blocks().len()},
            "params": p,
            "spectrum": [[p.k, 1], [p.r, p.m_r], [p.s, p.m_s]],
            "complement": complement,
            "delsarte_bound": delsarte.bound,
            "cache": cache,
        }),
        checks,
        lines: vec![format!("srg ({},{},{},{})", p.v, p.k, p.lambda, p.mu)],
    })
}

fn cmd_wdb(c: &Common, theta: Option<i64>, err: &mut dyn Write) -> Result<Outcome, CliError> {
    let (bg, _, mut checks) = load_block_graph(c, err)?;
    let p = params_check(&bg, &mut checks)?;
    let thetas = match theta {
        Some(t) => vec![t],
        None => vec![p.s, p.r],
    };
    let mut values = Vec::new();
    for t in thetas {
        let w = wdb(&p, t)?;
        let closed = if t == p.s { -2 * p.s } else { 2 * (p.r + 1) };
        checks.push(Check::with(
            &format!("wdb-closed-form-theta-{t}"),
            w as i64 == closed,
            json!({"wdb": w, "closed_form": closed}),
        ));
        values.push(json!({"theta": t, "wdb": w, "closed_form": closed}));
    }
    Ok(Outcome {
        result: json!({"params": [p.v, p.k, p.lambda, p.mu], "bounds": values}),
        checks,
        lines: Vec::new(),
    })
}

fn cmd_regulus(c: &Common, lines: &[String]) -> Result<Outcome, CliError> {
    require_space(c, SpaceKind::Proj, "regulus")?;
    if lines.len() != 3 {
        return Err(CliError::Usage(format!("need exactly three --line values, got {}", lines.len())));
    }
    let s = proj_space(c)?;
    let ls = lines
        .iter()
        .map(|t| {
            let (a, b) = parse_pair(t)?;
            Ok(s.line_from_ints(&a, &b)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let rp = regulus_through(&s, &ls[0], &ls[1], &ls[2])?;
    let mut checks = vec![Check::with(
        "grid-and-flat",
        rp.verify().is_ok(),
        json!(rp.verify().err().map(|e| e.to_string())),
    )];
    let through = ls.iter().all(|l| rp.r.contains(l));
    checks.push(Check::new("contains-input-lines", through));
    let opp = common_transversals(&s, &rp.r)?;
    checks.push(Check::new("opposite-is-transversal-set", opp == rp.r_opp));
    Ok(Outcome {
        result: json!({
            "regulus": rp.r,
            "opposite": rp.r_opp,
            "grid_points": rp.grid_points(),
            "line_encoding": line_encoding(SpaceKind::Proj),
        }),
        checks,
        lines: Vec::new(),
    })
}

fn cmd_affine_regulus(c: &Common, vs: [&String; 3]) -> Result<Outcome, CliError> {
    require_space(c, SpaceKind::Aff, "affine-regulus")?;
    let s = aff_space(c)?;
    let f = s.field().clone();
    let vecs = vs
        .iter()
        .map(|t| {
            let ints = parse_ints(t)?;
            if ints.len() != c.n {
                return Err(CliError::Usage(format!("vector {t:?} must have {} entries", c.n)));
            }
            ints.iter().map(|&i| Ok(f.elem(i)?)).collect::<Result<Vec<_>, CliError>>()
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let arp = affine_regulus_construct(&s, &vecs[0], &vecs[1], &vecs[2])?;
    let verified = arp.verify();
    let mut checks = vec![Check::with(
        "affine-regulus-axioms-and-lift",
        verified.is_ok(),
        json!(verified.err().map(|e| e.to_string())),
    )];
    let cls = parallel_plane_class(&s, &arp.s);
    let cls_opp = parallel_plane_class(&s, &arp.s_opp);
    checks.push(Check::new("s-in-parallel-plane-class", cls.is_some()));
    checks.push(Check::new("s-opp-in-parallel-plane-class", cls_opp.is_some()));
    Ok(Outcome {
        result: json!({
            "s": arp.s,
            "s_opp": arp.s_opp,
            "planes_s": cls,
            "planes_s_opp": cls_opp,
            "line_encoding": line_encoding(SpaceKind::Aff),
        }),
        checks,
        lines: Vec::new(),
    })
}

fn cmd_enumerate_reguli(c: &Common) -> Result<Outcome, CliError> {
    require_space(c, SpaceKind::Proj, "enumerate-reguli")?;
    require_enum_q(c)?;
    if c.n != 3 {
        return Err(CliError::Usage("enumerate-reguli needs --n 3".into()));
    }
    let s = proj_space(c)?;
    let all = enumerate_reguli(&s)?;
    let q = c.q;
    let formula = q.pow(4) * (q * q + 1) * (q.pow(3) - 1);
    let mut checks = vec![Check::with(
        "ordered-count-formula",
        all.len() as u64 == formula,
        json!({"found": all.len(), "formula": formula}),
    )];
    let bad = all.iter().position(|rp| rp.verify().is_err());
    checks.push(Check::with("all-verified", bad.is_none(), json!(bad)));
    let mut result = json!({
        "ordered_pairs": all.len(),
        "reguli": all.len(),
        "unordered_pairs": all.len() / 2,
        "formula": formula,
        "convention": "ordered (R, R_opp); each unordered pair and each regulus appears once as R",
        "line_encoding": line_encoding(SpaceKind::Proj),
    });
    if !c.summary {
        result["pairs"] = json!(all);
    }
    Ok(Outcome {
        result,
        checks,
        lines: vec![format!("{} ordered regulus pairs", all.len())],
    })
}

fn cmd_enumerate_affine_reguli(c: &Common) -> Result<Outcome, CliError> {
    require_enum_q(c)?;
    if c.n != 3 {
        return Err(CliError::Usage("enumerate-affine-reguli needs --n 3".into()));
    }
    let s = aff_space(c)?;
    let e = enumerate_affine_reguli(&s)?;
    let k = &e.counts;
    let checks = vec![
        Check::with(
            "ordered-count-formula",
            k.ordered_pairs as u64 == k.formula,
            json!({"found": k.ordered_pairs, "formula": k.formula}),
        ),
        Check::new("every-pair-verified-with-lift", e.pairs.iter().all(|p| p.verify().is_ok())),
    ];
    let mut result = json!({
        "count": k.ordered_pairs,
        "counts": k,
        "convention": {
            "ordered_pairs": "ordered (S, S_opp) with S_opp an opposite affine regulus of S",
            "families": "distinct line sets S satisfying the axioms",
            "quadrics": "unordered {S, S_opp}, one per affine part of a hyperbolic quadric",
        },
        "line_encoding": line_encoding(SpaceKind::Aff),
    });
    if !c.summary {
        result["pairs"] = json!(e.pairs);
    }
    Ok(Outcome {
        result,
        checks,
        lines: vec![format!("{} ordered affine regulus pairs", k.ordered_pairs)],
    })
}

fn cmd_enumerate_optimal(c: &Common, err: &mut dyn Write) -> Result<Outcome, CliError> {
    require_enum_q(c)?;
    let (bg, _, mut checks) = load_block_graph(c, err)?;
    let p = bg.params()?;
    let a = (-p.s) as usize;
    let limit = c.limit.map(|l| l as usize).unwrap_or(1 << 20);
    let _ = writeln!(err, "enumerating induced K_{{{a},{a}}} on {} vertices", bg.vertex_count());
    let pairs = enumerate_complete_bipartite_limited(&bg.graph, a, limit)?;
    let mut census: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut failures = Vec::new();
    let mut listing = Vec::new();
    for (t0, t1) in &pairs {
        let f = from_bipartite_pair(&bg.graph, t0, t1, p.s)?;
        let ok = verify_eigenfunction(&bg.graph, &f)?.is_none() && f.support_size() == 2 * a;
        match classify_optimal(&bg, &f) {
            Ok(cl) if ok => {
                *census.entry(cl.label()).or_default() += 1;
                if !c.summary {
                    listing.push(json!({"class": cl.label(), "t0": vertices_json(&bg, t0), "t1": vertices_json(&bg, t1)}));
                }
            }
            Ok(_) => failures.push(json!({"t0": t0, "t1": t1, "reason": "not a verified optimal function"})),
            Err(e) => failures.push(json!({"t0": t0, "t1": t1, "reason": e.to_string()})),
        }
    }
    checks.push(Check::with(
        "every-pair-is-classified-optimal",
        failures.is_empty(),
        json!(failures.iter().take(10).collect::<Vec<_>>()),
    ));
    let mut expected = json!(null);
    if c.n == 3 {
        match c.space {
            SpaceKind::Proj => {
                let reg = enumerate_regulus_indices(&bg.graph, c.q as usize)?;
                expected = json!({"regulus": reg.len() / 2});
                checks.push(Check::with(
                    "count-matches-regulus-enumeration",
                    pairs.len() == reg.len() / 2 && census.get("regulus") == Some(&pairs.len()),
                    json!({"found": pairs.len(), "reguli_unordered": reg.len() / 2}),
                ));
            }
            SpaceKind::Aff => {
                let s = aff_space(c)?;
                let planes = s.planes()?.len();
                let pc = (c.q + 1) as usize;
                let type1 = planes * pc * (pc - 1) / 2;
                let type2 = enumerate_affine_reguli(&s)?.counts.quadrics;
                expected = json!({"type1": type1, "type2": type2});
                checks.push(Check::with(
                    "census-matches-geometry",
                    census.get("type1").copied().unwrap_or(0) == type1
                        && census.get("type2").copied().unwrap_or(0) == type2
                        && pairs.len() == type1 + type2,
                    json!({"census": census, "type1": type1, "type2": type2}),
                ));
            }
        }
    }
    let mut result = json!({
        "a": a,
        "theta": p.s,
        "pairs": pairs.len(),
        "census": census,
        "expected": expected,
        "mixed": 0,
        "line_encoding": line_encoding(c.space),
    });
    if !c.summary {
        result["functions"] = json!(listing);
    }
    Ok(Outcome {
        result,
        checks,
        lines: vec![format!("{} induced K_{{{a},{a}}}", pairs.len())],
    })
}

fn cmd_verify(c: &Common, input: &Path, err: &mut dyn Write) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", input.display())))?;
    let f: Eigenfunction =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad eigenfunction file: {e}")))?;
    let (bg, _, mut checks) = load_block_graph(c, err)?;
    if f.n_vertices() != bg.vertex_count() {
        return Err(CliError::Usage(format!(
            "function has {} vertices, graph has {}",
            f.n_vertices(),
            bg.vertex_count()
        )));
    }
    let w = verify_eigenfunction(&bg.graph, &f)?;
    checks.push(Check::with("eigen-equation-at-every-vertex", w.is_none(), witness(&w)));
    let p = bg.params()?;
    let bound = wdb(&p, f.theta()).ok();
    let st = support_structure(&bg.graph, &f);
    let optimal = w.is_none() && bound == Some(f.support_size() as u64);
    let class = if optimal {
        classify_optimal(&bg, &f).ok().map(|k| k.label())
    } else {
        None
    };
    Ok(Outcome {
        result: json!({
            "valid": w.is_none(),
            "theta": f.theta(),
            "support_size": f.support_size(),
            "wdb": bound,
            "optimal": optimal,
            "class": class,
            "structure": st.kind,
            "function": function_json(&bg, &f),
        }),
        checks,
        lines: Vec::new(),
    })
}

fn cmd_wdbplus2(c: &Common, lines: &[String], hyperplane: Option<&str>, err: &mut dyn Write) -> Result<Outcome, CliError> {
    let ps = proj_space(c)?;
    let reguli: Vec<RegulusPair> = if lines.is_empty() {
        require_enum_q(c)?;
        if c.n != 3 {
            return Err(CliError::Usage("without --line, wdbplus2 needs --n 3".into()));
        }
        enumerate_reguli(&ps)?
    } else {
        if lines.len() != 3 {
            return Err(CliError::Usage("need exactly three --line values".into()));
        }
        let ls = lines
            .iter()
            .map(|t| {
                let (a, b) = parse_pair(t)?;
                Ok(ps.line_from_ints(&a, &b)?)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        vec![regulus_through(&ps, &ls[0], &ls[1], &ls[2])?]
    };
    let hyperplanes: Vec<Hyperplane> = match hyperplane {
        Some(h) => vec![ps.hyperplane_from_ints(&parse_ints(h)?)?],
        None => ps.hyperplanes()?,
    };
    let bg = block_graph(affine_design_over(&aff_space(c)?)?);
    let q = c.q as usize;
    let limit = c.limit.unwrap_or(u64::MAX);
    let avoids = |rp: &RegulusPair, h: &Hyperplane| {
        rp.r.iter().chain(&rp.r_opp).all(|l| !ps.hyperplane_contains_line(h, l))
    };
    let mut tested = 0u64;
    let mut census: BTreeMap<String, usize> = BTreeMap::new();
    let mut distinct = BTreeSet::new();
    let mut failures = Vec::new();
    let mut listing = Vec::new();
    'outer: for rp in &reguli {
        for h in &hyperplanes {
            if !avoids(rp, h) {
                continue;
            }
            if tested >= limit {
                break 'outer;
            }
            tested += 1;
            let f = wdbplus2_function(&bg, rp, h)?;
            let w = verify_eigenfunction(&bg.graph, &f)?;
            let st = support_structure(&bg.graph, &f);
            let good = w.is_none()
                && f.support_size() == 2 * (q + 1)
                && f.theta() == -(c.q as i64)
                && st.kind == StructureKind::BipartiteMinusMatching;
            if !good {
                failures.push(json!({"regulus": rp.r, "hyperplane": h.normal(), "witness": w, "structure": st.kind}));
            }
            *census.entry(format!("{:?}", st.kind)).or_default() += 1;
            let n = f.normalized();
            if !c.summary {
                listing.push(json!({"regulus": rp.r, "hyperplane": h.normal(), "function": function_json(&bg, &n)}));
            }
            distinct.insert(n);
        }
    }
    let _ = writeln!(err, "tested {tested} (regulus, hyperplane) pairs");
    let checks = vec![
        Check::new("some-pair-tested", tested > 0),
        Check::with(
            "verified-support-and-structure",
            failures.is_empty(),
            json!(failures.iter().take(10).collect::<Vec<_>>()),
        ),
    ];
    let mut result = json!({
        "pairs_tested": tested,
        "distinct_functions": distinct.len(),
        "support_size": 2 * (q + 1),
        "theta": -(c.q as i64),
        "structure_census": census,
        "line_encoding": {"regulus": line_encoding(SpaceKind::Proj), "function": line_encoding(SpaceKind::Aff)},
    });
    if !c.summary {
        result["instances"] = json!(listing);
    }
    Ok(Outcome {
        result,
        checks,
        lines: Vec::new(),
    })
}

/// All wdbplus2 functions of AG(3,q) for the inclusion check.
fn wdbplus2_instances(c: &Common, bg: &BlockGraph) -> Result<BTreeSet<Eigenfunction>, CliError> {
    let ps = proj_space(c)?;
    let mut out = BTreeSet::new();
    let hs = ps.hyperplanes()?;
    for rp in enumerate_reguli(&ps)? {
        for h in &hs {
            if rp.r.iter().chain(&rp.r_opp).any(|l| ps.hyperplane_contains_line(h, l)) {
                continue;
            }
            out.insert(wdbplus2_function(bg, &rp, h)?.normalized());
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn cmd_search(
    c: &Common,
    theta: i64,
    size: usize,
    mode: SearchMode,
    resume: Option<&Path>,
    checkpoint: Option<&Path>,
    err: &mut dyn Write,
) -> Result<Outcome, CliError> {
    let (bg, _, mut checks) = load_block_graph(c, err)?;
    let resume_state: Option<Checkpoint> = match resume {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            Some(serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad checkpoint: {e}")))?)
        }
        None => None,
    };
    let limits = SearchLimits {
        max_candidates: c.limit,
        jobs: c.jobs,
    };
    let _ = writeln!(err, "searching supports of size {size} for theta={theta}");
    let outcome = match crate::eigenfunctions::search_min_support(&bg.graph, theta, size, mode, limits, resume_state) {
        Ok(o) => o,
        Err(EigenError::SearchLimit(cp)) => {
            let path = checkpoint
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("search-checkpoint.json"));
            std::fs::write(&path, serde_json::to_string(&cp).expect("checkpoint serialises"))
                .map_err(|e| CliError::Usage(format!("cannot write checkpoint: {e}")))?;
            return Err(CliError::Limit(format!(
                "search budget exhausted after {} candidates; checkpoint written to {}",
                cp.examined,
                path.display()
            )));
        }
        Err(e) => return Err(e.into()),
    };
    let mut census: BTreeMap<String, usize> = BTreeMap::new();
    let mut bad = Vec::new();
    let mut listing = Vec::new();
    for f in &outcome.functions {
        let w = verify_eigenfunction(&bg.graph, f)?;
        if w.is_some() || f.support_size() != size {
            bad.push(json!({"support": f.support(), "witness": w}));
        }
        let st = support_structure(&bg.graph, f);
        *census.entry(format!("{:?}", st.kind)).or_default() += 1;
        if !c.summary {
            listing.push(json!({"structure": st.kind, "function": function_json(&bg, f)}));
        }
    }
    checks.push(Check::with(
        "every-function-re-verifies",
        bad.is_empty(),
        json!(bad.iter().take(10).collect::<Vec<_>>()),
    ));
    let distinct: BTreeSet<&Eigenfunction> = outcome.functions.iter().collect();
    checks.push(Check::new("duplicate-free", distinct.len() == outcome.functions.len()));
    let mut inclusion = Value::Null;
    if c.space == SpaceKind::Aff && c.n == 3 && c.q <= 3 && theta == -(c.q as i64) && size == 2 * (c.q as usize + 1) {
        let inst = wdbplus2_instances(c, &bg)?;
        let found: BTreeSet<Eigenfunction> = outcome.functions.iter().map(|f| f.normalized()).collect();
        let missing = inst.iter().filter(|f| !found.contains(*f)).count();
        checks.push(Check::with(
            "contains-every-wdbplus2-instance",
            missing == 0,
            json!({"missing": missing}),
        ));
        inclusion = json!({"wdbplus2_instances": inst.len(), "missing": missing});
    }
    let mut result = json!({
        "theta": theta,
        "size": size,
        "examined": outcome.examined,
        "function_count": outcome.functions.len(),
        "family_count": outcome.families.len(),
        "families": outcome.families,
        "structure_census": census,
        "census_note": "computational finding: census of the complete solution set by support structure",
        "wdbplus2_inclusion": inclusion,
        "line_encoding": line_encoding(c.space),
    });
    if !c.summary {
        result["functions"] = json!(listing);
    }
    Ok(Outcome {
        result,
        checks,
        lines: vec![format!(
            "{} functions, {} families from {} candidates",
            outcome.functions.len(),
            outcome.families.len(),
            outcome.examined
        )],
    })
}

fn line_set_params(s: &LineSet) -> Value {
    json!({
        "star": s.star,
        "hyperplane": s.hyperplane,
        "direction": s.direction,
        "part": s.part,
        "complement": s.complement,
    })
}

/// Vertex set selected by the line-set flags, sorted.
fn select(c: &Common, bg: &BlockGraph, s: &LineSet) -> Result<Vec<usize>, CliError> {
    let given = [&s.star, &s.hyperplane, &s.direction, &s.part]
        .iter()
        .filter(|x| x.is_some())
        .count();
    if given != 1 {
        return Err(CliError::Usage(
            "give exactly one of --star, --hyperplane, --direction, --part".into(),
        ));
    }
    let mut set = if let Some(p) = &s.star {
        let coords = parse_ints(p)?;
        let idx = match c.space {
            SpaceKind::Proj => {
                let pt = proj_space(c)?.point_from_ints(&coords)?;
                bg.design.projective_points().and_then(|ps| ps.binary_search(&pt).ok())
            }
            SpaceKind::Aff => {
                let pt = aff_space(c)?.point_from_ints(&coords)?;
                bg.design.affine_points().and_then(|ps| ps.binary_search(&pt).ok())
            }
        };
        let idx = idx.ok_or_else(|| CliError::Usage(format!("no point {p}")))?;
        star(bg, idx as u32)
    } else if let Some(h) = &s.hyperplane {
        require_space(c, SpaceKind::Proj, "--hyperplane")?;
        let h = proj_space(c)?.hyperplane_from_ints(&parse_ints(h)?)?;
        hyperplane_lines(bg, &h)
    } else if let Some(d) = &s.direction {
        require_space(c, SpaceKind::Aff, "--direction")?;
        let f = FieldSpec::of_order(c.q)?;
        let dir = parse_ints(d)?
            .iter()
            .map(|&i| Ok(f.elem(i)?))
            .collect::<Result<Vec<_>, CliError>>()?;
        direction_class(bg, &dir)
    } else {
        parse_indices(s.part.as_deref().unwrap_or(""))?
    };
    set.sort_unstable();
    set.dedup();
    if let Some(&u) = set.last() {
        if u >= bg.vertex_count() {
            return Err(CliError::Usage(format!("vertex {u} is out of range")));
        }
    }
    if s.complement {
        let inside: BTreeSet<usize> = set.into_iter().collect();
        set = (0..bg.vertex_count()).filter(|u| !inside.contains(u)).collect();
    }
    Ok(set)
}

fn cmd_equitable(c: &Common, s: &LineSet, err: &mut dyn Write) -> Result<Outcome, CliError> {
    let (bg, _, mut checks) = load_block_graph(c, err)?;
    let set = select(c, &bg, s)?;
    let p = Partition2::from_part(bg.vertex_count(), &set)?;
    let result = match quotient_matrix(&bg.graph, &p) {
        Err(PartitionError::NotEquitable(w)) => {
            checks.push(Check::with("equitable", false, witness(&w)));
            json!({"equitable": false, "part": vertices_json(&bg, &p.v1)})
        }
        Err(e) => return Err(e.into()),
        Ok(q) => {
            checks.push(Check::new("equitable", true));
            let ev = partition_eigenvalue(&q)?;
            let (f, _) = partition_to_eigenfunction(&bg.graph, &p)?;
            let w = verify_eigenfunction(&bg.graph, &f)?;
            checks.push(Check::with("eigenfunction-verifies", w.is_none(), witness(&w)));
            let vec = quotient_eigenvector(&q).map(|(a, b)| [a.to_string(), b.to_string()]);
            json!({
                "equitable": true,
                "quotient": q.rows(),
                "theta": ev.theta,
                "principal": ev.principal,
                "eigenvector": vec,
                "part": vertices_json(&bg, &p.v1),
                "part_size": p.v1.len(),
            })
        }
    };
    Ok(Outcome {
        result,
        checks,
        lines: Vec::new(),
    })
}

fn cmd_balance(c: &Common, err: &mut dyn Write) -> Result<Outcome, CliError> {
    require_space(c, SpaceKind::Proj, "balance")?;
    require_enum_q(c)?;
    if c.n != 3 {
        return Err(CliError::Usage("balance needs --n 3".into()));
    }
    let ps = proj_space(c)?;
    let bg = block_graph(projective_design_over(&ps)?);
    let params = bg.params()?;
    let mut named: Vec<(String, Partition2)> = Vec::new();
    for x in 0..bg.design.n_points() {
        named.push((format!("star-{x}"), Partition2::from_part(bg.vertex_count(), &star(&bg, x as u32))?));
    }
    for (i, h) in ps.hyperplanes()?.iter().enumerate() {
        named.push((format!("plane-{i}"), Partition2::from_part(bg.vertex_count(), &hyperplane_lines(&bg, h))?));
    }
    let reguli = enumerate_regulus_indices(&bg.graph, c.q as usize)?;
    let limit = c.limit.map(|l| l as usize).unwrap_or(reguli.len());
    let _ = writeln!(
        err,
        "checking {} regulus functions against {} partitions",
        limit.min(reguli.len()),
        named.len()
    );
    let mut tested = 0usize;
    let mut failures = Vec::new();
    for (r, ro) in reguli.iter().take(limit) {
        let f = crate::eigenfunctions::Eigenfunction::signed(bg.vertex_count(), params.s, r, ro)?;
        for (name, p) in &named {
            let rep = balance_check(&bg.graph, &f, std::slice::from_ref(&f), p, params.r)?;
            tested += 1;
            if !rep.equal {
                failures.push(json!({"regulus": vertices_json(&bg, r), "partition": name, "report": rep}));
            }
        }
    }
    let checks = vec![Check::with(
        "balanced-everywhere",
        failures.is_empty(),
        json!(failures.iter().take(10).collect::<Vec<_>>()),
    )];
    Ok(Outcome {
        result: json!({
            "regulus_functions": limit.min(reguli.len()),
            "partitions": {"stars": bg.design.n_points(), "planes": named.len() - bg.design.n_points()},
            "checks_run": tested,
            "theta": params.r,
        }),
        checks,
        lines: Vec::new(),
    })
}

fn cmd_cameron_liebler(c: &Common, s: &LineSet, random: usize, seed: u64, err: &mut dyn Write) -> Result<Outcome, CliError> {
    require_space(c, SpaceKind::Proj, "cameron-liebler")?;
    require_enum_q(c)?;
    if c.n != 3 {
        return Err(CliError::Usage("cameron-liebler needs --n 3".into()));
    }
    let ctx = CameronLieblerContext::new(&proj_space(c)?)?;
    let bg = &ctx.graph;
    let mut checks = Vec::new();
    let given = [&s.star, &s.hyperplane, &s.direction, &s.part].iter().any(|x| x.is_some());
    let mut result = json!({});
    if given {
        let set = select(c, bg, s)?;
        let v = ctx.check(&set)?;
        checks.push(Check::with("methods-agree", v.agree, witness(&v)));
        let wit = v.witness_a.as_ref().map(|(r, ro, a, b)| {
            json!({"regulus": vertices_json(bg, r), "opposite": vertices_json(bg, ro), "meets_regulus": a, "meets_opposite": b})
        });
        result["set"] = json!({
            "size": set.len(),
            "lines": vertices_json(bg, &set),
            "cameron_liebler": v.method_a && v.method_b,
            "method_a": v.method_a,
            "method_b": v.method_b,
            "witness_a": wit,
            "quotient": v.quotient.map(|q| q.rows()),
        });
    }
    if random > 0 {
        let _ = writeln!(err, "testing {random} random line sets");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = bg.vertex_count();
        let (mut cl, mut disagree) = (0usize, Vec::new());
        for i in 0..random {
            let size = rng.gen_range(1..n);
            let set: Vec<usize> = {
                let mut pick = rand::seq::index::sample(&mut rng, n, size).into_vec();
                pick.sort_unstable();
                pick
            };
            let v = ctx.check(&set)?;
            if !v.agree {
                disagree.push(i);
            }
            cl += (v.method_a && v.method_b) as usize;
        }
        checks.push(Check::with("random-sets-methods-agree", disagree.is_empty(), json!(disagree)));
        result["random"] = json!({"sets": random, "cameron_liebler": cl, "seed": seed});
    }
    if !given && random == 0 {
        return Err(CliError::Usage("give a line set or --random N".into()));
    }
    result["reguli"] = json!(ctx.reguli.len());
    Ok(Outcome {
        result,
        checks,
        lines: Vec::new(),
    })
}
