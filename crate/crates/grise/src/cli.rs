//! Command-line pipeline: model generation, sampling, learning, diagnostics
//! and evaluation. One subcommand per stage; every run writes a manifest
//! (`<output>.manifest.json`) capturing the command, inputs, hyperparameters
//! and timings, so results are replayable: rerunning the same command on the
//! same inputs reproduces the output file byte for byte.
//!
//! Exit codes: 0 success, 2 solver failure, 3 validation/input failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::basis::check_normalization;
use crate::conditioning::npc_vertex;
use crate::error::{Error, Result};
use crate::generate::{generate_model, pairwise_family, GeneratorSpec, Topology};
use crate::giso::LocalProblem;
use crate::io;
use crate::model::{BasisKind, BasisTag, ModelFamily};
use crate::oracle::enumerate_distribution;
use crate::projection::ConstraintDescriptor;
use crate::sampler::{sample_exact, sample_gibbs, GibbsConfig};
use crate::solver::{grise as solve_grise, SolverOptions};
use crate::suprise::{evaluate_estimate, run_suprise, SupriseConfig};

#[derive(Debug, Parser)]
#[command(
    name = "grise",
    version,
    about = "Structure and parameter learning for discrete graphical models via interaction screening"
)]
pub struct Cli {
    /// Worker thread cap (default: all cores; RAYON_NUM_THREADS is honored).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic model file.
    GenModel(GenModelArgs),
    /// Draw samples from a model file.
    Sample(SampleArgs),
    /// Estimate parameters (grise) or structure + parameters (suprise).
    Learn(LearnArgs),
    /// Clique-conditioning diagnostics per vertex.
    Npc(NpcArgs),
    /// Dump the exactly enumerated distribution of a small model.
    Oracle(OracleArgs),
    /// Compare a learned report against a ground-truth model.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, ValueEnum)]
pub enum TopologyArg {
    Chain,
    Grid,
    Erdos,
}

#[derive(Debug, Clone, ValueEnum)]
pub enum BasisArg {
    Monomial,
    Indicator,
}

impl BasisArg {
    fn kind(&self) -> BasisKind {
        match self {
            BasisArg::Monomial => BasisKind::Monomial,
            BasisArg::Indicator => BasisKind::Indicator,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenModelArgs {
    #[arg(long, value_enum)]
    pub topology: TopologyArg,
    /// Mean degree for the erdos topology.
    #[arg(long)]
    pub degree: Option<f64>,
    #[arg(short = 'p', long)]
    pub vertices: usize,
    #[arg(short = 'q', long, default_value_t = 2)]
    pub alphabet: usize,
    #[arg(long, value_enum, default_value = "monomial")]
    pub basis: BasisArg,
    /// Coupling magnitude range `a,b`.
    #[arg(long, default_value = "0.4,0.7")]
    pub coupling_range: String,
    /// Field magnitude range `a,b`.
    #[arg(long, default_value = "0.1,0.3")]
    pub field_range: String,
    /// Omit field factors.
    #[arg(long)]
    pub no_fields: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short = 'o', long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, ValueEnum)]
pub enum MethodArg {
    Exact,
    Gibbs,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(short = 'n', long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "exact")]
    pub method: MethodArg,
    /// Gibbs burn-in sweeps (default 100 * p).
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Gibbs sweeps between retained samples (default 10).
    #[arg(long)]
    pub thinning: Option<usize>,
    /// Enumeration cap override for the exact method.
    #[arg(long)]
    pub cap: Option<u128>,
    #[arg(short = 'o', long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, ValueEnum)]
pub enum ModeArg {
    Grise,
    Suprise,
}

#[derive(Debug, Clone, ValueEnum)]
pub enum FamilyArg {
    /// All vertex pairs, plus fields unless --no-family-fields.
    Pairwise,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[arg(long)]
    pub samples: PathBuf,
    /// Candidate family from a model file (its thetas are ignored).
    #[arg(long, conflicts_with = "family")]
    pub family_file: Option<PathBuf>,
    /// Built-in candidate family.
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Alphabet for --family: a single size or a comma list matching p.
    #[arg(long)]
    pub alphabet: Option<String>,
    #[arg(long, value_enum, default_value = "monomial")]
    pub basis: BasisArg,
    /// Exclude field factors from the built-in family.
    #[arg(long)]
    pub no_family_fields: bool,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    /// Vertex to solve (1-based), grise mode only.
    #[arg(long)]
    pub node: Option<usize>,
    /// Minimal clique intensity, suprise mode.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma_hat: f64,
    /// Maximum interaction strength input (needed unless --epsilon is set).
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub rho_npc: Option<f64>,
    /// Solver accuracy override; voids the theoretical guarantee.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Hard iteration cap; voids the theoretical guarantee.
    #[arg(long)]
    pub max_iters_override: Option<usize>,
    #[arg(long)]
    pub early_stop: bool,
    #[arg(short = 'o', long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct NpcArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub cap: Option<u128>,
    #[arg(short = 'o', long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub cap: Option<u128>,
    #[arg(short = 'o', long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    /// Chromatic number input for the pairwise l2 budget report.
    #[arg(long)]
    pub chi: Option<f64>,
    #[arg(short = 'o', long)]
    pub output: PathBuf,
}

#[derive(Serialize)]
struct Manifest {
    command: String,
    inputs: BTreeMap<String, String>,
    hyperparameters: BTreeMap<String, serde_json::Value>,
    version: String,
    timings_ms: BTreeMap<String, f64>,
}

fn write_manifest(output: &Path, manifest: &Manifest) -> Result<()> {
    let mut path = output.as_os_str().to_owned();
    path.push(".manifest.json");
    fs::write(
        PathBuf::from(path),
        serde_json::to_string_pretty(manifest)? + "\n",
    )?;
    Ok(())
}

fn parse_range(text: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Parse(format!("range must be `a,b`, got {text:?}")));
    }
    let a: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad range bound {:?}", parts[0])))?;
    let b: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad range bound {:?}", parts[1])))?;
    Ok((a, b))
}

/// Dispatch a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.threads {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(&cli.command))
        }
        None => dispatch(&cli.command),
    }
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::GenModel(args) => cmd_gen_model(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Learn(args) => cmd_learn(args),
        Command::Npc(args) => cmd_npc(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Eval(args) => cmd_eval(args),
    }
}

/// Generate a model file from topology flags.
pub fn cmd_gen_model(args: &GenModelArgs) -> Result<()> {
    let start = Instant::now();
    let topology = match args.topology {
        TopologyArg::Chain => Topology::Chain,
        TopologyArg::Grid => Topology::Grid,
        TopologyArg::Erdos => Topology::Erdos {
            degree: args.degree.ok_or_else(|| {
                Error::InvalidConfig("erdos topology needs --degree".into())
            })?,
        },
    };
    let spec = GeneratorSpec {
        topology,
        p: args.vertices,
        q: args.alphabet,
        basis: args.basis.kind(),
        coupling_range: parse_range(&args.coupling_range)?,
        field_range: parse_range(&args.field_range)?,
        fields: !args.no_fields,
        seed: args.seed,
    };
    let model = generate_model(&spec)?;
    io::write_model(&args.output, &model)?;
    write_manifest(
        &args.output,
        &Manifest {
            command: "gen-model".into(),
            inputs: BTreeMap::new(),
            hyperparameters: [
                ("topology".to_string(), serde_json::json!(format!("{:?}", spec.topology))),
                ("p".to_string(), serde_json::json!(spec.p)),
                ("q".to_string(), serde_json::json!(spec.q)),
                ("basis".to_string(), serde_json::json!(spec.basis.as_str())),
                ("coupling_range".to_string(), serde_json::json!(spec.coupling_range)),
                ("field_range".to_string(), serde_json::json!(spec.field_range)),
                ("fields".to_string(), serde_json::json!(spec.fields)),
                ("seed".to_string(), serde_json::json!(spec.seed)),
            ]
            .into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timings_ms: [("total".to_string(), ms(start))].into(),
        },
    )
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Sample a model file to a sample text file.
pub fn cmd_sample(args: &SampleArgs) -> Result<()> {
    let start = Instant::now();
    let model = io::read_model(&args.model)?;
    let samples = match args.method {
        MethodArg::Exact => sample_exact(&model, args.count, args.seed, args.cap)?,
        MethodArg::Gibbs => {
            let mut config =
                GibbsConfig::defaults(model.graph().vertex_count(), args.seed);
            if let Some(b) = args.burn_in {
                config.burn_in = b;
            }
            if let Some(t) = args.thinning {
                config.thinning = t;
            }
            sample_gibbs(&model, args.count, &config)?
        }
    };
    io::write_samples(&args.output, &samples)?;
    write_manifest(
        &args.output,
        &Manifest {
            command: "sample".into(),
            inputs: [("model".to_string(), args.model.display().to_string())].into(),
            hyperparameters: [
                ("n".to_string(), serde_json::json!(args.count)),
                ("seed".to_string(), serde_json::json!(args.seed)),
                (
                    "method".to_string(),
                    serde_json::json!(format!("{:?}", args.method).to_lowercase()),
                ),
                ("burn_in".to_string(), serde_json::json!(args.burn_in)),
                ("thinning".to_string(), serde_json::json!(args.thinning)),
            ]
            .into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timings_ms: [("total".to_string(), ms(start))].into(),
        },
    )
}

fn resolve_family(args: &LearnArgs) -> Result<ModelFamily> {
    if let Some(path) = &args.family_file {
        return Ok(io::read_model(path)?.family().clone());
    }
    match args.family {
        Some(FamilyArg::Pairwise) => {}
        None => {
            return Err(Error::InvalidConfig(
                "provide --family-file or --family".into(),
            ))
        }
    }
    let header = fs::read_to_string(&args.samples)?;
    let p: usize = header
        .lines()
        .next()
        .and_then(|l| l.split_whitespace().nth(1))
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse("sample file header must be `n p`".into()))?;
    let spec = args
        .alphabet
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("--family needs --alphabet".into()))?;
    let sizes: Vec<usize> = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad alphabet entry {s:?}")))
        })
        .collect::<Result<_>>()?;
    let q = match sizes.as_slice() {
        [q] => *q,
        many if many.len() == p => {
            if many.iter().any(|&x| x != many[0]) {
                return Err(Error::InvalidConfig(
                    "built-in families use a uniform alphabet".into(),
                ));
            }
            many[0]
        }
        _ => {
            return Err(Error::InvalidConfig(format!(
                "--alphabet must have 1 or {p} entries"
            )))
        }
    };
    pairwise_family(p, q, args.basis.kind(), !args.no_family_fields)
}

#[derive(Serialize)]
struct NodeReportJson {
    vertex: usize,
    giso_value: f64,
    iterations: usize,
    l1_norm: f64,
    constraint_residual: f64,
    parameters: Vec<NodeParameterJson>,
}

#[derive(Serialize)]
struct NodeParameterJson {
    scope: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    assignment: Option<Vec<usize>>,
    theta: f64,
}

/// Run the learner over a sample file.
pub fn cmd_learn(args: &LearnArgs) -> Result<()> {
    let start = Instant::now();
    let family = resolve_family(args)?;
    let samples = io::read_samples(&args.samples, family.alphabet().clone())?;
    // Bad bases abort in learn mode.
    let normalization = check_normalization(&family)?;
    if !normalization.is_normalized() {
        let worst = normalization
            .violations()
            .iter()
            .map(|e| e.max_abs_g)
            .fold(0.0f64, f64::max);
        return Err(Error::InvalidConfig(format!(
            "family violates normalization: max |g| = {worst}"
        )));
    }
    let load_ms = ms(start);
    let compute_start = Instant::now();
    match args.mode {
        ModeArg::Grise => {
            let node = args.node.ok_or_else(|| {
                Error::InvalidConfig("grise mode needs --node".into())
            })?;
            if node == 0 || node > family.vertex_count() {
                return Err(Error::InvalidConfig(format!(
                    "--node {node} out of range 1..={}",
                    family.vertex_count()
                )));
            }
            let vertex = node - 1;
            let epsilon = args.epsilon.ok_or_else(|| {
                Error::InvalidConfig("grise mode needs --epsilon".into())
            })?;
            let constraints = match family.basis() {
                BasisKind::Indicator => ConstraintDescriptor::indicator_zero_sum(
                    &family,
                    family.graph().incident(vertex),
                )?,
                _ => ConstraintDescriptor::Trivial,
            };
            let problem = LocalProblem::from_samples(
                &family,
                &samples,
                vertex,
                args.gamma_hat,
                constraints,
            )?;
            let options = SolverOptions {
                epsilon,
                max_iterations: args.max_iters_override,
                early_stop: args.early_stop,
            };
            let report = solve_grise(&problem, &options)?;
            let parameters = problem
                .factor_ids()
                .iter()
                .zip(&report.theta)
                .map(|(&k, &theta)| {
                    let factor = family.graph().factor(k);
                    NodeParameterJson {
                        scope: factor.scope().iter().map(|&v| v + 1).collect(),
                        assignment: match factor.tag() {
                            BasisTag::Indicator(letters) => {
                                Some(letters.iter().map(|&s| s as usize).collect())
                            }
                            _ => None,
                        },
                        theta,
                    }
                })
                .collect();
            let json = NodeReportJson {
                vertex: node,
                giso_value: report.best_value,
                iterations: report.iterations,
                l1_norm: report.l1_norm,
                constraint_residual: report.constraint_residual,
                parameters,
            };
            fs::write(&args.output, serde_json::to_string_pretty(&json)? + "\n")?;
        }
        ModeArg::Suprise => {
            let alpha = args.alpha.ok_or_else(|| {
                Error::InvalidConfig("suprise mode needs --alpha".into())
            })?;
            if args.epsilon.is_none() && args.gamma.is_none() {
                return Err(Error::InvalidConfig(
                    "suprise mode needs --gamma unless --epsilon is given".into(),
                ));
            }
            let config = SupriseConfig {
                alpha,
                gamma_hat: args.gamma_hat,
                gamma: args.gamma.unwrap_or(0.0),
                rho_npc: args.rho_npc,
                epsilon_override: args.epsilon,
                max_iterations: args.max_iters_override,
                early_stop: args.early_stop,
            };
            let report = run_suprise(&family, &samples, &config)?;
            io::write_report(&args.output, &report)?;
        }
    }
    let compute_ms = ms(compute_start);
    write_manifest(
        &args.output,
        &Manifest {
            command: "learn".into(),
            inputs: [
                ("samples".to_string(), args.samples.display().to_string()),
                (
                    "family".to_string(),
                    args.family_file
                        .as_ref()
                        .map(|p| p.display().to_string())
                        .unwrap_or_else(|| "pairwise".to_string()),
                ),
            ]
            .into(),
            hyperparameters: [
                ("mode".to_string(), serde_json::json!(format!("{:?}", args.mode).to_lowercase())),
                ("node".to_string(), serde_json::json!(args.node)),
                ("alpha".to_string(), serde_json::json!(args.alpha)),
                ("gamma_hat".to_string(), serde_json::json!(args.gamma_hat)),
                ("gamma".to_string(), serde_json::json!(args.gamma)),
                ("rho_npc".to_string(), serde_json::json!(args.rho_npc)),
                ("epsilon".to_string(), serde_json::json!(args.epsilon)),
                (
                    "max_iters_override".to_string(),
                    serde_json::json!(args.max_iters_override),
                ),
                ("early_stop".to_string(), serde_json::json!(args.early_stop)),
            ]
            .into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timings_ms: [
                ("load".to_string(), load_ms),
                ("compute".to_string(), compute_ms),
                ("total".to_string(), ms(start)),
            ]
            .into(),
        },
    )
}

#[derive(Serialize)]
struct NpcJson {
    rho_exact: f64,
    rho_bound: f64,
    min_clique: Vec<usize>,
    degenerate: bool,
}

/// Clique-conditioning report per vertex.
pub fn cmd_npc(args: &NpcArgs) -> Result<()> {
    let start = Instant::now();
    let model = io::read_model(&args.model)?;
    let mut out: BTreeMap<String, NpcJson> = BTreeMap::new();
    for vertex in 0..model.graph().vertex_count() {
        let report = npc_vertex(&model, vertex, args.cap)?;
        out.insert(
            (vertex + 1).to_string(),
            NpcJson {
                rho_exact: report.rho_exact,
                rho_bound: report.rho_bound,
                min_clique: report.min_clique.iter().map(|&v| v + 1).collect(),
                degenerate: report.degenerate,
            },
        );
    }
    fs::write(&args.output, serde_json::to_string_pretty(&out)? + "\n")?;
    write_manifest(
        &args.output,
        &Manifest {
            command: "npc".into(),
            inputs: [("model".to_string(), args.model.display().to_string())].into(),
            hyperparameters: [("cap".to_string(), serde_json::json!(args.cap.map(|c| c as u64)))]
                .into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timings_ms: [("total".to_string(), ms(start))].into(),
        },
    )
}

#[derive(Serialize)]
struct OracleJson {
    p: usize,
    alphabet: Vec<usize>,
    ordering: String,
    log_z: f64,
    probs: Vec<f64>,
}

/// Dump the exact distribution of an enumerable model.
pub fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let start = Instant::now();
    let model = io::read_model(&args.model)?;
    let dist = enumerate_distribution(&model, args.cap)?;
    let json = OracleJson {
        p: model.graph().vertex_count(),
        alphabet: model.alphabet().sizes().to_vec(),
        ordering: "lexicographic, last vertex fastest".into(),
        log_z: dist.log_partition(),
        probs: dist.probs().to_vec(),
    };
    fs::write(&args.output, serde_json::to_string_pretty(&json)? + "\n")?;
    write_manifest(
        &args.output,
        &Manifest {
            command: "oracle".into(),
            inputs: [("model".to_string(), args.model.display().to_string())].into(),
            hyperparameters: BTreeMap::new(),
            version: env!("CARGO_PKG_VERSION").into(),
            timings_ms: [("total".to_string(), ms(start))].into(),
        },
    )
}

/// Structure and parameter error metrics of a report against a truth model.
pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let start = Instant::now();
    let truth = io::read_model(&args.truth)?;
    let report = io::read_report(&args.report, truth.family())?;
    let metrics = evaluate_estimate(&truth, &report, args.chi)?;
    fs::write(&args.output, io::metrics_to_string(&metrics)?)?;
    write_manifest(
        &args.output,
        &Manifest {
            command: "eval".into(),
            inputs: [
                ("truth".to_string(), args.truth.display().to_string()),
                ("report".to_string(), args.report.display().to_string()),
            ]
            .into(),
            hyperparameters: [("chi".to_string(), serde_json::json!(args.chi))].into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timings_ms: [("total".to_string(), ms(start))].into(),
        },
    )
}

/// Convenience for tests and scripting: run the CLI from an argv-style
/// vector.
pub fn run_from<I, T>(argv: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)
        .map_err(|e| Error::InvalidConfig(format!("argument parsing: {e}")))?;
    run(cli)
}
