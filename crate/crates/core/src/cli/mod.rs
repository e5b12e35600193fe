//! Command-line front end: argument types, file I/O and the commands.
//!
//! Every command writes a `manifest.json` next to its outputs. The manifest
//! holds the full argument set (minus the output directory) with input paths
//! made absolute, and `cellflow replay` re-runs it.

pub mod benchmark;
pub mod io;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{build_b1, build_b2, CellKey, TwoCell};
use crate::heuristics::HeuristicKind;
use crate::hodge;
use crate::inference::{self, InferenceConfig, InferenceError};
use crate::lsmr::SolverConfig;
use crate::synth::{self, GenerationError, SynthConfig};

pub use io::ParseError;

pub const THREADS_ENV: &str = "CELLFLOW_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Solver(String),
    #[error(transparent)]
    Generation(#[from] GenerationError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_owned(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Parse(_) | CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Generation(_) => 4,
        }
    }
}

impl From<InferenceError> for CliError {
    fn from(e: InferenceError) -> Self {
        match e {
            InferenceError::Solver { .. } => CliError::Solver(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cellflow", version, about = "Infer polygonal 2-cells from edge flows")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate a synthetic instance: edges, flows and ground-truth cells.
    Generate(GenerateArgs),
    /// Greedily infer 2-cells for observed flows.
    Infer(InferArgs),
    /// Per-sample gradient, curl and harmonic norms.
    Decompose(DecomposeArgs),
    /// Runtime over graph families and sizes.
    Benchmark(BenchmarkArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Triangulation,
    Smallworld,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Triangulation => "triangulation",
            Family::Smallworld => "smallworld",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value_t = Family::Triangulation)]
    pub family: Family,
    #[arg(long, default_value_t = 60)]
    pub nodes: usize,
    /// Number of planted cells.
    #[arg(long, default_value_t = 5)]
    pub cells: usize,
    /// Planted cell length (the minimum when --len-max is given).
    #[arg(long, default_value_t = 6)]
    pub len: usize,
    #[arg(long)]
    pub len_max: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_c: f64,
    #[arg(long, default_value_t = 0.75)]
    pub sigma_n: f64,
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
    /// Deletion probability for nodes and edges outside planted cells.
    #[arg(long, default_value_t = synth::DEFAULT_PRUNE_PROBABILITY)]
    pub prune_prob: f64,
    /// Chord probability for the smallworld family.
    #[arg(long, default_value_t = 0.01)]
    pub extra_edge_prob: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct InferArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub flows: PathBuf,
    /// Ground-truth cells; fills the recovery column and feeds `true-cells`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value = "similarity")]
    pub heuristic: HeuristicKind,
    /// Candidates per step (m).
    #[arg(long, default_value_t = 5)]
    pub candidates: usize,
    /// Clusters for the similarity heuristic (k).
    #[arg(long, default_value_t = crate::heuristics::DEFAULT_CLUSTERS)]
    pub clusters: usize,
    #[arg(long)]
    pub max_cells: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub b2_nnz_budget: Option<usize>,
    /// LSMR stopping tolerance (atol = btol).
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
    /// Also draw loss against |C2| and ||B2||_0 as SVG.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub flows: PathBuf,
    #[arg(long)]
    pub cells: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct BenchmarkArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Family::Triangulation, Family::Smallworld])]
    pub families: Vec<Family>,
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1000])]
    pub sizes: Vec<usize>,
    /// Seeds per (family, size), counting up from --seed.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    #[arg(long, default_value_t = 4)]
    pub cells: usize,
    #[arg(long, default_value_t = 5)]
    pub samples: usize,
    #[arg(long, default_value_t = 5)]
    pub candidates: usize,
    #[arg(long, default_value = "similarity")]
    pub heuristic: HeuristicKind,
    /// Planted cell length range for triangulations; smallworld cells may
    /// be any length.
    #[arg(long, default_value_t = 3)]
    pub len: usize,
    #[arg(long, default_value_t = 8)]
    pub len_max: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_c: f64,
    #[arg(long, default_value_t = 0.75)]
    pub sigma_n: f64,
    #[arg(long, default_value_t = 0.01)]
    pub extra_edge_prob: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Defaults to the manifest's directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
}

impl Manifest {
    fn new(command: Command) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command,
        }
    }
}

/// Sizes the global rayon pool from `CELLFLOW_THREADS`, if set.
pub fn configure_threads() -> Result<(), CliError> {
    let raw = std::env::var(THREADS_ENV).unwrap_or_default();
    if raw.trim().is_empty() {
        return Ok(());
    }
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // a pool built earlier in the same process wins; that is fine
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Infer(a) => infer(a),
        Command::Decompose(a) => decompose(a),
        Command::Benchmark(a) => benchmark::run(a),
        Command::Replay(a) => replay(a),
    }
}

pub(crate) fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))
}

pub(crate) fn write_manifest(dir: &Path, command: Command) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(&Manifest::new(command)).expect("manifest serializes");
    write_file(dir, "manifest.json", &(json + "\n"))
}

fn absolute(path: &Path) -> Result<PathBuf, CliError> {
    fs::canonicalize(path).map_err(|e| CliError::io(path, e))
}

fn solver_config(tol: f64) -> Result<SolverConfig, CliError> {
    let cfg = SolverConfig::with_tolerance(tol);
    cfg.validate().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(cfg)
}

pub fn generate(args: GenerateArgs) -> Result<(), CliError> {
    let cfg = SynthConfig {
        node_count: args.nodes,
        cell_count: args.cells,
        cell_length: (args.len, args.len_max.unwrap_or(args.len)),
        sigma_c: args.sigma_c,
        sigma_n: args.sigma_n,
        samples: args.samples,
        prune_probability: args.prune_prob,
        seed: args.seed,
    };
    let generated = match args.family {
        Family::Triangulation => synth::generate_triangulation_complex(&cfg)?,
        Family::Smallworld => synth::generate_smallworld_complex(&cfg, args.extra_edge_prob)?,
    };
    let flows = synth::sample_config_flows(&generated, &cfg);
    let dir = &args.out_dir;
    write_file(dir, "edges.csv", &io::write_edges(generated.complex.skeleton()))?;
    write_file(dir, "flows.csv", &io::write_flows(&flows))?;
    write_file(dir, "truth.csv", &io::write_cells(generated.truth()))?;
    write_manifest(dir, Command::Generate(args.clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferSummary {
    pub heuristic: HeuristicKind,
    pub stop_reason: inference::StopReason,
    pub iterations: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub b2_nnz: usize,
    pub recovery: Option<f64>,
}

pub fn infer(mut args: InferArgs) -> Result<(), CliError> {
    args.edges = absolute(&args.edges)?;
    args.flows = absolute(&args.flows)?;
    args.truth = args.truth.as_deref().map(absolute).transpose()?;

    let skeleton = io::load_edges(&args.edges)?;
    let flows = io::load_flows(&args.flows, skeleton.edge_count())?;
    let truth = args
        .truth
        .as_deref()
        .map(|p| io::load_cells(p, &skeleton))
        .transpose()?;
    let config = InferenceConfig {
        heuristic: args.heuristic,
        candidates: args.candidates,
        clusters: args.clusters,
        max_cells: args.max_cells,
        epsilon: args.epsilon,
        b2_nnz_budget: args.b2_nnz_budget,
        solver: solver_config(args.tol)?,
        seed: args.seed,
    };
    let result = inference::infer_with_truth(&skeleton, &flows, &config, truth.as_deref())?;

    let recovery = |cells: &[TwoCell]| truth.as_deref().map(|t| inference::recovery_of(cells, t));
    let mut rows = vec![io::MetricsRow {
        iteration: 0,
        cell: None,
        loss: result.initial_loss,
        cells_count: 0,
        b2_nnz: 0,
        wall_time_ms: 0.0,
        recovery: recovery(&[]),
    }];
    for (i, rec) in result.history.iter().enumerate() {
        rows.push(io::MetricsRow {
            iteration: rec.iteration,
            cell: Some(rec.cell.key().to_string()),
            loss: rec.loss,
            cells_count: rec.cells_count,
            b2_nnz: rec.b2_nnz,
            wall_time_ms: rec.wall_time_ms,
            recovery: recovery(&result.complex.cells()[..=i]),
        });
    }
    let summary = InferSummary {
        heuristic: args.heuristic,
        stop_reason: result.stop_reason,
        iterations: result.history.len(),
        initial_loss: result.initial_loss,
        final_loss: result.final_loss(),
        b2_nnz: result.complex.b2_nnz(),
        recovery: recovery(result.complex.cells()),
    };

    let dir = &args.out_dir;
    write_file(dir, "cells.csv", &io::write_cells(result.complex.cells()))?;
    write_file(dir, "metrics.csv", &io::write_metrics(&rows))?;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(dir, "summary.json", &(json + "\n"))?;
    if args.svg {
        let series = |name: &str, x: fn(&io::MetricsRow) -> f64| svg::Series {
            name: name.to_owned(),
            points: rows.iter().map(|r| (x(r), r.loss)).collect(),
        };
        let chart = svg::line_chart(
            "loss against sparsity",
            "|C2|",
            "loss",
            &[series(args.heuristic.name(), |r| r.cells_count as f64)],
            svg::Axes::default(),
        );
        write_file(dir, "loss_cells.svg", &chart)?;
        let chart = svg::line_chart(
            "loss against nonzeros",
            "||B2||_0",
            "loss",
            &[series(args.heuristic.name(), |r| r.b2_nnz as f64)],
            svg::Axes::default(),
        );
        write_file(dir, "loss_nnz.svg", &chart)?;
    }
    write_manifest(dir, Command::Infer(args.clone()))
}

pub const DECOMPOSITION_HEADER: &str = "sample,total,gradient,curl,harmonic,pythagoras_error";

pub fn decompose(mut args: DecomposeArgs) -> Result<(), CliError> {
    args.edges = absolute(&args.edges)?;
    args.flows = absolute(&args.flows)?;
    args.cells = args.cells.as_deref().map(absolute).transpose()?;

    let skeleton = io::load_edges(&args.edges)?;
    let flows = io::load_flows(&args.flows, skeleton.edge_count())?;
    let cells = match args.cells.as_deref() {
        Some(p) => io::load_cells(p, &skeleton)?,
        None => Vec::new(),
    };
    let b1 = build_b1(&skeleton);
    let b2 = build_b2(&skeleton, &cells).map_err(|e| CliError::Input(e.to_string()))?;
    let parts = hodge::decompose(&b1, &b2, &flows, &solver_config(args.tol)?)
        .map_err(|e| CliError::Solver(e.to_string()))?;

    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut out = format!("{DECOMPOSITION_HEADER}\n");
    for j in 0..flows.sample_count() {
        let total = norm(flows.column(j));
        let (g, c, h) = (
            norm(parts.gradient.column(j)),
            norm(parts.curl.column(j)),
            norm(parts.harmonic.column(j)),
        );
        // relative gap in ||f||^2 = ||g||^2 + ||c||^2 + ||h||^2
        let gap = (total * total - g * g - c * c - h * h).abs() / (total * total).max(f64::MIN_POSITIVE);
        out.push_str(&format!("{},{total:?},{g:?},{c:?},{h:?},{gap:?}\n", j + 1));
    }
    write_file(&args.out_dir, "decomposition.csv", &out)?;
    write_manifest(&args.out_dir, Command::Decompose(args.clone()))
}

pub fn replay(args: ReplayArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.manifest).map_err(|e| CliError::io(&args.manifest, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| {
        CliError::Parse(ParseError::File {
            file: args.manifest.display().to_string(),
            message: e.to_string(),
        })
    })?;
    let out_dir = match args.out_dir {
        Some(dir) => dir,
        None => args
            .manifest
            .parent()
            .map(Path::to_owned)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    let command = match manifest.command {
        Command::Generate(a) => Command::Generate(GenerateArgs { out_dir, ..a }),
        Command::Infer(a) => Command::Infer(InferArgs { out_dir, ..a }),
        Command::Decompose(a) => Command::Decompose(DecomposeArgs { out_dir, ..a }),
        Command::Benchmark(a) => Command::Benchmark(BenchmarkArgs { out_dir, ..a }),
        Command::Replay(_) => return Err(CliError::Input("a manifest cannot record a replay".into())),
    };
    run(command)
}

/// Parses a `0-3-4` cell label back into a key.
pub fn parse_cell_label(label: &str) -> Option<CellKey> {
    let nodes = label
        .split('-')
        .map(|s| s.parse().ok())
        .collect::<Option<Vec<usize>>>()?;
    (nodes.len() >= 3).then(|| CellKey::from_cycle(&nodes))
}
