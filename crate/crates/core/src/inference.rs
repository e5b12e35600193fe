//! The greedy driver.
//!
//! Starting from the bare graph, each step asks a candidate search for up to
//! `m` cells, evaluates the loss each would leave behind, and keeps the best.
//! It stops on a cell budget, a loss threshold, a `||B2||_0` budget, a zero
//! residual, or when the search comes back empty.

use std::collections::HashSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{build_b1, CellComplex, CellKey, Skeleton, TwoCell};
use crate::flows::FlowMatrix;
use crate::heuristics::{self, CellCandidate, HeuristicKind, DEFAULT_CLUSTERS};
use crate::hodge::{loss_delta, project_gradient_out, project_harmonic};
use crate::lsmr::{SolverConfig, SolverError};
use crate::sparse::SparseMatrix;

/// Residuals below this fraction of the initial norm count as fully explained.
pub const ZERO_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("flows have {flows} rows but the graph has {edges} edges")]
    Dimension { flows: usize, edges: usize },
    #[error("the true-cells heuristic needs ground-truth cells")]
    MissingGroundTruth,
    #[error("solver failed in iteration {iteration}: {source}")]
    Solver {
        iteration: usize,
        #[source]
        source: SolverError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub heuristic: HeuristicKind,
    /// `m`: candidates requested per step.
    pub candidates: usize,
    /// `k`: clusters for the similarity search.
    pub clusters: usize,
    /// `n`: maximum number of 2-cells.
    pub max_cells: Option<usize>,
    /// Stop once the loss drops below this.
    pub epsilon: Option<f64>,
    /// Never let `||B2||_0` exceed this.
    pub b2_nnz_budget: Option<usize>,
    pub solver: SolverConfig,
    pub seed: u64,
}

impl InferenceConfig {
    pub fn new(heuristic: HeuristicKind, max_cells: usize) -> Self {
        Self {
            heuristic,
            candidates: 5,
            clusters: DEFAULT_CLUSTERS,
            max_cells: Some(max_cells),
            epsilon: None,
            b2_nnz_budget: None,
            solver: SolverConfig::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), InferenceError> {
        if self.max_cells.is_none() && self.epsilon.is_none() && self.b2_nnz_budget.is_none() {
            return Err(InferenceError::Config("no stopping rule given".into()));
        }
        if self.candidates == 0 {
            return Err(InferenceError::Config("candidate count must be at least 1".into()));
        }
        if self.clusters == 0 {
            return Err(InferenceError::Config("cluster count must be at least 1".into()));
        }
        if let Some(eps) = self.epsilon {
            if !(eps >= 0.0) {
                return Err(InferenceError::Config("epsilon must be non-negative".into()));
            }
        }
        self.solver
            .validate()
            .map_err(|e| InferenceError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxCells,
    Epsilon,
    B2Budget,
    NoCandidates,
    ZeroResidual,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::MaxCells => "max-cells",
            StopReason::Epsilon => "epsilon",
            StopReason::B2Budget => "b2-nnz-budget",
            StopReason::NoCandidates => "no-candidates",
            StopReason::ZeroResidual => "zero-residual",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based step number.
    pub iteration: usize,
    pub cell: TwoCell,
    pub loss: f64,
    pub cells_count: usize,
    pub b2_nnz: usize,
    pub candidates_evaluated: usize,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone)]
pub struct InferenceResult {
    pub complex: CellComplex,
    pub history: Vec<IterationRecord>,
    /// Loss of the bare graph, i.e. the norm of the gradient-free flows.
    pub initial_loss: f64,
    pub stop_reason: StopReason,
}

impl InferenceResult {
    /// Loss after the first `cells` steps (clamped to the steps taken).
    pub fn loss_at(&self, cells: usize) -> f64 {
        match cells.min(self.history.len()) {
            0 => self.initial_loss,
            i => self.history[i - 1].loss,
        }
    }

    pub fn final_loss(&self) -> f64 {
        self.loss_at(self.history.len())
    }
}

/// Runs the greedy loop without ground truth.
pub fn infer(
    skeleton: &Skeleton,
    flows: &FlowMatrix,
    config: &InferenceConfig,
) -> Result<InferenceResult, InferenceError> {
    infer_with_truth(skeleton, flows, config, None)
}

fn search(
    config: &InferenceConfig,
    complex: &CellComplex,
    residual: &FlowMatrix,
    truth: Option<&[TwoCell]>,
    iteration: usize,
) -> Result<Vec<CellCandidate>, InferenceError> {
    let m = config.candidates;
    Ok(match config.heuristic {
        HeuristicKind::Max => heuristics::cs_max(complex, residual, m),
        HeuristicKind::Similarity => {
            let seed = config
                .seed
                .wrapping_add((iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            heuristics::cs_similarity(complex, residual, config.clusters, m, seed)
        }
        HeuristicKind::Triangles => heuristics::cs_triangles(complex, residual, m),
        HeuristicKind::TrueCells => {
            heuristics::cs_true_cells(complex, truth.ok_or(InferenceError::MissingGroundTruth)?)
        }
    })
}

/// Runs the greedy loop; `truth` feeds the `true-cells` baseline.
pub fn infer_with_truth(
    skeleton: &Skeleton,
    flows: &FlowMatrix,
    config: &InferenceConfig,
    truth: Option<&[TwoCell]>,
) -> Result<InferenceResult, InferenceError> {
    config.validate()?;
    if flows.edge_count() != skeleton.edge_count() {
        return Err(InferenceError::Dimension {
            flows: flows.edge_count(),
            edges: skeleton.edge_count(),
        });
    }
    if config.heuristic == HeuristicKind::TrueCells && truth.is_none() {
        return Err(InferenceError::MissingGroundTruth);
    }
    let solver = |iteration| move |source| InferenceError::Solver { iteration, source };

    let b1 = build_b1(skeleton);
    let gradient_free = project_gradient_out(&b1, flows, &config.solver).map_err(solver(0))?;
    let initial_loss = gradient_free.frobenius_norm();

    let mut complex = CellComplex::new(skeleton.clone());
    let mut b2 = SparseMatrix::empty(skeleton.edge_count());
    let mut residual = gradient_free.clone();
    let mut loss = initial_loss;
    let mut history = Vec::new();

    let stop_reason = loop {
        if config.epsilon.is_some_and(|eps| loss < eps) {
            break StopReason::Epsilon;
        }
        if loss <= ZERO_RESIDUAL * initial_loss {
            break StopReason::ZeroResidual;
        }
        if config.max_cells.is_some_and(|n| complex.cells().len() >= n) {
            break StopReason::MaxCells;
        }
        let iteration = history.len() + 1;
        let started = Instant::now();

        let mut candidates = search(config, &complex, &residual, truth, iteration)?;
        if candidates.is_empty() {
            break StopReason::NoCandidates;
        }
        if let Some(budget) = config.b2_nnz_budget {
            let used = complex.b2_nnz();
            candidates.retain(|c| used + c.cell.len() <= budget);
            if candidates.is_empty() {
                break StopReason::B2Budget;
            }
        }

        let losses: Vec<f64> = candidates
            .par_iter()
            .map(|c| loss_delta(&b2, &residual, &c.cell, &config.solver))
            .collect::<Result<_, _>>()
            .map_err(solver(iteration))?;
        let mut best = 0;
        for (i, &l) in losses.iter().enumerate() {
            if l < losses[best] {
                best = i;
            }
        }
        let chosen = candidates.swap_remove(best).cell;

        b2.push_column(chosen.boundary().iter().copied());
        complex
            .add_cell(chosen.clone())
            .expect("candidate searches never propose a present cell");
        residual = project_harmonic(&b2, &gradient_free, &config.solver).map_err(solver(iteration))?;
        loss = residual.frobenius_norm();

        history.push(IterationRecord {
            iteration,
            cell: chosen,
            loss,
            cells_count: complex.cells().len(),
            b2_nnz: complex.b2_nnz(),
            candidates_evaluated: losses.len(),
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    };

    Ok(InferenceResult {
        complex,
        history,
        initial_loss,
        stop_reason,
    })
}

/// Fraction of `truth` present in `cells`, up to rotation and reflection.
/// An empty ground truth counts as fully recovered.
pub fn recovery_of(cells: &[TwoCell], truth: &[TwoCell]) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let found: HashSet<CellKey> = cells.iter().map(TwoCell::key).collect();
    let hits = truth.iter().filter(|c| found.contains(&c.key())).count();
    hits as f64 / truth.len() as f64
}

pub fn recovery_accuracy(result: &InferenceResult, truth: &[TwoCell]) -> f64 {
    recovery_of(result.complex.cells(), truth)
}

/// One row of a sparsity curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub budget: usize,
    pub cells: usize,
    pub b2_nnz: usize,
    pub loss: f64,
}

/// Runs once up to the largest budget and reads the telemetry at every
/// budget in `budget_grid`.
pub fn sparsity_curve(
    skeleton: &Skeleton,
    flows: &FlowMatrix,
    config: &InferenceConfig,
    budget_grid: &[usize],
    truth: Option<&[TwoCell]>,
) -> Result<Vec<CurvePoint>, InferenceError> {
    if budget_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(InferenceError::Config("budget grid must be ascending".into()));
    }
    let mut cfg = config.clone();
    cfg.max_cells = Some(budget_grid.last().copied().unwrap_or(0));
    let result = infer_with_truth(skeleton, flows, &cfg, truth)?;
    Ok(budget_grid
        .iter()
        .map(|&budget| {
            let taken = budget.min(result.history.len());
            CurvePoint {
                budget,
                cells: taken,
                b2_nnz: if taken == 0 { 0 } else { result.history[taken - 1].b2_nnz },
                loss: result.loss_at(taken),
            }
        })
        .collect())
}
