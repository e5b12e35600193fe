//! Candidate search: propose up to `m` promising 2-cells for the next greedy
//! step.
//!
//! The two spanning-tree searches score every fundamental cycle of one or
//! more spanning trees by its net harmonic flow per edge and return the best
//! ones. `triangles` and `true_cells` are baselines.

pub mod kmeans;
pub mod tree;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{CellComplex, CellKey, TwoCell};
use crate::flows::FlowMatrix;
pub use tree::{
    build_tree, evaluate_tree, find_spanning_tree, offline_lca, SpanningTreeData, TreeCycle, UnionFind,
};

/// Default number of k-means clusters for the similarity search.
pub const DEFAULT_CLUSTERS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CellCandidate {
    pub cell: TwoCell,
    /// `||cycle flow||_1 / length`; zero for unscored baselines.
    pub score: f64,
    /// Edge that closed the cycle, `usize::MAX` when not tree-induced.
    pub origin_edge: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeuristicKind {
    Max,
    Similarity,
    Triangles,
    TrueCells,
}

impl HeuristicKind {
    pub fn name(self) -> &'static str {
        match self {
            HeuristicKind::Max => "max",
            HeuristicKind::Similarity => "similarity",
            HeuristicKind::Triangles => "triangles",
            HeuristicKind::TrueCells => "true-cells",
        }
    }
}

impl std::str::FromStr for HeuristicKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(HeuristicKind::Max),
            "similarity" => Ok(HeuristicKind::Similarity),
            "triangles" => Ok(HeuristicKind::Triangles),
            "true-cells" | "true_cells" => Ok(HeuristicKind::TrueCells),
            other => Err(format!("unknown heuristic `{other}`")),
        }
    }
}

/// Heap entry; the greatest entry is the best candidate. Ties go to the
/// shorter cycle, then the lower closing edge, then the earlier tree.
#[derive(Debug, Clone, Copy)]
struct Ranked {
    score: f64,
    length: usize,
    edge: usize,
    tree: usize,
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.length.cmp(&self.length))
            .then_with(|| other.edge.cmp(&self.edge))
            .then_with(|| other.tree.cmp(&self.tree))
    }
}

/// Pops up to `m` distinct cycles not already in `complex` from the scored
/// fundamental cycles of `trees`.
fn top_candidates(
    complex: &CellComplex,
    trees: &[(SpanningTreeData, Vec<TreeCycle>)],
    m: usize,
) -> Vec<CellCandidate> {
    let skeleton = complex.skeleton();
    let mut heap: BinaryHeap<Ranked> = trees
        .iter()
        .enumerate()
        .flat_map(|(t, (_, cycles))| {
            cycles.iter().map(move |c| Ranked {
                score: c.score,
                length: c.length,
                edge: c.edge,
                tree: t,
            })
        })
        .collect();
    let mut seen: HashSet<CellKey> = HashSet::new();
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let Some(top) = heap.pop() else { break };
        let (u, v) = skeleton.edge(top.edge);
        let cell = trees[top.tree]
            .0
            .extract_cycle(skeleton, u, v)
            .expect("fundamental cycles are simple");
        let key = cell.key();
        if complex.contains(&key) || !seen.insert(key) {
            continue;
        }
        out.push(CellCandidate {
            cell,
            score: top.score,
            origin_edge: top.edge,
        });
    }
    out
}

fn tree_from_order(
    complex: &CellComplex,
    residual: &FlowMatrix,
    order: &[(f64, usize)],
) -> (SpanningTreeData, Vec<TreeCycle>) {
    let skeleton = complex.skeleton();
    let (tree_edges, cycle_edges) = find_spanning_tree(skeleton, order);
    let tree = build_tree(skeleton, &tree_edges, residual);
    let cycles = evaluate_tree(skeleton, &tree, residual, &cycle_edges);
    (tree, cycles)
}

/// Edges ordered by total absolute residual flow, heaviest first; ties keep
/// edge index order.
pub fn max_weight_order(residual: &FlowMatrix) -> Vec<(f64, usize)> {
    let mut order: Vec<(f64, usize)> = (0..residual.edge_count())
        .map(|e| (residual.row_l1(e), e))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    order
}

/// Maximum spanning tree search.
pub fn cs_max(complex: &CellComplex, residual: &FlowMatrix, m: usize) -> Vec<CellCandidate> {
    let order = max_weight_order(residual);
    let tree = tree_from_order(complex, residual, &order);
    top_candidates(complex, std::slice::from_ref(&tree), m)
}

/// Cluster centers of the edge flow rows, each edge entered in both
/// orientations.
pub fn flow_clusters(residual: &FlowMatrix, k: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut points = Vec::with_capacity(2 * residual.edge_count());
    for e in 0..residual.edge_count() {
        let row = residual.row(e);
        let neg: Vec<f64> = row.iter().map(|x| -x).collect();
        points.push(row);
        points.push(neg);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    kmeans::kmeans(&points, k, &mut rng)
}

/// Edges ordered by distance to `center`, nearest first. An edge is as close
/// as the nearer of its two orientations.
pub fn similarity_order(residual: &FlowMatrix, center: &[f64]) -> Vec<(f64, usize)> {
    let mut order: Vec<(f64, usize)> = (0..residual.edge_count())
        .map(|e| {
            let (mut plus, mut minus) = (0.0, 0.0);
            for (j, c) in center.iter().enumerate() {
                let f = residual.get(e, j);
                plus += (f - c) * (f - c);
                minus += (f + c) * (f + c);
            }
            (plus.min(minus).sqrt(), e)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    order
}

/// Similarity spanning trees: one tree per k-means center, candidates merged
/// across trees.
pub fn cs_similarity(
    complex: &CellComplex,
    residual: &FlowMatrix,
    k: usize,
    m: usize,
    seed: u64,
) -> Vec<CellCandidate> {
    let centers = flow_clusters(residual, k.max(1), seed);
    let trees: Vec<(SpanningTreeData, Vec<TreeCycle>)> = centers
        .par_iter()
        .map(|c| tree_from_order(complex, residual, &similarity_order(residual, c)))
        .collect();
    top_candidates(complex, &trees, m)
}

/// All triangles `(a, b, c)` of the skeleton with `a < b < c`.
pub fn triangles(complex: &CellComplex) -> Vec<[usize; 3]> {
    let skeleton = complex.skeleton();
    let mut out = Vec::new();
    for &(t, h) in skeleton.edges() {
        let (a, b) = (t.min(h), t.max(h));
        for &(c, _) in skeleton.neighbors(b) {
            if c > b && skeleton.find_edge(a, c).is_some() {
                out.push([a, b, c]);
            }
        }
    }
    out.sort_unstable();
    out
}

/// The `m` triangles carrying the most circular residual flow.
pub fn cs_triangles(complex: &CellComplex, residual: &FlowMatrix, m: usize) -> Vec<CellCandidate> {
    let skeleton = complex.skeleton();
    let mut scored: Vec<CellCandidate> = triangles(complex)
        .into_iter()
        .filter_map(|tri| {
            let cell = TwoCell::from_cycle(skeleton, &tri).expect("triangle edges exist");
            if complex.contains(&cell.key()) {
                return None;
            }
            let score = (0..residual.sample_count())
                .map(|j| {
                    cell.boundary()
                        .iter()
                        .map(|&(e, s)| s as f64 * residual.get(e, j))
                        .sum::<f64>()
                        .abs()
                })
                .sum::<f64>()
                / 3.0;
            Some(CellCandidate {
                cell,
                score,
                origin_edge: usize::MAX,
            })
        })
        .collect();
    scored.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.cell.nodes().cmp(b.cell.nodes()))
    });
    scored.truncate(m);
    scored
}

/// Ground-truth cells not yet in `complex`, unscored.
pub fn cs_true_cells(complex: &CellComplex, truth: &[TwoCell]) -> Vec<CellCandidate> {
    truth
        .iter()
        .filter(|c| !complex.contains(&c.key()))
        .map(|c| CellCandidate {
            cell: c.clone(),
            score: 0.0,
            origin_edge: usize::MAX,
        })
        .collect()
}
