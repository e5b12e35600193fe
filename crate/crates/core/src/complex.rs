//! Graphs with oriented edges, polygonal 2-cells, and their boundary matrices.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::sparse::SparseMatrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexError {
    #[error("graph must have at least one node")]
    NoNodes,
    #[error("edge {edge} is a self-loop on node {node}")]
    SelfLoop { edge: usize, node: usize },
    #[error("edge {edge} duplicates edge {first} between nodes {u} and {v}")]
    ParallelEdge {
        edge: usize,
        first: usize,
        u: usize,
        v: usize,
    },
    #[error("edge {edge} references node {node} but the graph has {node_count} nodes")]
    NodeOutOfRange {
        edge: usize,
        node: usize,
        node_count: usize,
    },
    #[error("cycle must have at least 3 nodes, got {0}")]
    CycleTooShort(usize),
    #[error("cycle visits node {0} more than once")]
    NonSimpleCycle(usize),
    #[error("no edge between nodes {0} and {1}")]
    MissingEdge(usize, usize),
    #[error("node {0} does not exist")]
    UnknownNode(usize),
    #[error("cell {0} appears more than once")]
    DuplicateCell(CellKey),
    #[error("boundary walk is broken at position {0}")]
    BrokenWalk(usize),
}

/// Signed orientation of an edge relative to its reference direction.
pub type Sign = i8;

/// The 1-skeleton: nodes `0..node_count` and edges with a fixed reference
/// orientation `tail -> head`.
#[derive(Debug, Clone)]
pub struct Skeleton {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    edge_index: HashMap<(usize, usize), usize>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Skeleton {
    pub fn new(node_count: usize, edges: Vec<(usize, usize)>) -> Result<Self, ComplexError> {
        if node_count == 0 {
            return Err(ComplexError::NoNodes);
        }
        let mut edge_index = HashMap::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); node_count];
        for (e, &(u, v)) in edges.iter().enumerate() {
            for node in [u, v] {
                if node >= node_count {
                    return Err(ComplexError::NodeOutOfRange {
                        edge: e,
                        node,
                        node_count,
                    });
                }
            }
            if u == v {
                return Err(ComplexError::SelfLoop { edge: e, node: u });
            }
            let key = (u.min(v), u.max(v));
            if let Some(&first) = edge_index.get(&key) {
                return Err(ComplexError::ParallelEdge {
                    edge: e,
                    first,
                    u,
                    v,
                });
            }
            edge_index.insert(key, e);
            adjacency[u].push((v, e));
            adjacency[v].push((u, e));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self {
            node_count,
            edges,
            edge_index,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    /// Looks up the edge joining `u` and `v`. The sign is `+1` when `u -> v`
    /// is the reference orientation and `-1` otherwise.
    pub fn find_edge(&self, u: usize, v: usize) -> Option<(usize, Sign)> {
        let &e = self.edge_index.get(&(u.min(v), u.max(v)))?;
        let sign = if self.edges[e].0 == u { 1 } else { -1 };
        Some((e, sign))
    }

    /// Neighbours of `node` as `(neighbour, edge)` pairs, sorted by neighbour.
    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    /// Number of connected components, isolated nodes included.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.node_count];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.node_count {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for &(w, _) in &self.adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    /// Dimension of the cycle space, `E - N + components`.
    pub fn cycle_rank(&self) -> usize {
        self.edge_count() + self.component_count() - self.node_count
    }
}

/// Identifier of a cell that is the same for every rotation and reflection of
/// its node sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey(Vec<usize>);

impl CellKey {
    /// Key of a node cycle given in any rotation or direction.
    pub fn from_cycle(cycle: &[usize]) -> Self {
        CellKey(canonical_order(cycle))
    }

    pub fn nodes(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        f.write_str(&parts.join("-"))
    }
}

/// Rotates a cycle so its smallest node comes first, then picks the traversal
/// direction whose second node is smaller.
pub fn canonical_order(cycle: &[usize]) -> Vec<usize> {
    let n = cycle.len();
    if n == 0 {
        return Vec::new();
    }
    let start = (0..n).min_by_key(|&i| cycle[i]).unwrap();
    let forward: Vec<usize> = (0..n).map(|i| cycle[(start + i) % n]).collect();
    if n < 3 {
        return forward;
    }
    let next = cycle[(start + 1) % n];
    let prev = cycle[(start + n - 1) % n];
    if next <= prev {
        forward
    } else {
        (0..n).map(|i| cycle[(start + n - i) % n]).collect()
    }
}

/// A polygonal 2-cell, stored as an oriented closed walk of edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoCell {
    nodes: Vec<usize>,
    boundary: Vec<(usize, Sign)>,
}

impl TwoCell {
    /// Canonicalizes a node cycle (without the repeated closing node) into a
    /// cell on `skeleton`.
    pub fn from_cycle(skeleton: &Skeleton, cycle: &[usize]) -> Result<Self, ComplexError> {
        if cycle.len() < 3 {
            return Err(ComplexError::CycleTooShort(cycle.len()));
        }
        let mut seen = HashSet::with_capacity(cycle.len());
        for &v in cycle {
            if v >= skeleton.node_count() {
                return Err(ComplexError::UnknownNode(v));
            }
            if !seen.insert(v) {
                return Err(ComplexError::NonSimpleCycle(v));
            }
        }
        let nodes = canonical_order(cycle);
        let n = nodes.len();
        let boundary = (0..n)
            .map(|i| {
                let (u, v) = (nodes[i], nodes[(i + 1) % n]);
                skeleton.find_edge(u, v).ok_or(ComplexError::MissingEdge(u, v))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { nodes, boundary })
    }

    /// Reconstructs a cell from an oriented boundary walk.
    pub fn from_boundary(
        skeleton: &Skeleton,
        boundary: &[(usize, Sign)],
    ) -> Result<Self, ComplexError> {
        let nodes = walk_nodes(skeleton, boundary)?;
        Self::from_cycle(skeleton, &nodes)
    }

    /// Canonical node sequence.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn boundary(&self) -> &[(usize, Sign)] {
        &self.boundary
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    pub fn key(&self) -> CellKey {
        CellKey(self.nodes.clone())
    }

    /// Checks the walk invariants against `skeleton`: the oriented edges
    /// chain head-to-tail, close up, visit no node twice, and number at
    /// least three.
    pub fn validate(&self, skeleton: &Skeleton) -> Result<(), ComplexError> {
        if self.boundary.len() < 3 {
            return Err(ComplexError::CycleTooShort(self.boundary.len()));
        }
        let walked = walk_nodes(skeleton, &self.boundary)?;
        let mut seen = HashSet::new();
        for &v in &walked {
            if !seen.insert(v) {
                return Err(ComplexError::NonSimpleCycle(v));
            }
        }
        if canonical_order(&walked) != self.nodes {
            return Err(ComplexError::BrokenWalk(0));
        }
        Ok(())
    }
}

/// Node sequence visited by an oriented edge walk, checking that it chains
/// and closes.
fn walk_nodes(skeleton: &Skeleton, boundary: &[(usize, Sign)]) -> Result<Vec<usize>, ComplexError> {
    let oriented = |i: usize| -> Result<(usize, usize), ComplexError> {
        let (e, s) = boundary[i];
        if e >= skeleton.edge_count() || (s != 1 && s != -1) {
            return Err(ComplexError::BrokenWalk(i));
        }
        let (t, h) = skeleton.edge(e);
        Ok(if s == 1 { (t, h) } else { (h, t) })
    };
    let mut nodes = Vec::with_capacity(boundary.len());
    for i in 0..boundary.len() {
        let (from, to) = oriented(i)?;
        let (next_from, _) = oriented((i + 1) % boundary.len())?;
        if to != next_from {
            return Err(ComplexError::BrokenWalk(i));
        }
        nodes.push(from);
    }
    Ok(nodes)
}

/// A graph together with an ordered set of distinct 2-cells.
#[derive(Debug, Clone)]
pub struct CellComplex {
    skeleton: Skeleton,
    cells: Vec<TwoCell>,
    keys: HashSet<CellKey>,
}

impl CellComplex {
    pub fn new(skeleton: Skeleton) -> Self {
        Self {
            skeleton,
            cells: Vec::new(),
            keys: HashSet::new(),
        }
    }

    pub fn with_cells(skeleton: Skeleton, cells: Vec<TwoCell>) -> Result<Self, ComplexError> {
        let mut complex = Self::new(skeleton);
        for cell in cells {
            complex.add_cell(cell)?;
        }
        Ok(complex)
    }

    pub fn add_cell(&mut self, cell: TwoCell) -> Result<(), ComplexError> {
        cell.validate(&self.skeleton)?;
        let key = cell.key();
        if self.keys.contains(&key) {
            return Err(ComplexError::DuplicateCell(key));
        }
        self.keys.insert(key);
        self.cells.push(cell);
        Ok(())
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn cells(&self) -> &[TwoCell] {
        &self.cells
    }

    pub fn contains(&self, key: &CellKey) -> bool {
        self.keys.contains(key)
    }

    /// `||B2||_0`
    pub fn b2_nnz(&self) -> usize {
        self.cells.iter().map(TwoCell::len).sum()
    }

    pub fn boundary_matrices(&self) -> BoundaryMatrices {
        BoundaryMatrices {
            b1: build_b1(&self.skeleton),
            b2: build_b2(&self.skeleton, &self.cells).expect("cells are distinct by construction"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryMatrices {
    /// nodes x edges
    pub b1: SparseMatrix,
    /// edges x cells
    pub b2: SparseMatrix,
}

/// Node-to-edge incidence matrix: column `e` holds `-1` at the tail and `+1`
/// at the head.
pub fn build_b1(skeleton: &Skeleton) -> SparseMatrix {
    SparseMatrix::from_columns(
        skeleton.node_count(),
        skeleton.edges().iter().map(|&(t, h)| [(t, -1), (h, 1)]),
    )
}

/// Edge-to-cell incidence matrix.
pub fn build_b2(skeleton: &Skeleton, cells: &[TwoCell]) -> Result<SparseMatrix, ComplexError> {
    let mut keys = HashSet::with_capacity(cells.len());
    for cell in cells {
        let key = cell.key();
        if !keys.insert(key.clone()) {
            return Err(ComplexError::DuplicateCell(key));
        }
    }
    Ok(SparseMatrix::from_columns(
        skeleton.edge_count(),
        cells.iter().map(|c| c.boundary().iter().copied()),
    ))
}
