//! Synthetic cell complexes and flows.
//!
//! Triangulation instances: uniform random points, their Delaunay
//! triangulation, planted polygonal cells, then random deletion of nodes and
//! edges that no planted cell uses. Small-world instances: a ring with
//! independent random chords. Flows are random cell circulations plus
//! Gaussian edge noise.

mod delaunay;

use std::collections::{HashMap, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{CellComplex, ComplexError, Skeleton, TwoCell};
use crate::flows::FlowMatrix;

pub use delaunay::delaunay_triangles;

/// Deletion probability for nodes and edges outside planted cells.
pub const DEFAULT_PRUNE_PROBABILITY: f64 = 0.3;

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("need at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("could not plant {wanted} cells of length {min}..={max}: found {found} after {attempts} attempts")]
    NoCycle {
        wanted: usize,
        found: usize,
        min: usize,
        max: usize,
        attempts: usize,
    },
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub node_count: usize,
    pub cell_count: usize,
    /// Inclusive range of planted cell lengths.
    pub cell_length: (usize, usize),
    pub sigma_c: f64,
    pub sigma_n: f64,
    pub samples: usize,
    pub prune_probability: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            node_count: 60,
            cell_count: 5,
            cell_length: (6, 6),
            sigma_c: 1.0,
            sigma_n: 0.75,
            samples: 20,
            prune_probability: DEFAULT_PRUNE_PROBABILITY,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.node_count < 3 {
            return Err(GenerationError::TooFewNodes(self.node_count));
        }
        let (lo, hi) = self.cell_length;
        if lo < 3 || hi < lo {
            return Err(GenerationError::Invalid(format!(
                "cell length range {lo}..={hi} must satisfy 3 <= min <= max"
            )));
        }
        if !(self.sigma_c >= 0.0 && self.sigma_n >= 0.0) {
            return Err(GenerationError::Invalid("standard deviations must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.prune_probability) {
            return Err(GenerationError::Invalid("prune probability must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// A generated complex; its cells are the ground truth.
#[derive(Debug, Clone)]
pub struct Generated {
    pub complex: CellComplex,
    /// Planar positions per node, for triangulation instances.
    pub points: Option<Vec<[f64; 2]>>,
}

impl Generated {
    pub fn truth(&self) -> &[TwoCell] {
        self.complex.cells()
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Grows a polygon of `target` nodes from a random triangle by repeatedly
/// gluing on a neighbouring triangle whose apex is not yet on the boundary.
/// The boundary stays a simple cycle throughout.
fn grow_polygon(
    triangles: &[[usize; 3]],
    edge_faces: &HashMap<(usize, usize), Vec<usize>>,
    target: usize,
    rng: &mut impl Rng,
) -> Option<Vec<usize>> {
    let start_face = rng.gen_range(0..triangles.len());
    let mut cycle = triangles[start_face].to_vec();
    let mut used = HashSet::from([start_face]);
    while cycle.len() < target {
        let on_cycle: HashSet<usize> = cycle.iter().copied().collect();
        let mut options = Vec::new();
        for i in 0..cycle.len() {
            let (a, b) = (cycle[i], cycle[(i + 1) % cycle.len()]);
            for &f in edge_faces.get(&(a.min(b), a.max(b)))?.iter() {
                if used.contains(&f) {
                    continue;
                }
                let apex = triangles[f].iter().copied().find(|&v| v != a && v != b).unwrap();
                if !on_cycle.contains(&apex) {
                    options.push((i, f, apex));
                }
            }
        }
        let &(i, f, apex) = options.choose(rng)?;
        used.insert(f);
        cycle.insert(i + 1, apex);
    }
    Some(cycle)
}

/// Deletes unprotected nodes, then unprotected edges, each with probability
/// `p`, and relabels the remaining non-isolated nodes. Returns the new
/// skeleton, the node relabelling and the surviving original node ids.
fn prune(
    node_count: usize,
    edges: &[(usize, usize)],
    protected_nodes: &HashSet<usize>,
    protected_edges: &HashSet<(usize, usize)>,
    p: f64,
    rng: &mut impl Rng,
) -> Result<(Skeleton, Vec<Option<usize>>, Vec<usize>), ComplexError> {
    let mut alive = vec![true; node_count];
    for (v, slot) in alive.iter_mut().enumerate() {
        if !protected_nodes.contains(&v) && rng.gen_bool(p) {
            *slot = false;
        }
    }
    let mut kept_edges = Vec::new();
    for &(u, v) in edges {
        if !alive[u] || !alive[v] {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if !protected_edges.contains(&key) && rng.gen_bool(p) {
            continue;
        }
        kept_edges.push(key);
    }
    // nodes left without edges go too, so the edge list alone fixes the graph
    let mut touched = vec![false; node_count];
    for &(u, v) in &kept_edges {
        touched[u] = true;
        touched[v] = true;
    }
    let mut relabel = vec![None; node_count];
    let mut survivors = Vec::new();
    for v in 0..node_count {
        if touched[v] {
            relabel[v] = Some(survivors.len());
            survivors.push(v);
        }
    }
    let mut new_edges: Vec<(usize, usize)> = kept_edges
        .into_iter()
        .map(|(u, v)| (relabel[u].unwrap(), relabel[v].unwrap()))
        .collect();
    new_edges.sort_unstable();
    let skeleton = Skeleton::new(survivors.len(), new_edges)?;
    Ok((skeleton, relabel, survivors))
}

fn cycle_edges(cycle: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..cycle.len()).map(move |i| {
        let (a, b) = (cycle[i], cycle[(i + 1) % cycle.len()]);
        (a.min(b), a.max(b))
    })
}

fn finish(
    node_count: usize,
    edges: &[(usize, usize)],
    cycles: &[Vec<usize>],
    prune_probability: f64,
    rng: &mut impl Rng,
) -> Result<(CellComplex, Vec<usize>), GenerationError> {
    let protected_nodes: HashSet<usize> = cycles.iter().flatten().copied().collect();
    let protected_edges: HashSet<(usize, usize)> = cycles.iter().flat_map(|c| cycle_edges(c)).collect();
    let (skeleton, relabel, survivors) = prune(
        node_count,
        edges,
        &protected_nodes,
        &protected_edges,
        prune_probability,
        rng,
    )?;
    let cells = cycles
        .iter()
        .map(|c| {
            let mapped: Vec<usize> = c.iter().map(|&v| relabel[v].unwrap()).collect();
            TwoCell::from_cycle(&skeleton, &mapped)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((CellComplex::with_cells(skeleton, cells)?, survivors))
}

/// Triangulation instance: Delaunay graph of uniform points in the unit
/// square with `cell_count` planted polygons, pruned.
pub fn generate_triangulation_complex(cfg: &SynthConfig) -> Result<Generated, GenerationError> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, 0);
    let points: Vec<[f64; 2]> = (0..cfg.node_count)
        .map(|_| [rng.gen::<f64>(), rng.gen::<f64>()])
        .collect();
    let triangles = delaunay_triangles(&points);
    let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (f, t) in triangles.iter().enumerate() {
        for i in 0..3 {
            let (a, b) = (t[i], t[(i + 1) % 3]);
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(f);
        }
    }
    let mut edges: Vec<(usize, usize)> = edge_faces.keys().copied().collect();
    edges.sort_unstable();

    let (lo, hi) = cfg.cell_length;
    let budget = 100 * cfg.cell_count;
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    let mut seen = HashSet::new();
    let mut attempts = 0;
    while cycles.len() < cfg.cell_count && attempts < budget && !triangles.is_empty() {
        attempts += 1;
        let target = rng.gen_range(lo..=hi);
        if let Some(cycle) = grow_polygon(&triangles, &edge_faces, target, &mut rng) {
            let key = crate::complex::canonical_order(&cycle);
            if seen.insert(key) {
                cycles.push(cycle);
            }
        }
    }
    if cycles.len() < cfg.cell_count {
        return Err(GenerationError::NoCycle {
            wanted: cfg.cell_count,
            found: cycles.len(),
            min: lo,
            max: hi,
            attempts,
        });
    }
    let (complex, survivors) = finish(cfg.node_count, &edges, &cycles, cfg.prune_probability, &mut rng)?;
    Ok(Generated {
        complex,
        points: Some(survivors.iter().map(|&v| points[v]).collect()),
    })
}

/// Ring lattice `0-1-...-(n-1)-0` plus every other pair independently with
/// probability `extra_edge_prob`.
pub fn generate_smallworld(node_count: usize, extra_edge_prob: f64, seed: u64) -> Result<Skeleton, GenerationError> {
    Ok(Skeleton::new(node_count, smallworld_edges(node_count, extra_edge_prob, &mut rng_for(seed, 0))?)?)
}

fn smallworld_edges(n: usize, p: f64, rng: &mut impl Rng) -> Result<Vec<(usize, usize)>, GenerationError> {
    if n < 3 {
        return Err(GenerationError::TooFewNodes(n));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(GenerationError::Invalid("edge probability must lie in [0, 1]".into()));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let ring = v == u + 1 || (u == 0 && v == n - 1);
            if ring || rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Ok(edges)
}

/// Shortest cycle through edge `(a, b)`: BFS from `a` to `b` avoiding that
/// edge.
fn shortest_cycle_through(adjacency: &[Vec<usize>], a: usize, b: usize, max_len: usize) -> Option<Vec<usize>> {
    let mut prev = vec![usize::MAX; adjacency.len()];
    let mut dist = vec![usize::MAX; adjacency.len()];
    let mut queue = VecDeque::from([a]);
    dist[a] = 0;
    while let Some(v) = queue.pop_front() {
        if v == b {
            break;
        }
        if dist[v] + 1 >= max_len {
            continue;
        }
        for &w in &adjacency[v] {
            if dist[w] != usize::MAX || (v == a && w == b) {
                continue;
            }
            dist[w] = dist[v] + 1;
            prev[w] = v;
            queue.push_back(w);
        }
    }
    if dist[b] == usize::MAX {
        return None;
    }
    let mut path = vec![b];
    let mut v = b;
    while v != a {
        v = prev[v];
        path.push(v);
    }
    Some(path)
}

/// Small-world instance with planted cells, each the shortest cycle through
/// a random edge whose length falls in the configured range.
pub fn generate_smallworld_complex(cfg: &SynthConfig, extra_edge_prob: f64) -> Result<Generated, GenerationError> {
    cfg.validate()?;
    let mut rng = rng_for(cfg.seed, 0);
    let edges = smallworld_edges(cfg.node_count, extra_edge_prob, &mut rng)?;
    let mut adjacency = vec![Vec::new(); cfg.node_count];
    for &(u, v) in &edges {
        adjacency[u].push(v);
        adjacency[v].push(u);
    }
    let (lo, hi) = cfg.cell_length;
    let budget = 100 * cfg.cell_count;
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    let mut seen = HashSet::new();
    let mut attempts = 0;
    while cycles.len() < cfg.cell_count && attempts < budget {
        attempts += 1;
        let (a, b) = edges[rng.gen_range(0..edges.len())];
        if let Some(cycle) = shortest_cycle_through(&adjacency, a, b, hi) {
            if cycle.len() >= lo && cycle.len() <= hi && seen.insert(crate::complex::canonical_order(&cycle)) {
                cycles.push(cycle);
            }
        }
    }
    if cycles.len() < cfg.cell_count {
        return Err(GenerationError::NoCycle {
            wanted: cfg.cell_count,
            found: cycles.len(),
            min: lo,
            max: hi,
            attempts,
        });
    }
    // the ring must survive, so nothing is pruned here
    let (complex, _) = finish(cfg.node_count, &edges, &cycles, 0.0, &mut rng)?;
    Ok(Generated { complex, points: None })
}

/// `f_i = B2 x_i + y_i` with `x_i ~ N(0, sigma_c^2 I)` over the cells and
/// `y_i ~ N(0, sigma_n^2 I)` over the edges.
pub fn sample_flows(complex: &CellComplex, sigma_c: f64, sigma_n: f64, samples: usize, seed: u64) -> FlowMatrix {
    let mut rng = rng_for(seed, 1);
    let edges = complex.skeleton().edge_count();
    let cell_dist = Normal::new(0.0, sigma_c).expect("sigma_c is finite and non-negative");
    let noise_dist = Normal::new(0.0, sigma_n).expect("sigma_n is finite and non-negative");
    let mut flows = FlowMatrix::zeros(edges, samples);
    for j in 0..samples {
        let col = flows.column_mut(j);
        for cell in complex.cells() {
            let x: f64 = cell_dist.sample(&mut rng);
            for &(e, s) in cell.boundary() {
                col[e] += s as f64 * x;
            }
        }
        for v in col.iter_mut() {
            *v += noise_dist.sample(&mut rng);
        }
    }
    flows
}

/// Convenience: flows for `generated` using the noise settings of `cfg`.
pub fn sample_config_flows(generated: &Generated, cfg: &SynthConfig) -> FlowMatrix {
    sample_flows(&generated.complex, cfg.sigma_c, cfg.sigma_n, cfg.samples, cfg.seed)
}
