#![allow(dead_code)]

use cellflow::{CellComplex, FlowMatrix, Skeleton, SparseMatrix, TwoCell};
use nalgebra::DMatrix;
use rand::Rng;

/// Random connected graph with a random spanning tree (each node hooks onto
/// an earlier one) plus extra edges, and cells taken as tree cycles of a
/// random subset of the non-tree edges.
pub fn random_complex(rng: &mut impl Rng, max_nodes: usize, max_edges: usize, cell_prob: f64) -> CellComplex {
    let n = rng.gen_range(3..=max_nodes);
    let mut parent = vec![usize::MAX; n];
    let mut edges = Vec::new();
    for v in 1..n {
        let p = rng.gen_range(0..v);
        parent[v] = p;
        edges.push((p, v));
    }
    let budget = max_edges.max(n - 1).min(n * (n - 1) / 2);
    let extra = rng.gen_range(0..=budget - (n - 1));
    let mut attempts = 0;
    let mut chords = Vec::new();
    while chords.len() < extra && attempts < 50 * max_edges {
        attempts += 1;
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let key = (a.min(b), a.max(b));
        if a != b && !edges.contains(&key) {
            edges.push(key);
            chords.push(key);
        }
    }
    // shuffle orientation and order so nothing depends on generation order
    for e in edges.iter_mut() {
        if rng.gen_bool(0.5) {
            *e = (e.1, e.0);
        }
    }
    let skeleton = Skeleton::new(n, edges).unwrap();
    let depth = |mut v: usize| {
        let mut d = 0;
        while parent[v] != usize::MAX {
            v = parent[v];
            d += 1;
        }
        d
    };
    let mut cells = Vec::new();
    for (a, b) in chords {
        if !rng.gen_bool(cell_prob) {
            continue;
        }
        // walk both ends up to their common ancestor
        let (mut u, mut v) = (a, b);
        let (mut left, mut right) = (vec![u], vec![v]);
        let (mut du, mut dv) = (depth(u), depth(v));
        while du > dv {
            u = parent[u];
            left.push(u);
            du -= 1;
        }
        while dv > du {
            v = parent[v];
            right.push(v);
            dv -= 1;
        }
        while u != v {
            u = parent[u];
            v = parent[v];
            left.push(u);
            right.push(v);
        }
        right.pop();
        left.extend(right.into_iter().rev());
        cells.push(TwoCell::from_cycle(&skeleton, &left).unwrap());
    }
    CellComplex::with_cells(skeleton, cells).unwrap()
}

pub fn random_flows(rng: &mut impl Rng, edges: usize, samples: usize) -> FlowMatrix {
    let cols = (0..samples)
        .map(|_| (0..edges).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    FlowMatrix::from_columns(edges, cols).unwrap()
}

pub fn dense(m: &SparseMatrix) -> DMatrix<f64> {
    let d = m.to_dense();
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| d[i][j] as f64)
}

pub fn dense_flows(f: &FlowMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(f.edge_count(), f.sample_count(), |i, j| f.get(i, j))
}

/// Moore-Penrose pseudoinverse `(A^T A)^+ A^T`, with `(A^T A)^+` taken from a
/// symmetric eigendecomposition. nalgebra's SVD loses accuracy on these
/// rank-deficient integer matrices, the eigensolver does not.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let gram = a.transpose() * a;
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut inv = DMatrix::zeros(a.ncols(), a.ncols());
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > 1e-10 * top.max(1.0) {
            let v = eig.eigenvectors.column(i);
            inv += (v * v.transpose()) / lambda;
        }
    }
    inv * a.transpose()
}

/// Orthogonal projector onto the column space of `a`, as `a a^+`.
pub fn range_projector(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), a.nrows());
    }
    a * pseudo_inverse(a)
}

pub struct DenseParts {
    pub gradient: DMatrix<f64>,
    pub curl: DMatrix<f64>,
    pub harmonic: DMatrix<f64>,
}

pub fn dense_decomposition(complex: &CellComplex, flows: &FlowMatrix) -> DenseParts {
    let m = complex.boundary_matrices();
    let f = dense_flows(flows);
    let gradient = range_projector(&dense(&m.b1).transpose()) * &f;
    let curl = range_projector(&dense(&m.b2)) * &f;
    let harmonic = &f - &gradient - &curl;
    DenseParts {
        gradient,
        curl,
        harmonic,
    }
}

pub fn relative_error(got: &FlowMatrix, want: &DMatrix<f64>, scale: f64) -> f64 {
    let diff = (dense_flows(got) - want).norm();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Every simple cycle of the graph, as canonical node lists, by DFS from each
/// cycle's smallest node. Only for small graphs.
pub fn all_simple_cycles(s: &Skeleton) -> Vec<Vec<usize>> {
    fn dfs(s: &Skeleton, start: usize, path: &mut Vec<usize>, on: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let v = *path.last().unwrap();
        for &(w, _) in s.neighbors(v) {
            if w == start && path.len() >= 3 && path[1] < *path.last().unwrap() {
                out.push(path.clone());
            }
            if w > start && !on[w] {
                on[w] = true;
                path.push(w);
                dfs(s, start, path, on, out);
                path.pop();
                on[w] = false;
            }
        }
    }
    let mut out = Vec::new();
    for start in 0..s.node_count() {
        let mut on = vec![false; s.node_count()];
        on[start] = true;
        dfs(s, start, &mut vec![start], &mut on, &mut out);
    }
    out
}
