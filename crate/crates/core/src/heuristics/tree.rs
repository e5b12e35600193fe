//! Spanning trees, tree potentials and the cycles induced by non-tree edges.
//!
//! One candidate search is a sort of the edges, a union-find sweep to pick
//! the tree, a BFS to accumulate flow potentials, and a single offline LCA
//! pass to get every induced cycle's length.

use std::collections::VecDeque;

use crate::complex::{ComplexError, Skeleton, TwoCell};
use crate::flows::FlowMatrix;

/// Disjoint sets with path compression and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        Self {
            parent: (0..len).collect(),
            size: vec![1; len],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; returns `false` if they were already
    /// joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        true
    }
}

/// Greedy union-find sweep over `sorted_edges` (already in preference
/// order). Returns `(tree_edges, cycle_edges)`, both in sweep order.
pub fn find_spanning_tree(skeleton: &Skeleton, sorted_edges: &[(f64, usize)]) -> (Vec<usize>, Vec<usize>) {
    let mut uf = UnionFind::new(skeleton.node_count());
    let mut tree = Vec::with_capacity(skeleton.node_count());
    let mut cycles = Vec::new();
    for &(_, e) in sorted_edges {
        let (u, v) = skeleton.edge(e);
        if uf.union(u, v) {
            tree.push(e);
        } else {
            cycles.push(e);
        }
    }
    (tree, cycles)
}

/// A rooted spanning forest with per-node flow potentials.
#[derive(Debug, Clone)]
pub struct SpanningTreeData {
    /// Parent node; roots are their own parent.
    pub parent: Vec<usize>,
    /// Edge to the parent, `usize::MAX` at roots.
    pub parent_edge: Vec<usize>,
    pub depth: Vec<usize>,
    /// Node-major `node_count x sample_count`: the signed sum of flows along
    /// the root-to-node path.
    pub potentials: Vec<f64>,
    pub samples: usize,
    pub non_tree_edges: Vec<usize>,
}

impl SpanningTreeData {
    pub fn potential(&self, node: usize) -> &[f64] {
        &self.potentials[node * self.samples..(node + 1) * self.samples]
    }

    pub fn is_root(&self, node: usize) -> bool {
        self.parent[node] == node
    }

    /// Lowest common ancestor by walking up, `None` across components.
    pub fn lca_naive(&self, mut u: usize, mut v: usize) -> Option<usize> {
        while self.depth[u] > self.depth[v] {
            u = self.parent[u];
        }
        while self.depth[v] > self.depth[u] {
            v = self.parent[v];
        }
        while u != v {
            if self.is_root(u) {
                return None;
            }
            u = self.parent[u];
            v = self.parent[v];
        }
        Some(u)
    }

    /// The simple cycle closed by the non-tree edge `(u, v)`: the tree path
    /// from `u` up to the LCA and down to `v`.
    pub fn extract_cycle(&self, skeleton: &Skeleton, u: usize, v: usize) -> Result<TwoCell, ComplexError> {
        let top = self.lca_naive(u, v).ok_or(ComplexError::MissingEdge(u, v))?;
        let mut nodes = Vec::new();
        let mut x = u;
        while x != top {
            nodes.push(x);
            x = self.parent[x];
        }
        nodes.push(top);
        let mut down = Vec::new();
        let mut y = v;
        while y != top {
            down.push(y);
            y = self.parent[y];
        }
        nodes.extend(down.into_iter().rev());
        TwoCell::from_cycle(skeleton, &nodes)
    }
}

/// BFS over the tree edges from node 0, then from every node not yet reached
/// (in index order) so that each component gets its own root.
pub fn build_tree(skeleton: &Skeleton, tree_edges: &[usize], flows: &FlowMatrix) -> SpanningTreeData {
    let n = skeleton.node_count();
    let s = flows.sample_count();
    let mut tree_adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut in_tree = vec![false; skeleton.edge_count()];
    for &e in tree_edges {
        let (u, v) = skeleton.edge(e);
        tree_adj[u].push((v, e));
        tree_adj[v].push((u, e));
        in_tree[e] = true;
    }
    let mut parent = vec![usize::MAX; n];
    let mut parent_edge = vec![usize::MAX; n];
    let mut depth = vec![0; n];
    let mut potentials = vec![0.0; n * s];
    let mut queue = VecDeque::new();
    for root in 0..n {
        if parent[root] != usize::MAX {
            continue;
        }
        parent[root] = root;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            for &(u, e) in &tree_adj[v] {
                if parent[u] != usize::MAX {
                    continue;
                }
                parent[u] = v;
                parent_edge[u] = e;
                depth[u] = depth[v] + 1;
                // traversing v -> u; flow counts positively if that is the
                // reference orientation
                let sign = if skeleton.edge(e).0 == v { 1.0 } else { -1.0 };
                for j in 0..s {
                    potentials[u * s + j] = potentials[v * s + j] + sign * flows.get(e, j);
                }
                queue.push_back(u);
            }
        }
    }
    let non_tree_edges = (0..skeleton.edge_count()).filter(|&e| !in_tree[e]).collect();
    SpanningTreeData {
        parent,
        parent_edge,
        depth,
        potentials,
        samples: s,
        non_tree_edges,
    }
}

/// Tarjan's offline lowest common ancestors for all `queries` in one DFS of
/// the forest. Pairs in different components yield `None`.
pub fn offline_lca(tree: &SpanningTreeData, queries: &[(usize, usize)]) -> Vec<Option<usize>> {
    let n = tree.parent.len();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        if !tree.is_root(v) {
            children[tree.parent[v]].push(v);
        }
    }
    let mut pending: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (q, &(u, v)) in queries.iter().enumerate() {
        pending[u].push((v, q));
        pending[v].push((u, q));
    }
    let mut uf = UnionFind::new(n);
    let mut ancestor: Vec<usize> = (0..n).collect();
    let mut finished = vec![false; n];
    let mut component = vec![usize::MAX; n];
    let mut answer = vec![None; queries.len()];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for root in (0..n).filter(|&v| tree.is_root(v)) {
        component[root] = root;
        stack.push((root, 0));
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if *next < children[v].len() {
                let c = children[v][*next];
                *next += 1;
                component[c] = root;
                stack.push((c, 0));
                continue;
            }
            stack.pop();
            finished[v] = true;
            for &(other, q) in &pending[v] {
                if finished[other] && component[other] == root {
                    answer[q] = Some(ancestor[uf.find(other)]);
                }
            }
            if let Some(&(p, _)) = stack.last() {
                uf.union(p, v);
                let rep = uf.find(p);
                ancestor[rep] = p;
            }
        }
    }
    answer
}

/// One fundamental cycle, scored but not yet materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeCycle {
    pub edge: usize,
    /// Net flow around the cycle per sample, oriented along the edge.
    pub flow: Vec<f64>,
    pub length: usize,
    /// `||flow||_1 / length`
    pub score: f64,
}

/// Scores the cycle closed by every edge in `cycle_edges`.
pub fn evaluate_tree(
    skeleton: &Skeleton,
    tree: &SpanningTreeData,
    flows: &FlowMatrix,
    cycle_edges: &[usize],
) -> Vec<TreeCycle> {
    let queries: Vec<(usize, usize)> = cycle_edges.iter().map(|&e| skeleton.edge(e)).collect();
    let lcas = offline_lca(tree, &queries);
    cycle_edges
        .iter()
        .zip(queries)
        .zip(lcas)
        .map(|((&e, (u, v)), lca)| {
            let lca = lca.expect("non-tree edges join nodes of the same component");
            let length = tree.depth[u] + tree.depth[v] - 2 * tree.depth[lca] + 1;
            let (pu, pv) = (tree.potential(u), tree.potential(v));
            let flow: Vec<f64> = (0..tree.samples)
                .map(|j| pu[j] - pv[j] + flows.get(e, j))
                .collect();
            let score = flow.iter().map(|f| f.abs()).sum::<f64>() / length as f64;
            TreeCycle {
                edge: e,
                flow,
                length,
                score,
            }
        })
        .collect()
}
