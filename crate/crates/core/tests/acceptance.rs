//! One test per acceptance criterion. Each prints a `PASS` or `FAIL` line
//! before asserting; run with `--nocapture` to see them.

mod common;

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use cellflow::cli::{self, benchmark, Cli, Command, Family};
use cellflow::heuristics::{
    build_tree, cs_max, cs_similarity, evaluate_tree, find_spanning_tree, max_weight_order, HeuristicKind,
};
use cellflow::hodge::{decompose, project_gradient_out};
use cellflow::inference::{infer_with_truth, recovery_accuracy, sparsity_curve, InferenceConfig};
use cellflow::synth::{generate_triangulation_complex, sample_config_flows, SynthConfig};
use cellflow::{CellComplex, FlowMatrix, Skeleton, SolverConfig, TwoCell};
use clap::Parser;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

// criteria share the machine; timing ones must not overlap with the rest
static SERIAL: Mutex<()> = Mutex::new(());

fn report(n: usize, ok: bool, detail: String) {
    println!("{} criterion {n}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n}: {detail}");
}

fn lock() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// The recovery instances: 60 nodes, 5 planted cells of length 6, 20 flows.
fn recovery_instance(seed: u64, sigma_n: f64) -> (cellflow::synth::Generated, FlowMatrix) {
    let cfg = SynthConfig {
        node_count: 60,
        cell_count: 5,
        cell_length: (6, 6),
        sigma_c: 1.0,
        sigma_n,
        samples: 20,
        seed,
        ..SynthConfig::default()
    };
    let g = generate_triangulation_complex(&cfg).unwrap();
    let flows = sample_config_flows(&g, &cfg);
    (g, flows)
}

fn similarity(max_cells: usize, seed: u64) -> InferenceConfig {
    InferenceConfig {
        candidates: 10,
        clusters: 4,
        seed,
        ..InferenceConfig::new(HeuristicKind::Similarity, max_cells)
    }
}

#[test]
fn criterion_1_structure() {
    let _g = lock();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = Vec::new();
    for i in 0..200 {
        let complex = if i % 2 == 0 {
            random_complex(&mut rng, 50, 120, 0.5)
        } else {
            let cfg = SynthConfig {
                node_count: rng.gen_range(20..=50),
                cell_count: rng.gen_range(0..5),
                cell_length: (3, 6),
                seed: i,
                ..SynthConfig::default()
            };
            generate_triangulation_complex(&cfg).unwrap().complex
        };
        let s = complex.skeleton();
        let m = complex.boundary_matrices();
        if !m.b1.product_nonzeros(&m.b2).is_empty() {
            failures.push(format!("complex {i}: b1 b2 != 0"));
        }
        let mut keys = HashSet::new();
        for cell in complex.cells() {
            if let Err(e) = cell.validate(s) {
                failures.push(format!("complex {i}: {e}"));
            }
            if !keys.insert(cell.key()) {
                failures.push(format!("complex {i}: duplicate cell"));
            }
        }
        let lengths: usize = complex.cells().iter().map(TwoCell::len).sum();
        if m.b2.nnz() != lengths || s.node_count() > 50 {
            failures.push(format!("complex {i}: nnz or size mismatch"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        1,
        failures.is_empty() && secs < 10.0,
        format!("200 complexes, {} violations, {secs:.2}s (limit 10s) {:?}", failures.len(), failures.first()),
    );
}

#[test]
fn criterion_2_projection_oracle() {
    let _g = lock();
    let cfg = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let complex = random_complex(&mut rng, 20, 30, 0.6);
        assert!(complex.skeleton().edge_count() <= 30);
        let flows = random_flows(&mut rng, complex.skeleton().edge_count(), 3);
        let m = complex.boundary_matrices();
        let got = decompose(&m.b1, &m.b2, &flows, &cfg).unwrap();
        let want = dense_decomposition(&complex, &flows);
        let scale = flows.frobenius_norm();
        for (g, w) in [(&got.gradient, &want.gradient), (&got.curl, &want.curl), (&got.harmonic, &want.harmonic)] {
            worst = worst.max(relative_error(g, w, scale));
        }
    }
    report(2, worst <= 1e-8, format!("worst relative Frobenius error {worst:.2e} (limit 1e-8)"));
}

#[test]
fn criterion_3_monotone_and_complete() {
    let _g = lock();
    let mut problems = Vec::new();
    let mut worst_full: f64 = 0.0;
    let mut best_triangles = f64::INFINITY;
    let mut triangle_instances = 0;
    for seed in 0..20 {
        let cfg = SynthConfig {
            cell_length: (4, 8),
            seed,
            ..SynthConfig::default()
        };
        let g = generate_triangulation_complex(&cfg).unwrap();
        let flows = sample_config_flows(&g, &cfg);
        let s = g.complex.skeleton();
        let norm = flows.frobenius_norm();
        for h in [HeuristicKind::Max, HeuristicKind::Similarity, HeuristicKind::Triangles] {
            let icfg = InferenceConfig {
                seed,
                ..InferenceConfig::new(h, s.cycle_rank())
            };
            let r = infer_with_truth(s, &flows, &icfg, None).unwrap();
            let mut previous = r.initial_loss;
            for rec in &r.history {
                if rec.loss > previous + 1e-8 {
                    problems.push(format!("seed {seed} {}: loss rose at iteration {}", h.name(), rec.iteration));
                }
                previous = rec.loss;
            }
            let rel = r.final_loss() / norm;
            match h {
                HeuristicKind::Triangles => {
                    if g.truth().iter().any(|c| c.len() >= 4) {
                        triangle_instances += 1;
                        best_triangles = best_triangles.min(rel);
                        if rel < 1e-6 {
                            problems.push(format!("seed {seed}: triangles reached {rel:.1e}"));
                        }
                    }
                }
                _ => {
                    worst_full = worst_full.max(rel);
                    if rel >= 1e-6 {
                        problems.push(format!("seed {seed} {}: full basis left {rel:.1e}", h.name()));
                    }
                }
            }
        }
    }
    report(
        3,
        problems.is_empty(),
        format!(
            "max/similarity worst relative loss {worst_full:.1e} (limit 1e-6); triangles best {best_triangles:.2} \
             over {triangle_instances} instances; {} problems {:?}",
            problems.len(),
            problems.first()
        ),
    );
}

#[test]
fn criterion_4_recovery() {
    let _g = lock();
    let start = Instant::now();
    let mut means = Vec::new();
    for sigma_n in [0.0, 1.0] {
        let mut total = 0.0;
        for seed in 0..20 {
            let (g, flows) = recovery_instance(seed, sigma_n);
            let r = infer_with_truth(g.complex.skeleton(), &flows, &similarity(5, seed), None).unwrap();
            total += recovery_accuracy(&r, g.truth());
        }
        means.push(total / 20.0);
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        4,
        means[0] >= 0.9 && means[1] >= 0.7 && secs < 300.0,
        format!(
            "mean recovery {:.3} at sigma_n=0 (>= 0.9), {:.3} at sigma_n=1 (>= 0.7), {secs:.1}s",
            means[0], means[1]
        ),
    );
}

#[test]
fn criterion_5_baseline_ordering() {
    let _g = lock();
    let grid: Vec<usize> = (1..=10).collect();
    let mut violations = Vec::new();
    let mut means = [[0.0; 10]; 3];
    for seed in 0..20 {
        let (g, flows) = recovery_instance(seed, 0.75);
        let s = g.complex.skeleton();
        let curve = |h: HeuristicKind| {
            let cfg = InferenceConfig {
                heuristic: h,
                ..similarity(10, seed)
            };
            sparsity_curve(s, &flows, &cfg, &grid, Some(g.truth())).unwrap()
        };
        let curves = [curve(HeuristicKind::TrueCells), curve(HeuristicKind::Similarity), curve(HeuristicKind::Triangles)];
        for b in 0..grid.len() {
            let [t, sim, tri] = [curves[0][b].loss, curves[1][b].loss, curves[2][b].loss];
            for (k, c) in curves.iter().enumerate() {
                means[k][b] += c[b].loss / 20.0;
            }
            if t > sim + 1e-6 {
                violations.push(format!("seed {seed} budget {}: true_cells {t:.3} > similarity {sim:.3}", grid[b]));
            }
            if sim > tri + 1e-6 {
                violations.push(format!("seed {seed} budget {}: similarity {sim:.3} > triangles {tri:.3}", grid[b]));
            }
        }
    }
    let fmt = |row: &[f64; 10]| row.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(" ");
    report(
        5,
        violations.is_empty(),
        format!(
            "{} paired violations {:?}; mean loss by budget 1..10: true_cells [{}] similarity [{}] triangles [{}]",
            violations.len(),
            violations.first(),
            fmt(&means[0]),
            fmt(&means[1]),
            fmt(&means[2])
        ),
    );
}

/// Textbook Kruskal with label relabelling.
fn kruskal_max(s: &Skeleton, weights: &[f64]) -> Vec<usize> {
    let mut label: Vec<usize> = (0..s.node_count()).collect();
    let mut order: Vec<usize> = (0..s.edge_count()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut tree = Vec::new();
    for e in order {
        let (u, v) = s.edge(e);
        let (lu, lv) = (label[u], label[v]);
        if lu != lv {
            label.iter_mut().filter(|l| **l == lv).for_each(|l| *l = lu);
            tree.push(e);
        }
    }
    tree.sort_unstable();
    tree
}

#[test]
fn criterion_6_heuristic_micro_oracles() {
    let _g = lock();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst, mut tree_mismatch, mut length_mismatch, mut cycles) = (0.0f64, 0, 0, 0);
    for _ in 0..100 {
        let complex = random_complex(&mut rng, 40, 90, 0.0);
        let s = complex.skeleton();
        let flows = random_flows(&mut rng, s.edge_count(), 3);
        let (mut tree_edges, cycle_edges) = find_spanning_tree(s, &max_weight_order(&flows));
        let weights: Vec<f64> = (0..s.edge_count()).map(|e| flows.row_l1(e)).collect();
        let tree = build_tree(s, &tree_edges, &flows);
        tree_edges.sort_unstable();
        if tree_edges != kruskal_max(s, &weights) {
            tree_mismatch += 1;
        }
        for c in evaluate_tree(s, &tree, &flows, &cycle_edges) {
            let (u, v) = s.edge(c.edge);
            let cell = tree.extract_cycle(s, u, v).unwrap();
            let walk: f64 = (0..flows.sample_count())
                .map(|j| cell.boundary().iter().map(|&(e, o)| o as f64 * flows.get(e, j)).sum::<f64>().abs())
                .sum::<f64>()
                / cell.len() as f64;
            worst = worst.max((c.score - walk).abs() / walk.max(1.0));
            let lca = tree.lca_naive(u, v).unwrap();
            let formula = tree.depth[u] + tree.depth[v] - 2 * tree.depth[lca] + 1;
            if c.length != formula || cell.len() != formula {
                length_mismatch += 1;
            }
            cycles += 1;
        }
    }
    report(
        6,
        worst <= 1e-12 && tree_mismatch == 0 && length_mismatch == 0,
        format!(
            "{cycles} cycles: worst score error {worst:.1e} (limit 1e-12), {tree_mismatch} tree mismatches, \
             {length_mismatch} length mismatches"
        ),
    );
}

/// 5x3 grid with a red 2x1 rectangle and overlapping green and blue 2x2
/// squares. Two flows: per-cell amplitudes N(0, scale^2) with the blue cell
/// weakest, plus N(0, 0.1^2) edge noise. The seed was picked once by search
/// so that the max tree misses every cell, then frozen.
fn grid_example() -> (CellComplex, FlowMatrix) {
    const SEED: u64 = 232;
    const SCALES: [f64; 3] = [1.0, 2.0, 0.5];
    let id = |r: usize, c: usize| 5 * r + c;
    let mut edges = Vec::new();
    for r in 0..3 {
        for c in 0..5 {
            if c < 4 {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r < 2 {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    let s = Skeleton::new(15, edges).unwrap();
    let rect = |c0: usize, c1: usize, r0: usize, r1: usize| {
        let mut v = Vec::new();
        v.extend((c0..c1).map(|c| id(r0, c)));
        v.extend((r0..r1).map(|r| id(r, c1)));
        v.extend((c0 + 1..=c1).rev().map(|c| id(r1, c)));
        v.extend((r0 + 1..=r1).rev().map(|r| id(r, c0)));
        TwoCell::from_cycle(&s, &v).unwrap()
    };
    let cells = vec![rect(2, 4, 0, 1), rect(0, 2, 0, 2), rect(1, 3, 0, 2)];
    let complex = CellComplex::with_cells(s.clone(), cells).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let cols = (0..2)
        .map(|_| {
            let amp: Vec<f64> = SCALES.iter().map(|a| a * normal.sample(&mut rng)).collect();
            let mut f = vec![0.0; s.edge_count()];
            for (cell, a) in complex.cells().iter().zip(amp) {
                for &(e, o) in cell.boundary() {
                    f[e] += o as f64 * a;
                }
            }
            f.iter_mut().for_each(|x| *x += 0.1 * normal.sample(&mut rng));
            f
        })
        .collect();
    let flows = FlowMatrix::from_columns(s.edge_count(), cols).unwrap();
    (complex, flows)
}

#[test]
fn criterion_7_grid_example() {
    let _g = lock();
    let (truth, flows) = grid_example();
    let s = truth.skeleton();
    assert_eq!((s.node_count(), s.edge_count()), (15, 22));
    assert_eq!(truth.cells().iter().map(TwoCell::len).collect::<Vec<_>>(), [6, 8, 8]);
    let empty = CellComplex::new(s.clone());
    let free = project_gradient_out(&empty.boundary_matrices().b1, &flows, &SolverConfig::default()).unwrap();
    let found = |keys: Vec<cellflow::CellKey>| -> Vec<&str> {
        ["red", "green", "blue"]
            .into_iter()
            .zip(truth.cells())
            .filter(|(_, c)| keys.contains(&c.key()))
            .map(|(name, _)| name)
            .collect()
    };
    let max = found(cs_max(&empty, &free, 5).into_iter().map(|c| c.cell.key()).collect());
    let sim = found(cs_similarity(&empty, &free, 4, 5, 0).into_iter().map(|c| c.cell.key()).collect());
    report(
        7,
        max.is_empty() && sim.len() >= 2,
        format!("max tree induces {max:?} (want none), similarity induces {sim:?} (want at least two)"),
    );
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn criterion_8_runtime_scaling() {
    let _g = lock();
    let Cli {
        command: Command::Benchmark(args),
    } = Cli::parse_from(["cellflow", "benchmark", "--out-dir", "unused"])
    else {
        unreachable!()
    };
    assert_eq!((args.cells, args.samples, args.candidates), (4, 5, 5));
    // one worker thread so that timings compare serial work
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let seeds = 0..5u64;
    let measure = |family: Family, nodes: usize| -> (f64, f64) {
        pool.install(|| {
            let mut times = Vec::new();
            let mut edges = Vec::new();
            for seed in seeds.clone() {
                let best = (0..3)
                    .map(|_| benchmark::bench_one(&args, family, nodes, seed))
                    .map(|row| {
                        assert_eq!(row.status, "ok", "{family:?} {nodes} seed {seed}");
                        edges.push(row.edges.unwrap() as f64);
                        row.wall_time_ms.unwrap()
                    })
                    .fold(f64::INFINITY, f64::min);
                times.push(best);
            }
            (median(edges), median(times))
        })
    };
    let tri: Vec<(f64, f64)> = [100, 1000, 10_000].into_iter().map(|n| measure(Family::Triangulation, n)).collect();
    let sw: Vec<(f64, f64)> = [100, 1000].into_iter().map(|n| measure(Family::Smallworld, n)).collect();
    let slope = benchmark::loglog_slope(&tri).unwrap();
    let slower = sw.iter().zip(&tri).all(|(s, t)| s.1 > t.1);
    let fmt = |pts: &[(f64, f64)]| pts.iter().map(|(e, t)| format!("{e:.0}e/{t:.1}ms")).collect::<Vec<_>>().join(" ");
    report(
        8,
        slope <= 1.5 && slower,
        format!(
            "triangulation [{}] slope {slope:.2} (limit 1.5); smallworld [{}] slower at equal nodes: {slower}",
            fmt(&tri),
            fmt(&sw)
        ),
    );
}

/// Timing columns differ between runs by nature and are blanked before
/// comparing.
fn masked(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let Some(header) = lines.next() else {
        return text;
    };
    let timing: Vec<usize> = header
        .split(',')
        .enumerate()
        .filter(|(_, h)| benchmark::TIMING_COLUMNS.contains(h) || *h == "wall_time_ms")
        .map(|(i, _)| i)
        .collect();
    if timing.is_empty() {
        return text;
    }
    let mut out = vec![header.to_owned()];
    for line in lines {
        let fields: Vec<&str> = line
            .split(',')
            .enumerate()
            .map(|(i, f)| if timing.contains(&i) { "-" } else { f })
            .collect();
        out.push(fields.join(","));
    }
    out.join("\n")
}

#[test]
fn criterion_9_replay_determinism() {
    let _g = lock();
    let root = tempfile::tempdir().unwrap();
    let dir = |name: &str| root.path().join(name).display().to_string();
    let data = dir("data");
    let argv: Vec<Vec<String>> = vec![
        vec!["generate", "--nodes", "50", "--cells", "4", "--seed", "9", "--out-dir", &data],
        vec!["infer", "--edges", &format!("{data}/edges.csv"), "--flows", &format!("{data}/flows.csv"),
             "--truth", &format!("{data}/truth.csv"), "--max-cells", "6", "--svg", "--out-dir", &dir("infer")],
        vec!["infer", "--edges", &format!("{data}/edges.csv"), "--flows", &format!("{data}/flows.csv"),
             "--heuristic", "max", "--epsilon", "1.0", "--out-dir", &dir("infer-max")],
        vec!["decompose", "--edges", &format!("{data}/edges.csv"), "--flows", &format!("{data}/flows.csv"),
             "--cells", &format!("{data}/truth.csv"), "--out-dir", &dir("decompose")],
        vec!["benchmark", "--sizes", "40,80", "--samples", "3", "--out-dir", &dir("benchmark")],
    ]
    .into_iter()
    .map(|a| a.into_iter().map(str::to_owned).collect())
    .collect();
    for a in &argv {
        let cli = Cli::parse_from(std::iter::once("cellflow".to_owned()).chain(a.iter().cloned()));
        cli::run(cli.command).unwrap();
    }
    let mut compared = 0;
    let mut differing = Vec::new();
    for name in ["data", "infer", "infer-max", "decompose", "benchmark"] {
        let original = root.path().join(name);
        let replayed = root.path().join(format!("{name}-replay"));
        cli::run(Command::Replay(cli::ReplayArgs {
            manifest: original.join("manifest.json"),
            out_dir: Some(replayed.clone()),
        }))
        .unwrap();
        let mut files: Vec<_> = fs::read_dir(&original).unwrap().map(|e| e.unwrap().file_name()).collect();
        files.sort();
        for file in files {
            let (a, b) = (original.join(&file), replayed.join(&file));
            if !b.exists() || masked(&a) != masked(&b) {
                differing.push(format!("{name}/{}", file.to_string_lossy()));
            }
            compared += 1;
        }
    }
    report(
        9,
        differing.is_empty() && compared >= 15,
        format!("{compared} files replayed, differing: {differing:?} (timing columns masked)"),
    );
}
