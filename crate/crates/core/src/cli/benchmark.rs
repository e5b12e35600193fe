//! Runtime harness: generate, infer, time.

use std::time::Instant;

use super::{svg, write_file, write_manifest, BenchmarkArgs, CliError, Command, Family};
use crate::inference::{self, InferenceConfig};
use crate::synth::{self, Generated, SynthConfig, DEFAULT_PRUNE_PROBABILITY};

pub const HEADER: &str = "family,nodes,seed,edges,cells,generate_ms,wall_time_ms,final_loss,status";

/// Columns holding timings, which naturally differ between runs.
pub const TIMING_COLUMNS: [&str; 2] = ["generate_ms", "wall_time_ms"];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub family: Family,
    pub nodes: usize,
    pub seed: u64,
    pub edges: Option<usize>,
    pub cells: Option<usize>,
    pub generate_ms: f64,
    pub wall_time_ms: Option<f64>,
    pub final_loss: Option<f64>,
    pub status: String,
}

impl BenchRow {
    fn to_csv(&self) -> String {
        let opt = |x: Option<String>| x.unwrap_or_default();
        format!(
            "{},{},{},{},{},{:?},{},{},{}\n",
            self.family.name(),
            self.nodes,
            self.seed,
            opt(self.edges.map(|x| x.to_string())),
            opt(self.cells.map(|x| x.to_string())),
            self.generate_ms,
            opt(self.wall_time_ms.map(|x| format!("{x:?}"))),
            opt(self.final_loss.map(|x| format!("{x:?}"))),
            // keep the status a single CSV field
            self.status.replace([',', '\n'], ";"),
        )
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Generates one instance and times inference on it. Failures end up in
/// the status column.
pub fn bench_one(args: &BenchmarkArgs, family: Family, nodes: usize, seed: u64) -> BenchRow {
    let mut row = BenchRow {
        family,
        nodes,
        seed,
        edges: None,
        cells: None,
        generate_ms: 0.0,
        wall_time_ms: None,
        final_loss: None,
        status: String::new(),
    };
    let cfg = SynthConfig {
        node_count: nodes,
        cell_count: args.cells,
        cell_length: match family {
            Family::Triangulation => (args.len, args.len_max),
            Family::Smallworld => (3, nodes.max(3)),
        },
        sigma_c: args.sigma_c,
        sigma_n: args.sigma_n,
        samples: args.samples,
        prune_probability: DEFAULT_PRUNE_PROBABILITY,
        seed,
    };
    let start = Instant::now();
    let generated: Result<Generated, _> = match family {
        Family::Triangulation => synth::generate_triangulation_complex(&cfg),
        Family::Smallworld => synth::generate_smallworld_complex(&cfg, args.extra_edge_prob),
    };
    let generated = match generated {
        Ok(g) => g,
        Err(e) => {
            row.generate_ms = ms(start);
            row.status = format!("generation failed: {e}");
            return row;
        }
    };
    let flows = synth::sample_config_flows(&generated, &cfg);
    row.generate_ms = ms(start);
    let skeleton = generated.complex.skeleton();
    row.edges = Some(skeleton.edge_count());

    let mut config = InferenceConfig::new(args.heuristic, args.cells);
    config.candidates = args.candidates;
    config.seed = seed;
    let start = Instant::now();
    match inference::infer_with_truth(skeleton, &flows, &config, Some(generated.truth())) {
        Ok(result) => {
            row.wall_time_ms = Some(ms(start));
            row.cells = Some(result.complex.cells().len());
            row.final_loss = Some(result.final_loss());
            row.status = "ok".into();
        }
        Err(e) => row.status = format!("inference failed: {e}"),
    }
    row
}

pub fn write_rows(rows: &[BenchRow]) -> String {
    let mut out = format!("{HEADER}\n");
    for r in rows {
        out.push_str(&r.to_csv());
    }
    out
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn run(args: BenchmarkArgs) -> Result<(), CliError> {
    if args.sizes.is_empty() || args.families.is_empty() {
        return Err(CliError::Input("need at least one family and one size".into()));
    }
    let mut rows = Vec::new();
    for &family in &args.families {
        for &nodes in &args.sizes {
            for r in 0..args.repeats as u64 {
                rows.push(bench_one(&args, family, nodes, args.seed + r));
            }
        }
    }
    let dir = &args.out_dir;
    write_file(dir, "benchmark.csv", &write_rows(&rows))?;
    if args.svg {
        let series: Vec<svg::Series> = args
            .families
            .iter()
            .map(|&family| {
                let mut points: Vec<(f64, f64)> = rows
                    .iter()
                    .filter(|r| r.family == family)
                    .filter_map(|r| Some((r.edges? as f64, r.wall_time_ms?)))
                    .collect();
                points.sort_by(|a, b| a.0.total_cmp(&b.0));
                svg::Series {
                    name: family.name().to_owned(),
                    points,
                }
            })
            .collect();
        let chart = svg::line_chart(
            "runtime",
            "edges",
            "wall time (ms)",
            &series,
            svg::Axes { log_x: true, log_y: true },
        );
        write_file(dir, "runtime.svg", &chart)?;
    }
    write_manifest(dir, Command::Benchmark(args.clone()))
}
