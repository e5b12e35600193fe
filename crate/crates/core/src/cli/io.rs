//! Plain-text file formats.
//!
//! * edge list: header `u,v`, one `tail,head` row per edge with `tail < head`;
//!   row order is edge order and the node count is one past the largest id.
//! * flows: header `e,f1,...,fs`, one row per edge in edge order.
//! * cells: one canonical node cycle per line, comma separated, no header.
//! * metrics: `iteration,cell,loss,cells_count,b2_nnz,wall_time_ms,recovery`
//!   where row 0 describes the bare graph and `cell` is written as `0-3-4`.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::complex::{ComplexError, Skeleton, TwoCell};
use crate::flows::FlowMatrix;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
    #[error("{file}:{line}: {message}")]
    Line { file: String, line: usize, message: String },
    #[error("{file}: {message}")]
    File { file: String, message: String },
    #[error("{file}: {source}")]
    Complex {
        file: String,
        #[source]
        source: ComplexError,
    },
}

fn reader(text: &str, headers: bool) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(headers)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn line_err(file: &str, line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Line {
        file: file.to_owned(),
        line,
        message: message.into(),
    }
}

fn records(rdr: &mut csv::Reader<&[u8]>, file: &str) -> Result<Vec<(usize, csv::StringRecord)>, ParseError> {
    rdr.records()
        .map(|r| {
            let r = r.map_err(|source| ParseError::Csv {
                file: file.to_owned(),
                source,
            })?;
            let line = r.position().map_or(0, |p| p.line() as usize);
            Ok((line, r))
        })
        .collect()
}

fn field<T: std::str::FromStr>(file: &str, line: usize, raw: &str, what: &str) -> Result<T, ParseError> {
    raw.parse()
        .map_err(|_| line_err(file, line, format!("cannot parse {what} from {raw:?}")))
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, file: &str, expected: &[&str]) -> Result<(), ParseError> {
    let headers = rdr.headers().map_err(|source| ParseError::Csv {
        file: file.to_owned(),
        source,
    })?;
    let got: Vec<&str> = headers.iter().collect();
    if got.len() < expected.len() || got[..expected.len()] != *expected {
        return Err(line_err(file, 1, format!("expected header starting {:?}, got {:?}", expected.join(","), got.join(","))));
    }
    Ok(())
}

pub fn write_edges(skeleton: &Skeleton) -> String {
    let mut out = String::from("u,v\n");
    for &(u, v) in skeleton.edges() {
        out.push_str(&format!("{u},{v}\n"));
    }
    out
}

pub fn parse_edges(text: &str, file: &str) -> Result<Skeleton, ParseError> {
    let mut rdr = reader(text, true);
    check_header(&mut rdr, file, &["u", "v"])?;
    let mut edges = Vec::new();
    for (line, r) in records(&mut rdr, file)? {
        if r.len() != 2 {
            return Err(line_err(file, line, format!("expected 2 fields, got {}", r.len())));
        }
        let u: usize = field(file, line, &r[0], "tail")?;
        let v: usize = field(file, line, &r[1], "head")?;
        if u >= v {
            return Err(line_err(file, line, format!("tail {u} must be smaller than head {v}")));
        }
        edges.push((u, v));
    }
    let nodes = edges.iter().map(|&(_, v)| v + 1).max().unwrap_or(0);
    Skeleton::new(nodes, edges).map_err(|source| ParseError::Complex {
        file: file.to_owned(),
        source,
    })
}

pub fn write_flows(flows: &FlowMatrix) -> String {
    let mut out = String::from("e");
    for j in 1..=flows.sample_count() {
        out.push_str(&format!(",f{j}"));
    }
    out.push('\n');
    for e in 0..flows.edge_count() {
        out.push_str(&e.to_string());
        for j in 0..flows.sample_count() {
            out.push_str(&format!(",{:?}", flows.get(e, j)));
        }
        out.push('\n');
    }
    out
}

pub fn parse_flows(text: &str, file: &str, edge_count: usize) -> Result<FlowMatrix, ParseError> {
    let mut rdr = reader(text, true);
    check_header(&mut rdr, file, &["e"])?;
    let samples = rdr.headers().map(|h| h.len() - 1).unwrap_or(0);
    if samples == 0 {
        return Err(ParseError::File {
            file: file.to_owned(),
            message: "no flow columns".into(),
        });
    }
    let mut rows = Vec::with_capacity(edge_count);
    for (line, r) in records(&mut rdr, file)? {
        if r.len() != samples + 1 {
            return Err(line_err(file, line, format!("expected {} fields, got {}", samples + 1, r.len())));
        }
        let e: usize = field(file, line, &r[0], "edge index")?;
        if e != rows.len() {
            return Err(line_err(file, line, format!("expected edge {}, got {e}", rows.len())));
        }
        let row = r
            .iter()
            .skip(1)
            .map(|raw| {
                let x: f64 = field(file, line, raw, "flow")?;
                if x.is_finite() {
                    Ok(x)
                } else {
                    Err(line_err(file, line, "flow values must be finite"))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.len() != edge_count {
        return Err(ParseError::File {
            file: file.to_owned(),
            message: format!("{} flow rows for {edge_count} edges", rows.len()),
        });
    }
    FlowMatrix::from_rows(samples, &rows).map_err(|e| ParseError::File {
        file: file.to_owned(),
        message: e.to_string(),
    })
}

pub fn write_cells(cells: &[TwoCell]) -> String {
    let mut out = String::new();
    for cell in cells {
        let nodes: Vec<String> = cell.nodes().iter().map(|v| v.to_string()).collect();
        out.push_str(&nodes.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_cells(text: &str, file: &str, skeleton: &Skeleton) -> Result<Vec<TwoCell>, ParseError> {
    let mut rdr = reader(text, false);
    let mut cells = Vec::new();
    for (line, r) in records(&mut rdr, file)? {
        let cycle = r
            .iter()
            .map(|raw| field::<usize>(file, line, raw, "node"))
            .collect::<Result<Vec<_>, _>>()?;
        let cell = TwoCell::from_cycle(skeleton, &cycle).map_err(|e| line_err(file, line, e.to_string()))?;
        cells.push(cell);
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub iteration: usize,
    /// `None` on row 0.
    pub cell: Option<String>,
    pub loss: f64,
    pub cells_count: usize,
    pub b2_nnz: usize,
    pub wall_time_ms: f64,
    pub recovery: Option<f64>,
}

pub const METRICS_HEADER: &str = "iteration,cell,loss,cells_count,b2_nnz,wall_time_ms,recovery";

pub fn write_metrics(rows: &[MetricsRow]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:?},{},{},{:?},{}\n",
            r.iteration,
            r.cell.as_deref().unwrap_or(""),
            r.loss,
            r.cells_count,
            r.b2_nnz,
            r.wall_time_ms,
            r.recovery.map(|x| format!("{x:?}")).unwrap_or_default()
        ));
    }
    out
}

pub fn parse_metrics(text: &str, file: &str) -> Result<Vec<MetricsRow>, ParseError> {
    let mut rdr = reader(text, true);
    let expected: Vec<&str> = METRICS_HEADER.split(',').collect();
    check_header(&mut rdr, file, &expected)?;
    let mut rows = Vec::new();
    for (line, r) in records(&mut rdr, file)? {
        if r.len() != expected.len() {
            return Err(line_err(file, line, format!("expected {} fields, got {}", expected.len(), r.len())));
        }
        let opt = |raw: &str| (!raw.is_empty()).then(|| raw.to_owned());
        rows.push(MetricsRow {
            iteration: field(file, line, &r[0], "iteration")?,
            cell: opt(&r[1]),
            loss: field(file, line, &r[2], "loss")?,
            cells_count: field(file, line, &r[3], "cells_count")?,
            b2_nnz: field(file, line, &r[4], "b2_nnz")?,
            wall_time_ms: field(file, line, &r[5], "wall_time_ms")?,
            recovery: opt(&r[6]).map(|raw| field(file, line, &raw, "recovery")).transpose()?,
        });
    }
    Ok(rows)
}

pub fn read_text(path: &Path) -> std::io::Result<String> {
    fs::read_to_string(path)
}

pub fn load_edges(path: &Path) -> Result<Skeleton, super::CliError> {
    let text = read_text(path).map_err(|e| super::CliError::io(path, e))?;
    Ok(parse_edges(&text, &path.display().to_string())?)
}

pub fn load_flows(path: &Path, edge_count: usize) -> Result<FlowMatrix, super::CliError> {
    let text = read_text(path).map_err(|e| super::CliError::io(path, e))?;
    Ok(parse_flows(&text, &path.display().to_string(), edge_count)?)
}

pub fn load_cells(path: &Path, skeleton: &Skeleton) -> Result<Vec<TwoCell>, super::CliError> {
    let text = read_text(path).map_err(|e| super::CliError::io(path, e))?;
    Ok(parse_cells(&text, &path.display().to_string(), skeleton)?)
}
