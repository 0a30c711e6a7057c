//! File formats: edge lists, pool dumps, chromosomes, embeddings, traces and
//! metric reports.

use std::fs;
use std::io::Write;
use std::path::Path;

use segen_core::ensemble::EmbeddingTable;
use segen_core::evolution::TraceRow;
use segen_core::sampler::{SamplePool, Strategy};
use segen_core::{Graph, SubNetwork};

use crate::error::{RunError, StageExt};

/// Nine significant digits in scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

fn read_text(stage: &'static str, path: &Path) -> Result<String, RunError> {
    fs::read_to_string(path).map_err(|e| RunError::data(stage, path, e))
}

fn write_bytes(stage: &'static str, path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    fs::write(path, bytes).map_err(|e| RunError::data(stage, path, e))
}

pub fn load_edge_list(path: &Path) -> Result<Graph, RunError> {
    let text = read_text("load graph", path)?;
    Graph::parse_edge_list(&text).map_err(|e| RunError::data("load graph", path, e))
}

fn pool_line(sub: &SubNetwork) -> String {
    let ids: Vec<String> = sub.original_ids().iter().map(usize::to_string).collect();
    let edges: Vec<String> = sub
        .local_edges()
        .iter()
        .map(|(a, b)| format!("({a},{b})"))
        .collect();
    format!("ids: {} ; edges: {}", ids.join(","), edges.join(","))
}

fn parse_pool_line(line: &str) -> Result<SubNetwork, String> {
    let (ids, edges) = line
        .split_once(';')
        .ok_or_else(|| "missing ';' between ids and edges".to_string())?;
    let ids = ids
        .trim()
        .strip_prefix("ids:")
        .ok_or_else(|| "record must start with 'ids:'".to_string())?;
    let edges = edges
        .trim()
        .strip_prefix("edges:")
        .ok_or_else(|| "missing 'edges:' field".to_string())?;
    let ids = ids
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|e| format!("bad node id {s:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut local = Vec::new();
    for pair in edges.split(')').map(str::trim).filter(|s| !s.is_empty()) {
        let pair = pair.trim_start_matches(',').trim();
        let inner = pair
            .strip_prefix('(')
            .ok_or_else(|| format!("bad edge {pair:?}"))?;
        let (a, b) = inner
            .split_once(',')
            .ok_or_else(|| format!("bad edge {pair:?}"))?;
        let a = a.trim().parse::<usize>().map_err(|e| format!("bad edge {pair:?}: {e}"))?;
        let b = b.trim().parse::<usize>().map_err(|e| format!("bad edge {pair:?}: {e}"))?;
        local.push((a, b));
    }
    SubNetwork::new(ids, local).map_err(|e| e.to_string())
}

/// One record per line; edges use local indices into the id list.
pub fn write_pool(path: &Path, pool: &SamplePool) -> Result<(), RunError> {
    let mut out = format!("# strategy={} k={}\n", pool.strategy, pool.k);
    for sub in &pool.subnetworks {
        out.push_str(&pool_line(sub));
        out.push('\n');
    }
    write_bytes("write pool", path, out.as_bytes())
}

pub fn read_pool(path: &Path) -> Result<SamplePool, RunError> {
    let text = read_text("read pool", path)?;
    let bad = |line: usize, msg: String| RunError::data("read pool", path, format!("line {line}: {msg}"));
    let mut strategy = None;
    let mut k = None;
    let mut subnetworks = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(header) = line.strip_prefix('#') {
            for field in header.split_whitespace() {
                match field.split_once('=') {
                    Some(("strategy", s)) => {
                        strategy = Some(s.parse::<Strategy>().map_err(|e| bad(i + 1, e.to_string()))?)
                    }
                    Some(("k", s)) => k = Some(s.parse::<usize>().map_err(|e| bad(i + 1, e.to_string()))?),
                    _ => {}
                }
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        subnetworks.push(parse_pool_line(line).map_err(|m| bad(i + 1, m))?);
    }
    let strategy = strategy.ok_or_else(|| bad(1, "missing '# strategy=..' header".into()))?;
    let k = k.ok_or_else(|| bad(1, "missing 'k=..' in header".into()))?;
    Ok(SamplePool {
        strategy,
        k,
        subnetworks,
    })
}

enum ChromosomeFormat {
    Binary,
    Csv,
}

fn chromosome_format(path: &Path) -> Result<ChromosomeFormat, RunError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => Ok(ChromosomeFormat::Binary),
        Some("csv") => Ok(ChromosomeFormat::Csv),
        _ => Err(RunError::usage(format!(
            "chromosome file {} must end in .bin or .csv",
            path.display()
        ))),
    }
}

/// `.bin`: raw little-endian f64. `.csv`: one value per line, printed in
/// shortest round-trip form.
pub fn write_chromosome(path: &Path, values: &[f64]) -> Result<(), RunError> {
    let bytes = match chromosome_format(path)? {
        ChromosomeFormat::Binary => values.iter().flat_map(|v| v.to_le_bytes()).collect(),
        ChromosomeFormat::Csv => {
            let mut s = String::with_capacity(values.len() * 24);
            for v in values {
                s.push_str(&format!("{v:e}\n"));
            }
            s.into_bytes()
        }
    };
    write_bytes("write chromosome", path, &bytes)
}

pub fn read_chromosome(path: &Path) -> Result<Vec<f64>, RunError> {
    match chromosome_format(path)? {
        ChromosomeFormat::Binary => {
            let bytes = fs::read(path).map_err(|e| RunError::data("read chromosome", path, e))?;
            if bytes.len() % 8 != 0 {
                return Err(RunError::data(
                    "read chromosome",
                    path,
                    format!("length {} is not a multiple of 8", bytes.len()),
                ));
            }
            Ok(bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        }
        ChromosomeFormat::Csv => read_text("read chromosome", path)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .enumerate()
            .map(|(i, l)| {
                l.parse::<f64>().map_err(|e| {
                    RunError::data("read chromosome", path, format!("value {}: {e}", i + 1))
                })
            })
            .collect(),
    }
}

fn csv_error<'a>(stage: &'static str, path: &'a Path) -> impl Fn(csv::Error) -> RunError + 'a {
    move |e| RunError::data(stage, path, e)
}

fn csv_writer(stage: &'static str, path: &Path) -> Result<csv::Writer<fs::File>, RunError> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_error(stage, path))
}

/// Header `node_id,dim_0,...`, one row per node.
pub fn write_embeddings(path: &Path, table: &EmbeddingTable) -> Result<(), RunError> {
    let stage = "write embeddings";
    let mut w = csv_writer(stage, path)?;
    let mut header = vec!["node_id".to_string()];
    header.extend((0..table.dim()).map(|i| format!("dim_{i}")));
    w.write_record(&header).map_err(csv_error(stage, path))?;
    for v in 0..table.node_count() {
        let mut row = vec![v.to_string()];
        row.extend(table.row(v).iter().map(|&x| fmt_float(x)));
        w.write_record(&row).map_err(csv_error(stage, path))?;
    }
    w.flush().map_err(|e| RunError::data(stage, path, e))
}

/// Reads an embedding file; nodes missing from the file stay absent.
pub fn read_embeddings(path: &Path) -> Result<EmbeddingTable, RunError> {
    let stage = "read embeddings";
    let mut r = csv::Reader::from_path(path).map_err(csv_error(stage, path))?;
    let header = r.headers().map_err(csv_error(stage, path))?.clone();
    if header.get(0) != Some("node_id") {
        return Err(RunError::data(stage, path, "first column must be node_id"));
    }
    let dim = header.len() - 1;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error(stage, path))?;
        let bad = |m: String| RunError::data(stage, path, format!("row {}: {m}", i + 1));
        let id = rec[0].parse::<usize>().map_err(|e| bad(e.to_string()))?;
        let values = rec
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((id, values));
    }
    let n = rows.iter().map(|(id, _)| id + 1).max().unwrap_or(0);
    let mut table = EmbeddingTable::empty(n, dim);
    for (id, values) in rows {
        table.set(id, &values).stage(stage)?;
    }
    Ok(table)
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<(), RunError> {
    let stage = "write fitness trace";
    let mut w = csv_writer(stage, path)?;
    w.write_record(["generation", "best_loss", "mean_loss", "worst_loss"])
        .map_err(csv_error(stage, path))?;
    for r in rows {
        w.write_record([
            r.generation.to_string(),
            fmt_float(r.best_loss),
            fmt_float(r.mean_loss),
            fmt_float(r.worst_loss),
        ])
        .map_err(csv_error(stage, path))?;
    }
    w.flush().map_err(|e| RunError::data(stage, path, e))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, RunError> {
    let stage = "read fitness trace";
    let mut r = csv::Reader::from_path(path).map_err(csv_error(stage, path))?;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error(stage, path))?;
        let num = |i: usize| {
            rec.get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| RunError::data(stage, path, format!("bad field {i} in {rec:?}")))
        };
        rows.push(TraceRow {
            generation: num(0)? as usize,
            best_loss: num(1)?,
            mean_loss: num(2)?,
            worst_loss: num(3)?,
        });
    }
    Ok(rows)
}

/// One `task,parameter,metric,value` report row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub task: String,
    pub parameter: String,
    pub metric: String,
    pub value: f64,
}

impl MetricRow {
    pub fn new(task: &str, parameter: impl ToString, metric: &str, value: f64) -> Self {
        MetricRow {
            task: task.to_string(),
            parameter: parameter.to_string(),
            metric: metric.to_string(),
            value,
        }
    }
}

const METRICS_HEADER: &str = "task,parameter,metric,value\n";

/// Appends rows to a metrics file, writing the header when the file is new
/// or empty.
pub fn append_metrics(path: &Path, rows: &[MetricRow]) -> Result<(), RunError> {
    let stage = "write metrics";
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut out = String::new();
    if fresh {
        out.push_str(METRICS_HEADER);
    }
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.task, r.parameter, r.metric, fmt_float(r.value)));
    }
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| RunError::data(stage, path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| RunError::data(stage, path, e))
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricRow>, RunError> {
    let stage = "read metrics";
    let mut r = csv::Reader::from_path(path).map_err(csv_error(stage, path))?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(csv_error(stage, path))?;
            let value = rec
                .get(3)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| RunError::data(stage, path, format!("bad row {rec:?}")))?;
            Ok(MetricRow::new(&rec[0], &rec[1], &rec[2], value))
        })
        .collect()
}
