//! On-disk formats: distance matrices, graphs, embeddings, alignment maps and
//! solver traces.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use lago_core::pdmm::PdmmTraceRow;
use lago_core::tv::TvTraceRow;
use lago_core::{DistanceMatrix, LanguageGraph, Matrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EMBEDDING_MAGIC: &[u8; 8] = b"LAGOEMB1";
pub const MAP_MAGIC: &[u8; 8] = b"LAGOMAP1";

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn parse_f64(s: &str, context: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::format(context, format!("`{}` is not a number", s.trim())))
}

/// Reads a labelled distance matrix.
///
/// The first record is a header of language codes, optionally preceded by an
/// empty corner cell. Every following record is `code, v1, ..., vN`. A file
/// whose first record already holds numbers is read without a header.
pub fn read_distance_matrix<R: Read>(source: R) -> Result<DistanceMatrix> {
    let ctx = "distance matrix";
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::format(ctx, e))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
    }
    let Some(first) = records.first() else {
        return Err(Error::format(ctx, "empty input"));
    };
    let headerless = first.len() >= 2 && first[1].parse::<f64>().is_ok();
    let (header, body) = if headerless {
        (None, &records[..])
    } else {
        let mut h = first.clone();
        if h.first().is_some_and(String::is_empty) {
            h.remove(0);
        }
        (Some(h), &records[1..])
    };
    let n = body.len();
    let mut labels = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n * n);
    for (i, row) in body.iter().enumerate() {
        if row.len() != n + 1 {
            return Err(Error::Core(lago_core::Error::InvalidDistance(format!(
                "not square: row {} has {} values for {n} languages",
                i + 1,
                row.len() - 1
            ))));
        }
        labels.push(row[0].clone());
        for v in &row[1..] {
            values.push(parse_f64(v, ctx)?);
        }
    }
    if let Some(h) = header {
        if h != labels {
            return Err(Error::Core(lago_core::Error::InvalidDistance(format!(
                "header {h:?} does not match row labels {labels:?}"
            ))));
        }
    }
    Ok(DistanceMatrix::new(labels, Matrix::from_vec(n, n, values)?)?)
}

pub fn load_distance_matrix(path: &Path) -> Result<DistanceMatrix> {
    read_distance_matrix(open(path)?)
}

pub fn write_distance_matrix<W: Write>(d: &DistanceMatrix, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let csv_err = |e: csv::Error| Error::format("distance matrix", e);
    let mut header = vec![String::new()];
    header.extend(d.labels().iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (i, label) in d.labels().iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend(d.values().row(i).iter().map(f64::to_string));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::format("distance matrix", e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub labels: Vec<String>,
    pub edges: Vec<[usize; 2]>,
}

impl From<&LanguageGraph> for GraphJson {
    fn from(g: &LanguageGraph) -> Self {
        GraphJson {
            labels: g.labels().to_vec(),
            edges: g.edges().iter().map(|&(i, j)| [i, j]).collect(),
        }
    }
}

impl TryFrom<GraphJson> for LanguageGraph {
    type Error = lago_core::Error;

    fn try_from(g: GraphJson) -> lago_core::Result<Self> {
        LanguageGraph::new(g.labels, g.edges.into_iter().map(|[i, j]| (i, j)))
    }
}

pub fn write_graph_json(g: &LanguageGraph, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, &GraphJson::from(g)).map_err(|e| Error::format("graph json", e))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn load_graph_json(path: &Path) -> Result<LanguageGraph> {
    let g: GraphJson = serde_json::from_reader(open(path)?).map_err(|e| Error::format(path.display().to_string(), e))?;
    Ok(LanguageGraph::try_from(g)?)
}

/// One line per edge, `eng -- fra`.
pub fn edge_list(g: &LanguageGraph) -> String {
    let labels = g.labels();
    g.edges()
        .iter()
        .map(|&(i, j)| format!("{} -- {}\n", labels[i], labels[j]))
        .collect()
}

/// Reads a headerless CSV of numbers, one sample per row.
pub fn read_matrix_csv<R: Read>(source: R) -> Result<Matrix> {
    let ctx = "embedding csv";
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::format(ctx, e))?;
        rows.push(rec.iter().map(|v| parse_f64(v, ctx)).collect::<Result<_>>()?);
    }
    if rows.is_empty() {
        return Err(Error::format(ctx, "no rows"));
    }
    Ok(Matrix::from_rows(&rows)?)
}

pub fn write_matrix_csv<W: Write>(m: &Matrix, sink: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(f64::to_string))
            .map_err(|e| Error::format("embedding csv", e))?;
    }
    w.flush().map_err(|e| Error::format("embedding csv", e))
}

pub fn read_matrix_binary<R: Read>(mut source: R, magic: &[u8; 8]) -> Result<Matrix> {
    let ctx = String::from_utf8_lossy(magic).into_owned();
    let short = |e: std::io::Error| Error::format(ctx.clone(), format!("truncated input: {e}"));
    let mut head = [0u8; 16];
    source.read_exact(&mut head).map_err(short)?;
    if &head[..8] != magic {
        return Err(Error::format(ctx, "bad magic"));
    }
    let rows = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(head[12..16].try_into().unwrap()) as usize;
    let mut bytes = vec![0u8; rows * cols * 8];
    source.read_exact(&mut bytes).map_err(short)?;
    if source.read(&mut [0u8; 1]).map_err(short)? != 0 {
        return Err(Error::format(ctx, "trailing bytes"));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Matrix::from_vec(rows, cols, data)?)
}

pub fn write_matrix_binary<W: Write>(m: &Matrix, mut sink: W, magic: &[u8; 8]) -> Result<()> {
    let dim = |v: usize| u32::try_from(v).map_err(|_| Error::format("binary matrix", "dimension exceeds u32"));
    let mut buf = Vec::with_capacity(16 + m.as_slice().len() * 8);
    buf.extend_from_slice(magic);
    buf.extend_from_slice(&dim(m.rows())?.to_le_bytes());
    buf.extend_from_slice(&dim(m.cols())?.to_le_bytes());
    for v in m.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    sink.write_all(&buf).map_err(|e| Error::format("binary matrix", e))
}

/// Embedding file format, chosen by extension: `.csv` is text, anything else
/// is the `LAGOEMB1` container.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Binary,
}

impl Format {
    pub fn of(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Binary,
        }
    }
}

pub fn load_embeddings(path: &Path) -> Result<Matrix> {
    let r = open(path)?;
    match Format::of(path) {
        Format::Csv => read_matrix_csv(r),
        Format::Binary => read_matrix_binary(r, EMBEDDING_MAGIC),
    }
    .map_err(|e| with_path(e, path))
}

pub fn save_embeddings(m: &Matrix, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    match Format::of(path) {
        Format::Csv => write_matrix_csv(m, &mut w)?,
        Format::Binary => write_matrix_binary(m, &mut w, EMBEDDING_MAGIC)?,
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_map(path: &Path) -> Result<Matrix> {
    read_matrix_binary(open(path)?, MAP_MAGIC).map_err(|e| with_path(e, path))
}

pub fn save_map(m: &Matrix, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_matrix_binary(m, &mut w, MAP_MAGIC)?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Format { context, message } => Error::format(format!("{}: {context}", path.display()), message),
        other => other,
    }
}

pub fn write_pdmm_trace<W: Write>(rows: &[PdmmTraceRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let err = |e: csv::Error| Error::format("trace", e);
    w.write_record(["iter", "objective", "max_violation", "max_step"]).map_err(err)?;
    for r in rows {
        w.write_record([
            r.iter.to_string(),
            r.objective.to_string(),
            r.max_violation.to_string(),
            r.max_step.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::format("trace", e))
}

pub fn write_tv_trace<W: Write>(rows: &[TvTraceRow], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let err = |e: csv::Error| Error::format("trace", e);
    w.write_record(["iter", "tv_objective", "step_size"]).map_err(err)?;
    for r in rows {
        w.write_record([r.iter.to_string(), r.tv_objective.to_string(), r.step_size.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::format("trace", e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
