//! CSV traces, RPCA trial summaries and plain matrices.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces every value bit for bit. Infinities are the
//! literal strings `inf` / `-inf`.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::solver::{IterationRecord, Trace};

pub const TRACE_COLUMNS: [&str; 6] = ["iter", "phi", "psi", "tol", "snr", "time_ms"];
pub const SUMMARY_COLUMNS: [&str; 9] = [
    "trial",
    "seed",
    "iterations",
    "rel_x",
    "rel_y",
    "rank",
    "nnz",
    "obj",
    "time_s",
];
pub const AVG_FLAG: &str = "avg";

/// Relative tolerance for the `avg` row check.
const AVG_TOL: f64 = 1e-12;

/// Ordered `key=value` metadata written as `#` lines.
pub type Header = Vec<(String, String)>;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub header: Header,
    pub trace: Trace,
}

impl TraceFile {
    pub fn new(header: Header, trace: Trace) -> Self {
        Self { header, trace }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        lookup(&self.header, key)
    }
}

fn lookup<'a>(header: &'a Header, key: &str) -> Option<&'a str> {
    header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn write_header(out: &mut String, header: &Header) -> Result<()> {
    for (k, v) in header {
        if k.is_empty() || k.contains(['=', '\n']) || v.contains('\n') {
            return Err(Error::invalid(format!("bad header entry `{k}`")));
        }
        out.push_str(&format!("# {k}={v}\n"));
    }
    Ok(())
}

/// Splits leading `#` lines off and parses them as `key=value`.
fn split_header(text: &str) -> Result<(Header, &str)> {
    let mut header = Vec::new();
    let mut rest = text;
    while let Some(line) = rest.strip_prefix('#') {
        let (line, tail) = line.split_once('\n').unwrap_or((line, ""));
        let (k, v) = line
            .trim()
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("header line without '=': {line}")))?;
        header.push((k.trim().to_string(), v.to_string()));
        rest = tail;
    }
    Ok((header, rest))
}

fn float(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad {what} `{s}`")))
}

fn integer(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad {what} `{s}`")))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

fn check_columns(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(Error::Format(format!(
            "expected columns {}, found {}",
            expected.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

fn csv_body(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes())
}

fn finish_csv(w: csv::Writer<Vec<u8>>, mut out: String) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Format(format!("csv: {e}")))?;
    out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))?);
    Ok(out)
}

/// Serialized trace. `phi0` (the objective at the starting point) is always
/// the first header entry.
pub fn format_trace(file: &TraceFile) -> Result<String> {
    let mut out = String::new();
    let mut header = vec![("phi0".to_string(), file.trace.initial_phi.to_string())];
    header.extend(file.header.iter().filter(|(k, _)| k != "phi0").cloned());
    write_header(&mut out, &header)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_COLUMNS).map_err(csv_error)?;
    for r in &file.trace.records {
        w.write_record([
            r.iter.to_string(),
            r.phi.to_string(),
            r.psi.to_string(),
            r.tol.to_string(),
            r.snr.map(|s| s.to_string()).unwrap_or_default(),
            r.time_ms.to_string(),
        ])
        .map_err(csv_error)?;
    }
    finish_csv(w, out)
}

pub fn parse_trace(text: &str) -> Result<TraceFile> {
    let (mut header, body) = split_header(text)?;
    let initial_phi = match header.iter().position(|(k, _)| k == "phi0") {
        Some(i) => float(&header.remove(i).1, "phi0")?,
        None => return Err(Error::Format("trace header lacks phi0".into())),
    };
    let mut rd = csv_body(body);
    check_columns(rd.headers().map_err(csv_error)?, &TRACE_COLUMNS)?;
    let mut records = Vec::new();
    for row in rd.records() {
        let row = row.map_err(csv_error)?;
        let snr = match row[4].trim() {
            "" => None,
            s => Some(float(s, "snr")?),
        };
        records.push(IterationRecord {
            iter: integer(&row[0], "iter")?,
            phi: float(&row[1], "phi")?,
            psi: float(&row[2], "psi")?,
            tol: float(&row[3], "tol")?,
            snr,
            time_ms: float(&row[5], "time_ms")?,
        });
    }
    Ok(TraceFile {
        header,
        trace: Trace {
            initial_phi,
            records,
        },
    })
}

pub fn write_trace(path: impl AsRef<Path>, file: &TraceFile) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_trace(file)?).map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<TraceFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text)
}

/// One RPCA trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub iterations: usize,
    pub rel_x: f64,
    pub rel_y: f64,
    pub rank: usize,
    pub nnz: usize,
    pub obj: f64,
    pub time_s: f64,
}

/// Column means of a set of trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialAverage {
    pub iterations: f64,
    pub rel_x: f64,
    pub rel_y: f64,
    pub rank: f64,
    pub nnz: f64,
    pub obj: f64,
    pub time_s: f64,
}

impl TrialAverage {
    pub fn of(rows: &[TrialRow]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("average of zero trials"));
        }
        let n = rows.len() as f64;
        let mean = |f: &dyn Fn(&TrialRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
        Ok(Self {
            iterations: mean(&|r| r.iterations as f64),
            rel_x: mean(&|r| r.rel_x),
            rel_y: mean(&|r| r.rel_y),
            rank: mean(&|r| r.rank as f64),
            nnz: mean(&|r| r.nnz as f64),
            obj: mean(&|r| r.obj),
            time_s: mean(&|r| r.time_s),
        })
    }

    fn fields(&self) -> [f64; 7] {
        [
            self.iterations,
            self.rel_x,
            self.rel_y,
            self.rank,
            self.nnz,
            self.obj,
            self.time_s,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub header: Header,
    pub rows: Vec<TrialRow>,
    pub avg: TrialAverage,
}

/// Per-trial rows followed by one `avg` row.
pub fn format_summary(header: &Header, rows: &[TrialRow]) -> Result<String> {
    let avg = TrialAverage::of(rows)?;
    let mut out = String::new();
    write_header(&mut out, header)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_COLUMNS).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.trial.to_string(),
            r.seed.to_string(),
            r.iterations.to_string(),
            r.rel_x.to_string(),
            r.rel_y.to_string(),
            r.rank.to_string(),
            r.nnz.to_string(),
            r.obj.to_string(),
            r.time_s.to_string(),
        ])
        .map_err(csv_error)?;
    }
    let mut last = vec![AVG_FLAG.to_string(), String::new()];
    last.extend(avg.fields().iter().map(f64::to_string));
    w.write_record(&last).map_err(csv_error)?;
    finish_csv(w, out)
}

/// Parses a summary and checks the `avg` row against the recomputed means.
pub fn parse_summary(text: &str) -> Result<TrialSummary> {
    let (header, body) = split_header(text)?;
    let mut rd = csv_body(body);
    check_columns(rd.headers().map_err(csv_error)?, &SUMMARY_COLUMNS)?;
    let mut rows = Vec::new();
    let mut written = None;
    for row in rd.records() {
        let row = row.map_err(csv_error)?;
        if written.is_some() {
            return Err(Error::Format("rows after the avg row".into()));
        }
        if &row[0] == AVG_FLAG {
            let mut v = [0.0; 7];
            for (slot, s) in v.iter_mut().zip(row.iter().skip(2)) {
                *slot = float(s, "average")?;
            }
            written = Some(v);
            continue;
        }
        rows.push(TrialRow {
            trial: integer(&row[0], "trial")?,
            seed: row[1]
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad seed `{}`", &row[1])))?,
            iterations: integer(&row[2], "iterations")?,
            rel_x: float(&row[3], "rel_x")?,
            rel_y: float(&row[4], "rel_y")?,
            rank: integer(&row[5], "rank")?,
            nnz: integer(&row[6], "nnz")?,
            obj: float(&row[7], "obj")?,
            time_s: float(&row[8], "time_s")?,
        });
    }
    let written = written.ok_or_else(|| Error::Format("summary lacks the avg row".into()))?;
    let avg = TrialAverage::of(&rows)?;
    for (i, (w, a)) in written.iter().zip(avg.fields()).enumerate() {
        if (w - a).abs() > AVG_TOL * (1.0 + a.abs()) {
            return Err(Error::Format(format!(
                "avg column {} is {w}, recomputed {a}",
                SUMMARY_COLUMNS[i + 2]
            )));
        }
    }
    Ok(TrialSummary { header, rows, avg })
}

pub fn write_summary(path: impl AsRef<Path>, header: &Header, rows: &[TrialRow]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_summary(header, rows)?).map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: impl AsRef<Path>) -> Result<TrialSummary> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_summary(&text)
}

/// Row-major CSV without a header.
pub fn format_matrix(m: &DMatrix<f64>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(f64::to_string))
            .map_err(csv_error)?;
    }
    finish_csv(w, String::new())
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut data = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for row in rd.records() {
        let row = row.map_err(csv_error)?;
        if *ncols.get_or_insert(row.len()) != row.len() {
            return Err(Error::Format(format!("row {nrows} has {} columns", row.len())));
        }
        for s in row.iter() {
            data.push(float(s, "entry")?);
        }
        nrows += 1;
    }
    let ncols = ncols.ok_or_else(|| Error::Format("empty matrix".into()))?;
    Ok(DMatrix::from_row_slice(nrows, ncols, &data))
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_matrix(m)?).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text)
}
