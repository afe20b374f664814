//! CSV and key/value summary output.

use std::fs;
use std::path::{Path, PathBuf};

use crate::discretization::CsrMatrix;
use crate::dynamics::EnergyTrace;
use crate::error::{LabError, Result};

pub const TRACE_HEADER: [&str; 5] = ["t", "energy", "dissipation", "lyapunov", "observed"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(path: &Path, e: csv::Error) -> LabError {
    LabError::io(path, std::io::Error::other(e.to_string()))
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| LabError::io(path, e))
}

/// `key = value` lines in the given order.
pub fn format_summary(records: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in records {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(v);
        s.push('\n');
    }
    s
}

pub fn write_summary(path: &Path, records: &[(String, String)]) -> Result<()> {
    fs::write(path, format_summary(records)).map_err(|e| LabError::io(path, e))
}

pub fn trace_rows(tr: &EnergyTrace) -> Vec<Vec<String>> {
    (0..tr.times.len())
        .map(|k| {
            vec![
                fmt_f64(tr.times[k]),
                fmt_f64(tr.energy[k]),
                fmt_f64(tr.dissipation[k]),
                tr.lyapunov.as_ref().map(|l| fmt_f64(l[k])).unwrap_or_default(),
                fmt_f64(tr.observed[k]),
            ]
        })
        .collect()
}

pub fn write_trace(path: &Path, tr: &EnergyTrace) -> Result<()> {
    write_csv(path, &TRACE_HEADER, &trace_rows(tr))
}

/// Reads `t` and `energy` (and the other columns when present) from a trace CSV.
pub fn read_trace(path: &Path) -> Result<EnergyTrace> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let col = |name: &str| header.iter().position(|h| h.trim() == name);
    let (it, ie) = match (col("t"), col("energy")) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(LabError::Parse { line: 1, msg: "trace needs t and energy columns".into() });
        }
    };
    let (id, il, io) = (col("dissipation"), col("lyapunov"), col("observed"));
    let mut tr = EnergyTrace::empty("file");
    let mut lyap = Vec::new();
    let mut has_lyap = il.is_some();
    for (k, rec) in r.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| LabError::Parse { line, msg: e.to_string() })?;
        let num = |i: usize| -> Result<f64> {
            let s = rec.get(i).unwrap_or("").trim();
            s.parse::<f64>()
                .map_err(|_| LabError::Parse { line, msg: format!("bad number '{s}'") })
        };
        tr.times.push(num(it)?);
        tr.energy.push(num(ie)?);
        tr.dissipation.push(match id {
            Some(i) => num(i)?,
            None => 0.0,
        });
        tr.observed.push(match io {
            Some(i) => num(i)?,
            None => 0.0,
        });
        if let Some(i) = il {
            match rec.get(i).map(str::trim) {
                Some("") | None => has_lyap = false,
                Some(_) => lyap.push(num(i)?),
            }
        }
    }
    if has_lyap {
        tr.lyapunov = Some(lyap);
    }
    Ok(tr)
}

/// `row,col,value` dump of a sparse matrix.
pub fn write_triplets(path: &Path, m: &CsrMatrix) -> Result<()> {
    let rows: Vec<Vec<String>> = m
        .iter()
        .map(|(r, c, v)| vec![r.to_string(), c.to_string(), fmt_f64(v)])
        .collect();
    write_csv(path, &["row", "col", "value"], &rows)
}

/// One value per line.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut s = String::with_capacity(v.len() * 24);
    for x in v {
        s.push_str(&fmt_f64(*x));
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| LabError::io(path, e))
}

pub fn ensure_dir(path: &Path) -> Result<PathBuf> {
    fs::create_dir_all(path).map_err(|e| LabError::io(path, e))?;
    Ok(path.to_path_buf())
}
