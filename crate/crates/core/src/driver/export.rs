//! Files written by a run: the archive as CSV, the report as JSON, one trace
//! per scalarized problem, and fronts for comparison.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::hierarchy::RunReport;
use super::oracle::OracleFront;
use crate::error::{Error, Result};
use crate::trrb::{TraceEntry, TrStats};

/// Index sets are written one-based and joined by `+`.
pub fn format_index_set(set: &[usize]) -> String {
    set.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join("+")
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn archive_header(k: usize, m: usize) -> Vec<String> {
    let mut h = vec!["I".to_string()];
    h.extend((1..=k).map(|i| format!("z_{i}")));
    h.extend((1..=m).map(|i| format!("u_{i}")));
    h.extend((1..=k).map(|i| format!("J_{i}")));
    h.extend(["t", "n_basis_final", "n_full_solves", "wall_time_s"].map(String::from));
    h
}

/// One row per archive point. Reference point coordinates outside the index
/// set are left empty.
pub fn write_archive_csv(report: &RunReport, path: &Path) -> Result<()> {
    let m = report.minimizers.first().map_or(0, |u| u.len());
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(archive_header(report.k, m))?;
    for e in &report.archive {
        let p = &report.psps[e.psp];
        let mut row = vec![format_index_set(&e.index_set)];
        for i in 0..report.k {
            row.push(e.index_set.iter().position(|&j| j == i).map_or(String::new(), |a| num(e.z[a])));
        }
        row.extend(e.u.iter().map(|v| num(*v)));
        row.extend(e.objectives.iter().map(|v| num(*v)));
        row.push(num(e.t));
        row.push(p.basis_final.to_string());
        row.push(p.full_solves.to_string());
        row.push(num(p.wall_time_s));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(w, value)?;
    Ok(())
}

/// One trust-region iteration of one multiplier step.
#[derive(Serialize)]
struct TraceLine<'a> {
    psp: usize,
    outer: usize,
    #[serde(flatten)]
    entry: &'a TraceEntry,
}

/// Writes the traces of PSP `psp` as JSON lines.
pub fn write_trace(psp: usize, inner: &[(TrStats, Vec<TraceEntry>)], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (outer, (_, entries)) in inner.iter().enumerate() {
        for entry in entries {
            serde_json::to_writer(&mut w, &TraceLine { psp, outer, entry })?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `archive.csv`, `report.json` and, with `traces`,
/// `traces/psp_N.jsonl` into `dir`. Returns the files written.
pub fn export(report: &RunReport, dir: &Path, traces: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    let csv = dir.join("archive.csv");
    write_archive_csv(report, &csv)?;
    out.push(csv);
    let json = dir.join("report.json");
    write_json(report, &json)?;
    out.push(json);
    if traces {
        let tdir = dir.join("traces");
        std::fs::create_dir_all(&tdir)?;
        for (n, p) in report.psps.iter().enumerate() {
            let path = tdir.join(format!("psp_{n:05}.jsonl"));
            write_trace(n, &p.traces, &path)?;
            out.push(path);
        }
    }
    Ok(out)
}

/// Oracle front as CSV with `u_*` and `J_*` columns.
pub fn write_oracle_csv(front: &OracleFront, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let m = front.params.first().map_or(0, |u| u.len());
    let k = front.points.first().map_or(0, |y| y.len());
    let mut h: Vec<String> = (1..=m).map(|i| format!("u_{i}")).collect();
    h.extend((1..=k).map(|i| format!("J_{i}")));
    w.write_record(&h)?;
    for (u, y) in front.params.iter().zip(&front.points) {
        w.write_record(u.iter().chain(y).map(|v| num(*v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads objective vectors from a CSV file: the `J_*` columns when the header
/// has them, otherwise every column.
pub fn read_front(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let cols: Vec<usize> = {
        let j: Vec<usize> = header.iter().enumerate().filter(|(_, h)| h.starts_with("J_")).map(|(i, _)| i).collect();
        if j.is_empty() {
            (0..header.len()).collect()
        } else {
            j
        }
    };
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = cols
            .iter()
            .map(|&c| {
                let s = rec.get(c).unwrap_or("");
                s.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("{}: bad number '{s}'", path.display())))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(row);
    }
    Ok(out)
}
