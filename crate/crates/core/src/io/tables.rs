//! CSV interchange for standard-error and scaling tables.
//!
//! Floats are written in shortest round-trip form, so a table read back and
//! re-serialised is byte-identical.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::analysis::{Breakpoint, ScalingResult};
use crate::distributions::{DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::mc_engine::{StdErrRow, StdErrTable};

pub const STDERR_HEADER: &str = "dist,family,param1,param2,N,p,stderr,mean_estimate,S_bar";
pub const SCALING_HEADER: &str = "dist,p,slope,intercept_log10,K,n_min,n_used";

#[derive(Debug, Serialize, Deserialize)]
struct StdErrRecord {
    dist: String,
    family: String,
    param1: f64,
    param2: f64,
    #[serde(rename = "N")]
    n: usize,
    p: f64,
    stderr: f64,
    mean_estimate: f64,
    #[serde(rename = "S_bar")]
    s_bar: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScalingRecord {
    dist: String,
    p: f64,
    slope: f64,
    intercept_log10: f64,
    #[serde(rename = "K")]
    k: f64,
    n_min: String,
    n_used: usize,
}

fn csv_error(source: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(source, io),
        csv::ErrorKind::Deserialize { err, .. } => Error::parse(source, line, err.to_string()),
        other => Error::parse(source, line, format!("{other:?}")),
    }
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &str, source: &str) -> Result<()> {
    let header = rdr.headers().map_err(|e| csv_error(source, e))?;
    let got = header.iter().collect::<Vec<_>>().join(",");
    if got != expected {
        return Err(Error::parse(
            source,
            1,
            format!("expected header `{expected}`, got `{got}`"),
        ));
    }
    Ok(())
}

pub fn write_stderr_table<W: Write>(table: &StdErrTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in table.rows() {
        let (param1, param2) = r.spec.params();
        w.serialize(StdErrRecord {
            dist: r.spec.label(),
            family: r.spec.family().to_string(),
            param1,
            param2,
            n: r.n,
            p: r.p,
            stderr: r.stderr,
            mean_estimate: r.mean_estimate,
            s_bar: r.s_bar,
        })
        .map_err(|e| csv_error("<output>", e))?;
    }
    if table.is_empty() {
        w.write_record(STDERR_HEADER.split(','))
            .map_err(|e| csv_error("<output>", e))?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))
}

pub fn stderr_table_to_string(table: &StdErrTable) -> Result<String> {
    let mut buf = Vec::new();
    write_stderr_table(table, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Reads a standard-error CSV. `source` names the input in diagnostics.
pub fn read_stderr_table<R: Read>(input: R, source: &str) -> Result<StdErrTable> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, STDERR_HEADER, source)?;
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<StdErrRecord>() {
        let rec = rec.map_err(|e| csv_error(source, e))?;
        let line = rows.len() as u64 + 2;
        let family: Family = rec
            .family
            .parse()
            .map_err(|e: Error| Error::parse(source, line, e.to_string()))?;
        let spec = DistributionSpec::from_params(family, rec.param1, rec.param2)
            .map_err(|e| Error::parse(source, line, e.to_string()))?;
        if spec.label() != rec.dist {
            return Err(Error::parse(
                source,
                line,
                format!(
                    "dist `{}` does not match parameters ({})",
                    rec.dist,
                    spec.label()
                ),
            ));
        }
        if rec.n == 0 || !(rec.p > 0.0 && rec.p < 1.0) || rec.stderr.is_nan() || rec.stderr < 0.0 {
            return Err(Error::parse(source, line, "N, p or stderr out of range"));
        }
        rows.push(StdErrRow {
            spec,
            n: rec.n,
            p: rec.p,
            stderr: rec.stderr,
            mean_estimate: rec.mean_estimate,
            s_bar: rec.s_bar,
        });
    }
    StdErrTable::from_rows(rows).map_err(|e| Error::parse(source, 0, e.to_string()))
}

pub fn write_scaling<W: Write>(results: &[ScalingResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(ScalingRecord {
            dist: r.dist.clone(),
            p: r.p,
            slope: r.slope,
            intercept_log10: r.intercept_log10,
            k: r.k,
            n_min: r.n_min.to_string(),
            n_used: r.n_used,
        })
        .map_err(|e| csv_error("<output>", e))?;
    }
    if results.is_empty() {
        w.write_record(SCALING_HEADER.split(','))
            .map_err(|e| csv_error("<output>", e))?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))
}

pub fn scaling_to_string(results: &[ScalingResult]) -> Result<String> {
    let mut buf = Vec::new();
    write_scaling(results, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

pub fn read_scaling<R: Read>(input: R, source: &str) -> Result<Vec<ScalingResult>> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, SCALING_HEADER, source)?;
    let mut out = Vec::new();
    for rec in rdr.deserialize::<ScalingRecord>() {
        let rec = rec.map_err(|e| csv_error(source, e))?;
        let line = out.len() as u64 + 2;
        let n_min: Breakpoint = rec
            .n_min
            .parse()
            .map_err(|e: Error| Error::parse(source, line, e.to_string()))?;
        out.push(ScalingResult {
            dist: rec.dist,
            p: rec.p,
            slope: rec.slope,
            intercept_log10: rec.intercept_log10,
            k: rec.k,
            n_min,
            n_used: rec.n_used,
        });
    }
    Ok(out)
}
