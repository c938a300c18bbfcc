//! End-to-end operations behind the command-line subcommands.
//!
//! Each command writes its outputs as one bundle (all files or none), each
//! file with a `.meta` sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::{join, RunConfig};
use super::figures::{
    fig1_svg, fig2_svg, fig3_svg, k_series, k_series_csv, stderr_series, stderr_series_csv,
    OVERLAY_POINTS,
};
use super::files::{
    content_digest, ensure_writable_dir, sidecar_path, with_sidecar, write_bundle, Metadata,
};
use super::report::{table1_csv, table1_rows, table1_text, table1_within, Table1Row};
use super::tables::{read_scaling, read_stderr_table, scaling_to_string, stderr_table_to_string};
use crate::analysis::{scaling_results, Breakpoint, ScalingResult};
use crate::distributions::{DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::formulas::{stderr_quantile, KForm, P_MAX, P_MIN};
use crate::mc_engine::{sweep, StdErrTable};
use crate::quantile::QuantileGrid;
use crate::reference::{BREAKPOINT_TAIL_01PCT, BREAKPOINT_TAIL_1PCT};

pub const STDERR_FILE: &str = "stderr.csv";
pub const SCALING_FILE: &str = "scaling.csv";

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Metadata of an input, carried forward so derived files name the seed
/// and configuration that produced them.
fn inherit(kind: &str, inputs: &[(&str, &Path, &[u8])]) -> Metadata {
    let mut meta = Metadata::new(kind);
    for (role, path, bytes) in inputs {
        meta.insert(&format!("{role}_file"), path.display());
        meta.insert(&format!("{role}_sha256"), content_digest(bytes));
        if let Ok(text) = fs::read_to_string(sidecar_path(path)) {
            let parent = Metadata::parse(&text);
            for key in ["seed", "replicates", "config_hash"] {
                if let (Some(v), None) = (parent.get(key), meta.get(key)) {
                    meta.insert(key, v.to_string());
                }
            }
        }
    }
    meta
}

pub struct SweepOutput {
    pub path: PathBuf,
    pub table: StdErrTable,
}

/// Runs the Monte Carlo sweep for every configured distribution and writes
/// `stderr.csv` into the output directory.
pub fn cmd_sweep(config: &RunConfig) -> Result<SweepOutput> {
    let plan = config.plan()?;
    ensure_writable_dir(&config.output_dir)?;
    let mut tables = Vec::with_capacity(plan.len());
    for mc in &plan {
        log::info!(
            "sweeping {} over {} sample sizes, R = {}",
            mc.spec,
            mc.n_grid.len(),
            mc.replicates
        );
        tables.push(sweep(mc)?);
    }
    let table = StdErrTable::concat(tables)?;
    let csv = stderr_table_to_string(&table)?;
    let mut meta = Metadata::new("stderr_table");
    meta.insert("seed", config.master_seed)
        .insert("replicates", config.replicates)
        .insert("config_hash", config.config_hash())
        .insert(
            "dists",
            plan.iter()
                .map(|m| m.spec.label())
                .collect::<Vec<_>>()
                .join(","),
        )
        .insert("n_grid", join(&config.n_grid.sizes()))
        .insert("grid", join(QuantileGrid::standard().levels()))
        .insert("sha256", content_digest(csv.as_bytes()));
    let path = config.output_dir.join(STDERR_FILE);
    write_bundle(&with_sidecar(path.clone(), csv.into_bytes(), &meta))?;
    Ok(SweepOutput { path, table })
}

/// Fits the scaling law for every (dist, p) of a stored table and writes
/// `scaling.csv` into `out_dir`.
pub fn cmd_analyze(
    table_file: &Path,
    n_floor: usize,
    out_dir: &Path,
) -> Result<(PathBuf, Vec<ScalingResult>)> {
    let bytes = read_file(table_file)?;
    let table = read_stderr_table(bytes.as_slice(), &table_file.display().to_string())?;
    let results = scaling_results(&table, n_floor)?;
    ensure_writable_dir(out_dir)?;
    let csv = scaling_to_string(&results)?;
    let mut meta = inherit("scaling", &[("table", table_file, &bytes)]);
    meta.insert("n_floor", n_floor)
        .insert("sha256", content_digest(csv.as_bytes()));
    let path = out_dir.join(SCALING_FILE);
    write_bundle(&with_sidecar(path.clone(), csv.into_bytes(), &meta))?;
    Ok((path, results))
}

pub struct Table1Report {
    pub rows: Vec<Table1Row>,
    pub text: String,
    /// Every measured K within tolerance of the published value.
    pub within: bool,
}

/// Compares measured K with the published table; writes `table1.csv` and
/// `table1.txt`.
pub fn cmd_table1(
    scaling_file: &Path,
    out_dir: &Path,
    tol_normal: f64,
    tol_gamma: f64,
) -> Result<Table1Report> {
    let bytes = read_file(scaling_file)?;
    let results = read_scaling(bytes.as_slice(), &scaling_file.display().to_string())?;
    let rows = table1_rows(&results)?;
    ensure_writable_dir(out_dir)?;
    let text = table1_text(&rows, tol_normal, tol_gamma);
    let within = table1_within(&rows, tol_normal, tol_gamma);
    let mut meta = inherit("table1", &[("scaling", scaling_file, &bytes)]);
    meta.insert("tolerance_normal", tol_normal)
        .insert("tolerance_gamma", tol_gamma)
        .insert("within_tolerance", within);
    let mut bundle = Vec::new();
    bundle.extend(with_sidecar(
        out_dir.join("table1.csv"),
        table1_csv(&rows).into_bytes(),
        &meta,
    ));
    bundle.extend(with_sidecar(
        out_dir.join("table1.txt"),
        text.clone().into_bytes(),
        &meta,
    ));
    write_bundle(&bundle)?;
    Ok(Table1Report { rows, text, within })
}

/// Writes series CSVs and SVG drawings for figures 1-3.
pub fn cmd_plots(
    table_file: &Path,
    scaling_file: &Path,
    out_dir: &Path,
    high_levels: &[f64],
    low_levels: &[f64],
) -> Result<Vec<PathBuf>> {
    let table_bytes = read_file(table_file)?;
    let table = read_stderr_table(table_bytes.as_slice(), &table_file.display().to_string())?;
    let scaling_bytes = read_file(scaling_file)?;
    let scaling = read_scaling(
        scaling_bytes.as_slice(),
        &scaling_file.display().to_string(),
    )?;
    ensure_writable_dir(out_dir)?;

    let base = inherit(
        "figure",
        &[
            ("table", table_file, &table_bytes),
            ("scaling", scaling_file, &scaling_bytes),
        ],
    );
    let curves = stderr_series(&table, high_levels, low_levels);
    let curves_csv = stderr_series_csv(&curves);
    let k_points = k_series(&scaling, OVERLAY_POINTS);

    let figure = |name: &str, axes: &str| {
        let mut m = base.clone();
        m.insert("figure", name)
            .insert("x_scale", axes)
            .insert("y_scale", axes);
        m
    };
    let fig1 = figure("fig1", "linear");
    let fig2 = figure("fig2", "log10");
    let mut fig3 = figure("fig3", "linear");
    fig3.insert("y_scale", "linear (normal), log10 (gamma)")
        .insert("overlay_points", OVERLAY_POINTS);

    let files = [
        ("fig1.csv", curves_csv.clone(), &fig1),
        ("fig1.svg", fig1_svg(&curves), &fig1),
        ("fig2.csv", curves_csv, &fig2),
        ("fig2.svg", fig2_svg(&curves), &fig2),
        ("fig3.csv", k_series_csv(&k_points), &fig3),
        ("fig3.svg", fig3_svg(&k_points), &fig3),
    ];
    let mut bundle = Vec::new();
    let mut paths = Vec::new();
    for (name, contents, meta) in files {
        let path = out_dir.join(name);
        paths.push(path.clone());
        bundle.extend(with_sidecar(path, contents.into_bytes(), meta));
    }
    write_bundle(&bundle)?;
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub k: f64,
    pub s: f64,
    pub n: usize,
    pub stderr: f64,
    /// Breakpoint the sample size falls short of, if any.
    pub required_n: Option<usize>,
}

fn builtin_breakpoint(p: f64) -> Option<usize> {
    let tail = p.min(1.0 - p);
    if tail <= 0.001 + 1e-12 {
        Some(BREAKPOINT_TAIL_01PCT)
    } else if tail <= 0.01 + 1e-12 {
        Some(BREAKPOINT_TAIL_1PCT)
    } else {
        None
    }
}

/// Expected standard error K(p) S / sqrt(N) of a quantile estimate.
///
/// `s` defaults to the distribution's standard deviation. For gamma, the
/// breakpoint is read from `scaling` when it holds a detected value for a
/// gamma distribution at `p`; otherwise the built-in values apply.
pub fn cmd_eval(
    spec: &DistributionSpec,
    p: f64,
    n: usize,
    s: Option<f64>,
    scaling: Option<&[ScalingResult]>,
) -> Result<Evaluation> {
    if !(P_MIN - 1e-12..=P_MAX + 1e-12).contains(&p) {
        return Err(Error::OutOfRange {
            what: "p",
            value: p,
            lo: P_MIN,
            hi: P_MAX,
        });
    }
    let s = match s {
        Some(s) => s,
        None => spec.theoretical_sigma()?,
    };
    let k = KForm::from(spec.family()).published().eval(p);
    let stderr = stderr_quantile(k, s, n)?;
    let measured = match (spec.family(), scaling) {
        (Family::Gamma, Some(rs)) => rs
            .iter()
            .filter(|r| r.dist.starts_with("gamma") && (r.p - p).abs() < 1e-9)
            .find_map(|r| match r.n_min {
                Breakpoint::Detected(b) => Some(b),
                _ => None,
            }),
        _ => None,
    };
    let breakpoint = measured.or_else(|| builtin_breakpoint(p));
    Ok(Evaluation {
        k,
        s,
        n,
        stderr,
        required_n: breakpoint.filter(|&b| n < b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let e = cmd_eval(
            &DistributionSpec::standard_normal(),
            0.5,
            100,
            Some(1.0),
            None,
        )
        .unwrap();
        assert!((e.stderr - 0.1253).abs() < 1e-12);
        assert_eq!(e.required_n, None);
        let g = cmd_eval(
            &DistributionSpec::standard_gamma(),
            0.9,
            10_000,
            Some(1.0),
            None,
        )
        .unwrap();
        assert_eq!((g.stderr * 1e4).round() / 1e4, 0.0306);
        let w = cmd_eval(&DistributionSpec::standard_normal(), 0.99, 30, None, None).unwrap();
        assert_eq!(w.required_n, Some(55));
        let w = cmd_eval(&DistributionSpec::standard_normal(), 0.001, 300, None, None).unwrap();
        assert_eq!(w.required_n, Some(550));
        assert!(cmd_eval(&DistributionSpec::standard_normal(), 0.9995, 30, None, None).is_err());
        assert!(cmd_eval(&DistributionSpec::standard_normal(), 0.5, 0, None, None).is_err());
    }

    #[test]
    fn gamma_eval_prefers_measured_breakpoint() {
        let rs = [ScalingResult {
            dist: DistributionSpec::standard_gamma().label(),
            p: 0.99,
            slope: -0.5,
            intercept_log10: 1.0,
            k: 10.0,
            n_min: Breakpoint::Detected(110),
            n_used: 7,
        }];
        let e = cmd_eval(
            &DistributionSpec::standard_gamma(),
            0.99,
            80,
            None,
            Some(&rs),
        )
        .unwrap();
        assert_eq!(e.required_n, Some(110));
        let e = cmd_eval(&DistributionSpec::standard_gamma(), 0.99, 80, None, None).unwrap();
        assert_eq!(e.required_n, None);
    }
}
