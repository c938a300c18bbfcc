//! File-level pipeline: sweep, analyze, table1, plots.

mod common;

use std::fs;
use std::path::Path;

use quantile_stderr::io::commands::{cmd_analyze, cmd_plots, cmd_sweep, cmd_table1};
use quantile_stderr::io::files::Metadata;
use quantile_stderr::io::tables::{
    read_scaling, read_stderr_table, scaling_to_string, stderr_table_to_string,
};
use quantile_stderr::io::{write_stderr_table, NGridChoice, RunConfig};
use quantile_stderr::stats::ols;
use quantile_stderr::{DistributionSpec, Error, QuantileGrid};

fn small_config(dir: &Path) -> RunConfig {
    RunConfig {
        n_grid: NGridChoice::Explicit(vec![10, 20, 40, 80, 160, 320, 640, 1300, 3000, 4000, 5000]),
        replicates: 400,
        output_dir: dir.to_path_buf(),
        ..RunConfig::default()
    }
}

#[test]
fn sweep_is_reproducible_and_lossless() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = cmd_sweep(&small_config(a.path())).unwrap();
    let second = cmd_sweep(&small_config(b.path())).unwrap();
    let bytes = fs::read(&first.path).unwrap();
    assert_eq!(bytes, fs::read(&second.path).unwrap());
    assert_eq!(first.table.len(), 2 * 11 * QuantileGrid::standard().len());

    let back = read_stderr_table(bytes.as_slice(), "stderr.csv").unwrap();
    assert_eq!(back, first.table);
    assert_eq!(
        stderr_table_to_string(&back).unwrap().as_bytes(),
        bytes.as_slice()
    );
    for (x, y) in back.rows().iter().zip(first.table.rows()) {
        let reparsed: f64 = format!("{:.16e}", x.stderr).parse().unwrap();
        assert_eq!(reparsed, y.stderr);
    }

    let meta = Metadata::parse(&fs::read_to_string(a.path().join("stderr.csv.meta")).unwrap());
    assert_eq!(meta.get("seed"), Some("20140101"));
    assert_eq!(meta.get("replicates"), Some("400"));
    assert_eq!(
        meta.get("config_hash"),
        Some(small_config(a.path()).config_hash().as_str())
    );

    let (scaling_path, results) = cmd_analyze(&first.path, 3000, a.path()).unwrap();
    assert_eq!(results.len(), 2 * QuantileGrid::standard().len());
    let text = fs::read_to_string(&scaling_path).unwrap();
    let parsed = read_scaling(text.as_bytes(), "scaling.csv").unwrap();
    assert_eq!(parsed, results);
    assert_eq!(scaling_to_string(&parsed).unwrap(), text);
    let smeta = Metadata::parse(&fs::read_to_string(a.path().join("scaling.csv.meta")).unwrap());
    assert_eq!(smeta.get("seed"), Some("20140101"));
}

#[test]
fn unwritable_output_leaves_no_files() {
    let d = tempfile::tempdir().unwrap();
    let blocker = d.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let cfg = small_config(&blocker.join("out"));
    assert!(matches!(cmd_sweep(&cfg), Err(Error::Io { .. })));
    assert_eq!(fs::read_dir(d.path()).unwrap().count(), 1);
}

#[test]
fn analyze_synthetic_power_law() {
    let d = tempfile::tempdir().unwrap();
    let spec = DistributionSpec::normal(3.0, 2.0).unwrap();
    let ns = [10, 20, 40, 80, 160, 320, 640, 1300, 3000, 5200, 8000];
    let table = common::power_law_table(spec, &ns, QuantileGrid::standard().levels(), 2.5);
    let path = d.path().join("t.csv");
    write_stderr_table(&table, fs::File::create(&path).unwrap()).unwrap();
    let (_, results) = cmd_analyze(&path, 3000, d.path()).unwrap();
    for r in &results {
        assert!((r.slope + 0.5).abs() < 1e-9, "{r:?}");
        assert!((r.k - 1.25).abs() < 1e-9);
    }
}

#[test]
fn analyze_reports_parse_row() {
    let d = tempfile::tempdir().unwrap();
    let path = d.path().join("bad.csv");
    fs::write(
        &path,
        "dist,family,param1,param2,N,p,stderr,mean_estimate,S_bar\nnormal_mu0_sigma1,normal,0,1,10,0.5,0.3,0,1\nnormal_mu0_sigma1,normal,0,1,20,0.5,oops,0,1\n",
    )
    .unwrap();
    match cmd_analyze(&path, 3000, d.path()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn table1_and_plots_from_small_sweep() {
    let d = tempfile::tempdir().unwrap();
    let out = cmd_sweep(&small_config(d.path())).unwrap();
    let (scaling, _) = cmd_analyze(&out.path, 3000, d.path()).unwrap();

    let loose = cmd_table1(&scaling, d.path(), 10.0, 10.0).unwrap();
    assert!(loose.within);
    assert_eq!(loose.rows.len(), 20);
    let strict = cmd_table1(&scaling, d.path(), 1e-9, 1e-9).unwrap();
    assert!(!strict.within);
    assert!(d.path().join("table1.txt").exists() && d.path().join("table1.csv.meta").exists());

    let files = cmd_plots(&out.path, &scaling, d.path(), &[0.5, 0.99], &[0.01]).unwrap();
    assert_eq!(files.len(), 6);
    let fig1 = fs::read_to_string(d.path().join("fig1.csv")).unwrap();
    assert_eq!(fig1, fs::read_to_string(d.path().join("fig2.csv")).unwrap());
    let m1 = Metadata::parse(&fs::read_to_string(d.path().join("fig1.csv.meta")).unwrap());
    let m2 = Metadata::parse(&fs::read_to_string(d.path().join("fig2.csv.meta")).unwrap());
    assert_eq!(
        (m1.get("x_scale"), m2.get("x_scale")),
        (Some("linear"), Some("log10"))
    );

    let (xs, ys): (Vec<f64>, Vec<f64>) = fig1
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|c| c[0] == "a" && c[2] == "0.5")
        .map(|c| {
            (
                c[3].parse::<f64>().unwrap().log10(),
                c[4].parse::<f64>().unwrap().log10(),
            )
        })
        .unzip();
    let slope = ols(&xs, &ys).unwrap().slope;
    assert!((slope + 0.5).abs() < 0.03, "slope {slope}");

    let fig3 = fs::read_to_string(d.path().join("fig3.csv")).unwrap();
    assert!(fig3
        .lines()
        .any(|l| l == "a,normal_mu0_sigma1,formula,0.5,1.253"));
    assert_eq!(
        fig3.lines().filter(|l| l.contains(",formula,")).count(),
        400
    );
    assert!(fs::read_to_string(d.path().join("fig3.svg"))
        .unwrap()
        .contains("<svg"));
}
