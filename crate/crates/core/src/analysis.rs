//! Scaling analysis of standard-error tables.
//!
//! For each distribution and level the standard error is regressed on N in
//! log10-log10 space. The slope should be close to -1/2; the intercept at
//! N = 1, divided by the population sigma, is the scaling coefficient K(p).
//! Where the slope departs from -1/2 at small N, the start of the power-law
//! regime is reported as the minimum viable sample size.

use std::fmt;

use rayon::prelude::*;

use crate::distributions::{DistributionSpec, RngStream};
use crate::error::{Error, Result};
use crate::mc_engine::{StdErrRow, StdErrTable};
use crate::quantile::{check_sample, quantile_sorted, sort_sample};
use crate::stats::{ols, sample_std_dev};

/// Only sample sizes at or above this enter the K(p) fit by default.
pub const DEFAULT_N_FLOOR: usize = 3000;

/// Windowed-slope rule for locating the start of the N^(-1/2) regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakpointRule {
    /// Consecutive grid points per local fit.
    pub window: usize,
    /// Allowed |slope - target_slope| for a window to count as settled.
    pub slope_tolerance: f64,
    pub target_slope: f64,
    /// Minimum number of distinct N values in the series.
    pub min_points: usize,
    /// Minimum max(N) / min(N).
    pub min_span_ratio: f64,
}

impl Default for BreakpointRule {
    fn default() -> Self {
        BreakpointRule {
            window: 5,
            slope_tolerance: 0.08,
            target_slope: -0.5,
            min_points: 8,
            min_span_ratio: 10.0,
        }
    }
}

/// Outcome of minimum-sample-size detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Breakpoint {
    /// The power law holds from this N onward, and not before it.
    Detected(usize),
    /// The power law already holds from the smallest N in the table, so the
    /// table does not constrain the breakpoint.
    Unconstrained(usize),
    /// The largest-N window still deviates from the power law.
    NotDetected,
    /// The table lacks the points or span the rule needs.
    NotAssessed,
}

impl Breakpoint {
    pub fn detected(&self) -> Option<usize> {
        match *self {
            Breakpoint::Detected(n) => Some(n),
            _ => None,
        }
    }
}

impl fmt::Display for Breakpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Breakpoint::Detected(n) => write!(f, "{n}"),
            Breakpoint::Unconstrained(n) => write!(f, "<={n}"),
            Breakpoint::NotDetected => f.write_str("none"),
            Breakpoint::NotAssessed => f.write_str("n/a"),
        }
    }
}

impl std::str::FromStr for Breakpoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidConfig(format!("invalid n_min value `{s}`"));
        match s {
            "none" => Ok(Breakpoint::NotDetected),
            "n/a" => Ok(Breakpoint::NotAssessed),
            _ => match s.strip_prefix("<=") {
                Some(rest) => rest
                    .parse()
                    .map(Breakpoint::Unconstrained)
                    .map_err(|_| bad()),
                None => s.parse().map(Breakpoint::Detected).map_err(|_| bad()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept_log10: f64,
    pub n_used: usize,
}

fn log_points(rows: &[&StdErrRow]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::with_capacity(rows.len());
    let mut ys = Vec::with_capacity(rows.len());
    for r in rows {
        if r.stderr.is_nan() || r.stderr <= 0.0 {
            return Err(Error::Degenerate(format!(
                "standard error {} at N = {}, p = {} has no logarithm",
                r.stderr, r.n, r.p
            )));
        }
        xs.push((r.n as f64).log10());
        ys.push(r.stderr.log10());
    }
    Ok((xs, ys))
}

/// OLS of log10(stderr) on log10(N), using rows with N >= `n_floor`.
pub fn loglog_fit(table: &StdErrTable, label: &str, p: f64, n_floor: usize) -> Result<LogLogFit> {
    let rows: Vec<&StdErrRow> = table
        .series(label, p)
        .into_iter()
        .filter(|r| r.n >= n_floor)
        .collect();
    if rows.len() < 3 {
        return Err(Error::InsufficientPoints {
            what: "log-log fit",
            needed: 3,
            found: rows.len(),
        });
    }
    let (xs, ys) = log_points(&rows)?;
    let line = ols(&xs, &ys).ok_or_else(|| Error::Degenerate("all N values coincide".into()))?;
    Ok(LogLogFit {
        slope: line.slope,
        intercept_log10: line.intercept,
        n_used: rows.len(),
    })
}

pub fn detect_min_sample_size(table: &StdErrTable, label: &str, p: f64) -> Result<Breakpoint> {
    detect_min_sample_size_with(table, label, p, &BreakpointRule::default())
}

/// Smallest N from which every window of `rule.window` consecutive grid
/// points has a local log-log slope within tolerance of the target.
pub fn detect_min_sample_size_with(
    table: &StdErrTable,
    label: &str,
    p: f64,
    rule: &BreakpointRule,
) -> Result<Breakpoint> {
    let rows = table.series(label, p);
    let needed = rule.min_points.max(rule.window);
    if rows.len() < needed {
        return Err(Error::InsufficientSpan(format!(
            "{label} p = {p}: {} sample sizes, need {needed}",
            rows.len()
        )));
    }
    let (n_lo, n_hi) = (rows[0].n, rows[rows.len() - 1].n);
    if (n_hi as f64) < rule.min_span_ratio * n_lo as f64 {
        return Err(Error::InsufficientSpan(format!(
            "{label} p = {p}: N spans {n_lo}..{n_hi}, need a factor of {}",
            rule.min_span_ratio
        )));
    }
    let (xs, ys) = log_points(&rows)?;
    let settled: Vec<bool> = (0..=rows.len() - rule.window)
        .map(|i| {
            let w = i..i + rule.window;
            ols(&xs[w.clone()], &ys[w])
                .is_some_and(|l| (l.slope - rule.target_slope).abs() <= rule.slope_tolerance)
        })
        .collect();
    let trailing = settled.iter().rev().take_while(|&&ok| ok).count();
    Ok(match trailing {
        0 => Breakpoint::NotDetected,
        t if t == settled.len() => Breakpoint::Unconstrained(n_lo),
        t => Breakpoint::Detected(rows[settled.len() - t].n),
    })
}

/// Per-level scaling summary of one distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingResult {
    pub dist: String,
    pub p: f64,
    pub slope: f64,
    pub intercept_log10: f64,
    /// `10^intercept_log10 / sigma`, sigma being the population value.
    pub k: f64,
    pub n_min: Breakpoint,
    pub n_used: usize,
}

/// Fits the scaling law at level `p` and packages K(p) and the breakpoint.
pub fn extract_k(
    table: &StdErrTable,
    spec: &DistributionSpec,
    p: f64,
    n_floor: usize,
) -> Result<ScalingResult> {
    let label = spec.label();
    let fit = loglog_fit(table, &label, p, n_floor)?;
    let sigma = spec.theoretical_sigma()?;
    let n_min = match detect_min_sample_size(table, &label, p) {
        Ok(b) => b,
        Err(Error::InsufficientSpan(_)) => Breakpoint::NotAssessed,
        Err(e) => return Err(e),
    };
    Ok(ScalingResult {
        dist: label,
        p,
        slope: fit.slope,
        intercept_log10: fit.intercept_log10,
        k: 10f64.powf(fit.intercept_log10) / sigma,
        n_min,
        n_used: fit.n_used,
    })
}

/// [`extract_k`] for every distribution and level in the table.
pub fn scaling_results(table: &StdErrTable, n_floor: usize) -> Result<Vec<ScalingResult>> {
    let mut out = Vec::new();
    for spec in table.specs() {
        for p in table.levels(&spec.label()) {
            out.push(extract_k(table, &spec, p, n_floor)?);
        }
    }
    Ok(out)
}

pub const MIN_BOOTSTRAP_SAMPLE: usize = 10;
pub const MIN_BOOTSTRAP_RESAMPLES: usize = 200;

/// Bootstrap standard error of the midpoint-rule quantile at level `p`.
///
/// Resample `b` draws its indices from block `b` of `stream`, so the result
/// does not depend on the worker count.
pub fn bootstrap_stderr(
    sample: &[f64],
    p: f64,
    resamples: usize,
    stream: RngStream,
) -> Result<f64> {
    check_sample(sample)?;
    if sample.len() < MIN_BOOTSTRAP_SAMPLE {
        return Err(Error::InsufficientPoints {
            what: "bootstrap sample",
            needed: MIN_BOOTSTRAP_SAMPLE,
            found: sample.len(),
        });
    }
    if resamples < MIN_BOOTSTRAP_RESAMPLES {
        return Err(Error::InvalidConfig(format!(
            "bootstrap needs at least {MIN_BOOTSTRAP_RESAMPLES} resamples, got {resamples}"
        )));
    }
    if resamples as u64 > u64::from(u32::MAX) {
        return Err(Error::InvalidConfig("too many bootstrap resamples".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfRange {
            what: "p",
            value: p,
            lo: 0.0,
            hi: 1.0,
        });
    }
    if sample.iter().all(|&x| x == sample[0]) {
        log::warn!("bootstrap on a constant sample: standard error is 0");
        return Ok(0.0);
    }
    let n = sample.len();
    let estimates: Vec<f64> = (0..resamples as u32)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, b| {
                let mut rng = stream.rng_at_block(b);
                for slot in buf.iter_mut() {
                    *slot = sample[rand::Rng::random_range(&mut rng, 0..n)];
                }
                sort_sample(buf);
                quantile_sorted(buf, p)
            },
        )
        .collect();
    Ok(sample_std_dev(&estimates))
}
