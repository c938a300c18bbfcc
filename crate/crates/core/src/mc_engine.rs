//! Monte Carlo estimation of quantile standard errors.
//!
//! For each sample size `N` the engine draws `R` independent samples, reduces
//! every sample to its grid quantiles and its standard deviation, and keeps
//! only running moments of those reductions. The standard deviation of the
//! `R` quantile estimates at level `p` is the standard error `s_qp`.
//!
//! Replicates are split into fixed chunks of [`CHUNK_REPLICATES`]. Chunks may
//! run on any worker; their accumulators are merged in chunk order, so the
//! output is bit-identical for every worker count.

use rayon::prelude::*;

use crate::distributions::{make_stream, DistributionSpec, STREAM_INDEX_CAP};
use crate::error::{Error, Result};
use crate::quantile::{quantiles_sorted_into, sort_sample, QuantileGrid};
use crate::stats::{sample_std_dev, RunningStats};

pub const DEFAULT_REPLICATES: usize = 15_000;
pub const DEFAULT_MASTER_SEED: u64 = 20_140_101;
pub const MIN_SAMPLE_SIZE: usize = 10;
pub const CHUNK_REPLICATES: usize = 128;

/// Log-spaced sample sizes from 10 to 8000, dense enough at small N to
/// locate tail breakpoints and with seven points at N >= 3000 for the
/// scaling fit.
pub const DESK_N_GRID: [usize; 24] = [
    10, 14, 20, 28, 40, 55, 80, 110, 160, 220, 320, 450, 640, 900, 1300, 1800, 2500, 3000, 3600,
    4300, 5200, 6200, 7400, 8000,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NGridMode {
    /// Every N from 10 to 8000.
    PaperFull,
    /// [`DESK_N_GRID`].
    Desk,
}

impl std::str::FromStr for NGridMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "paper_full" => Ok(NGridMode::PaperFull),
            "desk" => Ok(NGridMode::Desk),
            other => Err(Error::InvalidConfig(format!(
                "unknown n_grid mode `{other}`"
            ))),
        }
    }
}

pub fn default_n_grid(mode: NGridMode) -> Vec<usize> {
    match mode {
        NGridMode::PaperFull => (10..=8000).collect(),
        NGridMode::Desk => DESK_N_GRID.to_vec(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub spec: DistributionSpec,
    pub replicates: usize,
    pub n_grid: Vec<usize>,
    pub grid: QuantileGrid,
    pub master_seed: u64,
}

impl McConfig {
    /// Desk grid, 15 000 replicates, full quantile grid, default seed.
    pub fn desk(spec: DistributionSpec) -> Self {
        McConfig {
            spec,
            replicates: DEFAULT_REPLICATES,
            n_grid: default_n_grid(NGridMode::Desk),
            grid: QuantileGrid::standard(),
            master_seed: DEFAULT_MASTER_SEED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        validate_replicates(self.replicates)?;
        if self.n_grid.is_empty() {
            return Err(Error::InvalidConfig("n_grid is empty".into()));
        }
        for (i, &n) in self.n_grid.iter().enumerate() {
            validate_size(n)?;
            if i > 0 && self.n_grid[i - 1] >= n {
                return Err(Error::InvalidConfig(format!(
                    "n_grid must be strictly increasing: {} then {n}",
                    self.n_grid[i - 1]
                )));
            }
        }
        if self.n_grid.len() as u64 > STREAM_INDEX_CAP {
            return Err(Error::InvalidConfig(
                "n_grid exceeds 2^32 sweep points".into(),
            ));
        }
        Ok(())
    }
}

fn validate_replicates(r: usize) -> Result<()> {
    if r < 2 {
        return Err(Error::InvalidConfig(format!(
            "replicates must be at least 2, got {r}"
        )));
    }
    if r as u64 > STREAM_INDEX_CAP {
        return Err(Error::InvalidConfig("replicates exceed 2^32".into()));
    }
    Ok(())
}

fn validate_size(n: usize) -> Result<()> {
    if n < MIN_SAMPLE_SIZE {
        return Err(Error::InvalidConfig(format!(
            "sample size must be at least {MIN_SAMPLE_SIZE}, got {n}"
        )));
    }
    Ok(())
}

/// One (distribution, N, p) cell of the standard-error table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdErrRow {
    pub spec: DistributionSpec,
    pub n: usize,
    pub p: f64,
    /// Standard deviation (divisor R - 1) of the R quantile estimates.
    pub stderr: f64,
    /// Mean of the R quantile estimates.
    pub mean_estimate: f64,
    /// Mean over replicates of the per-sample standard deviation
    /// (divisor N - 1); shared by every row with the same (spec, N).
    pub s_bar: f64,
}

/// Standard errors keyed by (distribution label, N, p), sorted by that key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StdErrTable {
    rows: Vec<StdErrRow>,
}

impl StdErrTable {
    /// Builds a table, sorting rows and rejecting duplicate keys.
    pub fn from_rows(mut rows: Vec<StdErrRow>) -> Result<Self> {
        let mut keyed: Vec<(String, StdErrRow)> =
            rows.drain(..).map(|r| (r.spec.label(), r)).collect();
        keyed.sort_by(|(la, a), (lb, b)| la.cmp(lb).then(a.n.cmp(&b.n)).then(a.p.total_cmp(&b.p)));
        for w in keyed.windows(2) {
            let (la, a) = &w[0];
            let (lb, b) = &w[1];
            if la == lb && a.n == b.n && a.p == b.p {
                return Err(Error::InvalidConfig(format!(
                    "duplicate table row for {la}, N = {}, p = {}",
                    a.n, a.p
                )));
            }
        }
        Ok(StdErrTable {
            rows: keyed.into_iter().map(|(_, r)| r).collect(),
        })
    }

    pub fn rows(&self) -> &[StdErrRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distinct distributions, in table order.
    pub fn specs(&self) -> Vec<DistributionSpec> {
        let mut out: Vec<DistributionSpec> = Vec::new();
        for r in &self.rows {
            if out.last() != Some(&r.spec) && !out.contains(&r.spec) {
                out.push(r.spec);
            }
        }
        out
    }

    pub fn spec_by_label(&self, label: &str) -> Option<DistributionSpec> {
        self.rows
            .iter()
            .find(|r| r.spec.label() == label)
            .map(|r| r.spec)
    }

    /// Distinct levels recorded for `label`, ascending.
    pub fn levels(&self, label: &str) -> Vec<f64> {
        let mut ps: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.spec.label() == label)
            .map(|r| r.p)
            .collect();
        ps.sort_by(f64::total_cmp);
        ps.dedup();
        ps
    }

    /// `(N, row)` pairs for one distribution and level, ascending in N.
    pub fn series(&self, label: &str, p: f64) -> Vec<&StdErrRow> {
        self.rows
            .iter()
            .filter(|r| (r.p - p).abs() < 1e-12 && r.spec.label() == label)
            .collect()
    }

    pub fn concat(tables: impl IntoIterator<Item = StdErrTable>) -> Result<Self> {
        Self::from_rows(tables.into_iter().flat_map(|t| t.rows).collect())
    }
}

/// Per-chunk accumulators: one per grid level, then one for sample S.
fn run_chunk(
    sampler: &crate::distributions::Sampler,
    n: usize,
    grid: &QuantileGrid,
    master_seed: u64,
    sweep_point: u32,
    replicates: std::ops::Range<usize>,
) -> Vec<RunningStats> {
    let levels = grid.len();
    let mut acc = vec![RunningStats::new(); levels + 1];
    let mut buf = vec![0.0; n];
    let mut estimates = vec![0.0; levels];
    for r in replicates {
        let mut rng = make_stream(master_seed, sweep_point, r as u32).rng();
        sampler.fill(&mut rng, &mut buf);
        acc[levels].push(sample_std_dev(&buf));
        sort_sample(&mut buf);
        quantiles_sorted_into(&buf, grid, &mut estimates);
        for (a, &q) in acc.iter_mut().zip(&estimates) {
            a.push(q);
        }
    }
    acc
}

/// Standard errors at every grid level for one sample size.
pub fn stderr_for_size(
    spec: &DistributionSpec,
    n: usize,
    grid: &QuantileGrid,
    replicates: usize,
    master_seed: u64,
    sweep_point: u32,
) -> Result<Vec<StdErrRow>> {
    validate_size(n)?;
    validate_replicates(replicates)?;
    let sampler = spec.sampler()?;
    let chunks = replicates.div_ceil(CHUNK_REPLICATES);
    let partials: Vec<Vec<RunningStats>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK_REPLICATES;
            let end = (start + CHUNK_REPLICATES).min(replicates);
            run_chunk(&sampler, n, grid, master_seed, sweep_point, start..end)
        })
        .collect();

    let mut total = vec![RunningStats::new(); grid.len() + 1];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    let s_bar = total[grid.len()].mean();
    Ok(grid
        .levels()
        .iter()
        .zip(&total)
        .map(|(&p, acc)| StdErrRow {
            spec: *spec,
            n,
            p,
            stderr: acc.std_dev(),
            mean_estimate: acc.mean(),
            s_bar,
        })
        .collect())
}

/// Runs every N of the configured grid on the current rayon pool.
pub fn sweep(config: &McConfig) -> Result<StdErrTable> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.n_grid.len() * config.grid.len());
    for (j, &n) in config.n_grid.iter().enumerate() {
        log::debug!(
            "{}: N = {n} ({}/{})",
            config.spec,
            j + 1,
            config.n_grid.len()
        );
        rows.extend(stderr_for_size(
            &config.spec,
            n,
            &config.grid,
            config.replicates,
            config.master_seed,
            j as u32,
        )?);
    }
    StdErrTable::from_rows(rows)
}

/// [`sweep`] on a dedicated pool of `workers` threads.
pub fn sweep_with_workers(config: &McConfig, workers: usize) -> Result<StdErrTable> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))?;
    pool.install(|| sweep(config))
}
