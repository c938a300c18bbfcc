#![allow(dead_code)]

use quantile_stderr::{DistributionSpec, StdErrRow, StdErrTable};

/// Exact standard deviation of the midpoint-rule quantile of an Exp(1)
/// sample of size `n`, from the representation
/// X(k) = sum_{i <= k} E_i / (n - i + 1) with independent unit exponentials.
pub fn exponential_quantile_sd(n: usize, p: f64) -> f64 {
    let rank = p * n as f64 + 0.5;
    let (lo, hi, w) = if rank <= 1.0 {
        (1, 1, 0.0)
    } else if rank >= n as f64 {
        (n, n, 0.0)
    } else {
        let lo = rank.floor() as usize;
        (lo, lo + 1, rank - lo as f64)
    };
    (1..=hi)
        .map(|i| {
            let c = 1.0 / (n - i + 1) as f64;
            let weight = if i <= lo { 1.0 } else { w };
            (weight * c).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// Table of exact Exp(1) standard errors.
pub fn exact_gamma_table(ns: &[usize], levels: &[f64]) -> StdErrTable {
    let spec = DistributionSpec::standard_gamma();
    let rows = ns
        .iter()
        .flat_map(|&n| {
            levels.iter().map(move |&p| StdErrRow {
                spec,
                n,
                p,
                stderr: exponential_quantile_sd(n, p),
                mean_estimate: 0.0,
                s_bar: 1.0,
            })
        })
        .collect();
    StdErrTable::from_rows(rows).unwrap()
}

/// Table with stderr = c / sqrt(N) exactly.
pub fn power_law_table(
    spec: DistributionSpec,
    ns: &[usize],
    levels: &[f64],
    c: f64,
) -> StdErrTable {
    let rows = ns
        .iter()
        .flat_map(|&n| {
            levels.iter().map(move |&p| StdErrRow {
                spec,
                n,
                p,
                stderr: c / (n as f64).sqrt(),
                mean_estimate: 0.0,
                s_bar: 1.0,
            })
        })
        .collect();
    StdErrTable::from_rows(rows).unwrap()
}
