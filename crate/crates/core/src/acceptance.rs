//! Desk-scale acceptance suite.
//!
//! [`Context::desk`] runs the standard normal and standard gamma sweeps once
//! (24 sample sizes, R = 15 000); each criterion then reads from it. The
//! tolerances below are fixed and are not configurable.

use std::fmt;
use std::time::{Duration, Instant};

use crate::analysis::{
    bootstrap_stderr, detect_min_sample_size, loglog_fit, scaling_results, Breakpoint,
    ScalingResult, DEFAULT_N_FLOOR,
};
use crate::distributions::{make_stream, sample, DistributionSpec, Family};
use crate::error::Result;
use crate::formulas::{fit_k_form, k_gamma, k_normal, FitCoefficients, FitOptions, KForm};
use crate::io::report::table1_rows;
use crate::io::tables::stderr_table_to_string;
use crate::mc_engine::{
    stderr_for_size, sweep, sweep_with_workers, McConfig, StdErrTable, DEFAULT_MASTER_SEED,
};
use crate::quantile::QuantileGrid;
use crate::reference::*;
use crate::stats::sample_std_dev;

pub const TOL_TABLE1_NORMAL: f64 = 0.05;
pub const TOL_TABLE1_GAMMA: f64 = 0.08;
pub const SLOPE_BAND: (f64, f64) = (-0.53, -0.47);
pub const BREAKPOINT_BAND_1PCT: (usize, usize) = (40, 80);
pub const BREAKPOINT_BAND_01PCT: (usize, usize) = (400, 700);
pub const MEDIAN_BAND: (f64, f64) = (1.23, 1.28);
pub const FIT_TOLERANCE: f64 = 0.10;
pub const NOISELESS_FIT_TOLERANCE: f64 = 1e-6;
pub const BOOTSTRAP_BAND: (f64, f64) = (0.85, 1.15);
pub const LOW_GAMMA_MARGIN: f64 = 0.03;
/// Worker count of the second sweep in the determinism check.
pub const ALT_WORKERS: usize = 4;

// Sweep points of the standalone draws; disjoint from grid indices.
const MEDIAN_SWEEP_POINT: u32 = 1 << 20;
const BOOT_SAMPLE_SWEEP_POINT: u32 = (1 << 20) + 1;
const BOOT_RESAMPLE_SWEEP_POINT: u32 = (1 << 20) + 2;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "[{tag}] criterion {:>2}: {} | {}",
            self.id, self.title, self.detail
        )
    }
}

fn outcome(id: u8, title: &'static str, passed: bool, detail: String) -> CriterionOutcome {
    CriterionOutcome {
        id,
        title,
        passed,
        detail,
    }
}

fn error_outcome(id: u8, title: &'static str, e: crate::Error) -> CriterionOutcome {
    outcome(id, title, false, format!("error: {e}"))
}

/// Sweeps shared by the criteria.
pub struct Context {
    pub normal_config: McConfig,
    pub normal: StdErrTable,
    pub gamma: StdErrTable,
    pub scaling: Vec<ScalingResult>,
    pub normal_sweep_time: Duration,
}

impl Context {
    /// Desk grid, R = 15 000, default seed.
    pub fn desk() -> Result<Self> {
        Self::with_seed(DEFAULT_MASTER_SEED)
    }

    pub fn with_seed(seed: u64) -> Result<Self> {
        let mut normal_config = McConfig::desk(DistributionSpec::standard_normal());
        normal_config.master_seed = seed;
        let mut gamma_config = McConfig::desk(DistributionSpec::standard_gamma());
        gamma_config.master_seed = seed;
        Self::from_configs(normal_config, gamma_config)
    }

    pub fn from_configs(normal_config: McConfig, gamma_config: McConfig) -> Result<Self> {
        let t0 = Instant::now();
        let normal = sweep(&normal_config)?;
        let normal_sweep_time = t0.elapsed();
        let gamma = sweep(&gamma_config)?;
        let mut scaling = scaling_results(&normal, DEFAULT_N_FLOOR)?;
        scaling.extend(scaling_results(&gamma, DEFAULT_N_FLOOR)?);
        Ok(Context {
            normal_config,
            normal,
            gamma,
            scaling,
            normal_sweep_time,
        })
    }

    fn measured(&self, label: &str) -> Vec<(f64, f64)> {
        self.scaling
            .iter()
            .filter(|r| r.dist == label)
            .map(|r| (r.p, r.k))
            .collect()
    }
}

fn table1_check(ctx: &Context, id: u8, family: Family, tol: f64) -> CriterionOutcome {
    let title = match family {
        Family::Normal => "Table 1 normal K within 5%",
        Family::Gamma => "Table 1 gamma K within 8%",
    };
    let rows = match table1_rows(&ctx.scaling) {
        Ok(r) => r,
        Err(e) => return error_outcome(id, title, e),
    };
    let rows: Vec<_> = rows.into_iter().filter(|r| r.family == family).collect();
    let worst = rows
        .iter()
        .max_by(|a, b| {
            a.numerical_deviation()
                .abs()
                .total_cmp(&b.numerical_deviation().abs())
        })
        .expect("ten rows");
    let outside = rows
        .iter()
        .filter(|r| r.numerical_deviation().abs() > tol)
        .count();
    let listing: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{}:{:.4}({:+.1}%)",
                r.p,
                r.k_numerical,
                100.0 * r.numerical_deviation()
            )
        })
        .collect();
    outcome(
        id,
        title,
        outside == 0,
        format!(
            "{outside}/10 outside, worst p={} {:+.1}%; {}",
            worst.p,
            100.0 * worst.numerical_deviation(),
            listing.join(" ")
        ),
    )
}

/// Criterion 1: measured normal K at the ten tabulated levels.
pub fn criterion_1(ctx: &Context) -> CriterionOutcome {
    table1_check(ctx, 1, Family::Normal, TOL_TABLE1_NORMAL)
}

/// Criterion 2: measured gamma K at the ten tabulated levels.
pub fn criterion_2(ctx: &Context) -> CriterionOutcome {
    table1_check(ctx, 2, Family::Gamma, TOL_TABLE1_GAMMA)
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let m = 10f64.powi(decimals);
    (x * m).round() / m
}

/// Criterion 3: closed forms reproduce the printed formula columns.
pub fn criterion_3() -> CriterionOutcome {
    let title = "closed forms match printed formula columns";
    let mut mismatches = Vec::new();
    for (i, &p) in TABLE1_LEVELS.iter().enumerate() {
        let checks = [
            (
                "normal",
                k_normal(p),
                TABLE1_NORMAL_FORMULA[i],
                TABLE1_NORMAL_FORMULA_DECIMALS[i],
            ),
            (
                "gamma",
                k_gamma(p),
                TABLE1_GAMMA_FORMULA[i],
                TABLE1_GAMMA_FORMULA_DECIMALS[i],
            ),
        ];
        for (name, k, printed, d) in checks {
            match k {
                Ok(k) if round_to(k, d) == round_to(printed, d) => {}
                Ok(k) => mismatches.push(format!("{name} p={p}: {k:.4} vs {printed}")),
                Err(e) => mismatches.push(format!("{name} p={p}: {e}")),
            }
        }
    }
    let detail = if mismatches.is_empty() {
        "20/20 entries equal at printed precision".to_string()
    } else {
        mismatches.join("; ")
    };
    outcome(3, title, mismatches.is_empty(), detail)
}

/// Criterion 4: normal log-log slopes over N >= 3000.
pub fn criterion_4(ctx: &Context) -> CriterionOutcome {
    let title = "normal slope in [-0.53, -0.47] for p = 0.1, 0.5, 0.9";
    let label = DistributionSpec::standard_normal().label();
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [0.1, 0.5, 0.9] {
        match loglog_fit(&ctx.normal, &label, p, DEFAULT_N_FLOOR) {
            Ok(f) => {
                ok &= (SLOPE_BAND.0..=SLOPE_BAND.1).contains(&f.slope);
                parts.push(format!("p={p}: {:.4}", f.slope));
            }
            Err(e) => return error_outcome(4, title, e),
        }
    }
    outcome(4, title, ok, parts.join(", "))
}

/// Criterion 5: breakpoints of the normal 0.99 and 0.999 levels.
pub fn criterion_5(ctx: &Context) -> CriterionOutcome {
    let title = "normal breakpoints p=0.99 in [40,80], p=0.999 in [400,700]";
    let label = DistributionSpec::standard_normal().label();
    let mut ok = true;
    let mut parts = Vec::new();
    for (p, band) in [(0.99, BREAKPOINT_BAND_1PCT), (0.999, BREAKPOINT_BAND_01PCT)] {
        match detect_min_sample_size(&ctx.normal, &label, p) {
            Ok(b) => {
                ok &= matches!(b, Breakpoint::Detected(n) if (band.0..=band.1).contains(&n));
                parts.push(format!("p={p}: {b}"));
            }
            Err(e) => return error_outcome(5, title, e),
        }
    }
    outcome(5, title, ok, parts.join(", "))
}

/// Criterion 6: normal median stderr times sqrt(N) at N = 5000.
pub fn criterion_6(ctx: &Context) -> CriterionOutcome {
    let title = "normal median stderr*sqrt(5000) in [1.23, 1.28]";
    let c = &ctx.normal_config;
    let grid = QuantileGrid::single(0.5).expect("valid level");
    match stderr_for_size(
        &c.spec,
        5000,
        &grid,
        c.replicates,
        c.master_seed,
        MEDIAN_SWEEP_POINT,
    ) {
        Ok(rows) => {
            let factor = rows[0].stderr * 5000f64.sqrt();
            outcome(
                6,
                title,
                (MEDIAN_BAND.0..=MEDIAN_BAND.1).contains(&factor),
                format!("{factor:.4} (sqrt(pi/2) = {MEDIAN_FACTOR})"),
            )
        }
        Err(e) => error_outcome(6, title, e),
    }
}

fn relative_errors(got: &FitCoefficients, want: &FitCoefficients) -> Vec<f64> {
    got.params()
        .iter()
        .zip(want.params())
        .map(|(g, w)| (g - w) / w)
        .collect()
}

fn fit_check(
    points: &[(f64, f64)],
    form: KForm,
    tol: f64,
) -> std::result::Result<(bool, String), crate::Error> {
    let fit = fit_k_form(points, form, None, &FitOptions::default())?;
    let rel = relative_errors(&fit.coefficients, &form.published());
    let ok = rel.iter().all(|r| r.abs() <= tol);
    let rel: Vec<String> = rel.iter().map(|r| format!("{:+.2e}", r)).collect();
    Ok((ok, format!("{} (rel {})", fit.coefficients, rel.join(","))))
}

/// Criterion 7: coefficient recovery from measured and noiseless K.
pub fn criterion_7(ctx: &Context) -> CriterionOutcome {
    let title = "fit recovers published coefficients";
    let mut ok = true;
    let mut parts = Vec::new();
    for (form, spec) in [
        (KForm::Normal, DistributionSpec::standard_normal()),
        (KForm::Gamma, DistributionSpec::standard_gamma()),
    ] {
        let measured = ctx.measured(&spec.label());
        let levels: Vec<f64> = measured.iter().map(|m| m.0).collect();
        let published = form.published();
        let noiseless: Vec<(f64, f64)> = levels.iter().map(|&p| (p, published.eval(p))).collect();
        for (kind, pts, tol) in [
            ("measured", &measured, FIT_TOLERANCE),
            ("noiseless", &noiseless, NOISELESS_FIT_TOLERANCE),
        ] {
            match fit_check(pts, form, tol) {
                Ok((pass, d)) => {
                    ok &= pass;
                    parts.push(format!("{} {kind}: {d}", spec.family()));
                }
                Err(e) => return error_outcome(7, title, e),
            }
        }
    }
    outcome(7, title, ok, parts.join("; "))
}

/// Criterion 8: a second normal sweep on a different worker count gives an
/// identical CSV.
pub fn criterion_8(ctx: &Context) -> CriterionOutcome {
    let title = "sweep CSV identical across worker counts";
    let t0 = Instant::now();
    let again = match sweep_with_workers(&ctx.normal_config, ALT_WORKERS) {
        Ok(t) => t,
        Err(e) => return error_outcome(8, title, e),
    };
    let elapsed = t0.elapsed();
    let (a, b) = match (
        stderr_table_to_string(&ctx.normal),
        stderr_table_to_string(&again),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return error_outcome(8, title, e),
    };
    let identical = a == b;
    let in_time = elapsed.as_secs_f64() <= 2.0 * ctx.normal_sweep_time.as_secs_f64().max(1.0);
    outcome(
        8,
        title,
        identical && in_time,
        format!(
            "{} bytes, {} with {ALT_WORKERS} workers vs {} on the default pool; rerun {:.1}s, first {:.1}s",
            a.len(),
            if identical { "identical" } else { "DIFFERENT" },
            rayon::current_num_threads(),
            elapsed.as_secs_f64(),
            ctx.normal_sweep_time.as_secs_f64()
        ),
    )
}

/// Criterion 9: bootstrap standard error agrees with the closed form.
pub fn criterion_9(seed: u64) -> CriterionOutcome {
    let title = "bootstrap/closed-form ratio in [0.85, 1.15]";
    let (n, b, p) = (2000, 2000, 0.9);
    let k = k_normal(p).expect("valid level");
    let mut ratios = Vec::with_capacity(20);
    for i in 0..20u32 {
        let stream = make_stream(seed, BOOT_SAMPLE_SWEEP_POINT, i);
        let x = match sample(&DistributionSpec::standard_normal(), n, stream) {
            Ok(x) => x,
            Err(e) => return error_outcome(9, title, e),
        };
        let predicted = k * sample_std_dev(&x) / (n as f64).sqrt();
        match bootstrap_stderr(&x, p, b, make_stream(seed, BOOT_RESAMPLE_SWEEP_POINT, i)) {
            Ok(se) => ratios.push(se / predicted),
            Err(e) => return error_outcome(9, title, e),
        }
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    outcome(
        9,
        title,
        (BOOTSTRAP_BAND.0..=BOOTSTRAP_BAND.1).contains(&mean),
        format!("mean ratio {mean:.4} over 20 samples (N=2000, B=2000, p=0.9)"),
    )
}

/// Criterion 10: gamma 0.001 quantile error falls faster than N^-1/2.
pub fn criterion_10(ctx: &Context) -> CriterionOutcome {
    let title = "gamma p=0.001 slope below -0.53 over full grid";
    match loglog_fit(
        &ctx.gamma,
        &DistributionSpec::standard_gamma().label(),
        0.001,
        0,
    ) {
        Ok(f) => outcome(
            10,
            title,
            f.slope < -0.5 - LOW_GAMMA_MARGIN,
            format!("slope {:.4} over {} sizes", f.slope, f.n_used),
        ),
        Err(e) => error_outcome(10, title, e),
    }
}

/// Every criterion, in order.
pub fn run_all(ctx: &Context) -> Vec<CriterionOutcome> {
    vec![
        criterion_1(ctx),
        criterion_2(ctx),
        criterion_3(),
        criterion_4(ctx),
        criterion_5(ctx),
        criterion_6(ctx),
        criterion_7(ctx),
        criterion_8(ctx),
        criterion_9(ctx.normal_config.master_seed),
        criterion_10(ctx),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_criterion_passes() {
        let c = criterion_3();
        assert!(c.passed, "{c}");
    }

    #[test]
    fn outcome_line_format() {
        let c = outcome(4, "x", false, "y".into());
        assert_eq!(c.to_string(), "[FAIL] criterion  4: x | y");
    }
}
