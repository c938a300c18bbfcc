//! Closed-form standard errors and the empirical K(p) relationships.
//!
//! Two functional forms describe how the scaling coefficient grows into the
//! tails:
//!
//! ```text
//! normal: K(p) = a [ (0.5/p)^b + (0.5/(1-p))^b - 2 ] + c
//! gamma:  K(p) = a (p/(1-p))^b
//! ```
//!
//! with published coefficients (0.881, 0.351, 1.253) and (1.09, 0.47), valid
//! for 0.001 <= p <= 0.999. [`fit_k_form`] re-estimates the coefficients from
//! measured K values by damped Gauss-Newton.

use std::fmt;

use crate::error::{Error, Result};

pub const P_MIN: f64 = 0.001;
pub const P_MAX: f64 = 0.999;

pub const NORMAL_COEFFICIENTS: FitCoefficients = FitCoefficients::Normal {
    a: 0.881,
    b: 0.351,
    c: 1.253,
};
pub const GAMMA_COEFFICIENTS: FitCoefficients = FitCoefficients::Gamma { a: 1.09, b: 0.47 };

fn check_level(p: f64) -> Result<()> {
    // Grid levels such as 999/1000 are exact, but allow for p computed by
    // callers through arithmetic.
    const SLACK: f64 = 1e-12;
    if (P_MIN - SLACK..=P_MAX + SLACK).contains(&p) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "p",
            value: p,
            lo: P_MIN,
            hi: P_MAX,
        })
    }
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    Ok(())
}

/// Standard error of the sample mean, `sigma / sqrt(N)`.
pub fn stderr_mean(sigma: f64, n: usize) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    check_count(n)?;
    Ok(sigma / (n as f64).sqrt())
}

/// Expected standard error of quantile estimates, `K * S / sqrt(N)`.
pub fn stderr_quantile(k: f64, s: f64, n: usize) -> Result<f64> {
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::Domain(format!("K must be non-negative, got {k}")));
    }
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::Domain(format!("S must be positive, got {s}")));
    }
    check_count(n)?;
    Ok(k * s / (n as f64).sqrt())
}

/// Published normal-population K(p).
pub fn k_normal(p: f64) -> Result<f64> {
    check_level(p)?;
    Ok(NORMAL_COEFFICIENTS.eval(p))
}

/// Published gamma-population K(p).
pub fn k_gamma(p: f64) -> Result<f64> {
    check_level(p)?;
    Ok(GAMMA_COEFFICIENTS.eval(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KForm {
    Normal,
    Gamma,
}

impl KForm {
    pub fn parameter_count(self) -> usize {
        match self {
            KForm::Normal => 3,
            KForm::Gamma => 2,
        }
    }

    pub fn published(self) -> FitCoefficients {
        match self {
            KForm::Normal => NORMAL_COEFFICIENTS,
            KForm::Gamma => GAMMA_COEFFICIENTS,
        }
    }

    /// Starting point used when the caller gives none.
    pub fn default_start(self) -> FitCoefficients {
        match self {
            KForm::Normal => FitCoefficients::Normal {
                a: 1.0,
                b: 0.35,
                c: 1.25,
            },
            KForm::Gamma => FitCoefficients::Gamma { a: 1.0, b: 0.5 },
        }
    }

    fn coefficients(self, theta: &[f64]) -> FitCoefficients {
        match self {
            KForm::Normal => FitCoefficients::Normal {
                a: theta[0],
                b: theta[1],
                c: theta[2],
            },
            KForm::Gamma => FitCoefficients::Gamma {
                a: theta[0],
                b: theta[1],
            },
        }
    }
}

impl From<crate::distributions::Family> for KForm {
    fn from(f: crate::distributions::Family) -> Self {
        match f {
            crate::distributions::Family::Normal => KForm::Normal,
            crate::distributions::Family::Gamma => KForm::Gamma,
        }
    }
}

/// Coefficients of one of the two K(p) forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitCoefficients {
    Normal { a: f64, b: f64, c: f64 },
    Gamma { a: f64, b: f64 },
}

impl FitCoefficients {
    pub fn form(&self) -> KForm {
        match self {
            FitCoefficients::Normal { .. } => KForm::Normal,
            FitCoefficients::Gamma { .. } => KForm::Gamma,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            FitCoefficients::Normal { a, b, c } => vec![a, b, c],
            FitCoefficients::Gamma { a, b } => vec![a, b],
        }
    }

    /// `a > 0` and `b > 0`, all finite.
    pub fn is_admissible(&self) -> bool {
        let ps = self.params();
        ps.iter().all(|v| v.is_finite()) && ps[0] > 0.0 && ps[1] > 0.0
    }

    /// K(p) for any p in (0, 1); no validity-range check.
    pub fn eval(&self, p: f64) -> f64 {
        match *self {
            FitCoefficients::Normal { a, b, c } => {
                a * ((0.5 / p).powf(b) + (0.5 / (1.0 - p)).powf(b) - 2.0) + c
            }
            FitCoefficients::Gamma { a, b } => a * (p / (1.0 - p)).powf(b),
        }
    }

    /// Partial derivatives of K(p) with respect to the coefficients, in
    /// [`params`](Self::params) order.
    pub fn gradient(&self, p: f64) -> Vec<f64> {
        match *self {
            FitCoefficients::Normal { a, b, .. } => {
                let (lu, lv) = ((0.5 / p).ln(), (0.5 / (1.0 - p)).ln());
                let (u, v) = ((b * lu).exp(), (b * lv).exp());
                vec![u + v - 2.0, a * (u * lu + v * lv), 1.0]
            }
            FitCoefficients::Gamma { a, b } => {
                let lr = (p / (1.0 - p)).ln();
                let r = (b * lr).exp();
                vec![r, a * r * lr]
            }
        }
    }
}

impl fmt::Display for FitCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FitCoefficients::Normal { a, b, c } => write!(f, "normal(a={a}, b={b}, c={c})"),
            FitCoefficients::Gamma { a, b } => write!(f, "gamma(a={a}, b={b})"),
        }
    }
}

/// Residual space of the least-squares objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitSpace {
    /// Residuals `K_model - K_measured`.
    #[default]
    Linear,
    /// Residuals `ln K_model - ln K_measured`.
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub space: FitSpace,
    pub max_iterations: usize,
    /// Converged once an accepted step lowers the objective by less than
    /// this fraction.
    pub relative_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            space: FitSpace::Linear,
            max_iterations: 200,
            relative_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOutcome {
    pub coefficients: FitCoefficients,
    pub converged: bool,
    pub iterations: usize,
    /// Sum of squared residuals at `coefficients`.
    pub objective: f64,
}

struct Problem<'a> {
    form: KForm,
    points: &'a [(f64, f64)],
    space: FitSpace,
}

impl Problem<'_> {
    /// Objective at `theta`, or `None` if the model is inadmissible there.
    fn objective(&self, theta: &[f64]) -> Option<f64> {
        let coef = self.form.coefficients(theta);
        if !coef.is_admissible() {
            return None;
        }
        let mut ss = 0.0;
        for &(p, k) in self.points {
            let m = coef.eval(p);
            let r = match self.space {
                FitSpace::Linear => m - k,
                FitSpace::Log => {
                    if m <= 0.0 {
                        return None;
                    }
                    m.ln() - k.ln()
                }
            };
            ss += r * r;
        }
        ss.is_finite().then_some(ss)
    }

    /// Gauss-Newton direction solving (J^T J) d = -J^T r.
    fn step(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let dim = theta.len();
        let coef = self.form.coefficients(theta);
        let mut jtj = vec![vec![0.0; dim]; dim];
        let mut jtr = vec![0.0; dim];
        for &(p, k) in self.points {
            let m = coef.eval(p);
            let mut g = coef.gradient(p);
            let r = match self.space {
                FitSpace::Linear => m - k,
                FitSpace::Log => {
                    for gi in &mut g {
                        *gi /= m;
                    }
                    m.ln() - k.ln()
                }
            };
            for i in 0..dim {
                jtr[i] += g[i] * r;
                for j in 0..dim {
                    jtj[i][j] += g[i] * g[j];
                }
            }
        }
        // Equilibrate by the diagonal so the pivot test sees a correlation
        // matrix rather than raw, possibly wildly scaled, entries.
        let d: Vec<f64> = (0..dim).map(|i| jtj[i][i].sqrt()).collect();
        if d.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::SingularJacobian);
        }
        for i in 0..dim {
            for j in 0..dim {
                jtj[i][j] /= d[i] * d[j];
            }
        }
        let rhs: Vec<f64> = (0..dim).map(|i| -jtr[i] / d[i]).collect();
        let y = solve_dense(jtj, rhs).ok_or(Error::SingularJacobian)?;
        Ok(y.iter().zip(&d).map(|(v, s)| v / s).collect())
    }
}

/// Gaussian elimination with partial pivoting. `None` if singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if scale.is_nan() || scale <= 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (t, &s) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *t -= f * s;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

const MAX_HALVINGS: usize = 60;

/// Runs damped Gauss-Newton from `theta`. The bool reports whether the first
/// iteration managed to lower the objective.
fn gauss_newton(
    problem: &Problem<'_>,
    mut theta: Vec<f64>,
    opts: &FitOptions,
) -> Result<(FitOutcome, bool)> {
    let mut obj = problem
        .objective(&theta)
        .ok_or_else(|| Error::Domain("starting coefficients are inadmissible".into()))?;
    let mut converged = false;
    let mut first_step_decreased = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        if obj == 0.0 {
            converged = true;
            break;
        }
        let delta = problem.step(&theta)?;
        iterations += 1;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand: Vec<f64> = theta
                .iter()
                .zip(&delta)
                .map(|(t, d)| t + scale * d)
                .collect();
            if let Some(o) = problem.objective(&cand) {
                if o < obj {
                    accepted = Some((cand, o));
                    break;
                }
            }
            scale *= 0.5;
        }
        let Some((cand, new_obj)) = accepted else {
            // No descent along the Gauss-Newton direction: stationary point.
            converged = true;
            break;
        };
        if iterations == 1 {
            first_step_decreased = true;
        }
        let rel = (obj - new_obj) / obj;
        theta = cand;
        obj = new_obj;
        if rel < opts.relative_tolerance {
            converged = true;
            break;
        }
    }
    Ok((
        FitOutcome {
            coefficients: problem.form.coefficients(&theta),
            converged,
            iterations,
            objective: obj,
        },
        first_step_decreased,
    ))
}

/// Best admissible point of a coarse 5 x 5 (x 5) grid.
fn grid_seed(problem: &Problem<'_>) -> Option<Vec<f64>> {
    const A: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];
    const B: [f64; 5] = [0.1, 0.25, 0.4, 0.6, 0.9];
    const C: [f64; 5] = [0.0, 0.5, 1.0, 1.5, 2.5];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |theta: Vec<f64>| {
        if let Some(o) = problem.objective(&theta) {
            if best.as_ref().is_none_or(|(bo, _)| o < *bo) {
                best = Some((o, theta));
            }
        }
    };
    for a in A {
        for b in B {
            match problem.form {
                KForm::Normal => C.iter().for_each(|&c| consider(vec![a, b, c])),
                KForm::Gamma => consider(vec![a, b]),
            }
        }
    }
    best.map(|(_, t)| t)
}

/// Least-squares fit of a K(p) form to `(p, K_measured)` points.
///
/// Non-convergence within the iteration budget is reported through
/// [`FitOutcome::converged`], not as an error.
pub fn fit_k_form(
    points: &[(f64, f64)],
    form: KForm,
    init: Option<FitCoefficients>,
    opts: &FitOptions,
) -> Result<FitOutcome> {
    let needed = form.parameter_count() + 1;
    if points.len() < needed {
        return Err(Error::InsufficientPoints {
            what: "K(p) fit",
            needed,
            found: points.len(),
        });
    }
    for &(p, k) in points {
        if !(p > 0.0 && p < 1.0) || !k.is_finite() {
            return Err(Error::Domain(format!("invalid fit point ({p}, {k})")));
        }
        if opts.space == FitSpace::Log && k <= 0.0 {
            return Err(Error::Domain(format!(
                "log-space fit needs K > 0, got {k} at p = {p}"
            )));
        }
    }
    let start = init.unwrap_or_else(|| form.default_start());
    if start.form() != form {
        return Err(Error::InvalidConfig(format!(
            "initial coefficients {start} do not match the requested form"
        )));
    }
    let problem = Problem {
        form,
        points,
        space: opts.space,
    };
    let first = gauss_newton(&problem, start.params(), opts);
    if let Ok((outcome, decreased)) = &first {
        if *decreased || outcome.objective == 0.0 {
            return Ok(*outcome);
        }
    }
    let Some(seed) = grid_seed(&problem) else {
        return first.map(|(o, _)| o);
    };
    match (first, gauss_newton(&problem, seed, opts)) {
        (Ok((a, _)), Ok((b, _))) => Ok(if b.objective < a.objective { b } else { a }),
        (Ok((a, _)), Err(_)) => Ok(a),
        (Err(_), Ok((b, _))) => Ok(b),
        (Err(e), Err(_)) => Err(e),
    }
}
