//! Side-by-side comparison of measured K(p) against the published table.

use std::fmt::Write as _;

use crate::analysis::ScalingResult;
use crate::distributions::{DistributionSpec, Family};
use crate::error::{Error, Result};
use crate::formulas::FitCoefficients;
use crate::reference::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Row {
    pub family: Family,
    pub p: f64,
    pub k_numerical: f64,
    pub k_formula: f64,
    pub published_numerical: f64,
    pub published_formula: f64,
}

impl Table1Row {
    /// `(k_numerical - published_numerical) / published_numerical`.
    pub fn numerical_deviation(&self) -> f64 {
        (self.k_numerical - self.published_numerical) / self.published_numerical
    }

    /// `(k_formula - published_formula) / published_formula`.
    pub fn formula_deviation(&self) -> f64 {
        (self.k_formula - self.published_formula) / self.published_formula
    }
}

fn lookup(results: &[ScalingResult], label: &str, p: f64) -> Result<f64> {
    results
        .iter()
        .find(|r| r.dist == label && (r.p - p).abs() < 1e-12)
        .map(|r| r.k)
        .ok_or(Error::MissingLevel(p))
}

/// Rows for the ten tabulated levels of both standard distributions, normal
/// first. Results for other distributions are ignored.
pub fn table1_rows(results: &[ScalingResult]) -> Result<Vec<Table1Row>> {
    let blocks = [
        (
            Family::Normal,
            DistributionSpec::standard_normal().label(),
            crate::formulas::NORMAL_COEFFICIENTS,
            TABLE1_NORMAL_NUMERICAL,
            TABLE1_NORMAL_FORMULA,
        ),
        (
            Family::Gamma,
            DistributionSpec::standard_gamma().label(),
            crate::formulas::GAMMA_COEFFICIENTS,
            TABLE1_GAMMA_NUMERICAL,
            TABLE1_GAMMA_FORMULA,
        ),
    ];
    let mut rows = Vec::with_capacity(20);
    for (family, label, coef, numerical, formula) in blocks {
        for (i, &p) in TABLE1_LEVELS.iter().enumerate() {
            rows.push(Table1Row {
                family,
                p,
                k_numerical: lookup(results, &label, p)?,
                k_formula: FitCoefficients::eval(&coef, p),
                published_numerical: numerical[i],
                published_formula: formula[i],
            });
        }
    }
    Ok(rows)
}

/// True when every measured K lies within the family's relative tolerance
/// of the published Monte Carlo value.
pub fn table1_within(rows: &[Table1Row], tol_normal: f64, tol_gamma: f64) -> bool {
    rows.iter().all(|r| {
        let tol = match r.family {
            Family::Normal => tol_normal,
            Family::Gamma => tol_gamma,
        };
        r.numerical_deviation().abs() <= tol
    })
}

pub fn table1_csv(rows: &[Table1Row]) -> String {
    let mut s = String::from(
        "family,p,K_numerical,K_formula,published_numerical,published_formula,rel_dev_numerical,rel_dev_formula\n",
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.family,
            r.p,
            r.k_numerical,
            r.k_formula,
            r.published_numerical,
            r.published_formula,
            r.numerical_deviation(),
            r.formula_deviation()
        );
    }
    s
}

pub fn table1_text(rows: &[Table1Row], tol_normal: f64, tol_gamma: f64) -> String {
    let mut s = String::new();
    for family in [Family::Normal, Family::Gamma] {
        let tol = if family == Family::Normal {
            tol_normal
        } else {
            tol_gamma
        };
        let _ = writeln!(
            s,
            "{family} (standard parameters), tolerance {:.0}%",
            tol * 100.0
        );
        let _ = writeln!(
            s,
            "  {:>6}  {:>10}  {:>10}  {:>8}  {:>8}  {:>8}  {:>8}",
            "p", "K_meas", "K_formula", "pub_MC", "pub_frm", "dev_MC", "dev_frm"
        );
        for r in rows.iter().filter(|r| r.family == family) {
            let flag = if r.numerical_deviation().abs() <= tol {
                ""
            } else {
                "  <-- outside"
            };
            let _ = writeln!(
                s,
                "  {:>6}  {:>10.4}  {:>10.4}  {:>8}  {:>8}  {:>7.1}%  {:>7.1}%{flag}",
                r.p,
                r.k_numerical,
                r.k_formula,
                r.published_numerical,
                r.published_formula,
                100.0 * r.numerical_deviation(),
                100.0 * r.formula_deviation()
            );
        }
        s.push('\n');
    }
    s
}
