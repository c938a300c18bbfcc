//! Sample quantiles under the midpoint cumulative-probability rule.
//!
//! Order statistic `x(k)` of a sorted sample of size `N` is placed at
//! probability `(k - 0.5) / N`. Levels between two such positions are
//! linearly interpolated; levels below the first or above the last clamp to
//! the sample minimum or maximum. This is Hyndman & Fan type 5 (Hazen).

use crate::error::{Error, Result};

/// Probability levels, strictly increasing, each in (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileGrid {
    levels: Vec<f64>,
}

/// Levels of the standard grid in thousandths: five arithmetic runs
/// 0.001..0.009, 0.01..0.09, 0.1..0.9, 0.91..0.99, 0.991..0.999.
fn standard_grid_thousandths() -> impl Iterator<Item = u32> {
    (1..=9)
        .chain((10..=90).step_by(10))
        .chain((100..=900).step_by(100))
        .chain((910..=990).step_by(10))
        .chain(991..=999)
}

impl QuantileGrid {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidGrid("grid has no levels".into()));
        }
        for (i, &p) in levels.iter().enumerate() {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidGrid(format!(
                    "level {p} at index {i} is not in (0, 1)"
                )));
            }
            if i > 0 && levels[i - 1] >= p {
                return Err(Error::InvalidGrid(format!(
                    "levels must be strictly increasing: {} then {p}",
                    levels[i - 1]
                )));
            }
        }
        Ok(QuantileGrid { levels })
    }

    /// The 45-level grid dense in both tails.
    pub fn standard() -> Self {
        QuantileGrid {
            levels: standard_grid_thousandths()
                .map(|m| f64::from(m) / 1000.0)
                .collect(),
        }
    }

    pub fn single(p: f64) -> Result<Self> {
        Self::new(vec![p])
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Index of the level equal to `p` (to within 1e-12).
    pub fn position(&self, p: f64) -> Option<usize> {
        self.levels.iter().position(|&q| (q - p).abs() < 1e-12)
    }
}

impl Default for QuantileGrid {
    fn default() -> Self {
        Self::standard()
    }
}

/// Midpoint-rule quantile of an ascending-sorted, non-empty slice.
#[inline]
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    // 1-based fractional rank of level p.
    let rank = p * n as f64 + 0.5;
    if rank <= 1.0 {
        return sorted[0];
    }
    if rank >= n as f64 {
        return sorted[n - 1];
    }
    let k = rank.floor();
    let frac = rank - k;
    let lo = sorted[k as usize - 1];
    let hi = sorted[k as usize];
    // Clamping keeps rounding from stepping outside the bracket, which
    // preserves monotonicity across levels.
    (lo + (hi - lo) * frac).clamp(lo, hi)
}

/// Writes one estimate per grid level into `out`.
pub fn quantiles_sorted_into(sorted: &[f64], grid: &QuantileGrid, out: &mut [f64]) {
    for (slot, &p) in out.iter_mut().zip(grid.levels()) {
        *slot = quantile_sorted(sorted, p);
    }
}

pub(crate) fn check_sample(sample: &[f64]) -> Result<()> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(i) = sample.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteSample(i));
    }
    Ok(())
}

/// Sorts `sample` in place, ascending.
pub fn sort_sample(sample: &mut [f64]) {
    sample.sort_unstable_by(f64::total_cmp);
}

/// Quantile estimates at every grid level. The sample is sorted once.
pub fn estimate_quantiles(sample: &[f64], grid: &QuantileGrid) -> Result<Vec<f64>> {
    check_sample(sample)?;
    let mut sorted = sample.to_vec();
    sort_sample(&mut sorted);
    let mut out = vec![0.0; grid.len()];
    quantiles_sorted_into(&sorted, grid, &mut out);
    Ok(out)
}

/// Single-level convenience wrapper around [`estimate_quantiles`].
pub fn estimate_quantile(sample: &[f64], p: f64) -> Result<f64> {
    let grid = QuantileGrid::single(p)?;
    Ok(estimate_quantiles(sample, &grid)?[0])
}
