//! Published reference values used for comparison reports and acceptance.

/// Levels tabulated in the reference comparison.
pub const TABLE1_LEVELS: [f64; 10] = [
    0.001, 0.005, 0.01, 0.05, 0.1, 0.90, 0.95, 0.99, 0.995, 0.999,
];

/// Monte Carlo K(p), Normal(0, 1).
pub const TABLE1_NORMAL_NUMERICAL: [f64; 10] =
    [7.82, 4.68, 3.65, 2.10, 1.71, 1.71, 2.10, 3.65, 4.68, 7.82];

/// Normal K(p) from the fitted closed form.
pub const TABLE1_NORMAL_FORMULA: [f64; 10] =
    [7.99, 4.62, 3.66, 2.17, 1.76, 1.76, 2.17, 3.66, 4.62, 7.99];

/// Monte Carlo K(p), Gamma(1, 1).
pub const TABLE1_GAMMA_NUMERICAL: [f64; 10] = [
    0.043, 0.075, 0.10, 0.23, 0.33, 2.99, 4.34, 9.77, 13.61, 27.24,
];

/// Gamma K(p) from the fitted closed form.
pub const TABLE1_GAMMA_FORMULA: [f64; 10] = [
    0.042, 0.091, 0.13, 0.27, 0.39, 3.06, 4.35, 9.45, 13.12, 28.00,
];

/// Decimal places each formula entry is printed with.
pub const TABLE1_NORMAL_FORMULA_DECIMALS: [i32; 10] = [2; 10];
pub const TABLE1_GAMMA_FORMULA_DECIMALS: [i32; 10] = [3, 3, 2, 2, 2, 2, 2, 2, 2, 2];

/// Approximate minimum sample size for the 1% / 99% levels.
pub const BREAKPOINT_TAIL_1PCT: usize = 55;
/// Approximate minimum sample size for the 0.1% / 99.9% levels.
pub const BREAKPOINT_TAIL_01PCT: usize = 550;

/// Asymptotic standard error factor of the normal sample median, sqrt(pi/2).
pub const MEDIAN_FACTOR: f64 = 1.253;
