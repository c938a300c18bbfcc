//! Population distributions and reproducible random streams.
//!
//! Every random draw in the crate comes from an [`RngStream`]: a ChaCha8
//! keystream keyed by a master seed and addressed by a 64-bit stream id. A
//! stream can be materialised on any thread, in any order, and always yields
//! the same sequence, which is what lets the Monte Carlo sweep run in
//! parallel without changing its output.

use std::fmt;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Normal,
    Gamma,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Gamma => "gamma",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(Family::Normal),
            "gamma" => Ok(Family::Gamma),
            other => Err(Error::InvalidSpec(format!("unknown family `{other}`"))),
        }
    }
}

/// The population a sample is drawn from.
///
/// Normal is parameterised by location `mu` and scale `sigma`; gamma by
/// shape `k` and scale `theta`, so that its standard deviation is
/// `theta * sqrt(k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    Normal { mu: f64, sigma: f64 },
    Gamma { shape: f64, scale: f64 },
}

/// Shape values of the gamma parameter grid, in tenths: 0.7, 0.8, ..., 1.3.
const GAMMA_GRID_SHAPE_TENTHS: [u32; 7] = [7, 8, 9, 10, 11, 12, 13];
const GAMMA_GRID_SCALES: [f64; 7] = [1.0, 2.0, 3.0, 4.0, 5.0, 10.0, 15.0];

impl DistributionSpec {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        let spec = DistributionSpec::Normal { mu, sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        let spec = DistributionSpec::Gamma { shape, scale };
        spec.validate()?;
        Ok(spec)
    }

    /// Normal(0, 1).
    pub const fn standard_normal() -> Self {
        DistributionSpec::Normal {
            mu: 0.0,
            sigma: 1.0,
        }
    }

    /// Gamma(k = 1, theta = 1), i.e. the unit exponential.
    pub const fn standard_gamma() -> Self {
        DistributionSpec::Gamma {
            shape: 1.0,
            scale: 1.0,
        }
    }

    /// The 49 shape/scale combinations of the gamma parameter study,
    /// ordered by shape then scale.
    pub fn gamma_parameter_grid() -> Vec<Self> {
        GAMMA_GRID_SHAPE_TENTHS
            .iter()
            .flat_map(|&k| {
                GAMMA_GRID_SCALES
                    .iter()
                    .map(move |&theta| DistributionSpec::Gamma {
                        shape: f64::from(k) / 10.0,
                        scale: theta,
                    })
            })
            .collect()
    }

    pub fn from_params(family: Family, param1: f64, param2: f64) -> Result<Self> {
        match family {
            Family::Normal => Self::normal(param1, param2),
            Family::Gamma => Self::gamma(param1, param2),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            DistributionSpec::Normal { .. } => Family::Normal,
            DistributionSpec::Gamma { .. } => Family::Gamma,
        }
    }

    /// `(mu, sigma)` for normal, `(k, theta)` for gamma.
    pub fn params(&self) -> (f64, f64) {
        match *self {
            DistributionSpec::Normal { mu, sigma } => (mu, sigma),
            DistributionSpec::Gamma { shape, scale } => (shape, scale),
        }
    }

    pub fn is_standard(&self) -> bool {
        *self == Self::standard_normal() || *self == Self::standard_gamma()
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DistributionSpec::Normal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(Error::InvalidSpec(format!(
                        "normal mu must be finite, got {mu}"
                    )));
                }
                if !(sigma.is_finite() && sigma > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "normal sigma must be positive, got {sigma}"
                    )));
                }
            }
            DistributionSpec::Gamma { shape, scale } => {
                if !(shape.is_finite() && shape > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "gamma shape must be positive, got {shape}"
                    )));
                }
                if !(scale.is_finite() && scale > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "gamma scale must be positive, got {scale}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Population standard deviation: `sigma` for normal, `theta * sqrt(k)`
    /// for gamma.
    pub fn theoretical_sigma(&self) -> Result<f64> {
        self.validate()?;
        Ok(match *self {
            DistributionSpec::Normal { sigma, .. } => sigma,
            DistributionSpec::Gamma { shape, scale } => scale * shape.sqrt(),
        })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistributionSpec::Normal { mu, .. } => mu,
            DistributionSpec::Gamma { shape, scale } => shape * scale,
        }
    }

    /// Stable identifier used as the `dist` key in tables,
    /// e.g. `normal_mu0_sigma1` or `gamma_k0.7_theta10`.
    pub fn label(&self) -> String {
        match *self {
            DistributionSpec::Normal { mu, sigma } => format!("normal_mu{mu}_sigma{sigma}"),
            DistributionSpec::Gamma { shape, scale } => format!("gamma_k{shape}_theta{scale}"),
        }
    }

    pub fn sampler(&self) -> Result<Sampler> {
        self.validate()?;
        Ok(match *self {
            DistributionSpec::Normal { mu, sigma } => Sampler(SamplerKind::Normal { mu, sigma }),
            DistributionSpec::Gamma { shape, scale } => Sampler(SamplerKind::Gamma {
                tsang: MarsagliaTsang::new(shape),
                scale,
            }),
        })
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DistributionSpec::Normal { mu, sigma } => write!(f, "Normal(mu={mu}, sigma={sigma})"),
            DistributionSpec::Gamma { shape, scale } => {
                write!(f, "Gamma(k={shape}, theta={scale})")
            }
        }
    }
}

/// Marsaglia & Tsang (2000) squeeze/rejection sampler for Gamma(shape, 1).
///
/// Shapes below one are drawn as Gamma(shape + 1) * U^(1/shape).
#[derive(Debug, Clone, Copy)]
struct MarsagliaTsang {
    d: f64,
    c: f64,
    /// `Some(1/shape)` when the shape < 1 boost applies.
    boost_exponent: Option<f64>,
}

impl MarsagliaTsang {
    fn new(shape: f64) -> Self {
        let (base, boost_exponent) = if shape < 1.0 {
            (shape + 1.0, Some(1.0 / shape))
        } else {
            (shape, None)
        };
        let d = base - 1.0 / 3.0;
        MarsagliaTsang {
            d,
            c: 1.0 / (9.0 * d).sqrt(),
            boost_exponent,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g = loop {
            let x: f64 = rng.sample(StandardNormal);
            let t = 1.0 + self.c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u: f64 = rng.sample(Open01);
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                break self.d * v;
            }
            if u.ln() < 0.5 * x2 + self.d * (1.0 - v + v.ln()) {
                break self.d * v;
            }
        };
        match self.boost_exponent {
            Some(e) => {
                let u: f64 = rng.sample(Open01);
                g * u.powf(e)
            }
            None => g,
        }
    }
}

/// A validated, ready-to-draw distribution.
#[derive(Debug, Clone, Copy)]
pub struct Sampler(SamplerKind);

#[derive(Debug, Clone, Copy)]
enum SamplerKind {
    Normal { mu: f64, sigma: f64 },
    Gamma { tsang: MarsagliaTsang, scale: f64 },
}

impl Sampler {
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.0 {
            SamplerKind::Normal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                mu + sigma * z
            }
            SamplerKind::Gamma { tsang, scale } => scale * tsang.draw(rng),
        }
    }

    /// Overwrites `buf` with i.i.d. draws.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, buf: &mut [f64]) {
        for slot in buf.iter_mut() {
            *slot = self.draw(rng);
        }
    }
}

/// Upper bound on sweep points and on replicates per sweep point.
pub const STREAM_INDEX_CAP: u64 = 1 << 32;

/// 32-bit words of keystream reserved per sub-stream block
/// (see [`RngStream::rng_at_block`]).
const WORDS_PER_BLOCK: u128 = 1 << 36;

/// Address of one independent random sequence.
///
/// The sequence is the ChaCha8 keystream for key `master_seed` on stream
/// `stream_id`; it does not depend on which thread reads it or on what was
/// generated before.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub const fn new(master_seed: u64, stream_id: u64) -> Self {
        RngStream {
            master_seed,
            stream_id,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Generator positioned at the start of sub-stream `block`. Blocks are
    /// disjoint 2^35-draw windows of the same keystream, so resampling loops
    /// can hand one block to each iteration.
    pub fn rng_at_block(&self, block: u32) -> ChaCha8Rng {
        let mut rng = self.rng();
        rng.set_word_pos(u128::from(block) * WORDS_PER_BLOCK);
        rng
    }
}

/// Stream for replicate `replicate_index` at position `sweep_point` of the N
/// grid: `stream_id = sweep_point * 2^32 + replicate_index`.
pub fn make_stream(master_seed: u64, sweep_point: u32, replicate_index: u32) -> RngStream {
    RngStream::new(
        master_seed,
        (u64::from(sweep_point) << 32) | u64::from(replicate_index),
    )
}

/// `n` i.i.d. draws from `spec`, fully determined by `(spec, n, stream)`.
pub fn sample(spec: &DistributionSpec, n: usize, stream: RngStream) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "sample size must be at least 1".into(),
        ));
    }
    let sampler = spec.sampler()?;
    let mut rng = stream.rng();
    let mut out = vec![0.0; n];
    sampler.fill(&mut rng, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn theoretical_sigma_values() {
        assert_eq!(
            DistributionSpec::standard_normal()
                .theoretical_sigma()
                .unwrap(),
            1.0
        );
        assert_eq!(
            DistributionSpec::standard_gamma()
                .theoretical_sigma()
                .unwrap(),
            1.0
        );
        let s = DistributionSpec::gamma(0.7, 10.0)
            .unwrap()
            .theoretical_sigma()
            .unwrap();
        assert!((s - 8.366_600_265_340_756).abs() < 1e-12, "{s}");
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(matches!(
            DistributionSpec::normal(0.0, 0.0),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            DistributionSpec::normal(0.0, -1.0),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            DistributionSpec::gamma(0.0, 1.0),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            DistributionSpec::gamma(1.0, f64::NAN),
            Err(Error::InvalidSpec(_))
        ));
        let raw = DistributionSpec::Gamma {
            shape: -1.0,
            scale: 1.0,
        };
        assert!(raw.theoretical_sigma().is_err());
        assert!(sample(&raw, 10, RngStream::new(1, 0)).is_err());
    }

    #[test]
    fn gamma_grid_has_49_combinations() {
        let grid = DistributionSpec::gamma_parameter_grid();
        assert_eq!(grid.len(), 49);
        assert_eq!(
            grid[0],
            DistributionSpec::Gamma {
                shape: 0.7,
                scale: 1.0
            }
        );
        assert_eq!(
            grid[48],
            DistributionSpec::Gamma {
                shape: 1.3,
                scale: 15.0
            }
        );
        assert!(grid.contains(&DistributionSpec::standard_gamma()));
    }

    #[test]
    fn stream_ids() {
        let a = make_stream(7, 0, 0);
        let b = make_stream(7, 0, 1);
        assert_ne!(a.stream_id, b.stream_id);
        assert_eq!(make_stream(7, 0, 5), make_stream(7, 0, 5));
        assert_ne!(
            make_stream(7, 3, 5).stream_id,
            make_stream(7, 5, 3).stream_id
        );
        assert_eq!(make_stream(7, 1, 0).stream_id, STREAM_INDEX_CAP);
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = DistributionSpec::gamma(0.7, 3.0).unwrap();
        let s = make_stream(42, 2, 9);
        assert_eq!(
            sample(&spec, 1000, s).unwrap(),
            sample(&spec, 1000, s).unwrap()
        );
        let other = sample(&spec, 1000, make_stream(42, 2, 10)).unwrap();
        assert_ne!(sample(&spec, 1000, s).unwrap(), other);
    }

    #[test]
    fn sampling_is_thread_independent() {
        let spec = DistributionSpec::standard_normal();
        let s = make_stream(3, 1, 1);
        let here = sample(&spec, 500, s).unwrap();
        let there = std::thread::spawn(move || sample(&spec, 500, s).unwrap())
            .join()
            .unwrap();
        assert_eq!(here, there);
    }

    #[test]
    fn zero_length_sample_is_an_error() {
        assert!(sample(
            &DistributionSpec::standard_normal(),
            0,
            RngStream::new(0, 0)
        )
        .is_err());
    }

    #[test]
    fn standard_normal_moments() {
        let xs = sample(
            &DistributionSpec::standard_normal(),
            1_000_000,
            RngStream::new(11, 0),
        )
        .unwrap();
        let (m, v) = mean_var(&xs);
        assert!(m.abs() < 0.005, "mean {m}");
        assert!((0.99..=1.01).contains(&v), "var {v}");
    }

    #[test]
    fn standard_gamma_moments_and_positivity() {
        let xs = sample(
            &DistributionSpec::standard_gamma(),
            1_000_000,
            RngStream::new(12, 0),
        )
        .unwrap();
        assert!(xs.iter().all(|&x| x > 0.0));
        let (m, _) = mean_var(&xs);
        assert!((m - 1.0).abs() < 0.01, "mean {m}");
    }

    #[test]
    fn gamma_1_3_theta_5_moments() {
        let spec = DistributionSpec::gamma(1.3, 5.0).unwrap();
        let xs = sample(&spec, 1_000_000, RngStream::new(13, 0)).unwrap();
        let (m, v) = mean_var(&xs);
        assert!((m - 6.5).abs() < 0.1, "mean {m}");
        assert!(
            (v.sqrt() - 5.0 * 1.3f64.sqrt()).abs() < 0.1,
            "sd {}",
            v.sqrt()
        );
    }

    /// Mean and variance of every grid distribution within 5 standard
    /// errors of the closed forms. The variance estimator's standard error
    /// uses the gamma fourth central moment 6 k theta^4 + 3 (k theta^2)^2.
    #[test]
    fn moment_consistency_over_parameter_grid() {
        let n = 1_000_000usize;
        let mut specs = DistributionSpec::gamma_parameter_grid();
        specs.push(DistributionSpec::standard_normal());
        specs.push(DistributionSpec::normal(-3.0, 2.5).unwrap());
        for (i, spec) in specs.iter().enumerate() {
            let xs = sample(spec, n, RngStream::new(99, i as u64)).unwrap();
            let (m, v) = mean_var(&xs);
            let var = spec.theoretical_sigma().unwrap().powi(2);
            let mu4 = match *spec {
                DistributionSpec::Normal { .. } => 3.0 * var * var,
                DistributionSpec::Gamma { shape, scale } => {
                    6.0 * shape * scale.powi(4) + 3.0 * var * var
                }
            };
            let se_mean = (var / n as f64).sqrt();
            let se_var = ((mu4 - var * var) / n as f64).sqrt();
            assert!((m - spec.mean()).abs() < 5.0 * se_mean, "{spec}: mean {m}");
            assert!((v - var).abs() < 5.0 * se_var, "{spec}: var {v} vs {var}");
            if spec.family() == Family::Gamma {
                assert!(xs.iter().all(|&x| x > 0.0), "{spec}: non-positive draw");
            }
        }
    }

    #[test]
    fn adjacent_streams_are_uncorrelated() {
        let spec = DistributionSpec::standard_normal();
        for s in [0u64, 1, 1 << 32, 12345] {
            let a = sample(&spec, 100_000, RngStream::new(5, s)).unwrap();
            let b = sample(&spec, 100_000, RngStream::new(5, s + 1)).unwrap();
            let (ma, va) = mean_var(&a);
            let (mb, vb) = mean_var(&b);
            let cov = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - ma) * (y - mb))
                .sum::<f64>()
                / (a.len() as f64 - 1.0);
            let r = cov / (va * vb).sqrt();
            assert!(r.abs() < 0.01, "stream {s}: r = {r}");
        }
    }

    #[test]
    fn blocks_do_not_overlap_with_stream_start() {
        let s = RngStream::new(1, 2);
        let mut a = s.rng();
        let mut b = s.rng_at_block(1);
        let xa: Vec<u64> = (0..8).map(|_| a.random()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.random()).collect();
        assert_ne!(xa, xb);
        let mut c = s.rng_at_block(0);
        let xc: Vec<u64> = (0..8).map(|_| c.random()).collect();
        assert_eq!(xa, xc);
    }
}
