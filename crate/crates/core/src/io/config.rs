//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments start with '#'
//! dist        = standard_normal, standard_gamma
//! n_grid      = desk
//! replicates  = 15000
//! seed        = 20140101
//! n_floor     = 3000
//! output_dir  = out
//! emit        = table1, fig1, fig2, fig3, scaling_csv
//! ```
//!
//! Distribution entries are `standard_normal`, `standard_gamma`,
//! `normal:<mu>:<sigma>`, `gamma:<k>:<theta>`, `gamma_grid` (49 shape/scale
//! combinations) or `full` (standard normal plus the gamma grid).
//! `n_grid` is `desk`, `paper_full`, or an explicit comma-separated list.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::analysis::DEFAULT_N_FLOOR;
use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::mc_engine::{
    default_n_grid, McConfig, NGridMode, DEFAULT_MASTER_SEED, DEFAULT_REPLICATES,
};
use crate::quantile::QuantileGrid;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NGridChoice {
    Mode(NGridMode),
    Explicit(Vec<usize>),
}

impl NGridChoice {
    pub fn sizes(&self) -> Vec<usize> {
        match self {
            NGridChoice::Mode(m) => default_n_grid(*m),
            NGridChoice::Explicit(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmitFlags {
    pub table1: bool,
    pub fig1: bool,
    pub fig2: bool,
    pub fig3: bool,
    pub scaling_csv: bool,
}

impl EmitFlags {
    pub const ALL: EmitFlags = EmitFlags {
        table1: true,
        fig1: true,
        fig2: true,
        fig3: true,
        scaling_csv: true,
    };
    pub const NONE: EmitFlags = EmitFlags {
        table1: false,
        fig1: false,
        fig2: false,
        fig3: false,
        scaling_csv: false,
    };

    fn names(&self) -> Vec<&'static str> {
        [
            (self.table1, "table1"),
            (self.fig1, "fig1"),
            (self.fig2, "fig2"),
            (self.fig3, "fig3"),
            (self.scaling_csv, "scaling_csv"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect()
    }
}

/// Levels drawn in the standard-error figures.
pub const DEFAULT_FIG_HIGH_LEVELS: [f64; 5] = [0.5, 0.9, 0.95, 0.99, 0.999];
pub const DEFAULT_FIG_LOW_LEVELS: [f64; 4] = [0.1, 0.05, 0.01, 0.001];

pub const DEFAULT_TABLE1_TOLERANCE_NORMAL: f64 = 0.05;
pub const DEFAULT_TABLE1_TOLERANCE_GAMMA: f64 = 0.08;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub specs: Vec<DistributionSpec>,
    pub n_grid: NGridChoice,
    pub replicates: usize,
    pub master_seed: u64,
    pub n_floor: usize,
    pub output_dir: PathBuf,
    pub emit: EmitFlags,
    pub table1_tolerance_normal: f64,
    pub table1_tolerance_gamma: f64,
    pub fig_high_levels: Vec<f64>,
    pub fig_low_levels: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            specs: vec![
                DistributionSpec::standard_normal(),
                DistributionSpec::standard_gamma(),
            ],
            n_grid: NGridChoice::Mode(NGridMode::Desk),
            replicates: DEFAULT_REPLICATES,
            master_seed: DEFAULT_MASTER_SEED,
            n_floor: DEFAULT_N_FLOOR,
            output_dir: PathBuf::from("out"),
            emit: EmitFlags::ALL,
            table1_tolerance_normal: DEFAULT_TABLE1_TOLERANCE_NORMAL,
            table1_tolerance_gamma: DEFAULT_TABLE1_TOLERANCE_GAMMA,
            fig_high_levels: DEFAULT_FIG_HIGH_LEVELS.to_vec(),
            fig_low_levels: DEFAULT_FIG_LOW_LEVELS.to_vec(),
        }
    }
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_number<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .trim()
        .parse()
        .map_err(|_| format!("`{key}`: cannot parse `{}`", value.trim()))
}

fn parse_levels(key: &str, value: &str) -> std::result::Result<Vec<f64>, String> {
    let levels = list(value)
        .map(|v| parse_number::<f64>(key, v))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if levels.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
        return Err(format!("`{key}`: levels must lie in (0, 1)"));
    }
    Ok(levels)
}

/// Parses one distribution entry (see module docs).
pub fn parse_dist_entry(entry: &str) -> std::result::Result<Vec<DistributionSpec>, String> {
    let entry = entry.trim();
    match entry {
        "standard_normal" => return Ok(vec![DistributionSpec::standard_normal()]),
        "standard_gamma" => return Ok(vec![DistributionSpec::standard_gamma()]),
        "gamma_grid" => return Ok(DistributionSpec::gamma_parameter_grid()),
        "full" => {
            let mut v = vec![DistributionSpec::standard_normal()];
            v.extend(DistributionSpec::gamma_parameter_grid());
            return Ok(v);
        }
        _ => {}
    }
    let parts: Vec<&str> = entry.split(':').map(str::trim).collect();
    let [family, a, b] = parts[..] else {
        return Err(format!(
            "distribution `{entry}`: expected standard_normal, standard_gamma, gamma_grid, \
             full, normal:<mu>:<sigma> or gamma:<k>:<theta>"
        ));
    };
    let a: f64 = parse_number("dist", a)?;
    let b: f64 = parse_number("dist", b)?;
    let family = family.parse().map_err(|e: Error| e.to_string())?;
    DistributionSpec::from_params(family, a, b)
        .map(|s| vec![s])
        .map_err(|e| e.to_string())
}

impl RunConfig {
    /// Applies one `key = value` setting. Errors carry no location; callers
    /// add the line or flag.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let key = key.trim();
        let value = value.trim();
        match key {
            "dist" => {
                let mut specs = Vec::new();
                for entry in list(value) {
                    for s in parse_dist_entry(entry)? {
                        if !specs.contains(&s) {
                            specs.push(s);
                        }
                    }
                }
                if specs.is_empty() {
                    return Err("`dist`: no distributions given".into());
                }
                self.specs = specs;
            }
            "n_grid" => {
                self.n_grid = match value {
                    "desk" => NGridChoice::Mode(NGridMode::Desk),
                    "paper_full" => NGridChoice::Mode(NGridMode::PaperFull),
                    _ => NGridChoice::Explicit(
                        list(value)
                            .map(|v| parse_number::<usize>(key, v))
                            .collect::<std::result::Result<_, _>>()?,
                    ),
                }
            }
            "replicates" => self.replicates = parse_number(key, value)?,
            "seed" => self.master_seed = parse_number(key, value)?,
            "n_floor" => self.n_floor = parse_number(key, value)?,
            "output_dir" => {
                if value.is_empty() {
                    return Err("`output_dir`: empty path".into());
                }
                self.output_dir = PathBuf::from(value);
            }
            "emit" => {
                let mut flags = EmitFlags::NONE;
                for item in list(value) {
                    match item {
                        "all" => flags = EmitFlags::ALL,
                        "none" => flags = EmitFlags::NONE,
                        "table1" => flags.table1 = true,
                        "fig1" => flags.fig1 = true,
                        "fig2" => flags.fig2 = true,
                        "fig3" => flags.fig3 = true,
                        "scaling_csv" => flags.scaling_csv = true,
                        other => return Err(format!("`emit`: unknown output `{other}`")),
                    }
                }
                self.emit = flags;
            }
            "table1_tolerance_normal" => self.table1_tolerance_normal = parse_number(key, value)?,
            "table1_tolerance_gamma" => self.table1_tolerance_gamma = parse_number(key, value)?,
            "fig_high_levels" => self.fig_high_levels = parse_levels(key, value)?,
            "fig_low_levels" => self.fig_low_levels = parse_levels(key, value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Applies `key=value` text, as given on the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("expected key=value, got `{pair}`")))?;
        self.set(k, v)
            .map_err(|m| Error::InvalidConfig(format!("--set {pair}: {m}")))
    }

    /// Parses a configuration file's text on top of the defaults.
    pub fn parse_str(text: &str, source: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i as u64 + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::parse(
                    source,
                    line_no,
                    format!("expected `key = value`, got `{line}`"),
                ));
            };
            cfg.set(k, v)
                .map_err(|m| Error::parse(source, line_no, m))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text, &path.display().to_string())
    }

    /// One Monte Carlo configuration per distribution, validated.
    pub fn plan(&self) -> Result<Vec<McConfig>> {
        if self.specs.is_empty() {
            return Err(Error::InvalidConfig("no distributions selected".into()));
        }
        if !(self.table1_tolerance_normal > 0.0 && self.table1_tolerance_gamma > 0.0) {
            return Err(Error::InvalidConfig(
                "table1 tolerances must be positive".into(),
            ));
        }
        let n_grid = self.n_grid.sizes();
        let plan: Vec<McConfig> = self
            .specs
            .iter()
            .map(|&spec| McConfig {
                spec,
                replicates: self.replicates,
                n_grid: n_grid.clone(),
                grid: QuantileGrid::standard(),
                master_seed: self.master_seed,
            })
            .collect();
        for c in &plan {
            c.validate()?;
        }
        Ok(plan)
    }

    /// Canonical `key = value` rendering; parsing it yields an equal config.
    pub fn canonical_text(&self) -> String {
        let dists: Vec<String> = self
            .specs
            .iter()
            .map(|s| {
                let (a, b) = s.params();
                format!("{}:{a}:{b}", s.family())
            })
            .collect();
        let n_grid = match &self.n_grid {
            NGridChoice::Mode(NGridMode::Desk) => "desk".to_string(),
            NGridChoice::Mode(NGridMode::PaperFull) => "paper_full".to_string(),
            NGridChoice::Explicit(v) => join(v),
        };
        let emit = self.emit.names();
        let mut out = String::new();
        let _ = writeln!(out, "dist = {}", dists.join(", "));
        let _ = writeln!(out, "n_grid = {n_grid}");
        let _ = writeln!(out, "replicates = {}", self.replicates);
        let _ = writeln!(out, "seed = {}", self.master_seed);
        let _ = writeln!(out, "n_floor = {}", self.n_floor);
        let _ = writeln!(out, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(
            out,
            "emit = {}",
            if emit.is_empty() {
                "none".into()
            } else {
                emit.join(", ")
            }
        );
        let _ = writeln!(
            out,
            "table1_tolerance_normal = {}",
            self.table1_tolerance_normal
        );
        let _ = writeln!(
            out,
            "table1_tolerance_gamma = {}",
            self.table1_tolerance_gamma
        );
        let _ = writeln!(out, "fig_high_levels = {}", join(&self.fig_high_levels));
        let _ = writeln!(out, "fig_low_levels = {}", join(&self.fig_low_levels));
        out
    }

    /// SHA-256 of the settings that determine computed values (everything
    /// except the output directory and emit flags), hex, first 16 digits.
    pub fn config_hash(&self) -> String {
        let text: String = self
            .canonical_text()
            .lines()
            .filter(|l| !l.starts_with("output_dir") && !l.starts_with("emit"))
            .map(|l| format!("{l}\n"))
            .collect();
        hex_prefix(&Sha256::digest(text.as_bytes()), 16)
    }
}

pub(crate) fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub(crate) fn hex_prefix(bytes: &[u8], digits: usize) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s.truncate(digits);
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_desk_run() {
        let c = RunConfig::default();
        let plan = c.plan().unwrap();
        assert_eq!(plan.len(), 2);
        assert_eq!(plan[0].n_grid.len(), 24);
        assert_eq!(plan[0].replicates, 15_000);
    }

    #[test]
    fn parses_file_text() {
        let text = "\
# desk run
dist = normal:0:2, gamma:1.3:5
n_grid = 10, 20, 40   # explicit
replicates = 500
seed = 7
emit = table1, fig3
";
        let c = RunConfig::parse_str(text, "run.cfg").unwrap();
        assert_eq!(c.specs.len(), 2);
        assert_eq!(c.specs[1], DistributionSpec::gamma(1.3, 5.0).unwrap());
        assert_eq!(c.n_grid, NGridChoice::Explicit(vec![10, 20, 40]));
        assert_eq!((c.replicates, c.master_seed), (500, 7));
        assert!(c.emit.table1 && c.emit.fig3 && !c.emit.fig1);
    }

    #[test]
    fn full_selection_has_fifty_distributions() {
        let mut c = RunConfig::default();
        c.set("dist", "full").unwrap();
        assert_eq!(c.specs.len(), 50);
        c.set("dist", "full, standard_gamma").unwrap();
        assert_eq!(c.specs.len(), 50);
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let err = RunConfig::parse_str("seed = 1\n\nreplicates = many\n", "x.cfg").unwrap_err();
        match err {
            Error::Parse {
                line, ref message, ..
            } => {
                assert_eq!(line, 3);
                assert!(message.contains("replicates"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            RunConfig::parse_str("bogus = 1", "x.cfg"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::parse_str("dist = gamma:-1:1", "x.cfg"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::parse_str("no equals", "x.cfg"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn plan_rejects_invalid_settings() {
        let mut c = RunConfig::default();
        c.set("replicates", "1").unwrap();
        assert!(c.plan().is_err());
        let mut c = RunConfig::default();
        c.set("n_grid", "5, 10").unwrap();
        assert!(c.plan().is_err());
    }

    #[test]
    fn canonical_text_round_trips_and_hash_ignores_output() {
        let mut c = RunConfig::default();
        c.set("dist", "normal:1.5:2, gamma:0.7:10").unwrap();
        c.set("n_grid", "10,30,90").unwrap();
        c.set("emit", "fig2").unwrap();
        let back = RunConfig::parse_str(&c.canonical_text(), "canon").unwrap();
        assert_eq!(back, c);
        let mut moved = c.clone();
        moved.output_dir = PathBuf::from("elsewhere");
        assert_eq!(moved.config_hash(), c.config_hash());
        let mut reseeded = c.clone();
        reseeded.master_seed += 1;
        assert_ne!(reseeded.config_hash(), c.config_hash());
        assert_eq!(c.config_hash().len(), 16);
    }

    #[test]
    fn set_pair_from_command_line() {
        let mut c = RunConfig::default();
        c.set_pair("n_floor=1000").unwrap();
        assert_eq!(c.n_floor, 1000);
        assert!(c.set_pair("n_floor").is_err());
        assert!(c.set_pair("fig_low_levels=0,0.5").is_err());
    }
}
