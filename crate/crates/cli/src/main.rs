//! `qstderr`: Monte Carlo sampling errors of quantile estimates.
//!
//! Exit codes: 0 success, 2 configuration or parse error, 3 threshold
//! failure, 4 I/O error. `QSTDERR_WORKERS` overrides the worker count.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quantile_stderr::acceptance;
use quantile_stderr::analysis::DEFAULT_N_FLOOR;
use quantile_stderr::distributions::DistributionSpec;
use quantile_stderr::io::commands::{cmd_analyze, cmd_eval, cmd_plots, cmd_sweep, cmd_table1};
use quantile_stderr::io::config::{
    parse_dist_entry, DEFAULT_FIG_HIGH_LEVELS, DEFAULT_FIG_LOW_LEVELS,
    DEFAULT_TABLE1_TOLERANCE_GAMMA, DEFAULT_TABLE1_TOLERANCE_NORMAL,
};
use quantile_stderr::io::{read_scaling, RunConfig};
use quantile_stderr::mc_engine::DEFAULT_MASTER_SEED;
use quantile_stderr::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_THRESHOLD: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "qstderr",
    version,
    about = "Sampling errors of quantile estimates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo sweep and the outputs selected by `emit`.
    Sweep(SweepArgs),
    /// Fit scaling laws to a standard-error table.
    Analyze {
        table: PathBuf,
        #[arg(long, default_value_t = DEFAULT_N_FLOOR)]
        n_floor: usize,
        /// Defaults to the table's directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Compare measured K(p) with the published table.
    Table1 {
        scaling: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TABLE1_TOLERANCE_NORMAL)]
        tol_normal: f64,
        #[arg(long, default_value_t = DEFAULT_TABLE1_TOLERANCE_GAMMA)]
        tol_gamma: f64,
    },
    /// Write figure series and SVG drawings.
    Plots {
        table: PathBuf,
        scaling: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        high_levels: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        low_levels: Option<Vec<f64>>,
    },
    /// Expected standard error K(p) S / sqrt(N).
    Eval {
        /// normal, gamma, normal:<mu>:<sigma> or gamma:<k>:<theta>.
        #[arg(long, default_value = "normal")]
        dist: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: usize,
        /// Sample standard deviation; defaults to the population value.
        #[arg(long)]
        s: Option<f64>,
        /// Scaling CSV whose gamma breakpoints replace the built-in ones.
        #[arg(long)]
        scaling: Option<PathBuf>,
    },
    /// Run the desk-scale acceptance suite.
    Selftest {
        #[arg(long, default_value_t = DEFAULT_MASTER_SEED)]
        seed: u64,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` settings, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    replicates: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    n_floor: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
    #[arg(long)]
    emit: Option<String>,
}

impl SweepArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        for pair in &self.set {
            cfg.set_pair(pair)?;
        }
        let flags = [
            ("dist", &self.dist),
            ("n_grid", &self.n_grid),
            ("replicates", &self.replicates),
            ("seed", &self.seed),
            ("n_floor", &self.n_floor),
            ("output_dir", &self.output_dir),
            ("emit", &self.emit),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v).map_err(|m| {
                    Error::InvalidConfig(format!("--{}: {m}", key.replace('_', "-")))
                })?;
            }
        }
        Ok(cfg)
    }
}

fn exit_for(e: &Error) -> u8 {
    if e.is_input_error() {
        EXIT_CONFIG
    } else {
        EXIT_IO
    }
}

fn dir_of(file: &Path) -> PathBuf {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn parse_eval_dist(text: &str) -> Result<DistributionSpec, Error> {
    let entry = match text.trim() {
        "normal" => "standard_normal",
        "gamma" => "standard_gamma",
        other => other,
    };
    match parse_dist_entry(entry)
        .map_err(Error::InvalidSpec)?
        .as_slice()
    {
        [one] => Ok(*one),
        _ => Err(Error::InvalidSpec(format!(
            "`{text}` names more than one distribution"
        ))),
    }
}

fn run_sweep(args: &SweepArgs) -> Result<u8, Error> {
    let cfg = args.resolve()?;
    let out = cmd_sweep(&cfg)?;
    println!("wrote {} ({} rows)", out.path.display(), out.table.len());
    let emit = cfg.emit;
    if !(emit.scaling_csv || emit.table1 || emit.fig1 || emit.fig2 || emit.fig3) {
        return Ok(0);
    }
    let (scaling_path, _) = cmd_analyze(&out.path, cfg.n_floor, &cfg.output_dir)?;
    println!("wrote {}", scaling_path.display());
    let mut code = 0;
    if emit.table1 {
        let have_both = [
            DistributionSpec::standard_normal(),
            DistributionSpec::standard_gamma(),
        ]
        .iter()
        .all(|s| out.table.spec_by_label(&s.label()).is_some());
        if have_both {
            let report = cmd_table1(
                &scaling_path,
                &cfg.output_dir,
                cfg.table1_tolerance_normal,
                cfg.table1_tolerance_gamma,
            )?;
            print!("{}", report.text);
            if !report.within {
                code = EXIT_THRESHOLD;
            }
        } else {
            log::warn!("table1 skipped: needs both standard normal and standard gamma");
        }
    }
    if emit.fig1 || emit.fig2 || emit.fig3 {
        for p in cmd_plots(
            &out.path,
            &scaling_path,
            &cfg.output_dir,
            &cfg.fig_high_levels,
            &cfg.fig_low_levels,
        )? {
            println!("wrote {}", p.display());
        }
    }
    Ok(code)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Sweep(args) => run_sweep(&args),
        Command::Analyze {
            table,
            n_floor,
            output_dir,
        } => {
            let dir = output_dir.unwrap_or_else(|| dir_of(&table));
            let (path, results) = cmd_analyze(&table, n_floor, &dir)?;
            println!("wrote {} ({} rows)", path.display(), results.len());
            Ok(0)
        }
        Command::Table1 {
            scaling,
            output_dir,
            tol_normal,
            tol_gamma,
        } => {
            let dir = output_dir.unwrap_or_else(|| dir_of(&scaling));
            let report = cmd_table1(&scaling, &dir, tol_normal, tol_gamma)?;
            print!("{}", report.text);
            Ok(if report.within { 0 } else { EXIT_THRESHOLD })
        }
        Command::Plots {
            table,
            scaling,
            output_dir,
            high_levels,
            low_levels,
        } => {
            let dir = output_dir.unwrap_or_else(|| dir_of(&table));
            let high = high_levels.unwrap_or_else(|| DEFAULT_FIG_HIGH_LEVELS.to_vec());
            let low = low_levels.unwrap_or_else(|| DEFAULT_FIG_LOW_LEVELS.to_vec());
            for p in cmd_plots(&table, &scaling, &dir, &high, &low)? {
                println!("wrote {}", p.display());
            }
            Ok(0)
        }
        Command::Eval {
            dist,
            p,
            n,
            s,
            scaling,
        } => {
            let spec = parse_eval_dist(&dist)?;
            let measured = match &scaling {
                Some(path) => {
                    let file = std::fs::File::open(path).map_err(|e| Error::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    Some(read_scaling(file, &path.display().to_string())?)
                }
                None => None,
            };
            let e = cmd_eval(&spec, p, n, s, measured.as_deref())?;
            println!("K({p}) = {:.4}", e.k);
            println!(
                "expected stderr = {:.4} (S = {}, N = {})",
                e.stderr, e.s, e.n
            );
            if let Some(req) = e.required_n {
                println!(
                    "warning: N = {n} is below the minimum sample size for p = {p} (N >= ~{req}); \
                     the estimate may be unreliable"
                );
            }
            Ok(0)
        }
        Command::Selftest { seed } => {
            let ctx = acceptance::Context::with_seed(seed)?;
            let outcomes = acceptance::run_all(&ctx);
            for o in &outcomes {
                println!("{o}");
            }
            Ok(if outcomes.iter().all(|o| o.passed) {
                0
            } else {
                EXIT_THRESHOLD
            })
        }
    }
}

fn init_workers() -> Result<(), Error> {
    let Ok(value) = std::env::var("QSTDERR_WORKERS") else {
        return Ok(());
    };
    let workers: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&w| w > 0)
        .ok_or_else(|| {
            Error::InvalidConfig(format!(
                "QSTDERR_WORKERS: expected a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| Error::InvalidConfig(format!("QSTDERR_WORKERS: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = init_workers().and_then(|()| run(cli));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_file() {
        let dir = std::env::temp_dir().join(format!("qstderr-cli-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "replicates = 500\nseed = 7\n").unwrap();
        let cli = Cli::try_parse_from([
            "qstderr",
            "sweep",
            "--config",
            path.to_str().unwrap(),
            "--set",
            "seed=8",
            "--replicates",
            "900",
        ])
        .unwrap();
        let Command::Sweep(args) = cli.command else {
            panic!()
        };
        let cfg = args.resolve().unwrap();
        assert_eq!((cfg.replicates, cfg.master_seed), (900, 8));
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn eval_dist_aliases() {
        assert_eq!(
            parse_eval_dist("gamma").unwrap(),
            DistributionSpec::standard_gamma()
        );
        assert_eq!(
            parse_eval_dist("normal:2:3").unwrap(),
            DistributionSpec::normal(2.0, 3.0).unwrap()
        );
        assert!(parse_eval_dist("gamma_grid").is_err());
    }
}
