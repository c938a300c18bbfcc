//! Configuration, persisted tables, reports and figure files.
//!
//! Concurrent runs must use distinct output directories; no file locking is
//! done.

pub mod commands;
pub mod config;
pub mod figures;
pub mod files;
pub mod report;
pub mod tables;

pub use commands::{
    cmd_analyze, cmd_eval, cmd_plots, cmd_sweep, cmd_table1, Evaluation, Table1Report,
};
pub use config::{EmitFlags, NGridChoice, RunConfig};
pub use files::{write_bundle, Metadata};
pub use report::{table1_rows, Table1Row};
pub use tables::{read_scaling, read_stderr_table, write_scaling, write_stderr_table};
