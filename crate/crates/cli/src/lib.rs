//! Command-line harness around `tdm-ies-core`: scenario files, sweeps and CSV
//! export.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod sweep;

pub use commands::{execute, run, Cli, Command};
pub use config::{emit_config, load_config, parse_config};
pub use error::{CliError, Result};
pub use output::{fmt_g9, write_sweep_csv, write_trace_csv};
pub use sweep::{
    run_sweep, Axis, EvaluatorKind, Preset, SweepCurve, SweepRequest, SweepRow, Values,
};
