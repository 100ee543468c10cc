//! Experiment front end for the shear-flow Keller-Segel solver: configuration,
//! initial data, snapshots, and the `run`/`sweep`/`psfit`/`check` commands.

pub mod check;
pub mod commands;
pub mod config;
pub mod init;
pub mod snapshot;

pub use commands::{
    cmd_check, cmd_psfit, cmd_run, cmd_sweep, load_config, output_dir, CliError, PsfitReport, RunReport,
    SweepReport, EXIT_BLOWUP, EXIT_ERROR, EXIT_OK,
};
pub use config::{parse_config, ConfigError, ExperimentConfig};
pub use init::{make_initial, InitError};
