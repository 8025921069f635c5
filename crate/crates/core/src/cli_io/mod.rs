//! Configuration files, output writers and the command-line driver.
//!
//! Configurations are `key = value` lines with dotted keys (`domain.epsilon`)
//! or keys under `[section]` headers; `#` starts a comment. Every float is
//! written in its shortest exactly-reparsing form.

mod cli;
mod config;
mod output;

pub use cli::{execute, exit_code, run_cli, usage, EXIT_ABORTED, EXIT_NO_SPLASH, EXIT_OK, EXIT_VALIDATION};
pub use config::{emit_config, parse_config, parse_config_with, DomainConfig, DomainKind, Mode, RunConfig, KEYS};
pub use output::{
    b0_csv, series_csv, svg_document, trajectory_csv, write_run_frames, write_run_tables, SvgCurve, SvgMarker,
    B0_HEADER, FIELD_HEADER,
};
