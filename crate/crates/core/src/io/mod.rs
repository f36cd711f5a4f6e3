//! Configuration, CSV tables, clock-drift correction and command runners.

pub mod clock;
pub mod commands;
pub mod config;
pub mod table;

pub use clock::{correct_clock_drift, TimestampRecord, MAX_DRIFT_FACTOR, REFERENCE_DRIFT_FACTOR};
pub use commands::{error_kind, exit_code, run_command, Command, RunContext, VERSION};
pub use config::{parse_config, ResolvedConfig, RunConfig};
pub use table::{format_sig, read_spectrum_csv, read_table, write_spectrum_csv, write_table, Cell, Table};
