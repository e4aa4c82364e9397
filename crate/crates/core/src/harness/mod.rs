//! Configuration, runners and output.
//!
//! A run is described by a TOML file with `[model]`, `[data]`, `[scheme]` and
//! `[output]` sections; see [`parse_config`]. Runners write CSV (12
//! significant digits, LF endings) and pretty JSON reports into an output
//! directory, prefixing every file with `output.prefix`.

mod config;
pub mod csv;
mod run;

pub use config::{
    load_config, parse_config, ExperimentKind, RunConfig, RunData, DEFAULT_CFL_SAFETY, DEFAULT_LENGTH, DEFAULT_N_CELLS,
    DEFAULT_SWEEP, DEFAULT_T_END, DEFAULT_T_PROBE,
};
pub use run::{
    compare, detect_jumps, error_norms, estimated_order, profile_csv, run, run_compare, run_exact, run_simulate,
    run_sweep, sweep, sweep_csv, CompareReport, Comparison, ErrorNorms, ExactReport, ProfileRow, SimulateReport,
    SweepEntry, SweepTable, WaveReport, Written, EXACT_SAMPLES, ORDER_FLOOR, PROFILE_HEADER,
};

/// Maps `PSA_LOG` (`quiet`, `info`, `debug`) to a log level filter; unset
/// means `info`.
pub fn log_level(value: Option<&str>) -> Result<log::LevelFilter, String> {
    match value.map(str::trim) {
        None | Some("") | Some("info") => Ok(log::LevelFilter::Info),
        Some("quiet") => Ok(log::LevelFilter::Off),
        Some("debug") => Ok(log::LevelFilter::Debug),
        Some(other) => Err(format!("PSA_LOG = {other:?}; expected quiet, info or debug")),
    }
}
