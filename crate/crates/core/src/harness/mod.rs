//! Experiment harness behind the command-line tool: configuration, replicated
//! runs with CSV output, and the theory checks.

pub mod config;
pub mod experiment;
pub mod theory;

pub use config::{parse_values, Decoder, ExperimentConfig, Sweep, SweepParam, PRESETS};
pub use experiment::{read_rows, run_experiment, write_rows, CsvRow, ExperimentResult};
pub use theory::{check_theory, TheoryCheck, TheoryOptions, TheoryReport};
