//! Configuration, file formats, and the command-line front end.

mod cli;
mod config;
mod files;

pub use cli::main_with_args;
pub use config::{defaults, load_config, RunConfig, FORMAT_VERSION};
pub use files::{
    chemistry_from_json, chemistry_to_json, load_chemistry, save_chemistry, species_csv,
    trajectory_csv, write_atomic, write_event_ledger, write_json, write_trajectory_csv,
    CatalysisEntry, CatalysisKind, ChemistryFile, CHEMISTRY_FORMAT_VERSION,
};
