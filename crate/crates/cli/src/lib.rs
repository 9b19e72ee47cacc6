//! Pipeline orchestration for the lifestyle-factor weak-supervision
//! workflow: generation, rule-based labeling, splitting, training, and
//! evaluation, chained by `run-all` and driven by a TOML config.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_eval, cmd_gen, cmd_label, cmd_run_all, cmd_split, cmd_train};
pub use config::{file_digest, hex_digest, Profile, ResolvedConfig};
pub use error::CliError;
