//! Library surface of the command-line tool: configuration, CSV I/O, model
//! persistence, and the subcommand implementations. The `geomx` binary is a
//! thin wrapper over these.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod model_file;
