//! Standard-library companion of `fpp-core`: configuration files, data
//! formats, run metadata, a thread-count-independent parallel runner and
//! the subcommands behind the `fpp` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod meta;
pub mod runner;
pub mod text;

pub use commands::{dispatch, Command, Invocation};
pub use error::{LabError, LabResult};
