//! File formats, commands and benchmarks for the `becr` tool.

pub mod bench;
pub mod cli;
pub mod embeddings;
pub mod error;
pub mod report;
pub mod spectrogram;
pub mod wav;

pub use error::{CliError, CliResult};
