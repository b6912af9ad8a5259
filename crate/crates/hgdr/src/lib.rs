//! File formats, the experiment pipeline and the command-line driver built
//! on [`hgdr_core`].

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod graph_dump;
pub mod harness;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod tsv;

mod binio;

/// Errors from reading or writing any of the on-disk formats.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("input contains no interactions")]
    Empty,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] hgdr_core::Error),
}
