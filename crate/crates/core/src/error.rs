use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("index {index} out of range (len {len}) in {context}")]
    OutOfRange {
        context: &'static str,
        index: usize,
        len: usize,
    },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
}
