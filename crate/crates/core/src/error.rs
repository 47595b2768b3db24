use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("catalog must contain at least one item")]
    EmptyCatalog,

    #[error("duplicate item name {0:?}")]
    DuplicateName(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("item id {id} is outside 1..={n}")]
    ItemOutOfRange { id: i64, n: usize },

    #[error("transaction must contain at least one item")]
    EmptyTransaction,

    #[error("duplicate item {0} in transaction")]
    DuplicateItem(u32),

    #[error("input contains no transactions")]
    EmptyInput,

    #[error("row {row}: expected {expected} values, found {found}")]
    ArityMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),

    #[error("fake transaction count rounds to zero (w = {w}, N = {real})")]
    NoFakes { w: String, real: usize },

    #[error("enumeration bound exceeded: {0}")]
    TooLarge(String),

    #[error("key file: {0}")]
    KeyFile(String),

    #[error("reconstruction unsupported for normal model")]
    UnsupportedModel,

    #[error("catalog mismatch: {0}")]
    CatalogMismatch(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
