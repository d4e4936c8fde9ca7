use thiserror::Error;

use crate::phys_model::SettingPair;

/// Errors produced by the simulation library.
#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no kept events for setting pair {0}")]
    NoKeptEvents(SettingPair),

    #[error("events do not match the {0} routing rule")]
    SchemeMismatch(crate::postselect::Scheme),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
