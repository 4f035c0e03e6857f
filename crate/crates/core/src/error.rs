use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::store::ItemId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("`{iri}` appears both as a predicate and as a subject or object")]
    KindConflict { iri: String },

    #[error("unknown item id {0}")]
    UnknownId(ItemId),

    #[error("unknown IRI `{0}`")]
    UnknownIri(String),

    #[error("no embedding vector for item {0}")]
    MissingVector(ItemId),

    #[error("vector file: {0}")]
    Format(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("uninterpretable query: {0}")]
    Uninterpretable(String),

    #[error("no annotated query could be assembled:\n{}", reasons.join("\n"))]
    Infeasible { reasons: Vec<String> },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
