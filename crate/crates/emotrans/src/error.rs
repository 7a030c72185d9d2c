use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}:{line}: unknown emotion label '{word}'", path.display())]
    Vocabulary {
        path: PathBuf,
        line: usize,
        word: String,
    },

    #[error("format error in {}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("corrupt tensor file {}: expected {expected} bytes, found {found}", path.display())]
    Corruption {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("no tensor named '{name}' (available: {available})")]
    MissingTensor { name: String, available: String },

    #[error("tensor '{tensor}' has no row keyed '{key}'")]
    MissingRow { tensor: String, key: String },

    #[error(transparent)]
    Core(#[from] emotrans_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Error {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
