use alloc::string::String;
use core::fmt;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    Argument(String),
    /// Two inputs that must agree on a dimension do not.
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// A vector whose norm is zero was used where a direction is required.
    DegenerateVector { matrix: &'static str, row: usize },
    /// Transfer-probability row whose denominator vanished.
    DegenerateRow { row: usize },
    /// NaN or infinity in an input that must be finite.
    NonFinite { what: &'static str },
    /// Training produced a non-finite loss.
    Divergence { epoch: usize, batch: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::Shape {
                what,
                expected,
                found,
            })
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Argument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Shape {
                what,
                expected,
                found,
            } => write!(
                f,
                "shape mismatch in {what}: expected {expected}, found {found}"
            ),
            Error::DegenerateVector { matrix, row } => {
                write!(f, "zero-norm vector at row {row} of {matrix}")
            }
            Error::DegenerateRow { row } => {
                write!(
                    f,
                    "transfer-probability denominator is zero at utterance {row}"
                )
            }
            Error::NonFinite { what } => write!(f, "non-finite value in {what}"),
            Error::Divergence { epoch, batch } => {
                write!(f, "non-finite loss at epoch {epoch}, batch {batch}")
            }
        }
    }
}

impl core::error::Error for Error {}
