//! Error type shared across the codec.

use std::fmt;
use std::io;

#[derive(Debug)]
pub enum CodecError {
    Io(io::Error),
    /// Input file or stream is not in a format this codec accepts.
    UnsupportedFormat(String),
    /// Mono input required; carries the channel count found.
    ChannelCount(u16),
    /// CodecConfig failed validation or could not be parsed.
    InvalidConfig(String),
    /// A coded frame or stream could not be decoded.
    CorruptStream {
        frame: Option<usize>,
        detail: String,
    },
    /// Codebook training was asked for more codewords than the data supports.
    InsufficientTrainingData {
        required: usize,
        got: usize,
    },
    /// Two sequences that must have equal lengths do not.
    LengthMismatch {
        expected: usize,
        got: usize,
    },
}

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodecError::Io(e) => write!(f, "i/o error: {}", e),
            CodecError::UnsupportedFormat(s) => write!(f, "unsupported format: {}", s),
            CodecError::ChannelCount(n) => {
                write!(f, "expected mono input, got {} channels", n)
            }
            CodecError::InvalidConfig(s) => write!(f, "invalid config: {}", s),
            CodecError::CorruptStream { frame, detail } => match frame {
                Some(v) => write!(f, "corrupt stream at frame {}: {}", v, detail),
                None => write!(f, "corrupt stream: {}", detail),
            },
            CodecError::InsufficientTrainingData { required, got } => write!(
                f,
                "insufficient training data: need at least {} vectors, got {}",
                required, got
            ),
            CodecError::LengthMismatch { expected, got } => {
                write!(f, "length mismatch: expected {}, got {}", expected, got)
            }
        }
    }
}

impl std::error::Error for CodecError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CodecError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for CodecError {
    fn from(e: io::Error) -> Self {
        CodecError::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, CodecError>;
