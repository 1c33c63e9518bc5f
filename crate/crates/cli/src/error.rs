use std::fmt;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config,
    Io,
    Backend,
    Validation,
}

impl Kind {
    pub fn code(self) -> u8 {
        match self {
            Kind::Config => 2,
            Kind::Io => 3,
            Kind::Backend => 4,
            Kind::Validation => 5,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn config(message: impl fmt::Display) -> Self {
        Self::new(Kind::Config, message.to_string())
    }

    pub fn validation(message: impl fmt::Display) -> Self {
        Self::new(Kind::Validation, message.to_string())
    }

    pub fn backend(message: impl fmt::Display) -> Self {
        Self::new(Kind::Backend, message.to_string())
    }

    /// An I/O failure on `path`.
    pub fn io(path: &std::path::Path, e: impl fmt::Display) -> Self {
        Self::new(Kind::Io, format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind.code())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// Corpus and simplification files: unreadable is I/O, unparsable is validation.
impl From<(&std::path::Path, radsimp_core::corpus::CorpusError)> for CliError {
    fn from((path, e): (&std::path::Path, radsimp_core::corpus::CorpusError)) -> Self {
        match e {
            radsimp_core::corpus::CorpusError::Io(e) => CliError::io(path, e),
            other => CliError::validation(format!("{}: {other}", path.display())),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
