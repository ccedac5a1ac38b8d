use std::fmt;
use std::process::ExitCode;

use qcurate_core::curation::CurationError;
use qcurate_core::embedding::EmbeddingError;
use qcurate_core::mixer::MixerError;

/// Process exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Internal = 1,
    /// Missing, unreadable or malformed input.
    Input = 2,
    /// Input parses but violates a data invariant.
    Invariant = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn new(kind: ExitKind, error: impl Into<anyhow::Error>) -> Self {
        CliError {
            kind,
            error: error.into(),
        }
    }

    pub fn input(msg: impl fmt::Display) -> Self {
        Self::new(ExitKind::Input, anyhow::anyhow!("{msg}"))
    }

    pub fn invariant(msg: impl fmt::Display) -> Self {
        Self::new(ExitKind::Invariant, anyhow::anyhow!("{msg}"))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind as u8)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches an exit class and a context line to any error.
pub trait ResultExt<T> {
    fn or_input(self, ctx: impl fmt::Display) -> CliResult<T>;
    fn or_invariant(self, ctx: impl fmt::Display) -> CliResult<T>;
    fn or_internal(self, ctx: impl fmt::Display) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> ResultExt<T> for Result<T, E> {
    fn or_input(self, ctx: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError::new(ExitKind::Input, e.into().context(ctx.to_string())))
    }

    fn or_invariant(self, ctx: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError::new(ExitKind::Invariant, e.into().context(ctx.to_string())))
    }

    fn or_internal(self, ctx: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError::new(ExitKind::Internal, e.into().context(ctx.to_string())))
    }
}

pub fn curation_kind(e: &CurationError) -> ExitKind {
    match e {
        CurationError::Parse { .. } | CurationError::Format(_) => ExitKind::Input,
        _ => ExitKind::Invariant,
    }
}

pub fn embedding_kind(e: &EmbeddingError) -> ExitKind {
    match e {
        EmbeddingError::Format(_) => ExitKind::Input,
        _ => ExitKind::Invariant,
    }
}

pub fn mixer_kind(e: &MixerError) -> ExitKind {
    match e {
        MixerError::Format(_) => ExitKind::Input,
        MixerError::NonFinite(_) => ExitKind::Internal,
        _ => ExitKind::Invariant,
    }
}

/// Classifies a core error by its own taxonomy.
pub trait Classify<T> {
    fn classified(self, ctx: impl fmt::Display) -> CliResult<T>;
}

macro_rules! classify_impl {
    ($err:ty, $f:ident) => {
        impl<T> Classify<T> for Result<T, $err> {
            fn classified(self, ctx: impl fmt::Display) -> CliResult<T> {
                self.map_err(|e| {
                    let kind = $f(&e);
                    CliError::new(kind, anyhow::Error::new(e).context(ctx.to_string()))
                })
            }
        }
    };
}

classify_impl!(CurationError, curation_kind);
classify_impl!(EmbeddingError, embedding_kind);
classify_impl!(MixerError, mixer_kind);
