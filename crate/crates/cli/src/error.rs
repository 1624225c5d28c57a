use std::fmt;

use fluidbound_core::bounds::BoundsError;
use fluidbound_core::euler::EulerError;
use fluidbound_core::fields::FieldError;
use fluidbound_core::kdv::KdvError;
use fluidbound_core::stability::StabilityError;

/// Failure of a command, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "invalid arguments: {m}"),
            CliError::Io(m) => write!(f, "I/O failure: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<tempfile::PersistError> for CliError {
    fn from(e: tempfile::PersistError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::InvalidGrid { .. } | FieldError::InvalidWindow { .. } => usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<StabilityError> for CliError {
    fn from(e: StabilityError) -> Self {
        use StabilityError::*;
        match e {
            Field(f) => f.into(),
            InvalidWavenumber { .. }
            | InvalidAmplitude { .. }
            | KOutOfRange { .. }
            | InvalidGrowthRate { .. }
            | DepthTooSmall { .. }
            | NotProvablyUnstable { .. }
            | InvalidTruncation { .. }
            | InvalidNormalization { .. }
            | TruncationTooSmall { .. }
            | UnderResolved { .. } => usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<EulerError> for CliError {
    fn from(e: EulerError) -> Self {
        use EulerError::*;
        match e {
            Field(f) => f.into(),
            Stability(s) => s.into(),
            InvalidStep { .. } | InvalidAmplitude { .. } | NormalizationMismatch { .. } | EquilibriumMismatch | InvalidDuration { .. } => {
                usage(e.to_string())
            }
            Cfl { .. } | NonFinite { .. } | GridMismatch => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<KdvError> for CliError {
    fn from(e: KdvError) -> Self {
        use KdvError::*;
        match e {
            Field(f) => f.into(),
            InvalidSpeed { .. } | InvalidDelta { .. } | InvalidTime { .. } | WindowTooSmall { .. } | DegeneratePair => usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Stability(s) => s.into(),
            BoundsError::DegenerateMode { .. } => CliError::Numerical(e.to_string()),
            _ => usage(e.to_string()),
        }
    }
}
