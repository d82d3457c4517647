use scaling_laws::arch::ArchError;
use scaling_laws::fitter::FitError;
use scaling_laws::frontier::FrontierError;
use scaling_laws::laws::LawError;
use scaling_laws::planner::PlanError;
use scaling_laws::records::RecordError;
use scaling_laws::synth::SynthError;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_UNDER_DETERMINED: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    UnderDetermined(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Parse(_) => EXIT_PARSE,
            CliError::UnderDetermined(_) => EXIT_UNDER_DETERMINED,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(format!("I/O error: {e}"))
    }
}

impl From<RecordError> for CliError {
    fn from(e: RecordError) -> Self {
        match e {
            RecordError::Io(e) => e.into(),
            RecordError::Frontier(e) => e.into(),
            RecordError::Arch(e) => e.into(),
            other => CliError::Parse(other.to_string()),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::UnderDetermined(_) => CliError::UnderDetermined(e.to_string()),
            FitError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            other => CliError::Failure(other.to_string()),
        }
    }
}

impl From<FrontierError> for CliError {
    fn from(e: FrontierError) -> Self {
        match e {
            FrontierError::Fit(f) => f.into(),
            other => CliError::Failure(other.to_string()),
        }
    }
}

impl From<ArchError> for CliError {
    fn from(e: ArchError) -> Self {
        match e {
            ArchError::Invalid(_) => CliError::Usage(e.to_string()),
            ArchError::Overflow(_) => CliError::Failure(e.to_string()),
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<LawError> for CliError {
    fn from(e: LawError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Arch(a) => a.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}
