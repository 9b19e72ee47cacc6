//! Errors with the pipeline's exit-code contract: 2 for missing or
//! invalid configuration, 3 for data contract violations, 4 for
//! numerical aborts.

use lifetag_core::corpus::CorpusError;
use lifetag_core::eval::EvalError;
use lifetag_core::lexicon::LexiconError;
use lifetag_core::model::ModelError;
use lifetag_core::synthgen::SynthError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data contract violation: {0}")]
    Data(String),
    #[error("numerical abort: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> CliError {
        CliError::Data(e.to_string())
    }
}

impl From<LexiconError> for CliError {
    fn from(e: LexiconError) -> CliError {
        // the lexicon is configuration: a bad file means a bad setup
        CliError::Config(e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> CliError {
        match e {
            SynthError::Parse { .. } | SynthError::InvalidConfig(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> CliError {
        match e {
            ModelError::NonFinite { .. } => CliError::Numeric(e.to_string()),
            ModelError::InvalidConfig(_) => CliError::Config(e.to_string()),
            ModelError::Io(_) | ModelError::BadCheckpoint(_) => CliError::Data(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> CliError {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Data(format!("io error: {e}"))
    }
}
