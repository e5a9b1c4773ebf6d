use std::fmt;

use dobstab::Error;

use crate::config::Source;

/// Everything that stops a command. `Input` maps to exit code 2, `Internal`
/// to exit code 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }

    pub fn input(msg: impl fmt::Display) -> Self {
        CliError::Input(msg.to_string())
    }

    pub fn internal(msg: impl fmt::Display) -> Self {
        CliError::Internal(msg.to_string())
    }

    /// Classifies a library error raised while running a command. Failures
    /// caused by the configuration are reported against the config line that
    /// most plausibly caused them.
    pub fn from_core(err: Error, source: &Source) -> Self {
        let at = |path: &[&[&str]]| CliError::Input(source.message(path, &err));
        match err {
            Error::InvalidSampleTime(_) | Error::SampleTimeMismatch { .. } => at(&[&["sample_time", "T_s"]]),
            Error::FrictionNotNeglected { .. } => at(&[&["plant"], &["friction", "b", "b_m"]]),
            Error::NearDefective { .. } | Error::NotDefective(_) | Error::NotSeparable { .. } => {
                at(&[&["analysis"], &["feedback"]])
            }
            Error::InvalidSweep(_) => CliError::Input(format!("--sweep: {err}")),
            Error::InvalidProfile(_) => at(&[&["scenario"]]),
            Error::InvalidParameter { .. } | Error::DegenerateDisturbanceInput | Error::InvalidTransferFunction(_) => {
                CliError::Input(source.message(&[], &err))
            }
            Error::NonFinite(_) | Error::NoConvergence | Error::Diverged { .. } => CliError::Internal(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Internal(err.to_string())
    }
}
