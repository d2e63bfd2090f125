//! Scenario-driven front end for the FW toolkit.

pub mod output;
pub mod presets;
pub mod scenario;
pub mod tasks;

use fw_core::FwError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Core(#[from] FwError),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// 2 parse, 3 validity or field consistency, 4 numerical, 5 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Io(_) => 5,
            CliError::Core(e) => match e {
                FwError::InvalidParameter(_) => 2,
                FwError::Validity(_) | FwError::FieldConsistency { .. } => 3,
                FwError::Io(_) => 5,
                FwError::InvalidBasis(_)
                | FwError::SingularSqrt(_)
                | FwError::NotExactCase(_)
                | FwError::Unsupported(_)
                | FwError::GapClosure(_)
                | FwError::FieldDomain(_)
                | FwError::Stiffness { .. } => 4,
            },
        }
    }
}
