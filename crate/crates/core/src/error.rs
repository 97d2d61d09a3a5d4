use thiserror::Error;

/// Errors produced by the simulation, estimation and limit routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid offspring law: {0}")]
    InvalidLaw(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("invalid displacement model: {0}")]
    InvalidModel(String),

    #[error("{operation} is not supported for the {family} displacement family")]
    UnsupportedFamily {
        family: &'static str,
        operation: &'static str,
    },

    #[error("invalid scaling regime: {0}")]
    InvalidRegime(String),

    #[error("generation {n} outside the validated range 0..={n_max}")]
    OutOfRange { n: usize, n_max: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("particle cap {cap} exceeded after {visited} node visits ({partial_z_n} generation-n particles so far)")]
    ParticleCap {
        cap: u64,
        visited: u64,
        partial_z_n: u64,
    },

    #[error("rejection budget of {attempts} attempts exhausted (acceptance probability {acceptance:.3e})")]
    RejectionBudget { attempts: u64, acceptance: f64 },

    #[error("enumeration budget of {budget} outcomes exceeded")]
    OutcomeBudget { budget: u64 },

    #[error("cannot parse `{token}`: {reason}")]
    Parse { token: String, reason: String },
}

impl Error {
    /// True for errors caused by exhausting a computational budget.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            Error::ParticleCap { .. } | Error::RejectionBudget { .. } | Error::OutcomeBudget { .. }
        )
    }

    pub(crate) fn parse(token: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            token: token.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
