use std::io;

use thiserror::Error;

pub type Result<T, E = EngineError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Core(#[from] winchain_core::Error),
    #[error("{0}")]
    Format(String),
    #[error("step {index}: {source}")]
    Step {
        index: usize,
        #[source]
        source: Box<EngineError>,
    },
}

impl EngineError {
    pub fn format(msg: impl Into<String>) -> Self {
        EngineError::Format(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        EngineError::Core(winchain_core::Error::ContractViolation(msg.into()))
    }

    pub fn at_step(self, index: usize) -> Self {
        match self {
            e @ EngineError::Step { .. } => e,
            e => EngineError::Step {
                index,
                source: Box::new(e),
            },
        }
    }

    /// Whether the root cause is a violated ordering contract.
    pub fn is_contract_violation(&self) -> bool {
        match self {
            EngineError::Core(winchain_core::Error::ContractViolation(_)) => true,
            EngineError::Step { source, .. } => source.is_contract_violation(),
            _ => false,
        }
    }
}
