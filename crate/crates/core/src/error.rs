use alloc::string::String;
use core::fmt;

use crate::attr::AttrId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// An attribute appears twice where a sequence or concatenation forbids it.
    DuplicateAttribute(AttrId),
    /// A search or enumeration would exceed its configured bound.
    Capacity {
        what: &'static str,
        limit: usize,
        requested: usize,
    },
    InvalidArgument(String),
    /// A declared ordering property does not hold for the data or plan.
    ContractViolation(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DuplicateAttribute(a) => write!(f, "duplicate attribute `{a}`"),
            Error::Capacity {
                what,
                limit,
                requested,
            } => write!(f, "{what}: {requested} exceeds the bound of {limit}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::ContractViolation(msg) => write!(f, "contract violation: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
