//! Storage engine, executor and tooling for window-function chains.

pub mod bench;
pub mod block;
pub mod codec;
pub mod csvio;
pub mod error;
pub mod exec;
pub mod gen;
pub mod hash;
pub mod mem;
pub mod queries;
pub mod runner;
pub mod segment;
pub mod sort;
pub mod spec;
pub mod table;
pub mod validate;

pub use error::{EngineError, Result};
