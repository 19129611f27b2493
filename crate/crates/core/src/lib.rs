//! Stochastic simulation of randomly generated catalytic reaction sets of
//! string polymers, in a continuous stirred-tank reactor or a protocell
//! bounded by a length-selective membrane.

pub mod chemistry;
pub mod cli_io;
pub mod engine;
pub mod error;
pub mod experiments;

pub use error::{Error, Result};
