//! Library side of the `senscommon` binary.

pub mod config;
pub mod demo;
pub mod pipeline;
