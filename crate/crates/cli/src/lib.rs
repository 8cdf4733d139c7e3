//! Library side of the `scramble` binary.

pub mod config;
pub mod manifest;
pub mod output;
pub mod pipeline;
