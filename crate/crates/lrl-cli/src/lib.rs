//! Library side of the `lrl` experiment harness.
//!
//! The binary in `main.rs` is a thin wrapper; everything testable lives
//! here (argument model, config parsing, result tables, command logic).

pub mod cli;
pub mod commands;
pub mod config;
pub mod reference;
pub mod svgplot;
pub mod table;
