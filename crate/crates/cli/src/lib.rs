//! Config loading and output formats shared by the `ris-atomic` binary and
//! its tests.

pub mod config;
pub mod output;
