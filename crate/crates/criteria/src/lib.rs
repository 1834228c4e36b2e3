//! Holds the `acceptance` test target, which checks the simulator against
//! its acceptance criteria and prints one PASS/FAIL line per criterion:
//!
//! ```text
//! cargo test -p ris-atomic-criteria --test acceptance
//! ```
//!
//! The suite lives in its own package so that a failing criterion does not
//! stop `cargo test --workspace` before the unit and integration tests of
//! the other packages have run.
