//! Simulation of an RIS-assisted atomic MIMO receiver.
//!
//! `K` single-antenna users transmit PAM symbols through an `N`-element
//! reconfigurable intelligent surface (RIS) towards `M` Rydberg vapor cells.
//! Each cell is read out by a photodetector that only sees the magnitude of
//! the incident field plus a strong local oscillator (LO). The RIS phases are
//! tuned so that the effective channel becomes real once referenced to the LO
//! phase, after which detection reduces to a linear least-squares problem.
//!
//! The crate is split along the processing chain:
//!
//! * [`channel`]: channel matrices, LO vector and the effective channel.
//! * [`modem`]: Gray-labelled PAM and Eb/N0 calibration.
//! * [`ris_opt`]: imaginary-part objective, its gradient, Adam and oracles.
//! * [`detect`]: magnitude-only front end and the detectors.
//! * [`sim`]: seeded Monte-Carlo campaigns.
//!
//! Trials of a BER campaign run on rayon when the `parallel` feature is
//! enabled (the default); without it every [`Execution`] mode is sequential.

// `!(x >= 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod detect;
mod error;
mod exec;
pub mod modem;
pub mod ris_opt;
pub mod seed;
pub mod sim;

pub use error::{Error, Result};
pub use exec::Execution;

pub use num_complex::Complex64;
