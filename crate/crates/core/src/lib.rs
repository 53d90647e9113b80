//! Joint wireless signal enhancement and modulation recognition.
//!
//! The crate is organised bottom-up:
//!
//! * [`signal`] synthesises labelled I/Q frames (modulation, channel, AWGN).
//! * [`nncore`] is a small 1-D network kernel with analytic backward passes.
//! * [`models`] assembles the ACBlock, the enhancer, the recognizer and the
//!   joint network together with the multi-task loss.
//! * [`train`] holds the mini-batch SGD loop shared by centralized and
//!   federated training.
//! * [`fed`] simulates federated training (FedAvg, FedProx, FedProx+).
//! * [`eval`] computes accuracy tables, confusion matrices and enhancement gain.
//! * [`cli`] is the experiment front-end used by the `wser` binary.

pub mod cli;
pub mod error;
pub mod eval;
pub mod fed;
pub mod models;
pub mod nncore;
pub mod rng;
pub mod signal;
pub mod train;

pub use error::{Error, Result};
