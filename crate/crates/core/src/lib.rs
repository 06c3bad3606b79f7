//! Beamforming design for covert-transmission-aided mmWave ISAC.
//!
//! A base station serves `U` regular users (Carols), one overt user who is also
//! a warden (Willie) and one covert user (Bob), while sensing a target through
//! a receive filter. The crate provides
//!
//! * [`model`]: configuration types, channels, rates, covertness and sensing metrics;
//! * [`numerics`]: generalized Rayleigh quotient, single-constraint QCQP, a dense
//!   complex SDP interior-point solver and helpers;
//! * [`fdbf`]: the SDR-based fully-digital design and its robust variant;
//! * [`hbf`]: the augmented-Lagrangian hybrid design and its robust variant;
//! * [`baselines`]: ZF, MRT, two-stage hybrid and communication-only schemes;
//! * [`oracles`]: brute-force and Monte-Carlo checkers for tests.

pub mod baselines;
pub mod error;
pub mod fdbf;
pub mod hbf;
pub mod linalg;
pub mod model;
pub mod numerics;
pub mod oracles;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
