//! Numerical kernels shared by the design algorithms.

pub mod quad;
mod qcqp;
mod rank1;
mod rayleigh;
mod root;
pub mod sdp;

pub use qcqp::{
    solve_qcqp1, solve_qcqp1_spectral, QcqpCase, QcqpOneProblem, QcqpSolution, SpectralComponent,
    SpectralQcqp,
};
pub use rank1::rank1_extract;
pub use rayleigh::generalized_rayleigh_max;
pub use root::scalar_root;
pub use sdp::{solve_sdp, HermCoef, LinearFunctional, Lmi, SdpProblem, SdpSolution, SdpStatus};
