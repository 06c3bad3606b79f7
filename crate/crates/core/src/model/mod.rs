//! System model: configuration, channels, beamformers and performance metrics.

mod audit;
mod beam;
mod channel;
mod config;
mod marcum;
mod metrics;

pub use audit::{audit, AuditScope, ConstraintAudit};
pub use beam::{BeamKind, BeamformerSolution};
pub use channel::{
    generate_channels, generate_random_channels, random_geometry, sample_ball, ChannelSet, Path,
};
pub use config::{Clutter, SensingScene, SystemConfig};
pub use marcum::marcum_q1;
pub use metrics::{
    angle_grid, beampattern, detection_error_exact, detection_probability, hypothesis_stats,
    kl_divergence, response, sensing_sinr, sinr_and_rates, sinrs, solve_gamma_cap, steering,
    HypothesisStats, KlDivergence, PerformanceReport,
};

/// dBW (or dB) to linear.
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear to dB.
pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Radians to degrees.
pub fn deg(x: f64) -> f64 {
    x.to_degrees()
}
