use crate::error::{Error, Result};
use crate::linalg::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use super::db_to_lin;

/// Scenario scalars. Column/user indexing throughout the crate:
/// `0..U` are Carols, `U` is Willie, `U + 1` is Bob.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub mt: usize,
    pub mr: usize,
    pub u_carols: usize,
    pub n_rf: usize,
    /// Watt.
    pub total_power: f64,
    /// Watt, one per Carol.
    pub noise_carol: Vec<f64>,
    pub noise_willie: f64,
    pub noise_bob: f64,
    pub noise_radar: f64,
    /// bits/s/Hz, one per Carol.
    pub qos_carol: Vec<f64>,
    pub qos_willie: f64,
    pub covert_eps: f64,
    pub sensing_gamma_db: f64,
    pub angular_samples: usize,
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let comm = db_to_lin(-5.0);
        Self {
            mt: 32,
            mr: 32,
            u_carols: 4,
            n_rf: 6,
            total_power: 1.0,
            noise_carol: vec![comm; 4],
            noise_willie: comm,
            noise_bob: comm,
            noise_radar: db_to_lin(-10.0),
            qos_carol: vec![1.0; 4],
            qos_willie: 1.0,
            covert_eps: 0.001,
            sensing_gamma_db: 10.0,
            angular_samples: 181,
            rng_seed: 0,
        }
    }
}

impl SystemConfig {
    /// Change the Carol count, keeping the first Carol's noise and QoS for all.
    pub fn with_carols(mut self, u: usize) -> Self {
        let noise = self.noise_carol.first().copied().unwrap_or(self.noise_willie);
        let qos = self.qos_carol.first().copied().unwrap_or(self.qos_willie);
        self.u_carols = u;
        self.noise_carol = vec![noise; u];
        self.qos_carol = vec![qos; u];
        self
    }

    pub fn with_antennas(mut self, mt: usize, mr: usize) -> Self {
        self.mt = mt;
        self.mr = mr;
        self
    }

    /// Same QoS for every overt user.
    pub fn with_qos(mut self, xi: f64) -> Self {
        self.qos_carol = vec![xi; self.u_carols];
        self.qos_willie = xi;
        self
    }

    /// Same noise power for all communication receivers.
    pub fn with_comm_noise(mut self, watt: f64) -> Self {
        self.noise_carol = vec![watt; self.u_carols];
        self.noise_willie = watt;
        self.noise_bob = watt;
        self
    }

    pub fn streams(&self) -> usize {
        self.u_carols + 2
    }

    pub fn willie(&self) -> usize {
        self.u_carols
    }

    pub fn bob(&self) -> usize {
        self.u_carols + 1
    }

    /// Noise power at the receiver of column `i`.
    pub fn noise(&self, i: usize) -> f64 {
        if i < self.u_carols {
            self.noise_carol[i]
        } else if i == self.u_carols {
            self.noise_willie
        } else {
            self.noise_bob
        }
    }

    /// Rate requirement of overt user `u` (Carols and Willie).
    pub fn qos(&self, u: usize) -> f64 {
        if u < self.u_carols {
            self.qos_carol[u]
        } else {
            self.qos_willie
        }
    }

    /// `2^xi - 1` for overt user `u`.
    pub fn sinr_target(&self, u: usize) -> f64 {
        2f64.powf(self.qos(u)) - 1.0
    }

    pub fn sensing_gamma(&self) -> f64 {
        db_to_lin(self.sensing_gamma_db)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.mt == 0 || self.mr == 0 {
            return bad("antenna counts must be positive");
        }
        if self.n_rf == 0 || self.n_rf > self.mt {
            return bad("RF chain count must lie in 1..=mt");
        }
        if self.noise_carol.len() != self.u_carols || self.qos_carol.len() != self.u_carols {
            return bad("per-Carol lists must have length U");
        }
        let powers = [self.total_power, self.noise_willie, self.noise_bob, self.noise_radar];
        if powers.iter().chain(&self.noise_carol).any(|&p| !(p > 0.0 && p.is_finite())) {
            return bad("powers must be positive and finite");
        }
        if self.qos_carol.iter().chain([&self.qos_willie]).any(|&q| !(q >= 0.0)) {
            return bad("QoS requirements must be nonnegative");
        }
        if !(self.covert_eps > 0.0 && self.covert_eps < 1.0) {
            return bad("covertEps must lie in (0, 1)");
        }
        if self.angular_samples < 2 {
            return bad("angularSamples must be at least 2");
        }
        if !self.sensing_gamma_db.is_finite() {
            return bad("sensing threshold must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clutter {
    pub angle: f64,
    pub amp: C64,
}

/// Target and clutter geometry seen by the sensing receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingScene {
    pub target_angle: f64,
    pub target_amp: C64,
    pub clutters: Vec<Clutter>,
}

impl SensingScene {
    /// Build a scene from angles (radians) and powers (dBW); phases are drawn uniformly.
    pub fn from_powers<R: Rng + ?Sized>(
        target_angle: f64,
        target_power_db: f64,
        clutters: &[(f64, f64)],
        rng: &mut R,
    ) -> Self {
        let mut amp = |db: f64| C64::from_polar(db_to_lin(db).sqrt(), rng.random_range(-PI..PI));
        let target_amp = amp(target_power_db);
        let clutters = clutters
            .iter()
            .map(|&(angle, db)| Clutter { angle, amp: amp(db) })
            .collect();
        Self { target_angle, target_amp, clutters }
    }

    /// Target at 10 degrees (5 dBW), clutter at -30 and 60 degrees (20 dBW each).
    pub fn standard(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ce9_e5ce_9e5c);
        Self::from_powers(
            10f64.to_radians(),
            5.0,
            &[((-30f64).to_radians(), 20.0), (60f64.to_radians(), 20.0)],
            &mut rng,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let half = PI / 2.0 + 1e-12;
        let ok = |a: f64| a.is_finite() && a.abs() <= half;
        if !ok(self.target_angle) || self.clutters.iter().any(|c| !ok(c.angle)) {
            return Err(Error::InvalidGeometry("angles must lie in [-pi/2, pi/2]".into()));
        }
        Ok(())
    }
}
