//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::Path;

use covert_isac::model::{db_to_lin, SensingScene, SystemConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{HarnessError, Result};

/// Everything that defines one design instance apart from the channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseConfig {
    pub system: SystemConfig,
    pub target_deg: f64,
    pub target_power_db: f64,
    pub clutter_deg: Vec<f64>,
    pub clutter_power_db: f64,
    /// Squared radius of the Willie CSI uncertainty ball.
    pub delta_sq: f64,
    /// Propagation paths per user.
    pub paths: usize,
    /// False-alarm rate used for the reported detection probability.
    pub pfa: f64,
}

impl Default for BaseConfig {
    fn default() -> Self {
        Self {
            system: SystemConfig::default(),
            target_deg: 10.0,
            target_power_db: 5.0,
            clutter_deg: vec![-30.0, 60.0],
            clutter_power_db: 20.0,
            delta_sq: 0.0,
            paths: 3,
            pfa: 1e-4,
        }
    }
}

impl BaseConfig {
    /// Scene with reflection phases drawn from `seed`.
    pub fn scene(&self, seed: u64) -> SensingScene {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ce9_e5ce_9e5c);
        let clutters: Vec<(f64, f64)> =
            self.clutter_deg.iter().map(|&a| (a.to_radians(), self.clutter_power_db)).collect();
        SensingScene::from_powers(self.target_deg.to_radians(), self.target_power_db, &clutters, &mut rng)
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || HarnessError::Config(format!("bad value {value:?} for {key}"));
        let num = || value.trim().parse::<f64>().map_err(|_| bad());
        let count = || value.trim().parse::<usize>().map_err(|_| bad());
        let s = &mut self.system;
        match key {
            "mt" => s.mt = count()?,
            "mr" => s.mr = count()?,
            "antennas" => {
                let n = count()?;
                s.mt = n;
                s.mr = n;
            }
            "carols" => *s = s.clone().with_carols(count()?),
            "rf_chains" => s.n_rf = count()?,
            "power" => s.total_power = num()?,
            "comm_noise_db" => *s = s.clone().with_comm_noise(db_to_lin(num()?)),
            "radar_noise_db" => s.noise_radar = db_to_lin(num()?),
            "qos" => *s = s.clone().with_qos(num()?),
            "eps" => s.covert_eps = num()?,
            "gamma_db" => s.sensing_gamma_db = num()?,
            "angular_samples" => s.angular_samples = count()?,
            "target_deg" => self.target_deg = num()?,
            "target_power_db" => self.target_power_db = num()?,
            "clutter_deg" => {
                self.clutter_deg = value
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<_>>()?;
            }
            "clutter_power_db" => self.clutter_power_db = num()?,
            "delta_sq" => self.delta_sq = num()?,
            "paths" => self.paths = count()?,
            "pfa" => self.pfa = num()?,
            _ => return Err(HarnessError::Config(format!("unknown key {key}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        if !(self.delta_sq >= 0.0 && self.delta_sq.is_finite()) {
            return Err(HarnessError::Config("delta_sq must be nonnegative".into()));
        }
        if self.paths == 0 {
            return Err(HarnessError::Config("paths must be positive".into()));
        }
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return Err(HarnessError::Config("pfa must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Parse `key = value` lines. Blank lines and `#` comments are skipped; keys
/// that are not configuration settings are returned for the caller.
pub fn parse_config(text: &str) -> Result<(BaseConfig, BTreeMap<String, String>)> {
    let mut base = BaseConfig::default();
    let mut rest = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("line {}: expected key = value", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        match k {
            "sweep" | "values" | "schemes" | "trials" | "seed" | "out" | "format" => {
                rest.insert(k.to_string(), v.to_string());
            }
            _ => base.set(k, v)?,
        }
    }
    Ok((base, rest))
}

pub fn load_config(path: &Path) -> Result<(BaseConfig, BTreeMap<String, String>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io { path: path.display().to_string(), reason: e.to_string() })?;
    parse_config(&text)
}
