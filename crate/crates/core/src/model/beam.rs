use crate::error::{Error, Result};
use crate::linalg::{fro2, CMat, CVec};

use super::SystemConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamKind {
    FullyDigital,
    Hybrid,
}

/// Transmit beams (one column per stream) and the sensing receive filter.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSolution {
    pub kind: BeamKind,
    pub v_full: CMat,
    pub v_rf: Option<CMat>,
    pub v_d: Option<CMat>,
    pub w: CVec,
}

impl BeamformerSolution {
    pub fn fully_digital(v: CMat, w: CVec) -> Self {
        Self { kind: BeamKind::FullyDigital, v_full: v, v_rf: None, v_d: None, w }
    }

    pub fn hybrid(v_rf: CMat, v_d: CMat, w: CVec) -> Self {
        let v_full = &v_rf * &v_d;
        Self { kind: BeamKind::Hybrid, v_full, v_rf: Some(v_rf), v_d: Some(v_d), w }
    }

    pub fn column(&self, i: usize) -> CVec {
        self.v_full.column(i).into_owned()
    }

    pub fn power(&self) -> f64 {
        fro2(&self.v_full)
    }

    /// Structural checks: shapes, unit-modulus analog entries, factor consistency.
    pub fn check(&self, cfg: &SystemConfig) -> Result<()> {
        if self.v_full.nrows() != cfg.mt || self.v_full.ncols() != cfg.streams() {
            return Err(Error::Dimension("beam matrix shape".into()));
        }
        if self.w.len() != cfg.mr {
            return Err(Error::Dimension("receive filter length".into()));
        }
        if let (Some(rf), Some(d)) = (&self.v_rf, &self.v_d) {
            if rf.iter().any(|z| (z.norm() - 1.0).abs() > 1e-9) {
                return Err(Error::Dimension("analog entries are not unit modulus".into()));
            }
            let diff = fro2(&(rf * d - &self.v_full)).sqrt();
            if diff > 1e-9 * (1.0 + fro2(&self.v_full).sqrt()) {
                return Err(Error::Dimension("v_full differs from v_rf * v_d".into()));
            }
        }
        Ok(())
    }
}
