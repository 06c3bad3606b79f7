use crate::error::Result;

use super::{
    hypothesis_stats, sensing_sinr, sinrs, BeamformerSolution, ChannelSet, SensingScene,
    SystemConfig,
};

/// Which constraints a design is checked against.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditScope {
    /// Overt users with a rate requirement.
    pub qos_users: Vec<usize>,
    pub sensing: bool,
}

impl AuditScope {
    /// Carols and Willie, with sensing.
    pub fn nominal(cfg: &SystemConfig) -> Self {
        Self { qos_users: (0..=cfg.willie()).collect(), sensing: true }
    }

    /// Carols only; Willie's QoS is dropped under imperfect CSI.
    pub fn robust(cfg: &SystemConfig) -> Self {
        Self { qos_users: (0..cfg.u_carols).collect(), sensing: true }
    }

    pub fn without_sensing(mut self) -> Self {
        self.sensing = false;
        self
    }
}

/// Relative constraint slacks; nonnegative means satisfied.
///
/// * power: `(P - |V|^2) / P`
/// * qos: `(SINR_u - t_u) / t_u` with `t_u = 2^xi_u - 1`
/// * covert: `Gamma - z` at the true Willie channel
/// * sensing: `(SINR_r - gamma) / gamma`
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintAudit {
    pub power: f64,
    pub qos: Vec<(usize, f64)>,
    pub covert: f64,
    pub sensing: Option<f64>,
}

impl ConstraintAudit {
    pub fn min_slack(&self) -> f64 {
        let mut m = self.power.min(self.covert);
        for &(_, s) in &self.qos {
            m = m.min(s);
        }
        if let Some(s) = self.sensing {
            m = m.min(s);
        }
        m
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.min_slack() >= -tol
    }
}

pub fn audit(
    bf: &BeamformerSolution,
    ch: &ChannelSet,
    scene: &SensingScene,
    cfg: &SystemConfig,
    scope: &AuditScope,
) -> Result<ConstraintAudit> {
    let power = (cfg.total_power - bf.power()) / cfg.total_power;
    let s = sinrs(&bf.v_full, &ch.h, cfg);
    let qos = scope
        .qos_users
        .iter()
        .map(|&u| {
            let t = cfg.sinr_target(u);
            (u, if t > 0.0 { (s[u] - t) / t } else { 1.0 })
        })
        .collect();
    let stats = hypothesis_stats(bf, ch, cfg);
    let covert = stats.gamma_cap - stats.z;
    let sensing = if scope.sensing {
        let g = cfg.sensing_gamma();
        Some((sensing_sinr(bf, scene, cfg)? - g) / g)
    } else {
        None
    };
    Ok(ConstraintAudit { power, qos, covert, sensing })
}
