//! Receive beampatterns of single designs.

use std::path::PathBuf;

use covert_isac::model::{deg, PerformanceReport};

use crate::config::BaseConfig;
use crate::error::{HarnessError, Result};
use crate::experiment::{run_trial, trial_seed, Scheme};
use crate::output::{sig9, write_text};

#[derive(Debug, Clone, PartialEq)]
pub struct BeampatternSpec {
    pub base: BaseConfig,
    pub schemes: Vec<Scheme>,
    /// One design per clutter power (dBW); empty means the base value only.
    pub clutter_powers_db: Vec<f64>,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeampatternRow {
    pub scheme: Scheme,
    pub clutter_power_db: f64,
    pub angle_deg: f64,
    pub gain_db: f64,
}

/// Design each (scheme, clutter power) on the first trial's channels and
/// return its normalized pattern, `angular_samples` rows per combination.
/// An infeasible design is an error.
pub fn emit_beampattern(spec: &BeampatternSpec) -> Result<Vec<BeampatternRow>> {
    spec.base.validate()?;
    let powers =
        if spec.clutter_powers_db.is_empty() { vec![spec.base.clutter_power_db] } else { spec.clutter_powers_db.clone() };
    let mut rows = Vec::new();
    for &scheme in &spec.schemes {
        for &power in &powers {
            let base = BaseConfig { clutter_power_db: power, ..spec.base.clone() };
            let report = pattern(scheme, &base, trial_seed(spec.seed, 0))?;
            rows.extend(report.beampattern.iter().map(|&(a, db)| BeampatternRow {
                scheme,
                clutter_power_db: power,
                angle_deg: deg(a),
                gain_db: db,
            }));
        }
    }
    if let Some(path) = &spec.output {
        write_text(path, &beampattern_csv(&rows))?;
    }
    Ok(rows)
}

pub fn beampattern_csv(rows: &[BeampatternRow]) -> String {
    let mut text = String::from("scheme,clutter_power_db,angle_deg,gain_db\n");
    for r in rows {
        text += &format!("{},{},{},{}\n", r.scheme, sig9(r.clutter_power_db), sig9(r.angle_deg), sig9(r.gain_db));
    }
    text
}

fn pattern(scheme: Scheme, base: &BaseConfig, seed: u64) -> Result<PerformanceReport> {
    run_trial(scheme, base, seed, false)?
        .map(|t| t.report)
        .ok_or_else(|| HarnessError::Core(covert_isac::Error::InfeasibleDesign(format!("{scheme} beampattern"))))
}
