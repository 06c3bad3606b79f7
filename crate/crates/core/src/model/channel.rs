use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::FRAC_PI_2;

use super::{steering, SystemConfig};

/// One propagation path: departure angle (radians) and complex gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub angle: f64,
    pub gain: C64,
}

/// Downlink channels. Columns `0..U` are Carols, `U` Willie, `U + 1` Bob.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h: CMat,
    /// Estimate of Willie's channel available to the designer.
    pub willie_est: CVec,
    /// Radius of the Willie CSI uncertainty ball.
    pub willie_radius: f64,
}

impl ChannelSet {
    /// Perfect Willie CSI.
    pub fn new(h: CMat) -> Self {
        let u = h.ncols().saturating_sub(2);
        let willie_est = h.column(u).into_owned();
        Self { h, willie_est, willie_radius: 0.0 }
    }

    pub fn column(&self, i: usize) -> CVec {
        self.h.column(i).into_owned()
    }

    pub fn carols(&self) -> usize {
        self.h.ncols() - 2
    }

    pub fn willie(&self) -> CVec {
        self.column(self.carols())
    }

    pub fn bob(&self) -> CVec {
        self.column(self.carols() + 1)
    }

    /// Treat the current Willie column as the estimate and replace the true
    /// channel by a point drawn uniformly from the ball of the given radius.
    pub fn with_willie_error<R: Rng + ?Sized>(&self, radius: f64, rng: &mut R) -> Self {
        let est = self.willie();
        let truth = sample_ball(&est, radius, rng);
        let mut h = self.h.clone();
        h.set_column(self.carols(), &truth);
        Self { h, willie_est: est, willie_radius: radius }
    }

    /// Keep the true channel but declare an uncertainty radius around it.
    pub fn with_radius(&self, radius: f64) -> Self {
        Self { willie_radius: radius, ..self.clone() }
    }

    pub fn check(&self, cfg: &SystemConfig) -> Result<()> {
        if self.h.nrows() != cfg.mt || self.h.ncols() != cfg.streams() {
            return Err(Error::Dimension(format!(
                "channel is {}x{}, expected {}x{}",
                self.h.nrows(),
                self.h.ncols(),
                cfg.mt,
                cfg.streams()
            )));
        }
        if self.willie_est.len() != cfg.mt || !(self.willie_radius >= 0.0) {
            return Err(Error::Dimension("bad Willie estimate".into()));
        }
        Ok(())
    }
}

/// Uniform draw from the complex ball `{center + d : |d| <= radius}`.
pub fn sample_ball<R: Rng + ?Sized>(center: &CVec, radius: f64, rng: &mut R) -> CVec {
    if radius == 0.0 {
        return center.clone();
    }
    let n = center.len();
    let dir = CVec::from_fn(n, |_, _| {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let norm = dir.norm();
    let r = radius * rng.random::<f64>().powf(1.0 / (2.0 * n as f64));
    center + dir.scale(r / norm)
}

/// Column `i` is `sum_paths gain * sqrt(mt) * a_t(angle)`.
pub fn generate_channels(cfg: &SystemConfig, geometry: &[Vec<Path>]) -> Result<ChannelSet> {
    if geometry.len() != cfg.streams() {
        return Err(Error::InvalidGeometry(format!(
            "{} path lists for {} users",
            geometry.len(),
            cfg.streams()
        )));
    }
    let scale = (cfg.mt as f64).sqrt();
    let mut h = CMat::zeros(cfg.mt, cfg.streams());
    for (i, paths) in geometry.iter().enumerate() {
        if paths.is_empty() {
            return Err(Error::InvalidGeometry(format!("user {i} has no paths")));
        }
        for p in paths {
            let col = steering(p.angle, cfg.mt) * (p.gain * scale);
            let mut dst = h.column_mut(i);
            dst += col;
        }
    }
    Ok(ChannelSet::new(h))
}

/// `paths` paths per user, angles uniform on [-90, 90] degrees, gains CN(0, 1).
pub fn random_geometry<R: Rng + ?Sized>(users: usize, paths: usize, rng: &mut R) -> Vec<Vec<Path>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..users)
        .map(|_| {
            (0..paths)
                .map(|_| {
                    let angle = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    Path { angle, gain: C64::new(re * s, im * s) }
                })
                .collect()
        })
        .collect()
}

/// Random channels drawn from `cfg.rng_seed`.
pub fn generate_random_channels(cfg: &SystemConfig, paths: usize) -> Result<ChannelSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let geo = random_geometry(cfg.streams(), paths, &mut rng);
    generate_channels(cfg, &geo)
}
