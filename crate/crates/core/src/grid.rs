//! Uniform time and chemical-potential grids.

use serde::{Deserialize, Serialize};

use crate::core_matrix::{phase_boundaries, EP_TOLERANCE};
use crate::error::{Error, Result};

/// Upper bound on the time step of any grid.
pub const MAX_DT: f64 = 0.01;

/// Points `t_i = i·dt` for `i = 0..=⌊t_max/dt⌋`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_max: f64,
    dt: f64,
}

impl TimeGrid {
    pub fn new(t_max: f64, dt: f64) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::Domain(format!("t_max must be positive, got {t_max}")));
        }
        if !(dt > 0.0) || dt > MAX_DT {
            return Err(Error::Domain(format!("dt must lie in (0, {MAX_DT}], got {dt}")));
        }
        Ok(TimeGrid { t_max, dt })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        (self.t_max / self.dt + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `i·dt`, computed as `i / (1/dt)` when `1/dt` is an integer so that
    /// decimal steps give decimal times.
    pub fn time(&self, i: usize) -> f64 {
        let inv = 1.0 / self.dt;
        if (inv - inv.round()).abs() <= 1e-9 * inv {
            i as f64 / inv.round()
        } else {
            i as f64 * self.dt
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.time(i))
    }

    /// Nyquist-style check against the fastest relevant angular frequency:
    /// at least 50 samples per period.
    pub fn check_sampling(&self, omega_max: f64) -> Result<()> {
        if omega_max > 0.0 && self.dt > 2.0 * std::f64::consts::PI / (50.0 * omega_max) {
            return Err(Error::Domain(format!(
                "dt = {} undersamples frequency {omega_max:.4}; need dt <= {:.3e}",
                self.dt,
                2.0 * std::f64::consts::PI / (50.0 * omega_max)
            )));
        }
        Ok(())
    }
}

/// Uniform chemical-potential grid `start + k·step`, `k = 0..count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuGrid {
    start: f64,
    step: f64,
    count: usize,
}

impl MuGrid {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self> {
        if !start.is_finite() || !(step > 0.0) || !step.is_finite() {
            return Err(Error::Domain(format!("invalid mu grid start = {start}, step = {step}")));
        }
        if count == 0 {
            return Err(Error::Domain("mu grid is empty".into()));
        }
        Ok(MuGrid { start, step, count })
    }

    /// Points at cell centers of `[lo, hi]`: `lo + step/2 + k·step < hi`.
    /// With a step that divides the distance to each exceptional point, the
    /// grid never lands on one.
    pub fn cell_centers(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::Domain(format!("empty mu range [{lo}, {hi}]")));
        }
        if !(step > 0.0) {
            return Err(Error::Domain(format!("mu step must be positive, got {step}")));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize;
        Self::new(lo + step / 2.0, step, count)
    }

    /// Inclusive range `lo, lo + step, …, ≤ hi`.
    pub fn inclusive(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(hi >= lo) {
            return Err(Error::Domain(format!("empty mu range [{lo}, {hi}]")));
        }
        if !(step > 0.0) {
            return Err(Error::Domain(format!("mu step must be positive, got {step}")));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Self::new(lo, step, count)
    }

    pub fn single(mu: f64) -> Result<Self> {
        Self::new(mu, 1.0, 1)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn get(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.get(k)).collect()
    }

    /// Fails if a point lies within the EP tolerance of the locus.
    pub fn check_avoids_locus(&self) -> Result<()> {
        let bounds = phase_boundaries();
        for mu in self.values() {
            if bounds.iter().any(|&p| (mu - p).abs() < EP_TOLERANCE) {
                return Err(Error::Domain(format!("mu grid contains exceptional point {mu}")));
            }
        }
        Ok(())
    }
}
