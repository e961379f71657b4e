//! Linear-ramp angle schedules.
//!
//! For layer `i` of `p`:
//!
//! ```text
//! beta_i  = (1 - i/p) * delta_beta
//! gamma_i = ((i + 1)/p) * delta_gamma
//! ```
//!
//! The mixer angle ramps down from `delta_beta` to `delta_beta / p` while the
//! cost angle ramps up from `delta_gamma / p` to `delta_gamma`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mixer ramp used for hardware runs.
pub const DEFAULT_DELTA_BETA: f64 = 0.3;
/// Cost ramp used for hardware runs.
pub const DEFAULT_DELTA_GAMMA: f64 = 0.6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "ScheduleSpec", try_from = "ScheduleSpec")]
pub struct LinearRampSchedule {
    delta_beta: f64,
    delta_gamma: f64,
    betas: Vec<f64>,
    gammas: Vec<f64>,
}

/// Serialized form: only the three defining parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub delta_beta: f64,
    pub delta_gamma: f64,
    pub p: usize,
}

impl From<LinearRampSchedule> for ScheduleSpec {
    fn from(s: LinearRampSchedule) -> Self {
        ScheduleSpec {
            delta_beta: s.delta_beta,
            delta_gamma: s.delta_gamma,
            p: s.layers(),
        }
    }
}

impl TryFrom<ScheduleSpec> for LinearRampSchedule {
    type Error = Error;

    fn try_from(s: ScheduleSpec) -> Result<Self> {
        build_schedule(s.delta_beta, s.delta_gamma, s.p)
    }
}

pub fn build_schedule(delta_beta: f64, delta_gamma: f64, p: usize) -> Result<LinearRampSchedule> {
    if p == 0 {
        return Err(Error::param("a schedule needs at least one layer"));
    }
    if !(delta_beta.is_finite() && delta_gamma.is_finite()) || delta_beta < 0.0 || delta_gamma < 0.0 {
        return Err(Error::param(format!(
            "ramp slopes must be finite and non-negative, got ({delta_beta}, {delta_gamma})"
        )));
    }
    let pf = p as f64;
    // (p - i)/p keeps both endpoints exact: 1 at i = 0, 1/p at i = p - 1
    let betas = (0..p).map(|i| ((p - i) as f64 / pf) * delta_beta).collect();
    let gammas = (0..p).map(|i| ((i + 1) as f64 / pf) * delta_gamma).collect();
    Ok(LinearRampSchedule {
        delta_beta,
        delta_gamma,
        betas,
        gammas,
    })
}

impl LinearRampSchedule {
    pub fn delta_beta(&self) -> f64 {
        self.delta_beta
    }

    pub fn delta_gamma(&self) -> f64 {
        self.delta_gamma
    }

    pub fn layers(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// `(gamma_i, beta_i)` in application order.
    pub fn angles(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.gammas.iter().copied().zip(self.betas.iter().copied())
    }

    pub fn spec(&self) -> ScheduleSpec {
        self.clone().into()
    }
}

/// Evenly spaced values from `lo` to `hi` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Result<Axis> {
        let axis = Axis { lo, hi, steps };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::param("a scan axis needs at least 2 steps"));
        }
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo < 0.0 || self.hi < self.lo {
            return Err(Error::param(format!("invalid scan range [{}, {}]", self.lo, self.hi)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let span = self.hi - self.lo;
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.hi
                } else {
                    self.lo + span * i as f64 / last
                }
            })
            .collect()
    }
}

/// Cartesian grid of `(delta_beta, delta_gamma)` pairs, beta-major.
pub fn delta_grid_axes(beta: Axis, gamma: Axis) -> Result<Vec<(f64, f64)>> {
    beta.validate()?;
    gamma.validate()?;
    let gs = gamma.values();
    Ok(beta
        .values()
        .into_iter()
        .flat_map(|b| gs.iter().map(move |&g| (b, g)))
        .collect())
}

/// Square grid with `steps` values on each axis.
pub fn delta_grid(beta_range: (f64, f64), gamma_range: (f64, f64), steps: usize) -> Result<Vec<(f64, f64)>> {
    delta_grid_axes(
        Axis {
            lo: beta_range.0,
            hi: beta_range.1,
            steps,
        },
        Axis {
            lo: gamma_range.0,
            hi: gamma_range.1,
            steps,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_layer() {
        let s = build_schedule(0.3, 0.6, 1).unwrap();
        assert_eq!(s.betas(), &[0.3]);
        assert_eq!(s.gammas(), &[0.6]);
    }

    #[test]
    fn two_layers() {
        let s = build_schedule(0.3, 0.6, 2).unwrap();
        assert_eq!(s.betas(), &[0.3, 0.15]);
        assert_eq!(s.gammas(), &[0.3, 0.6]);
    }

    #[test]
    fn zero_layers_rejected() {
        assert!(matches!(build_schedule(0.3, 0.6, 0), Err(Error::Parameter(_))));
        assert!(build_schedule(-0.1, 0.6, 3).is_err());
    }

    #[test]
    fn json_carries_only_the_ramp() {
        let s = build_schedule(0.3, 0.6, 4).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"delta_beta":0.3,"delta_gamma":0.6,"p":4}"#);
        let back: LinearRampSchedule = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<LinearRampSchedule>(r#"{"delta_beta":0.3,"delta_gamma":0.6,"p":0}"#).is_err());
    }

    #[test]
    fn grid_axes_and_size() {
        let grid = delta_grid((0.0, 3.0 * PI / 4.0), (0.0, 3.0 * PI / 4.0), 4).unwrap();
        assert_eq!(grid.len(), 16);
        let axis: Vec<f64> = grid.iter().step_by(4).map(|c| c.0).collect();
        let expected = [0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0];
        for (a, e) in axis.iter().zip(expected) {
            assert!((a - e).abs() < 1e-15);
        }
        assert!(delta_grid((0.0, 1.0), (0.0, 1.0), 1).is_err());
    }

    #[test]
    fn rectangular_grid() {
        let g = delta_grid_axes(Axis::new(0.1, 0.6, 6).unwrap(), Axis::new(0.1, 0.7, 7).unwrap()).unwrap();
        assert_eq!(g.len(), 42);
    }
}
