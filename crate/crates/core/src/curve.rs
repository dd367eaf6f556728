use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::response::SteadyState;

/// What the sample axis of a curve measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisKind {
    /// Drive angular frequency [rad/s].
    Frequency,
    /// Drive azimuth [rad].
    Theta,
    /// Bias field [mG].
    Field,
}

/// The reference a curve was divided by.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    /// Axis location of the reference response.
    pub reference_axis: f64,
    /// Readout amplitude at that location, before normalization.
    pub reference_value: f64,
}

/// Sampled response of the coupled system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseCurve {
    pub kind: AxisKind,
    pub axis: Vec<f64>,
    pub points: Vec<SteadyState>,
    pub normalization: Option<Normalization>,
}

impl ResponseCurve {
    pub fn new(kind: AxisKind, axis: Vec<f64>, points: Vec<SteadyState>) -> Result<Self> {
        if axis.len() != points.len() {
            return Err(Error::InvalidInput(format!(
                "axis has {} samples but {} responses",
                axis.len(),
                points.len()
            )));
        }
        check_monotonic(&axis)?;
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("response values must be finite".into()));
        }
        Ok(ResponseCurve {
            kind,
            axis,
            points,
            normalization: None,
        })
    }

    /// Builds a curve from readout values alone (e.g. parsed back from a
    /// file); the rotating components are left at zero.
    pub fn from_readout(kind: AxisKind, axis: Vec<f64>, readout: Vec<C64>) -> Result<Self> {
        let points = readout.into_iter().map(SteadyState::readout_only).collect();
        ResponseCurve::new(kind, axis, points)
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    pub fn amplitudes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.amplitude()).collect()
    }

    /// Squared readout amplitudes, the power response.
    pub fn powers(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.readout.norm_sqr()).collect()
    }
}

/// Strictly increasing or strictly decreasing, all finite.
pub fn check_monotonic(axis: &[f64]) -> Result<()> {
    if axis.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("axis values must be finite".into()));
    }
    if axis.len() < 2 {
        return Ok(());
    }
    let inc = axis.windows(2).all(|w| w[1] > w[0]);
    let dec = axis.windows(2).all(|w| w[1] < w[0]);
    if inc || dec {
        Ok(())
    } else {
        Err(Error::InvalidInput(
            "axis must be strictly monotonic".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotonic_checks() {
        assert!(check_monotonic(&[1.0, 2.0, 3.0]).is_ok());
        assert!(check_monotonic(&[3.0, 2.0, -1.0]).is_ok());
        assert!(check_monotonic(&[1.0, 1.0, 2.0]).is_err());
        assert!(check_monotonic(&[1.0, 3.0, 2.0]).is_err());
        assert!(check_monotonic(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn length_mismatch_rejected() {
        let r = ResponseCurve::from_readout(
            AxisKind::Frequency,
            vec![1.0, 2.0],
            vec![C64::new(1.0, 0.0)],
        );
        assert!(r.is_err());
    }
}
