//! Conversions between the external units (Hz, Hz/mG) and the angular
//! units used everywhere inside this crate (rad/s, rad/s/mG).
//!
//! Only boundary code (the reference profile builder and configuration
//! loaders) should call these.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

/// How a quoted decoherence rate should be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateConvention {
    /// The number is already an amplitude decay rate in s^-1.
    Angular,
    /// The number is a linewidth in Hz and is multiplied by 2π.
    Cyclic,
}

impl RateConvention {
    pub fn to_internal(self, quoted: f64) -> f64 {
        match self {
            RateConvention::Angular => quoted,
            RateConvention::Cyclic => quoted * TAU,
        }
    }
}

#[inline]
pub fn hz_to_angular(hz: f64) -> f64 {
    hz * TAU
}

#[inline]
pub fn angular_to_hz(omega: f64) -> f64 {
    omega / TAU
}
