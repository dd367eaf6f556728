//! Embedded reference cell: an ⁸⁷Rb-¹²⁹Xe vapor cell calibrated to the
//! measured resonance, coherence-time and amplification anchors.
//!
//! Values are in quoted units (Hz/mG, s⁻¹, mG, Hz). Both decay rates are
//! read as angular rates.

use std::f64::consts::TAU;

use crate::model::{EnsembleParams, SystemModel};
use crate::sensing::{GradientModel, NoiseBudget, NoiseEntry, NoiseKind};
use crate::units::RateConvention;

pub const GAMMA_A_HZ_PER_MG: f64 = 700.0;
pub const GAMMA_B_HZ_PER_MG: f64 = 1.1777;
pub const RATE_A: f64 = 30000.0;
pub const RATE_B: f64 = 0.007;
pub const RATE_CONVENTION: RateConvention = RateConvention::Angular;
/// λM_a [mG], set by the coupling rate.
pub const FIELD_A: f64 = 0.008;
/// λM_b [mG], set by the strong-damping field.
pub const FIELD_B: f64 = 3.0;
pub const KAPPA0: f64 = 540.0;
pub const BZ: f64 = -8.59;

pub const EPSILON_G: f64 = 4e-4;
/// Chosen so the gradient-limited coherence time peaks near 70 mG.
pub const TAU_C: f64 = 5.0e-3;

pub const REFERENCE_FREQ_HZ: f64 = 300.0;
/// [mG]; the response is linear, so this only scales outputs.
pub const DRIVE_AMPLITUDE: f64 = 1.0;
/// Readout-chain noise [fT/√Hz].
pub const DETECTION_NOISE: f64 = 1800.0;
/// Environmental field noise [fT/√Hz].
pub const MAGNETIC_NOISE: f64 = 0.0;

pub fn model() -> SystemModel {
    let a = EnsembleParams::new(
        TAU * GAMMA_A_HZ_PER_MG,
        RATE_CONVENTION.to_internal(RATE_A),
        FIELD_A,
    )
    .expect("reference alkali parameters are valid");
    let b = EnsembleParams::new(
        TAU * GAMMA_B_HZ_PER_MG,
        RATE_CONVENTION.to_internal(RATE_B),
        FIELD_B,
    )
    .expect("reference noble-gas parameters are valid");
    SystemModel::new(a, b, KAPPA0, BZ).expect("reference model is valid")
}

pub fn gradient() -> GradientModel {
    GradientModel {
        epsilon_g: EPSILON_G,
        tau_c: TAU_C,
        enabled: true,
    }
}

pub fn noise_budget() -> NoiseBudget {
    NoiseBudget {
        entries: vec![
            NoiseEntry {
                name: "detection".into(),
                level: DETECTION_NOISE,
                kind: NoiseKind::NonInteracting,
            },
            NoiseEntry {
                name: "magnetic".into(),
                level: MAGNETIC_NOISE,
                kind: NoiseKind::FieldLike,
            },
        ],
    }
}
