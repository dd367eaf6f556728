//! Sensing analyses built on the dressed modes and the driven response:
//! decoherence against bias field, the optimal drive direction, pseudo-field
//! transduction and spectral noise budgets.

use serde::{Deserialize, Serialize};

use crate::curve::check_monotonic;
use crate::error::{Error, Result};
use crate::fano::amplification_factor;
use crate::model::{eigenmodes, SystemModel};
use crate::response::{
    alkali_responsivity, normalized_minimum, reference_amplitude, steady_state, DriveMode,
    DriveSpec, ReadoutConvention,
};

/// eV/√Hz of energy resolution per fT/√Hz of field sensitivity.
pub const ENERGY_PER_FT: f64 = 2.7e-23 / 3.5;

/// Motional-narrowing broadening by a fractional field inhomogeneity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientModel {
    pub epsilon_g: f64,
    /// Correlation time [s].
    pub tau_c: f64,
    pub enabled: bool,
}

impl GradientModel {
    pub fn new(epsilon_g: f64, tau_c: f64, enabled: bool) -> Result<Self> {
        if !(epsilon_g.is_finite() && epsilon_g >= 0.0) {
            return Err(Error::Configuration(format!(
                "epsilon_g must be >= 0, got {epsilon_g}"
            )));
        }
        if !(tau_c.is_finite() && tau_c > 0.0) {
            return Err(Error::Configuration(format!(
                "tau_c must be > 0, got {tau_c}"
            )));
        }
        Ok(GradientModel {
            epsilon_g,
            tau_c,
            enabled,
        })
    }

    pub fn disabled() -> Self {
        GradientModel {
            epsilon_g: 0.0,
            tau_c: 1.0,
            enabled: false,
        }
    }

    /// `(γ_b ε_g |B_z|)² τ_c`, zero when disabled.
    pub fn broadening(&self, gamma_b: f64, bz: f64) -> f64 {
        if !self.enabled {
            return 0.0;
        }
        let spread = gamma_b * self.epsilon_g * bz.abs();
        spread * spread * self.tau_c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceCurve {
    pub bz: Vec<f64>,
    /// Dressed noble-gas decay rate including gradient broadening [s⁻¹].
    pub rate: Vec<f64>,
    /// Its inverse [s].
    pub time: Vec<f64>,
}

impl DecoherenceCurve {
    /// (B_z, time) at the shortest coherence time.
    pub fn minimum(&self) -> (f64, f64) {
        self.extreme(|a, b| a < b)
    }

    pub fn maximum(&self) -> (f64, f64) {
        self.extreme(|a, b| a > b)
    }

    fn extreme(&self, better: impl Fn(f64, f64) -> bool) -> (f64, f64) {
        let mut k = 0;
        for i in 1..self.time.len() {
            if better(self.time[i], self.time[k]) {
                k = i;
            }
        }
        (self.bz[k], self.time[k])
    }
}

/// Dressed noble-gas decay rate at one bias field, gradient term included.
pub fn decoherence_rate(model: &SystemModel, bz: f64, gradient: &GradientModel) -> Result<f64> {
    let m = model.with_bz(bz)?;
    Ok(eigenmodes(&m).noble().rate + gradient.broadening(m.noble().gamma, bz))
}

pub fn decoherence_vs_field(
    model: &SystemModel,
    bz_grid: &[f64],
    gradient: &GradientModel,
) -> Result<DecoherenceCurve> {
    check_monotonic(bz_grid)?;
    let rate = bz_grid
        .iter()
        .map(|&bz| decoherence_rate(model, bz, gradient))
        .collect::<Result<Vec<_>>>()?;
    Ok(DecoherenceCurve {
        bz: bz_grid.to_vec(),
        time: rate.iter().map(|r| 1.0 / r).collect(),
        rate,
    })
}

/// θ* = cot⁻¹[γ_a(B_z + λM_a + λM_b)/Γ_a] on the branch (0, π).
pub fn optimal_theta(model: &SystemModel, bz: f64) -> f64 {
    let a = model.alkali();
    let detuning = a.gamma * (bz + a.field + model.noble().field);
    a.relaxation.atan2(detuning)
}

/// Responsivity to a pseudo-field drive relative to the bare alkali
/// magnetometer's responsivity to a real field of the same amplitude and
/// frequency. Both are maximized over the drive azimuth, so `drive.theta`
/// does not enter.
pub fn transduce_pseudo_field(model: &SystemModel, drive: &DriveSpec) -> Result<f64> {
    if drive.mode == DriveMode::Magnetic {
        return Err(Error::Contract(
            "pseudo-field transduction needs a pseudo_a or pseudo_b drive".into(),
        ));
    }
    let bare = alkali_responsivity(model, drive)?;
    if !(bare > 0.0) {
        return Err(Error::Degenerate(
            "alkali reference response is zero".into(),
        ));
    }
    let scale = ReadoutConvention::for_model(model)?.scale;
    Ok(steady_state(model, drive)?.responsivity(scale) / bare)
}

/// Suppression factor `1 / min_ω |R(ω)|/|R(ω_ref)|` of a real-field drive
/// along `drive.theta`, taken from the simulated curve.
pub fn deamplification_suppression(
    model: &SystemModel,
    drive: &DriveSpec,
    omegas: &[f64],
    ref_omega: f64,
) -> Result<f64> {
    let r = reference_amplitude(model, drive, ref_omega)?;
    let (_, min) = normalized_minimum(model, drive, omegas, r)?;
    if !(min > 0.0) {
        return Err(Error::Degenerate("normalized minimum is zero".into()));
    }
    Ok(1.0 / min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Enters after the spins (photon shot noise, probe technical noise).
    NonInteracting,
    /// A real field that the spins respond to like the signal.
    FieldLike,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseEntry {
    pub name: String,
    /// Equivalent field noise [fT/√Hz].
    pub level: f64,
    pub kind: NoiseKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    pub entries: Vec<NoiseEntry>,
}

impl NoiseBudget {
    pub fn new(entries: Vec<NoiseEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidInput("noise budget is empty".into()));
        }
        if let Some(e) = entries
            .iter()
            .find(|e| !(e.level.is_finite() && e.level >= 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "noise entry '{}' must be >= 0, got {}",
                e.name, e.level
            )));
        }
        Ok(NoiseBudget { entries })
    }

    pub fn scaled(&self, c: f64) -> Self {
        NoiseBudget {
            entries: self
                .entries
                .iter()
                .map(|e| NoiseEntry {
                    level: e.level * c,
                    ..e.clone()
                })
                .collect(),
        }
    }

    fn combine(&self, non_interacting: f64, field_like: f64) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let s = match e.kind {
                    NoiseKind::NonInteracting => non_interacting,
                    NoiseKind::FieldLike => field_like,
                };
                (e.level * s).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OperatingPoint {
    Amplification,
    /// Field-like noise suppressed by the given amplitude factor.
    Deamplification {
        suppression: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// Quadrature sum of the rescaled entries [fT/√Hz].
    pub effective_sensitivity: f64,
    /// Amplification (or suppression) of the rescaled entries [dB].
    pub gain_db: f64,
    /// [eV/√Hz]
    pub energy_resolution: f64,
}

pub fn db(amplitude_ratio: f64) -> f64 {
    20.0 * amplitude_ratio.log10()
}

pub fn energy_resolution(sensitivity_ft: f64) -> f64 {
    sensitivity_ft * ENERGY_PER_FT
}

fn check_factor(name: &str, x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::InvalidInput(format!(
            "{name} must be positive, got {x}"
        )));
    }
    Ok(())
}

/// Amplification point: non-interacting noise referred to the input drops by
/// η; field-like noise is amplified along with the signal.
pub fn amplified(budget: &NoiseBudget, eta: f64) -> Result<SensitivityReport> {
    check_factor("amplification factor", eta)?;
    let s = budget.combine(1.0 / eta, 1.0);
    Ok(SensitivityReport {
        effective_sensitivity: s,
        gain_db: db(eta),
        energy_resolution: energy_resolution(s),
    })
}

/// Deamplification point: field-like noise drops by the suppression factor;
/// non-interacting noise passes through.
pub fn deamplified(budget: &NoiseBudget, suppression: f64) -> Result<SensitivityReport> {
    check_factor("suppression factor", suppression)?;
    let s = budget.combine(1.0, 1.0 / suppression);
    Ok(SensitivityReport {
        effective_sensitivity: s,
        gain_db: db(suppression),
        energy_resolution: energy_resolution(s),
    })
}

pub fn sensitivity_report(
    model: &SystemModel,
    budget: &NoiseBudget,
    op: OperatingPoint,
) -> Result<SensitivityReport> {
    match op {
        OperatingPoint::Amplification => amplified(budget, amplification_factor(model)?),
        OperatingPoint::Deamplification { suppression } => deamplified(budget, suppression),
    }
}
