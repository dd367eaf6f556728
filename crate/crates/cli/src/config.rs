//! Run configuration: TOML in quoted units (Hz, Hz/mG, mG, s), resolved here
//! into the angular units the core works in.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spinamp_core::reference as cell;
use spinamp_core::response::{linspace, resonance_grid};
use spinamp_core::units::{angular_to_hz, hz_to_angular};
use spinamp_core::{
    optimal_theta, Demodulation, DriveMode, DriveSpec, EnsembleParams, GradientModel, NoiseBudget,
    NoiseEntry, NoiseKind, Propagation, RateConvention, SystemModel,
};

use crate::error::CliError;

/// Coupled-pair parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemSection {
    /// [Hz/mG]
    pub gamma_a: f64,
    /// [Hz/mG]
    pub gamma_b: f64,
    pub rate_a: f64,
    pub rate_b: f64,
    /// How `rate_a`/`rate_b` are read: "angular" (s⁻¹) or "cyclic" (Hz).
    pub rate_convention: RateConvention,
    /// [mG]
    pub lambda_ma: f64,
    /// [mG]
    pub lambda_mb: f64,
    pub kappa0: f64,
    /// [mG]
    pub bz: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        SystemSection {
            gamma_a: cell::GAMMA_A_HZ_PER_MG,
            gamma_b: cell::GAMMA_B_HZ_PER_MG,
            rate_a: cell::RATE_A,
            rate_b: cell::RATE_B,
            rate_convention: cell::RATE_CONVENTION,
            lambda_ma: cell::FIELD_A,
            lambda_mb: cell::FIELD_B,
            kappa0: cell::KAPPA0,
            bz: cell::BZ,
        }
    }
}

/// Either a fixed azimuth [rad] or the name "optimal".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaChoice {
    Fixed(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriveSection {
    /// [mG]
    pub amplitude: f64,
    /// Drive frequency for single-frequency commands [Hz].
    pub freq: f64,
    pub theta: ThetaChoice,
    pub mode: DriveMode,
    pub demodulation: Demodulation,
}

impl Default for DriveSection {
    fn default() -> Self {
        DriveSection {
            amplitude: cell::DRIVE_AMPLITUDE,
            freq: 10.0,
            theta: ThetaChoice::Named("optimal".into()),
            mode: DriveMode::Magnetic,
            demodulation: Demodulation::Amplitude,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
    /// Coarse points spanning the amplification and deamplification points
    /// plus dense points on the dressed resonance (frequency grids only).
    Resonance,
}

/// A sampled axis. Fields left out of a file take the defaults of the
/// particular sweep they belong to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSection {
    pub spacing: Option<Spacing>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub count: Option<usize>,
    /// Dense points for `resonance` spacing.
    pub dense: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Grid {
    spacing: Spacing,
    start: f64,
    stop: f64,
    count: usize,
    dense: usize,
}

impl GridSection {
    fn full(spacing: Spacing, start: f64, stop: f64, count: usize, dense: usize) -> Self {
        GridSection {
            spacing: Some(spacing),
            start: Some(start),
            stop: Some(stop),
            count: Some(count),
            dense: Some(dense),
        }
    }

    fn fill_from(&mut self, d: &GridSection) {
        self.spacing = self.spacing.or(d.spacing);
        self.start = self.start.or(d.start);
        self.stop = self.stop.or(d.stop);
        self.count = self.count.or(d.count);
        self.dense = self.dense.or(d.dense);
    }

    fn grid(&self) -> Grid {
        Grid {
            spacing: self.spacing.unwrap_or(Spacing::Linear),
            start: self.start.unwrap_or(0.0),
            stop: self.stop.unwrap_or(0.0),
            count: self.count.unwrap_or(0),
            dense: self.dense.unwrap_or(0),
        }
    }

    fn values(&self, what: &str) -> Result<Vec<f64>, CliError> {
        self.grid().values(what)
    }
}

impl Grid {
    fn values(&self, what: &str) -> Result<Vec<f64>, CliError> {
        if self.count < 2 {
            return Err(CliError::Config(format!(
                "{what}: count must be >= 2, got {}",
                self.count
            )));
        }
        match self.spacing {
            Spacing::Linear => {
                if self.start == self.stop {
                    return Err(CliError::Config(format!("{what}: start and stop coincide")));
                }
                Ok(linspace(self.start, self.stop, self.count))
            }
            Spacing::Log => {
                if !(self.start > 0.0 && self.stop > 0.0) || self.start == self.stop {
                    return Err(CliError::Config(format!(
                        "{what}: log spacing needs distinct positive bounds"
                    )));
                }
                Ok(linspace(self.start.ln(), self.stop.ln(), self.count)
                    .into_iter()
                    .map(f64::exp)
                    .collect())
            }
            Spacing::Resonance => Err(CliError::Config(format!(
                "{what}: resonance spacing is only available for frequency grids"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSection {
    /// [Hz]
    pub freq: GridSection,
    /// [rad]
    pub theta: GridSection,
    /// [mG]
    pub field: GridSection,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            freq: GridSection::full(Spacing::Resonance, 0.0, 0.0, 1500, 1500),
            theta: GridSection::full(Spacing::Linear, 0.01, PI - 0.01, 158, 0),
            field: GridSection::full(Spacing::Linear, -300.0, 300.0, 601, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceSection {
    /// Normalization frequency [Hz].
    pub freq: f64,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        ReferenceSection {
            freq: cell::REFERENCE_FREQ_HZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradientSection {
    pub enabled: bool,
    pub epsilon_g: f64,
    /// [s]
    pub tau_c: f64,
}

impl Default for GradientSection {
    fn default() -> Self {
        GradientSection {
            enabled: true,
            epsilon_g: cell::EPSILON_G,
            tau_c: cell::TAU_C,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseItem {
    pub name: String,
    /// [fT/√Hz]
    pub level: f64,
    pub kind: NoiseKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSection {
    pub entries: Vec<NoiseItem>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            entries: cell::noise_budget()
                .entries
                .into_iter()
                .map(|e| NoiseItem {
                    name: e.name,
                    level: e.level,
                    kind: e.kind,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrateSection {
    /// [s]
    pub t_start: f64,
    /// [s]
    pub t_end: f64,
    /// [s]
    pub dt: f64,
    pub method: Propagation,
}

impl Default for IntegrateSection {
    fn default() -> Self {
        IntegrateSection {
            t_start: 0.0,
            t_end: 10.0,
            dt: 1e-3,
            method: Propagation::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitSection {
    /// CSV written by `sweep-freq`.
    pub input: Option<PathBuf>,
    /// Fit only ±k widths around the initial center; 0 fits every sample.
    pub window_widths: f64,
    pub max_iter: usize,
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection {
            input: None,
            window_widths: 0.0,
            max_iter: 500,
        }
    }
}

/// Exceptional-point table: detunings `|δ|/β` log-spaced, plus δ = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpSection {
    pub rel_start: f64,
    pub rel_stop: f64,
    pub count: usize,
}

impl Default for EpSection {
    fn default() -> Self {
        EpSection {
            rel_start: 1e-6,
            rel_stop: 1e-3,
            count: 31,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub system: SystemSection,
    pub drive: DriveSection,
    pub sweep: SweepSection,
    pub reference: ReferenceSection,
    pub gradient: GradientSection,
    pub noise: NoiseSection,
    pub integrate: IntegrateSection,
    pub fit: FitSection,
    pub ep: EpSection,
}

/// A configuration converted to internal units.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub model: SystemModel,
    /// Drive with its azimuth resolved; `omega` is `drive.freq`.
    pub drive: DriveSpec,
    pub theta_was_optimal: bool,
    pub demodulation: Demodulation,
    pub ref_omega: f64,
    pub gradient: GradientModel,
    pub budget: NoiseBudget,
}

fn reject_non_finite(value: &toml::Value, path: &mut Vec<String>) -> Result<(), CliError> {
    match value {
        toml::Value::Float(f) if !f.is_finite() => Err(CliError::Config(format!(
            "non-finite value {f} at '{}'",
            path.join(".")
        ))),
        toml::Value::Table(t) => {
            for (k, v) in t {
                path.push(k.clone());
                reject_non_finite(v, path)?;
                path.pop();
            }
            Ok(())
        }
        toml::Value::Array(a) => {
            for (i, v) in a.iter().enumerate() {
                path.push(i.to_string());
                reject_non_finite(v, path)?;
                path.pop();
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Applies `key.path=value`; the value is parsed as a TOML value and taken as
/// a bare string if that fails.
pub fn apply_override(root: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{spec}' is not key=value")))?;
    let key = key.trim();
    let value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!(
            "override key '{key}' is malformed"
        )));
    }
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| {
            CliError::Config(format!("override '{key}': '{part}' is not a section"))
        })?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Parses TOML text with overrides; rejects unknown keys and non-finite numbers.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(one_line(&e.to_string())))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    reject_non_finite(&toml::Value::Table(table.clone()), &mut Vec::new())?;
    let mut unknown = Vec::new();
    let cfg: RunConfig = serde_ignored::deserialize(toml::Value::Table(table), |path| {
        unknown.push(path.to_string())
    })
    .map_err(|e: toml::de::Error| CliError::Config(one_line(&e.to_string())))?;
    if !unknown.is_empty() {
        return Err(CliError::UnknownKeys(unknown));
    }
    let mut cfg = cfg;
    let d = SweepSection::default();
    cfg.sweep.freq.fill_from(&d.freq);
    cfg.sweep.theta.fill_from(&d.theta);
    cfg.sweep.field.fill_from(&d.field);
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config(&text, overrides)
}

pub(crate) fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl RunConfig {
    /// Echo of every value that can influence a run.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn model(&self) -> Result<SystemModel, CliError> {
        let s = &self.system;
        let a = EnsembleParams::new(
            hz_to_angular(s.gamma_a),
            s.rate_convention.to_internal(s.rate_a),
            s.lambda_ma,
        )?;
        let b = EnsembleParams::new(
            hz_to_angular(s.gamma_b),
            s.rate_convention.to_internal(s.rate_b),
            s.lambda_mb,
        )?;
        Ok(SystemModel::new(a, b, s.kappa0, s.bz)?)
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let model = self.model()?;
        let (theta, optimal) = match &self.drive.theta {
            ThetaChoice::Fixed(t) => (*t, false),
            ThetaChoice::Named(n) if n == "optimal" => (optimal_theta(&model, model.bz()), true),
            ThetaChoice::Named(n) => {
                return Err(CliError::Config(format!(
                    "drive.theta must be a number or \"optimal\", got \"{n}\""
                )))
            }
        };
        let drive = DriveSpec::new(
            self.drive.amplitude,
            hz_to_angular(self.drive.freq),
            theta,
            self.drive.mode,
        )?;
        let gradient = GradientModel::new(
            self.gradient.epsilon_g,
            self.gradient.tau_c,
            self.gradient.enabled,
        )?;
        let budget = NoiseBudget::new(
            self.noise
                .entries
                .iter()
                .map(|e| NoiseEntry {
                    name: e.name.clone(),
                    level: e.level,
                    kind: e.kind,
                })
                .collect(),
        )?;
        if !(self.reference.freq > 0.0) {
            return Err(CliError::Config(format!(
                "reference.freq must be > 0, got {}",
                self.reference.freq
            )));
        }
        Ok(Resolved {
            model,
            drive,
            theta_was_optimal: optimal,
            demodulation: self.drive.demodulation,
            ref_omega: hz_to_angular(self.reference.freq),
            gradient,
            budget,
        })
    }

    /// Frequency grid [rad/s].
    pub fn omega_grid(&self, model: &SystemModel) -> Result<Vec<f64>, CliError> {
        let g = self.sweep.freq.grid();
        match g.spacing {
            Spacing::Resonance => Ok(resonance_grid(model, g.count, g.dense)?),
            _ => {
                let hz = g.values("sweep.freq")?;
                if hz.iter().any(|v| *v < 0.0) {
                    return Err(CliError::Config(
                        "sweep.freq: frequencies must be >= 0".into(),
                    ));
                }
                Ok(hz.into_iter().map(hz_to_angular).collect())
            }
        }
    }

    pub fn theta_grid(&self) -> Result<Vec<f64>, CliError> {
        let t = self.sweep.theta.values("sweep.theta")?;
        if t.iter().any(|v| !(0.0..=PI).contains(v)) {
            return Err(CliError::Config(
                "sweep.theta: values must lie in [0, pi]".into(),
            ));
        }
        Ok(t)
    }

    pub fn field_grid(&self) -> Result<Vec<f64>, CliError> {
        self.sweep.field.values("sweep.field")
    }

    /// Detunings [s⁻¹] for the exceptional-point table, relative to the
    /// coupling of `model` (β is pinned to J there).
    pub fn ep_deltas(&self, model: &SystemModel) -> Result<Vec<f64>, CliError> {
        let e = &self.ep;
        let rel = Grid {
            spacing: Spacing::Log,
            start: e.rel_start,
            stop: e.rel_stop,
            count: e.count,
            dense: 0,
        }
        .values("ep")?;
        let j = model.coupling();
        let mut d = vec![0.0];
        d.extend(rel.into_iter().map(|r| r * j));
        Ok(d)
    }
}

/// [Hz] from [rad/s], for output columns.
pub fn to_hz(omega: f64) -> f64 {
    angular_to_hz(omega)
}

/// [rad/s] from [Hz], for input columns.
pub fn from_hz(hz: f64) -> f64 {
    hz_to_angular(hz)
}
