//! Driven two-mode dynamics of a coupled alkali-metal / noble-gas spin pair:
//! dressed eigenmodes, steady-state and transient response, Fano lineshape
//! fits and derived sensing quantities.
//!
//! All quantities are in internal units: rad/s, s⁻¹, rad·s⁻¹·mG⁻¹ and mG.
//! Conversions from Hz live in [`units`].

pub mod curve;
pub mod error;
pub mod fano;
pub mod linalg;
pub mod lm;
pub mod model;
pub mod ode;
pub mod reference;
pub mod response;
pub mod sensing;
pub mod units;

pub use curve::{AxisKind, Normalization, ResponseCurve};
pub use error::{Error, Result};
pub use fano::{
    amp_deamp_separation, amplification_factor, deamplification_point, fit_fano, FanoFit,
    FanoProfile, FitOptions,
};
pub use model::{
    build_matrix, eigenmodes, ep_metrics, self_compensation_field, strong_damping_field,
    EigenModes, EnsembleParams, EpReport, EpStatus, SystemModel,
};
pub use num_complex::Complex64;
pub use response::{
    drive_vector, normalize_response, steady_state, sweep_frequency, sweep_theta, time_domain,
    Demodulation, DriveMode, DriveSpec, Propagation, ReadoutConvention, SteadyState, ThetaSweep,
    TimeDomainOptions, TimeSeries,
};
pub use sensing::{
    decoherence_vs_field, optimal_theta, sensitivity_report, transduce_pseudo_field, GradientModel,
    NoiseBudget, NoiseEntry, NoiseKind, OperatingPoint, SensitivityReport,
};
pub use units::RateConvention;
