//! Driven steady-state and time-domain response of the coupled pair, and the
//! frequency / direction sweeps built on it.
//!
//! A transverse drive `B₊(t) = B_x + iB_y = B₀ e^{iθ} cos ωt` is split into
//! its `e^{+iωt}` and `e^{−iωt}` rotating parts, each solved exactly (no
//! rotating-wave approximation). The optical readout is the alkali
//! x-magnetization `√(2γ_aM_a)·Re a(t) = Re(R e^{iωt})`; `R` is kept complex.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{check_monotonic, AxisKind, Normalization, ResponseCurve};
use crate::error::{Error, Result};
use crate::linalg::{eigen_with_values, Mat2, Vec2};
use crate::model::{build_matrix, eigenmodes, SystemModel};
use crate::ode;

const SOLVE_TOL: f64 = 1e-14;
const DEFECTIVE_CONDITION: f64 = 1e6;

/// Which species a drive couples to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriveMode {
    /// A real field: both species, each through its own gyromagnetic ratio.
    #[serde(rename = "magnetic")]
    Magnetic,
    /// A pseudo-field seen only by the alkali spins.
    #[serde(rename = "pseudo_a")]
    PseudoAlkali,
    /// A pseudo-field seen only by the noble-gas spins.
    #[serde(rename = "pseudo_b")]
    PseudoNoble,
}

impl DriveMode {
    fn couples(self) -> (bool, bool) {
        match self {
            DriveMode::Magnetic => (true, true),
            DriveMode::PseudoAlkali => (true, false),
            DriveMode::PseudoNoble => (false, true),
        }
    }
}

/// A linearly polarized transverse oscillating field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    /// Field amplitude [mG].
    pub amplitude: f64,
    /// Drive angular frequency [rad/s].
    pub omega: f64,
    /// Azimuth in the xy plane [rad], 0 along x.
    pub theta: f64,
    pub mode: DriveMode,
}

impl DriveSpec {
    pub fn new(amplitude: f64, omega: f64, theta: f64, mode: DriveMode) -> Result<Self> {
        let d = DriveSpec {
            amplitude,
            omega,
            theta,
            mode,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "drive amplitude must be >= 0, got {}",
                self.amplitude
            )));
        }
        if !(self.omega.is_finite() && self.omega >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "drive frequency must be >= 0, got {}",
                self.omega
            )));
        }
        if !(self.theta.is_finite() && (0.0..=std::f64::consts::PI).contains(&self.theta)) {
            return Err(Error::InvalidInput(format!(
                "drive azimuth must lie in [0, pi], got {}",
                self.theta
            )));
        }
        Ok(())
    }

    pub fn with_omega(&self, omega: f64) -> Self {
        DriveSpec { omega, ..*self }
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        DriveSpec { theta, ..*self }
    }

    pub fn with_mode(&self, mode: DriveMode) -> Self {
        DriveSpec { mode, ..*self }
    }
}

/// Source vectors of the two rotating components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveVectors {
    /// Multiplies `e^{+iωt}`.
    pub positive: Vec2,
    /// Multiplies `e^{−iωt}`.
    pub negative: Vec2,
}

/// `√(γ_s M_s / 2)`, the coupling of a transverse field into the bosonic
/// excitation of species `s`. Needs `γ_s λM_s ≥ 0`.
fn species_factor(gamma: f64, field: f64, lambda: f64, which: &str) -> Result<f64> {
    let gm = gamma * field;
    if gm < 0.0 {
        return Err(Error::Configuration(format!(
            "{which} species has gamma*lambdaM = {gm:e} < 0; the excitation map needs it nonnegative"
        )));
    }
    Ok((gm / (2.0 * lambda)).sqrt())
}

pub fn drive_vector(model: &SystemModel, drive: &DriveSpec) -> Result<DriveVectors> {
    drive.validate()?;
    let lambda = model.lambda();
    let (on_a, on_b) = drive.mode.couples();
    let ga = if on_a {
        species_factor(model.alkali().gamma, model.alkali().field, lambda, "alkali")?
    } else {
        0.0
    };
    let gb = if on_b {
        species_factor(
            model.noble().gamma,
            model.noble().field,
            lambda,
            "noble-gas",
        )?
    } else {
        0.0
    };
    // i·g·B₀e^{iθ}/2 for each rotating component
    let b_plus = C64::from_polar(0.5 * drive.amplitude, drive.theta);
    let i = C64::new(0.0, 1.0);
    let h = [i * b_plus * ga, i * b_plus * gb];
    Ok(DriveVectors {
        positive: h,
        negative: h,
    })
}

/// Readout scale `√(2γ_aM_a)` mapping the alkali excitation to transverse
/// magnetization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutConvention {
    pub scale: f64,
}

impl ReadoutConvention {
    pub fn for_model(model: &SystemModel) -> Result<Self> {
        let f = species_factor(
            model.alkali().gamma,
            model.alkali().field,
            model.lambda(),
            "alkali",
        )?;
        Ok(ReadoutConvention { scale: 2.0 * f })
    }
}

/// How a complex readout is reduced to one real number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Demodulation {
    #[default]
    Amplitude,
    InPhase,
}

/// Steady-state complex amplitudes at a single drive frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    /// (a, b) of the `e^{+iωt}` component.
    pub positive: Vec2,
    /// (a, b) of the `e^{−iωt}` component.
    pub negative: Vec2,
    /// Complex readout `R`, the signal being `Re(R e^{iωt})`.
    pub readout: C64,
}

impl SteadyState {
    pub(crate) fn readout_only(readout: C64) -> Self {
        let z = C64::new(0.0, 0.0);
        SteadyState {
            positive: [z, z],
            negative: [z, z],
            readout,
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.readout.norm()
    }

    pub fn in_phase(&self) -> f64 {
        self.readout.re
    }

    /// Readout amplitude maximized over the drive azimuth, which only rotates
    /// the phases of the two components: `scale·(|a₊| + |a₋|)`.
    pub fn responsivity(&self, scale: f64) -> f64 {
        scale * (self.positive[0].norm() + self.negative[0].norm())
    }

    pub fn demodulate(&self, mode: Demodulation) -> f64 {
        match mode {
            Demodulation::Amplitude => self.amplitude(),
            Demodulation::InPhase => self.in_phase(),
        }
    }

    pub(crate) fn scaled(&self, s: f64) -> Self {
        SteadyState {
            positive: [self.positive[0] * s, self.positive[1] * s],
            negative: [self.negative[0] * s, self.negative[1] * s],
            readout: self.readout * s,
        }
    }

    pub(crate) fn is_finite(&self) -> bool {
        self.positive
            .iter()
            .chain(self.negative.iter())
            .chain(std::iter::once(&self.readout))
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Solves `(±iω − iH) X = h` for both rotating components of one drive.
fn solve_components(h: &Mat2, src: &DriveVectors, omega: f64) -> Result<(Vec2, Vec2)> {
    let i = C64::new(0.0, 1.0);
    let minus_ih = h.scale(-i);
    let solve = |w: f64, rhs: &Vec2| -> Result<Vec2> {
        let m = Mat2::identity().scale(i * w).add(&minus_ih);
        m.solve(rhs, SOLVE_TOL).ok_or_else(|| {
            Error::Singular(format!(
                "steady-state matrix singular at omega = {w} rad/s (undamped pole?)"
            ))
        })
    };
    Ok((solve(omega, &src.positive)?, solve(-omega, &src.negative)?))
}

fn assemble(pos: Vec2, neg: Vec2, scale: f64) -> SteadyState {
    SteadyState {
        positive: pos,
        negative: neg,
        readout: (pos[0] + neg[0].conj()) * scale,
    }
}

pub fn steady_state(model: &SystemModel, drive: &DriveSpec) -> Result<SteadyState> {
    let src = drive_vector(model, drive)?;
    let scale = ReadoutConvention::for_model(model)?.scale;
    let (pos, neg) = solve_components(&build_matrix(model), &src, drive.omega)?;
    Ok(assemble(pos, neg, scale))
}

/// Response of the alkali magnetometer alone (noble gas decoupled, J = 0) to a
/// real field with the same amplitude, frequency and direction as `drive`.
pub fn alkali_reference(model: &SystemModel, drive: &DriveSpec) -> Result<SteadyState> {
    let src = drive_vector(model, &drive.with_mode(DriveMode::PseudoAlkali))?;
    let scale = ReadoutConvention::for_model(model)?.scale;
    let mut h = build_matrix(model);
    h.0[0][1] = C64::new(0.0, 0.0);
    h.0[1][0] = C64::new(0.0, 0.0);
    let (pos, neg) = solve_components(&h, &src, drive.omega)?;
    Ok(assemble(pos, neg, scale))
}

/// Largest readout amplitude the bare alkali magnetometer gives for a real
/// field of `drive`'s amplitude and frequency, over all transverse
/// directions: `√(2γ_aM_a)(|a₊| + |a₋|)`.
pub fn alkali_responsivity(model: &SystemModel, drive: &DriveSpec) -> Result<f64> {
    let s = alkali_reference(model, drive)?;
    Ok(s.responsivity(ReadoutConvention::for_model(model)?.scale))
}

/// How `time_domain` propagates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagation {
    /// Closed-form eigen-propagator, falling back to the integrator when the
    /// eigenvector matrix is (nearly) defective.
    Auto,
    ClosedForm,
    Integrator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDomainOptions {
    pub t_start: f64,
    pub t_end: f64,
    pub dt_out: f64,
    /// (a, b) at t = 0.
    pub initial: Vec2,
    pub method: Propagation,
}

impl TimeDomainOptions {
    pub fn new(t_end: f64, dt_out: f64) -> Self {
        let z = C64::new(0.0, 0.0);
        TimeDomainOptions {
            t_start: 0.0,
            t_end,
            dt_out,
            initial: [z, z],
            method: Propagation::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub a: Vec<C64>,
    pub b: Vec<C64>,
    /// Alkali x-magnetization `√(2γ_aM_a) Re a(t)`.
    pub readout: Vec<f64>,
    /// What was actually used (never `Auto`).
    pub method: Propagation,
}

fn output_times(opts: &TimeDomainOptions) -> Result<Vec<f64>> {
    if !(opts.t_end.is_finite() && opts.t_end > 0.0) {
        return Err(Error::InvalidInput(format!(
            "t_end must be > 0, got {}",
            opts.t_end
        )));
    }
    if !(opts.dt_out.is_finite() && opts.dt_out > 0.0) {
        return Err(Error::InvalidInput(format!(
            "dt_out must be > 0, got {}",
            opts.dt_out
        )));
    }
    if !(opts.t_start.is_finite() && opts.t_start >= 0.0 && opts.t_start <= opts.t_end) {
        return Err(Error::InvalidInput("t_start must lie in [0, t_end]".into()));
    }
    let n = ((opts.t_end - opts.t_start) / opts.dt_out + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|k| opts.t_start + k as f64 * opts.dt_out)
        .collect())
}

/// Propagates the driven linear system from `opts.initial` at t = 0.
pub fn time_domain(
    model: &SystemModel,
    drive: &DriveSpec,
    opts: &TimeDomainOptions,
) -> Result<TimeSeries> {
    let times = output_times(opts)?;
    let src = drive_vector(model, drive)?;
    // a silent readout (λM_a = 0) is fine here; only a sign violation is fatal
    let scale = ReadoutConvention::for_model(model)?.scale;
    let h = build_matrix(model);
    let i = C64::new(0.0, 1.0);

    let modes = eigenmodes(model);
    let eig = eigen_with_values(&h, [modes.lam_plus, modes.lam_minus]);
    let use_closed = match opts.method {
        Propagation::ClosedForm => true,
        Propagation::Integrator => false,
        Propagation::Auto => eig.condition() < DEFECTIVE_CONDITION,
    };

    let states: Vec<Vec2> = if use_closed {
        let inv = eig.inverse.ok_or_else(|| {
            Error::Singular("eigenvector matrix is defective (exceptional point)".into())
        })?;
        let (xp, xm) = solve_components(&h, &src, drive.omega)?;
        let w = drive.omega;
        let particular = |t: f64| -> Vec2 {
            let ep = (i * w * t).exp();
            let em = (-i * w * t).exp();
            [xp[0] * ep + xm[0] * em, xp[1] * ep + xm[1] * em]
        };
        let p0 = particular(0.0);
        let c = inv.apply(&[opts.initial[0] - p0[0], opts.initial[1] - p0[1]]);
        times
            .iter()
            .map(|&t| {
                let e = [(i * eig.values[0] * t).exp(), (i * eig.values[1] * t).exp()];
                let hom = eig.vectors.apply(&[c[0] * e[0], c[1] * e[1]]);
                let pt = particular(t);
                [hom[0] + pt[0], hom[1] + pt[1]]
            })
            .collect()
    } else {
        let ih = h.scale(i);
        let w = drive.omega;
        let rhs = |t: f64, y: &Vec2| -> Vec2 {
            let ep = (i * w * t).exp();
            let em = ep.conj();
            let hy = ih.apply(y);
            [
                hy[0] + src.positive[0] * ep + src.negative[0] * em,
                hy[1] + src.positive[1] * ep + src.negative[1] * em,
            ]
        };
        ode::integrate(rhs, 0.0, opts.initial, &times, ode::Tolerance::default())?
    };

    Ok(TimeSeries {
        readout: states.iter().map(|s| scale * s[0].re).collect(),
        a: states.iter().map(|s| s[0]).collect(),
        b: states.iter().map(|s| s[1]).collect(),
        t: times,
        method: if use_closed {
            Propagation::ClosedForm
        } else {
            Propagation::Integrator
        },
    })
}

/// One steady state per grid frequency; ordered by grid index.
pub fn sweep_frequency(
    model: &SystemModel,
    template: &DriveSpec,
    omegas: &[f64],
) -> Result<ResponseCurve> {
    check_monotonic(omegas)?;
    let points = omegas
        .par_iter()
        .map(|&w| steady_state(model, &template.with_omega(w)))
        .collect::<Result<Vec<_>>>()?;
    ResponseCurve::new(AxisKind::Frequency, omegas.to_vec(), points)
}

/// Readout amplitude of `template` at `ref_omega`, computed directly.
pub fn reference_amplitude(
    model: &SystemModel,
    template: &DriveSpec,
    ref_omega: f64,
) -> Result<f64> {
    let r = steady_state(model, &template.with_omega(ref_omega))?.amplitude();
    if !(r > 0.0) {
        return Err(Error::Degenerate(format!(
            "reference response at omega = {ref_omega} rad/s is zero"
        )));
    }
    Ok(r)
}

/// Divides every response in `curve` by the directly computed response of
/// `template` at `ref_omega`.
pub fn normalize_response(
    model: &SystemModel,
    template: &DriveSpec,
    curve: &ResponseCurve,
    ref_omega: f64,
) -> Result<ResponseCurve> {
    let r = reference_amplitude(model, template, ref_omega)?;
    Ok(ResponseCurve {
        kind: curve.kind,
        axis: curve.axis.clone(),
        points: curve.points.iter().map(|p| p.scaled(1.0 / r)).collect(),
        normalization: Some(Normalization {
            reference_axis: ref_omega,
            reference_value: r,
        }),
    })
}

/// Golden-section refinement of a bracketed minimum.
pub(crate) fn golden_min<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    iters: usize,
) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Minimum of the normalized readout amplitude over `omegas`, refined
/// between the neighbours of the best grid point.
pub fn normalized_minimum(
    model: &SystemModel,
    drive: &DriveSpec,
    omegas: &[f64],
    reference: f64,
) -> Result<(f64, f64)> {
    if omegas.is_empty() {
        return Err(Error::InvalidInput("empty frequency grid".into()));
    }
    let values = omegas
        .iter()
        .map(|&w| Ok(steady_state(model, &drive.with_omega(w))?.amplitude() / reference))
        .collect::<Result<Vec<f64>>>()?;
    let (k, &best) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    if k == 0 || k + 1 == omegas.len() {
        return Ok((omegas[k], best));
    }
    let (lo, hi) = (
        omegas[k - 1].min(omegas[k + 1]),
        omegas[k - 1].max(omegas[k + 1]),
    );
    let f = |w: f64| {
        steady_state(model, &drive.with_omega(w))
            .map(|s| s.amplitude() / reference)
            .unwrap_or(f64::INFINITY)
    };
    let (w, v) = golden_min(f, lo, hi, 80);
    Ok(if v < best { (w, v) } else { (omegas[k], best) })
}

/// Per-direction minimum of the normalized frequency response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSweep {
    pub theta: Vec<f64>,
    /// Minimum over frequency of |R(ω)| / |R(ω_ref)|.
    pub minima: Vec<f64>,
    /// Frequency where each minimum occurs [rad/s].
    pub omega_at_min: Vec<f64>,
    pub reference_omega: f64,
}

impl ThetaSweep {
    /// Direction with the deepest minimum.
    pub fn best(&self) -> (f64, f64) {
        let k = self
            .minima
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        (self.theta[k], self.minima[k])
    }
}

pub fn sweep_theta(
    model: &SystemModel,
    template: &DriveSpec,
    thetas: &[f64],
    omegas: &[f64],
    ref_omega: f64,
) -> Result<ThetaSweep> {
    check_monotonic(thetas)?;
    check_monotonic(omegas)?;
    let rows = thetas
        .par_iter()
        .map(|&th| {
            let drive = template.with_theta(th);
            drive.validate()?;
            let r = reference_amplitude(model, &drive, ref_omega)?;
            normalized_minimum(model, &drive, omegas, r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ThetaSweep {
        theta: thetas.to_vec(),
        minima: rows.iter().map(|r| r.1).collect(),
        omega_at_min: rows.iter().map(|r| r.0).collect(),
        reference_omega: ref_omega,
    })
}

/// Frequency grid around the dressed noble-gas resonance: `coarse` points
/// spanning ±(1.6η + 20) dressed widths, which contains the interference
/// minimum on either side, merged with `dense` points within ±20 widths.
pub fn resonance_grid(model: &SystemModel, coarse: usize, dense: usize) -> Result<Vec<f64>> {
    if coarse < 2 || dense < 2 {
        return Err(Error::InvalidInput("grid counts must be >= 2".into()));
    }
    let modes = eigenmodes(model);
    let center = modes.lam_minus.re.abs();
    let width = modes.lam_minus.im;
    let eta = crate::fano::amplification_factor(model)?;
    let half = (1.6 * eta + 20.0) * width;
    let lo = (center - half).max(1e-3 * center.max(width));
    let hi = center + half;
    let mut grid: Vec<f64> = linspace(lo, hi, coarse);
    let dlo = (center - 20.0 * width).max(lo);
    grid.extend(linspace(dlo, center + 20.0 * width, dense));
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    Ok(grid)
}

pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    (0..n)
        .map(|k| {
            if k + 1 == n {
                stop
            } else {
                start + (stop - start) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}
