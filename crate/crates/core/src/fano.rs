//! Fano lineshape evaluation and fitting, plus the amplification and
//! deamplification observables of the dressed noble-gas resonance.
//!
//! Frequencies here are angular: `ε = (ω − center)/width` with `width` the
//! dressed noble-gas decay rate.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::curve::{AxisKind, ResponseCurve};
use crate::error::{Error, Result};
use crate::lm::{self, LmOptions, Problem};
use crate::model::{eigenmodes, SystemModel};

/// `F(ε) = A(q + ε)²/(1 + ε²) + B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanoProfile {
    pub q: f64,
    /// Dressed resonance [rad/s].
    pub center: f64,
    /// Dressed decay rate [s⁻¹].
    pub width: f64,
    pub scale_a: f64,
    pub offset_b: f64,
}

/// Lineshape in reduced detuning.
pub fn fano_shape(q: f64, eps: f64) -> f64 {
    (q + eps) * (q + eps) / (1.0 + eps * eps)
}

impl FanoProfile {
    pub fn epsilon(&self, omega: f64) -> f64 {
        (omega - self.center) / self.width
    }

    pub fn at_epsilon(&self, eps: f64) -> f64 {
        self.scale_a * fano_shape(self.q, eps) + self.offset_b
    }

    pub fn eval(&self, omega: f64) -> f64 {
        self.at_epsilon(self.epsilon(omega))
    }

    /// Large-detuning value `A + B`.
    pub fn baseline(&self) -> f64 {
        self.scale_a + self.offset_b
    }

    /// Angular frequency of the interference minimum (ε = −q).
    pub fn trough(&self) -> f64 {
        deamplification_point(self)
    }

    /// Angular frequency of the maximum (ε = 1/q); none for q = 0.
    pub fn peak(&self) -> Option<f64> {
        (self.q != 0.0).then(|| self.center + self.width / self.q)
    }

    fn to_vector(self) -> DVector<f64> {
        DVector::from_vec(vec![
            self.q,
            self.center,
            self.width,
            self.scale_a,
            self.offset_b,
        ])
    }

    fn from_vector(p: &DVector<f64>) -> Self {
        FanoProfile {
            q: p[0],
            center: p[1],
            width: p[2],
            scale_a: p[3],
            offset_b: p[4],
        }
    }
}

/// ω_min = center − q·width.
pub fn deamplification_point(profile: &FanoProfile) -> f64 {
    profile.center - profile.q * profile.width
}

/// η = γ_bλM_b / (2Γ̃_b), with Γ̃_b the dressed noble-gas decay rate.
pub fn amplification_factor(model: &SystemModel) -> Result<f64> {
    let rate = eigenmodes(model).noble().rate;
    if !(rate > 0.0) {
        return Err(Error::Degenerate(format!(
            "dressed noble-gas decay rate must be positive, got {rate}"
        )));
    }
    Ok((model.noble().gamma * model.noble().field).abs() / (2.0 * rate))
}

/// Angular distance between the amplification and deamplification points,
/// `γ_bλM_b / 2`.
pub fn amp_deamp_separation(model: &SystemModel) -> f64 {
    0.5 * (model.noble().gamma * model.noble().field).abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanoFit {
    pub profile: FanoProfile,
    /// RMS of the relative residuals `(F − y)/y`.
    pub residual_norm: f64,
    /// Parameter covariance, ordered (q, center, width, A, B); NaN if the
    /// normal matrix is singular.
    pub covariance: [[f64; 5]; 5],
    pub iterations: usize,
    pub converged: bool,
    /// Number of samples used.
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub lm: LmOptions,
    /// Restrict to ±k initial widths around the initial center (extended to
    /// keep the interference minimum). `None` fits every sample.
    pub window_widths: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            lm: LmOptions::default(),
            window_widths: None,
        }
    }
}

pub const MIN_FIT_SAMPLES: usize = 8;

struct FanoProblem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    w: &'a [f64],
}

impl Problem for FanoProblem<'_> {
    fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
        let f = FanoProfile::from_vector(p);
        DVector::from_iterator(
            self.x.len(),
            self.x
                .iter()
                .zip(self.y)
                .zip(self.w)
                .map(|((x, y), w)| (f.eval(*x) - y) * w),
        )
    }

    fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let (q, c, width, a) = (p[0], p[1], p[2], p[3]);
        let mut jac = DMatrix::zeros(self.x.len(), 5);
        for (i, (&x, &w)) in self.x.iter().zip(self.w).enumerate() {
            let e = (x - c) / width;
            let d = 1.0 + e * e;
            let dfde = 2.0 * a * (q + e) * (1.0 - q * e) / (d * d);
            jac[(i, 0)] = w * 2.0 * a * (q + e) / d;
            jac[(i, 1)] = -w * dfde / width;
            jac[(i, 2)] = -w * dfde * e / width;
            jac[(i, 3)] = w * (q + e) * (q + e) / d;
            jac[(i, 4)] = w;
        }
        jac
    }

    fn feasible(&self, p: &DVector<f64>) -> bool {
        p[2] > 0.0 && p[3] >= 0.0 && p.iter().all(|v| v.is_finite())
    }
}

/// Deterministic starting point from the sampled power curve: offset from the
/// trough, baseline from the curve ends, q from the peak height, and the
/// width from the peak-to-trough spacing `(|q| + 1/|q|)·width`.
pub fn initial_guess(x: &[f64], y: &[f64]) -> Result<FanoProfile> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::InvalidInput(
            "need at least three samples to initialize".into(),
        ));
    }
    let argmax = (0..y.len())
        .max_by(|&i, &j| y[i].total_cmp(&y[j]))
        .expect("non-empty");
    let argmin = (0..y.len())
        .min_by(|&i, &j| y[i].total_cmp(&y[j]))
        .expect("non-empty");
    let (peak, trough) = (y[argmax], y[argmin]);
    if !(peak - trough > 1e-12 * peak.abs().max(trough.abs())) {
        return Err(Error::Degenerate("response curve is flat".into()));
    }
    let b = trough;
    let ends = 0.5 * (y[0] + y[y.len() - 1]);
    let a = (ends - b).max(1e-6 * (peak - b));
    let q_abs = ((peak - b) / a - 1.0).max(1e-2).sqrt();
    let q = if x[argmin] < x[argmax] { q_abs } else { -q_abs };
    let width = (x[argmax] - x[argmin]).abs() / (q_abs + 1.0 / q_abs);
    let center = x[argmax] - width / q;
    Ok(FanoProfile {
        q,
        center,
        width,
        scale_a: a,
        offset_b: b,
    })
}

/// Least-squares Fano fit to the power response `|R|²` of a frequency curve,
/// with relative residual weights.
pub fn fit_fano(
    curve: &ResponseCurve,
    init: Option<FanoProfile>,
    opts: &FitOptions,
) -> Result<FanoFit> {
    if curve.kind != AxisKind::Frequency {
        return Err(Error::InvalidInput(
            "Fano fits need a frequency axis".into(),
        ));
    }
    fit_power(&curve.axis, &curve.powers(), init, opts)
}

/// Same as [`fit_fano`] on raw (angular frequency, power) samples.
pub fn fit_power(
    x: &[f64],
    y: &[f64],
    init: Option<FanoProfile>,
    opts: &FitOptions,
) -> Result<FanoFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(
            "axis and values differ in length".into(),
        ));
    }
    if x.len() < MIN_FIT_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_FIT_SAMPLES} samples, got {}",
            x.len()
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("samples must be finite".into()));
    }
    let start = match init {
        Some(p) => {
            if !(p.width > 0.0 && p.scale_a >= 0.0) {
                return Err(Error::InvalidInput(
                    "initial profile needs width > 0 and A >= 0".into(),
                ));
            }
            p
        }
        None => initial_guess(x, y)?,
    };

    let (xs, ys): (Vec<f64>, Vec<f64>) = match opts.window_widths {
        Some(k) => {
            let trough = start.trough();
            let lo = (start.center - k * start.width).min(trough - start.width);
            let hi = (start.center + k * start.width).max(trough + start.width);
            x.iter()
                .zip(y)
                .filter(|(x, _)| (lo..=hi).contains(*x))
                .map(|(a, b)| (*a, *b))
                .unzip()
        }
        None => (x.to_vec(), y.to_vec()),
    };
    if xs.len() < MIN_FIT_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "fit window holds {} samples, need {MIN_FIT_SAMPLES}",
            xs.len()
        )));
    }
    let ymax = ys.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-12 * ymax;
    let ws: Vec<f64> = ys.iter().map(|v| 1.0 / v.abs().max(floor)).collect();

    let problem = FanoProblem {
        x: &xs,
        y: &ys,
        w: &ws,
    };
    let floors = [
        1e-3,
        start.width,
        1e-6 * start.width,
        f64::MIN_POSITIVE.max(1e-12 * start.scale_a),
        start.scale_a.max(f64::MIN_POSITIVE),
    ];
    let out = lm::minimize(&problem, start.to_vector(), &floors, opts.lm);

    let n = xs.len();
    let ssr = out.residuals.norm_squared();
    let sigma2 = ssr / (n - 5) as f64;
    let mut covariance = [[f64::NAN; 5]; 5];
    if let Some(inv) = &out.normal_inverse {
        for (i, row) in covariance.iter_mut().enumerate() {
            for (j, c) in row.iter_mut().enumerate() {
                *c = sigma2 * inv[(i, j)];
            }
        }
    }
    Ok(FanoFit {
        profile: FanoProfile::from_vector(&out.params),
        residual_norm: (ssr / n as f64).sqrt(),
        covariance,
        iterations: out.iterations,
        converged: out.converged,
        samples: n,
    })
}
