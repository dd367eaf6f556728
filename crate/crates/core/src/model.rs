//! Physical parameters of the coupled alkali/noble-gas pair and the analytic
//! structure of its linearized transverse dynamics.
//!
//! Units: gyromagnetic ratios in rad·s⁻¹·mG⁻¹, rates and frequencies in
//! rad/s (s⁻¹ for decay rates), fields in mG. Longitudinal magnetizations are
//! stored as the effective field `λ·M_z` [mG] they exert on the partner
//! species.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat2;

/// One spin species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    /// Signed gyromagnetic ratio [rad·s⁻¹·mG⁻¹].
    pub gamma: f64,
    /// Bare transverse decoherence rate [s⁻¹].
    pub relaxation: f64,
    /// Effective field `λ·M_z` of this species' magnetization [mG].
    pub field: f64,
}

impl EnsembleParams {
    pub fn new(gamma: f64, relaxation: f64, field: f64) -> Result<Self> {
        let p = EnsembleParams {
            gamma,
            relaxation,
            field,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma == 0.0 {
            return Err(Error::Configuration(format!(
                "gyromagnetic ratio must be finite and nonzero, got {}",
                self.gamma
            )));
        }
        if !(self.relaxation.is_finite() && self.relaxation > 0.0) {
            return Err(Error::Configuration(format!(
                "decoherence rate must be positive, got {}",
                self.relaxation
            )));
        }
        if !self.field.is_finite() {
            return Err(Error::Configuration(format!(
                "magnetization field must be finite, got {}",
                self.field
            )));
        }
        Ok(())
    }

    /// Raw longitudinal magnetization given the contact factor λ.
    pub fn magnetization(&self, lambda: f64) -> f64 {
        self.field / lambda
    }
}

/// The coupled pair in a bias field along z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    alkali: EnsembleParams,
    noble: EnsembleParams,
    kappa0: f64,
    bz: f64,
}

impl SystemModel {
    /// Validates both species and the coupling radicand
    /// `γ_a γ_b (λM_a)(λM_b) ≥ 0`.
    pub fn new(
        alkali: EnsembleParams,
        noble: EnsembleParams,
        kappa0: f64,
        bz: f64,
    ) -> Result<Self> {
        alkali.validate()?;
        noble.validate()?;
        if !(kappa0.is_finite() && kappa0 > 0.0) {
            return Err(Error::Configuration(format!(
                "Fermi-contact enhancement must be positive, got {kappa0}"
            )));
        }
        if !bz.is_finite() {
            return Err(Error::Configuration(format!(
                "bias field must be finite, got {bz}"
            )));
        }
        let radicand = alkali.gamma * noble.gamma * alkali.field * noble.field;
        if radicand < 0.0 {
            return Err(Error::Configuration(format!(
                "coupling radicand gamma_a*gamma_b*lambdaM_a*lambdaM_b = {radicand:e} is negative \
                 (inconsistent magnetization signs)"
            )));
        }
        Ok(SystemModel {
            alkali,
            noble,
            kappa0,
            bz,
        })
    }

    pub fn alkali(&self) -> &EnsembleParams {
        &self.alkali
    }

    pub fn noble(&self) -> &EnsembleParams {
        &self.noble
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    /// Bias field [mG].
    pub fn bz(&self) -> f64 {
        self.bz
    }

    /// λ = 8πκ₀/3.
    pub fn lambda(&self) -> f64 {
        8.0 * std::f64::consts::PI * self.kappa0 / 3.0
    }

    pub fn with_bz(&self, bz: f64) -> Result<Self> {
        SystemModel::new(self.alkali, self.noble, self.kappa0, bz)
    }

    pub fn with_alkali(&self, alkali: EnsembleParams) -> Result<Self> {
        SystemModel::new(alkali, self.noble, self.kappa0, self.bz)
    }

    pub fn with_noble(&self, noble: EnsembleParams) -> Result<Self> {
        SystemModel::new(self.alkali, noble, self.kappa0, self.bz)
    }

    /// Alkali Larmor frequency ω_a = γ_a(B_z + λM_b).
    pub fn omega_a(&self) -> f64 {
        self.alkali.gamma * (self.bz + self.noble.field)
    }

    /// Noble-gas Larmor frequency ω_b = γ_b(B_z + λM_a).
    pub fn omega_b(&self) -> f64 {
        self.noble.gamma * (self.bz + self.alkali.field)
    }

    /// Bidirectional coupling J = λ√(γ_aγ_bM_aM_b).
    pub fn coupling(&self) -> f64 {
        (self.alkali.gamma * self.noble.gamma * self.alkali.field * self.noble.field).sqrt()
    }

    /// δ = (ω_a − ω_b)/2.
    pub fn delta(&self) -> f64 {
        0.5 * (self.omega_a() - self.omega_b())
    }

    /// β = (Γ_a − Γ_b)/2.
    pub fn beta(&self) -> f64 {
        0.5 * (self.alkali.relaxation - self.noble.relaxation)
    }
}

/// Dynamics matrix `H` with `∂_t (a, b)ᵀ = iH (a, b)ᵀ + (h_a, h_b)ᵀ`.
pub fn build_matrix(model: &SystemModel) -> Mat2 {
    let j = C64::new(-model.coupling(), 0.0);
    Mat2::new(
        C64::new(model.omega_a(), model.alkali.relaxation),
        j,
        j,
        C64::new(model.omega_b(), model.noble.relaxation),
    )
}

/// A dressed mode: Larmor frequency and decay rate of one eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DressedMode {
    pub frequency: f64,
    pub rate: f64,
}

/// Closed-form eigenvalues ω̃ + iΓ̃ of the dynamics matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenModes {
    pub omega0: f64,
    pub chi: f64,
    pub delta: f64,
    pub beta: f64,
    pub coupling: f64,
    /// Alkali-like mode (connects to ω_a + iΓ_a as J → 0).
    pub lam_plus: C64,
    /// Noble-gas-like mode (connects to ω_b + iΓ_b as J → 0).
    pub lam_minus: C64,
}

impl EigenModes {
    /// ω₀ + iχ ± √(J² + Γ²) with Γ = δ + iβ.
    ///
    /// The root is taken on the branch that reduces to `+Γ` at J = 0, i.e.
    /// `Re(√· Γ̄) ≥ 0`. That labelling is continuous everywhere except on the
    /// line δ = 0, J ≥ β, which starts at the exceptional point.
    pub fn from_parts(omega0: f64, chi: f64, delta: f64, beta: f64, coupling: f64) -> Self {
        let mean = C64::new(omega0, chi);
        let g = C64::new(delta, beta);
        Self::solve(omega0, chi, delta, beta, coupling, mean + g, mean - g)
    }

    /// Same roots from the raw diagonal entries `h_aa`, `h_bb`, which keeps
    /// full relative precision in the narrow mode's decay rate.
    pub fn from_diagonal(h_aa: C64, h_bb: C64, coupling: f64) -> Self {
        let mean = 0.5 * (h_aa + h_bb);
        let g = 0.5 * (h_aa - h_bb);
        Self::solve(mean.re, mean.im, g.re, g.im, coupling, h_aa, h_bb)
    }

    fn solve(
        omega0: f64,
        chi: f64,
        delta: f64,
        beta: f64,
        coupling: f64,
        h_aa: C64,
        h_bb: C64,
    ) -> Self {
        let g = C64::new(delta, beta);
        let j2 = coupling * coupling;
        let mut s = (g * g + j2).sqrt();
        if s.re * g.re + s.im * g.im < 0.0 {
            s = -s;
        }
        let mean = C64::new(omega0, chi);
        let (mut plus, mut minus) = (mean + s, mean - s);
        // Well separated modes: (λ - h_aa)(λ - h_bb) = J² and λ₊ + λ₋ = h_aa + h_bb
        // give each root as its diagonal entry plus a small correction, avoiding
        // the cancellation in mean - s.
        if j2 < 0.25 * g.norm_sqr() {
            let (p, m) = (plus, minus);
            plus = h_aa + j2 / (h_aa - m);
            minus = h_bb + j2 / (h_bb - p);
        }
        EigenModes {
            omega0,
            chi,
            delta,
            beta,
            coupling,
            lam_plus: plus,
            lam_minus: minus,
        }
    }

    pub fn alkali(&self) -> DressedMode {
        DressedMode {
            frequency: self.lam_plus.re,
            rate: self.lam_plus.im,
        }
    }

    pub fn noble(&self) -> DressedMode {
        DressedMode {
            frequency: self.lam_minus.re,
            rate: self.lam_minus.im,
        }
    }

    /// Frequency splitting |Re(λ₊ − λ₋)|.
    pub fn splitting(&self) -> f64 {
        (self.lam_plus.re - self.lam_minus.re).abs()
    }
}

pub fn eigenmodes(model: &SystemModel) -> EigenModes {
    let h = build_matrix(model);
    EigenModes::from_diagonal(h.get(0, 0), h.get(1, 1), model.coupling())
}

/// Bias field where δ = 0: B_z = (γ_b λM_a − γ_a λM_b)/(γ_a − γ_b).
pub fn strong_damping_field(model: &SystemModel) -> Result<f64> {
    let (a, b) = (&model.alkali, &model.noble);
    if a.gamma == b.gamma {
        return Err(Error::DegenerateRatio(a.gamma));
    }
    Ok((b.gamma * a.field - a.gamma * b.field) / (a.gamma - b.gamma))
}

/// Operating field of a self-compensated comagnetometer, B_z = −λM_b − λM_a.
pub fn self_compensation_field(model: &SystemModel) -> f64 {
    -model.noble.field - model.alkali.field
}

/// One row of an exceptional-point scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpRow {
    pub delta: f64,
    pub splitting: f64,
    /// (β/|δ|)^{1/2}; infinite at δ = 0.
    pub enhancement: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EpStatus {
    /// J = β already holds for the supplied parameters.
    Reachable,
    /// The supplied parameters never reach the EP; the table was computed
    /// on a copy with Γ_a retuned.
    Unreachable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpReport {
    pub status: EpStatus,
    /// J/β of the model as supplied.
    pub native_ratio: f64,
    /// Γ_a used for the table (Γ_b + 2J).
    pub tuned_alkali_relaxation: f64,
    pub rows: Vec<EpRow>,
    /// Least-squares slope of ln(splitting) against ln|δ| over rows with
    /// δ ≠ 0, if there are at least two.
    pub slope: Option<f64>,
}

const EP_NATIVE_TOL: f64 = 1e-6;

/// Splitting near the exceptional point δ = 0, J = β.
///
/// Γ_a is retuned to Γ_b + 2J (Γ_b held) and β is pinned to J, so the
/// δ = 0 row is exactly degenerate. The detunings are applied around the
/// retuned model's mean frequency and decay.
pub fn ep_metrics(model: &SystemModel, deltas: &[f64]) -> Result<EpReport> {
    let j = model.coupling();
    if j == 0.0 {
        return Err(Error::Configuration(
            "exceptional point needs a nonzero coupling".into(),
        ));
    }
    if deltas.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidInput("detunings must be finite".into()));
    }
    let native_ratio = j / model.beta();
    let status = if (native_ratio - 1.0).abs() <= EP_NATIVE_TOL {
        EpStatus::Reachable
    } else {
        EpStatus::Unreachable
    };
    let gb = model.noble.relaxation;
    let tuned = gb + 2.0 * j;
    let chi = 0.5 * (tuned + gb);
    let omega0 = 0.5 * (model.omega_a() + model.omega_b());
    let beta = j;

    let rows: Vec<EpRow> = deltas
        .iter()
        .map(|&delta| {
            let modes = EigenModes::from_parts(omega0, chi, delta, beta, j);
            EpRow {
                delta,
                splitting: modes.splitting(),
                enhancement: (beta / delta.abs()).sqrt(),
            }
        })
        .collect();

    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.delta != 0.0 && r.splitting > 0.0)
        .map(|r| (r.delta.abs().ln(), r.splitting.ln()))
        .collect();
    let slope = linear_slope(&pts);

    Ok(EpReport {
        status,
        native_ratio,
        tuned_alkali_relaxation: tuned,
        rows,
        slope,
    })
}

pub(crate) fn linear_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference;
    use std::f64::consts::TAU;

    fn model(fa: f64, fb: f64, bz: f64) -> SystemModel {
        SystemModel::new(
            EnsembleParams::new(TAU * 700.0, 30000.0, fa).unwrap(),
            EnsembleParams::new(TAU * 1.1777, 0.007, fb).unwrap(),
            540.0,
            bz,
        )
        .unwrap()
    }

    #[test]
    fn lambda_from_kappa() {
        let m = model(0.0, 3.0, 0.0);
        assert_eq!(m.lambda(), 8.0 * std::f64::consts::PI * 540.0 / 3.0);
        assert_eq!(m.noble().magnetization(m.lambda()) * m.lambda(), 3.0);
    }

    #[test]
    fn decoupled_matrix_is_diagonal() {
        let m = model(0.0, 3.0, -1.0);
        let h = build_matrix(&m);
        assert_eq!(h.get(0, 1), C64::new(0.0, 0.0));
        assert_eq!(h.get(1, 0), C64::new(0.0, 0.0));
        assert_eq!(h.get(0, 0), C64::new(m.omega_a(), 30000.0));
        assert_eq!(h.get(1, 1), C64::new(m.omega_b(), 0.007));
    }

    #[test]
    fn off_diagonals_equal_and_real() {
        let h = build_matrix(&model(0.01, 3.0, -8.59));
        assert_eq!(h.get(0, 1), h.get(1, 0));
        assert!(h.get(0, 1).im == 0.0 && h.get(0, 1).re < 0.0);
    }

    #[test]
    fn noble_larmor_near_compensation() {
        let m = reference::model().with_bz(-8.59).unwrap();
        let nu_b = m.omega_b().abs() / TAU;
        assert!((nu_b - 10.11).abs() < 0.05, "nu_b = {nu_b}");
    }

    #[test]
    fn reference_coupling_is_about_thirty_per_second() {
        let j = reference::model().coupling();
        assert!((j - 30.0).abs() < 3.0, "J = {j}");
    }

    #[test]
    fn negative_radicand_rejected() {
        let a = EnsembleParams::new(TAU * 700.0, 30000.0, -0.01).unwrap();
        let b = EnsembleParams::new(TAU * 1.1777, 0.007, 3.0).unwrap();
        let err = SystemModel::new(a, b, 540.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::Configuration(_)));
    }

    #[test]
    fn invalid_species_rejected() {
        assert!(EnsembleParams::new(1.0, 0.0, 1.0).is_err());
        assert!(EnsembleParams::new(1.0, -2.0, 1.0).is_err());
        assert!(EnsembleParams::new(0.0, 1.0, 1.0).is_err());
        assert!(EnsembleParams::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn decoupled_eigenvalues_are_bare() {
        let m = model(0.0, 3.0, 5.0);
        let e = eigenmodes(&m);
        assert!((e.lam_plus - C64::new(m.omega_a(), 30000.0)).norm() < 1e-9);
        assert!((e.lam_minus - C64::new(m.omega_b(), 0.007)).norm() < 1e-12);
    }

    #[test]
    fn exceptional_point_coalesces() {
        let e = EigenModes::from_parts(3.0, 7.0, 0.0, 2.5, 2.5);
        assert_eq!(e.lam_plus, e.lam_minus);
        assert_eq!(e.lam_plus, C64::new(3.0, 7.0));
    }

    #[test]
    fn strong_damping_near_minus_three() {
        let m = reference::model();
        let b = strong_damping_field(&m).unwrap();
        assert!((b + 3.0).abs() < 0.3, "B* = {b}");
        let at = m.with_bz(b).unwrap();
        assert!(at.delta().abs() < 1e-9 * m.alkali().gamma.abs());
    }

    #[test]
    fn strong_damping_without_magnetization_is_zero() {
        assert_eq!(strong_damping_field(&model(0.0, 0.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_ratio_rejected() {
        let a = EnsembleParams::new(2.0, 1.0, 1.0).unwrap();
        let m = SystemModel::new(a, a, 540.0, 0.0).unwrap();
        assert!(matches!(
            strong_damping_field(&m),
            Err(Error::DegenerateRatio(_))
        ));
    }

    #[test]
    fn self_compensation_is_direct_sum() {
        assert!((self_compensation_field(&model(0.1, 3.0, 0.0)) + 3.1).abs() < 1e-15);
        assert_eq!(self_compensation_field(&model(0.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn ep_zero_detuning_has_zero_splitting() {
        let rep = ep_metrics(&reference::model(), &[0.0, 1e-3, 1e-2]).unwrap();
        assert_eq!(rep.rows[0].splitting, 0.0);
        assert!(rep.rows[0].enhancement.is_infinite());
        assert_eq!(rep.status, EpStatus::Unreachable);
    }

    #[test]
    fn ep_unreachable_in_rb_xe_regime() {
        let m = reference::model();
        let rep = ep_metrics(&m, &[1.0]).unwrap();
        assert!(rep.native_ratio < 1e-2, "J/beta = {}", rep.native_ratio);
        assert_eq!(rep.status, EpStatus::Unreachable);
    }

    #[test]
    fn ep_reachable_when_tuned() {
        let m = model(0.008, 3.0, -3.0);
        let j = m.coupling();
        let tuned = m
            .with_alkali(EnsembleParams::new(m.alkali().gamma, 0.007 + 2.0 * j, 0.008).unwrap())
            .unwrap();
        let rep = ep_metrics(&tuned, &[1e-3]).unwrap();
        assert_eq!(rep.status, EpStatus::Reachable);
    }

    #[test]
    fn ep_square_root_scaling() {
        let m = reference::model();
        let beta = m.coupling();
        let deltas: Vec<f64> = (0..=30)
            .map(|k| beta * 10f64.powf(-6.0 + 3.0 * k as f64 / 30.0))
            .collect();
        let rep = ep_metrics(&m, &deltas).unwrap();
        let slope = rep.slope.unwrap();
        assert!((slope - 0.5).abs() < 0.005, "slope {slope}");
        // closed form 2 sqrt(beta |delta|)
        for r in &rep.rows {
            let expect = 2.0 * (beta * r.delta.abs()).sqrt();
            assert!((r.splitting - expect).abs() / expect < 1e-3);
        }
    }
}
