//! Adaptive Dormand–Prince 5(4) for the complex two-component system.
//! Used only where the closed-form propagator is unreliable (defective
//! or badly conditioned eigenvectors), and as an independent oracle.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::Vec2;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b*, the embedded 4th-order error weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rtol: 1e-10,
            atol: 1e-14,
            max_steps: 20_000_000,
        }
    }
}

fn axpy(y: &Vec2, terms: &[(f64, &Vec2)], h: f64) -> Vec2 {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += k[0] * (c * h);
        out[1] += k[1] * (c * h);
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0`, reporting the state at every time in
/// `outputs` (ascending, all ≥ `t0`).
pub fn integrate<F>(f: F, t0: f64, y0: Vec2, outputs: &[f64], tol: Tolerance) -> Result<Vec<Vec2>>
where
    F: Fn(f64, &Vec2) -> Vec2,
{
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut h = {
        let scale = crate::linalg::vec_norm(&y).max(tol.atol);
        let d = crate::linalg::vec_norm(&k1).max(1e-300);
        (0.01 * scale / d).clamp(1e-12, 1.0)
    };
    let mut steps = 0usize;
    let mut out = Vec::with_capacity(outputs.len());

    for &target in outputs {
        if target < t {
            return Err(Error::InvalidInput("output times must be ascending".into()));
        }
        while t < target {
            let last = target - t <= h;
            let hh = if last { target - t } else { h };
            let k2 = f(t + C2 * hh, &axpy(&y, &[(A21, &k1)], hh));
            let k3 = f(t + C3 * hh, &axpy(&y, &[(A31, &k1), (A32, &k2)], hh));
            let k4 = f(
                t + C4 * hh,
                &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hh),
            );
            let k5 = f(
                t + C5 * hh,
                &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hh),
            );
            let k6 = f(
                t + hh,
                &axpy(
                    &y,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                    hh,
                ),
            );
            let y_new = axpy(
                &y,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
                hh,
            );
            let k7 = f(t + hh, &y_new);

            let mut err = 0.0f64;
            for c in 0..2 {
                let e: C64 =
                    (k1[c] * E1 + k3[c] * E3 + k4[c] * E4 + k5[c] * E5 + k6[c] * E6 + k7[c] * E7)
                        * hh;
                let sc = tol.atol + tol.rtol * y[c].norm().max(y_new[c].norm());
                err += (e.norm() / sc).powi(2);
            }
            let err = (err / 2.0).sqrt();

            steps += 1;
            if steps > tol.max_steps {
                return Err(Error::InvalidInput(format!(
                    "integrator exceeded {} steps (system too stiff for explicit stepping)",
                    tol.max_steps
                )));
            }
            if err <= 1.0 {
                t = if last { target } else { t + hh };
                y = y_new;
                k1 = k7;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if !last || err > 1.0 {
                h = hh * factor;
            }
        }
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_rotation() {
        // y' = (i w - g) y
        let lam = C64::new(-0.3, 2.0);
        let f = |_t: f64, y: &Vec2| [y[0] * lam, y[1] * lam * 2.0];
        let y0 = [C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
        let ts = [0.5, 1.0, 3.0];
        let ys = integrate(f, 0.0, y0, &ts, Tolerance::default()).unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            let e0 = (lam * t).exp();
            let e1 = C64::new(0.0, 1.0) * (lam * 2.0 * t).exp();
            assert!((y[0] - e0).norm() < 1e-9);
            assert!((y[1] - e1).norm() < 1e-9);
        }
    }

    #[test]
    fn rejects_descending_outputs() {
        let f = |_t: f64, y: &Vec2| *y;
        let y0 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        assert!(integrate(f, 0.0, y0, &[1.0, 0.5], Tolerance::default()).is_err());
    }
}
