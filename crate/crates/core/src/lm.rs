//! Damped Gauss-Newton (Levenberg-Marquardt) driver for small dense
//! least-squares problems.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when every component of a step is below `xtol` times its scale.
    pub xtol: f64,
    /// Stop when the scaled gradient falls below this.
    pub gtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iter: 500,
            xtol: 1e-12,
            gtol: 1e-15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: DVector<f64>,
    pub residuals: DVector<f64>,
    /// `(JᵀJ)⁻¹` at the solution, if it is invertible.
    pub normal_inverse: Option<DMatrix<f64>>,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// A least-squares problem `min ½‖r(p)‖²`.
pub trait Problem {
    fn residuals(&self, p: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64>;
    /// Parameters outside the feasible set are treated as failed steps.
    fn feasible(&self, _p: &DVector<f64>) -> bool {
        true
    }
}

fn relative_step(step: &DVector<f64>, p: &DVector<f64>, floors: &[f64]) -> f64 {
    step.iter()
        .zip(p.iter())
        .zip(floors)
        .map(|((d, x), f)| d.abs() / x.abs().max(*f))
        .fold(0.0, f64::max)
}

/// `floors[i]` is the magnitude below which parameter i is judged by an
/// absolute rather than relative step.
pub fn minimize<P: Problem>(
    problem: &P,
    p0: DVector<f64>,
    floors: &[f64],
    opts: LmOptions,
) -> LmOutcome {
    let n = p0.len();
    let mut p = p0;
    let mut r = problem.residuals(&p);
    let mut cost = 0.5 * r.norm_squared();
    let mut jac = problem.jacobian(&p);
    let mut jtj = jac.transpose() * &jac;
    let mut g = jac.transpose() * &r;
    let mut diag: Vec<f64> = (0..n).map(|i| jtj[(i, i)].max(f64::MIN_POSITIVE)).collect();
    let mut mu = 1e-3;
    let mut nu = 2.0;
    let mut converged = false;
    let mut iterations = 0;

    let scaled_grad = |g: &DVector<f64>, d: &[f64]| -> f64 {
        g.iter()
            .zip(d)
            .map(|(gi, di)| gi.abs() / di.sqrt())
            .fold(0.0, f64::max)
    };

    while iterations < opts.max_iter {
        iterations += 1;
        if !cost.is_finite() {
            break;
        }
        if scaled_grad(&g, &diag) <= opts.gtol * (2.0 * cost).sqrt().max(f64::MIN_POSITIVE)
            || cost == 0.0
        {
            converged = true;
            break;
        }
        let mut lhs = jtj.clone();
        for i in 0..n {
            lhs[(i, i)] += mu * diag[i];
        }
        let step = match lhs.cholesky() {
            Some(ch) => ch.solve(&(-&g)),
            None => {
                mu *= nu;
                nu *= 2.0;
                continue;
            }
        };
        let small = relative_step(&step, &p, floors) <= opts.xtol;
        let trial = &p + &step;
        let accepted = if problem.feasible(&trial) {
            let r_new = problem.residuals(&trial);
            let cost_new = 0.5 * r_new.norm_squared();
            let mut md = step.clone();
            for i in 0..n {
                md[i] *= mu * diag[i];
            }
            let predicted = 0.5 * step.dot(&(md - &g));
            let rho = if predicted > 0.0 {
                (cost - cost_new) / predicted
            } else {
                -1.0
            };
            if cost_new.is_finite() && rho > 0.0 {
                p = trial;
                r = r_new;
                cost = cost_new;
                jac = problem.jacobian(&p);
                jtj = jac.transpose() * &jac;
                g = jac.transpose() * &r;
                for i in 0..n {
                    diag[i] = diag[i].max(jtj[(i, i)]);
                }
                mu *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
                nu = 2.0;
                true
            } else {
                false
            }
        } else {
            false
        };
        if small {
            converged = true;
            break;
        }
        if !accepted {
            mu *= nu;
            nu *= 2.0;
            if mu > 1e30 {
                break;
            }
        }
    }

    LmOutcome {
        normal_inverse: jtj.clone().try_inverse(),
        gradient_norm: g.norm(),
        params: p,
        residuals: r,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Exp {
        t: Vec<f64>,
        y: Vec<f64>,
    }

    impl Problem for Exp {
        fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
            DVector::from_iterator(
                self.t.len(),
                self.t
                    .iter()
                    .zip(&self.y)
                    .map(|(t, y)| p[0] * (-p[1] * t).exp() - y),
            )
        }
        fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
            DMatrix::from_fn(self.t.len(), 2, |i, j| {
                let e = (-p[1] * self.t[i]).exp();
                if j == 0 {
                    e
                } else {
                    -p[0] * self.t[i] * e
                }
            })
        }
    }

    #[test]
    fn recovers_exponential() {
        let t: Vec<f64> = (0..30).map(|k| k as f64 * 0.1).collect();
        let y = t.iter().map(|t| 2.5 * (-1.3 * t).exp()).collect();
        let out = minimize(
            &Exp { t, y },
            DVector::from_vec(vec![1.0, 0.2]),
            &[1e-3, 1e-3],
            LmOptions::default(),
        );
        assert!(out.converged);
        assert!((out.params[0] - 2.5).abs() < 1e-10);
        assert!((out.params[1] - 1.3).abs() < 1e-10);
    }

    #[test]
    fn rosenbrock_as_least_squares() {
        struct Rb;
        impl Problem for Rb {
            fn residuals(&self, p: &DVector<f64>) -> DVector<f64> {
                DVector::from_vec(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]])
            }
            fn jacobian(&self, p: &DVector<f64>) -> DMatrix<f64> {
                DMatrix::from_row_slice(2, 2, &[-20.0 * p[0], 10.0, -1.0, 0.0])
            }
        }
        let out = minimize(
            &Rb,
            DVector::from_vec(vec![-1.2, 1.0]),
            &[1.0, 1.0],
            LmOptions::default(),
        );
        assert!(out.converged);
        assert!((out.params[0] - 1.0).abs() < 1e-8 && (out.params[1] - 1.0).abs() < 1e-8);
    }
}
