//! Small dense complex 2×2 algebra. Everything in the two-mode model fits in
//! these few helpers, so there is no need for a general matrix type.

use num_complex::Complex64 as C64;

pub type Vec2 = [C64; 2];

/// Row-major complex 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub fn new(m00: C64, m01: C64, m10: C64, m11: C64) -> Self {
        Mat2([[m00, m01], [m10, m11]])
    }

    pub fn identity() -> Self {
        let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        Mat2::new(o, z, z, o)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[r][c]
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn add(&self, other: &Mat2) -> Self {
        let (a, b) = (&self.0, &other.0);
        Mat2::new(
            a[0][0] + b[0][0],
            a[0][1] + b[0][1],
            a[1][0] + b[1][0],
            a[1][1] + b[1][1],
        )
    }

    pub fn mul(&self, other: &Mat2) -> Self {
        let (a, b) = (&self.0, &other.0);
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn apply(&self, v: &Vec2) -> Vec2 {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let m = &self.0;
        (m[0][0].norm() + m[0][1].norm()).max(m[1][0].norm() + m[1][1].norm())
    }

    /// Returns `None` when `|det|` is below `rel_tol` times the product of
    /// the row norms.
    pub fn inverse(&self, rel_tol: f64) -> Option<Mat2> {
        let d = self.det();
        let m = &self.0;
        let scale = (m[0][0].norm() + m[0][1].norm()) * (m[1][0].norm() + m[1][1].norm());
        if !(d.norm() > rel_tol * scale) {
            return None;
        }
        let inv = d.inv();
        Some(Mat2::new(
            m[1][1] * inv,
            -m[0][1] * inv,
            -m[1][0] * inv,
            m[0][0] * inv,
        ))
    }

    /// Solves `self · x = rhs` with Cramer's rule.
    pub fn solve(&self, rhs: &Vec2, rel_tol: f64) -> Option<Vec2> {
        self.inverse(rel_tol).map(|inv| inv.apply(rhs))
    }
}

pub fn vec_norm(v: &Vec2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

/// Eigen-decomposition `m = V diag(mu) V⁻¹`, with eigenvector columns of `V`.
#[derive(Debug, Clone, Copy)]
pub struct Eigen2 {
    pub values: [C64; 2],
    pub vectors: Mat2,
    pub inverse: Option<Mat2>,
}

impl Eigen2 {
    /// Condition number of the eigenvector matrix in the ∞-norm, or infinity
    /// when the matrix is defective.
    pub fn condition(&self) -> f64 {
        match &self.inverse {
            Some(inv) => self.vectors.norm_inf() * inv.norm_inf(),
            None => f64::INFINITY,
        }
    }
}

/// Eigenvector for eigenvalue `mu`: the larger of the two null-vector
/// candidates read off the rows of `m - mu·I`, normalized to unit length.
fn eigvec(m: &Mat2, mu: C64) -> Vec2 {
    let a = &m.0;
    let row0: Vec2 = [a[0][1], mu - a[0][0]];
    let row1: Vec2 = [mu - a[1][1], a[1][0]];
    let (v, n) = {
        let (n0, n1) = (vec_norm(&row0), vec_norm(&row1));
        if n0 >= n1 {
            (row0, n0)
        } else {
            (row1, n1)
        }
    };
    if n == 0.0 {
        // m is already a multiple of the identity
        return [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    }
    [v[0] / n, v[1] / n]
}

/// Decomposes `m` given its two eigenvalues (ordering preserved).
pub fn eigen_with_values(m: &Mat2, values: [C64; 2]) -> Eigen2 {
    let a = m.0;
    let off = a[0][1].norm() + a[1][0].norm();
    let (v0, v1) = if off == 0.0 {
        // diagonal: pick the axis whose diagonal entry is closest to each eigenvalue
        let e0 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let e1 = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        if (a[0][0] - values[0]).norm() <= (a[1][1] - values[0]).norm() {
            (e0, e1)
        } else {
            (e1, e0)
        }
    } else {
        (eigvec(m, values[0]), eigvec(m, values[1]))
    };
    let vectors = Mat2::new(v0[0], v1[0], v0[1], v1[1]);
    let inverse = vectors.inverse(1e-14);
    Eigen2 {
        values,
        vectors,
        inverse,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn solve_recovers_rhs() {
        let m = Mat2::new(c(1.0, 2.0), c(-0.5, 0.0), c(3.0, -1.0), c(0.25, 4.0));
        let x = [c(0.3, -0.7), c(-2.0, 1.5)];
        let rhs = m.apply(&x);
        let got = m.solve(&rhs, 1e-14).unwrap();
        for k in 0..2 {
            assert!((got[k] - x[k]).norm() < 1e-13);
        }
    }

    #[test]
    fn singular_detected() {
        let m = Mat2::new(c(1.0, 1.0), c(2.0, 2.0), c(0.5, 0.5), c(1.0, 1.0));
        assert!(m.inverse(1e-14).is_none());
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let m = Mat2::new(c(2.0, 0.5), c(-1.0, 0.0), c(-1.0, 0.0), c(-3.0, 0.1));
        let tr = m.trace();
        let disc = (tr * tr / 4.0 - m.det()).sqrt();
        let e = eigen_with_values(&m, [tr / 2.0 + disc, tr / 2.0 - disc]);
        let inv = e.inverse.unwrap();
        let d = Mat2::new(e.values[0], c(0.0, 0.0), c(0.0, 0.0), e.values[1]);
        let back = e.vectors.mul(&d).mul(&inv);
        for r in 0..2 {
            for k in 0..2 {
                assert!((back.get(r, k) - m.get(r, k)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn defective_matrix_has_no_inverse() {
        // Jordan block
        let m = Mat2::new(c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        let e = eigen_with_values(&m, [c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(e.condition().is_infinite());
    }
}
