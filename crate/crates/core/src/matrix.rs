//! Small square matrices (1×1 or 2×2), pointwise and interval-valued.
//!
//! The spectral norm of a 2×2 matrix is taken in closed form from the
//! Frobenius norm and the determinant,
//! `σ_max² = (‖M‖_F² + √(‖M‖_F⁴ − 4 det²)) / 2`, and `‖M⁻¹‖ = σ_max / |det M|`.
//! The same formula is evaluated in interval arithmetic for enclosures.

use crate::error::{Error, Result};
use crate::interval::Interval;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat {
    dim: usize,
    e: [[f64; 2]; 2],
}

impl Mat {
    pub fn scalar(a: f64) -> Self {
        Self {
            dim: 1,
            e: [[a, 0.0], [0.0, 0.0]],
        }
    }

    pub fn new2(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self {
            dim: 2,
            e: [[a, b], [c, d]],
        }
    }

    pub fn diag(a: f64, d: f64) -> Self {
        Self::new2(a, 0.0, 0.0, d)
    }

    pub fn identity(dim: usize) -> Self {
        match dim {
            1 => Self::scalar(1.0),
            _ => Self::diag(1.0, 1.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.dim && j < self.dim);
        self.e[i][j]
    }

    pub fn entries(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.e[i][j]).collect())
            .collect()
    }

    /// `self · rhs`
    pub fn mul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.dim, rhs.dim);
        if self.dim == 1 {
            return Mat::scalar(self.e[0][0] * rhs.e[0][0]);
        }
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.e[i][0] * rhs.e[0][j] + self.e[i][1] * rhs.e[1][j];
            }
        }
        Mat { dim: 2, e: out }
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        if self.dim == 1 {
            [self.e[0][0] * v[0], 0.0]
        } else {
            [
                self.e[0][0] * v[0] + self.e[0][1] * v[1],
                self.e[1][0] * v[0] + self.e[1][1] * v[1],
            ]
        }
    }

    pub fn det(&self) -> f64 {
        if self.dim == 1 {
            self.e[0][0]
        } else {
            // Kahan's fma form keeps det accurate for long cocycle products.
            let (a, b, c, d) = (self.e[0][0], self.e[0][1], self.e[1][0], self.e[1][1]);
            let w = b * c;
            let err = (-b).mul_add(c, w);
            a.mul_add(d, -w) + err
        }
    }

    pub fn inverse(&self) -> Option<Mat> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(if self.dim == 1 {
            Mat::scalar(1.0 / det)
        } else {
            Mat::new2(
                self.e[1][1] / det,
                -self.e[0][1] / det,
                -self.e[1][0] / det,
                self.e[0][0] / det,
            )
        })
    }

    fn frobenius_sq(&self) -> f64 {
        self.e.iter().flatten().map(|v| v * v).sum()
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        if self.dim == 1 {
            return self.e[0][0].abs();
        }
        let f2 = self.frobenius_sq();
        let [[a, b], [c, d]] = self.e;
        let disc = ((a - d).powi(2) + (b + c).powi(2)) * ((a + d).powi(2) + (b - c).powi(2));
        ((f2 + disc.sqrt()) / 2.0).sqrt()
    }

    /// `‖M⁻¹‖ = σ_max / |det M|`.
    pub fn inv_op_norm(&self) -> f64 {
        if self.dim == 1 {
            return 1.0 / self.e[0][0].abs();
        }
        self.op_norm() / self.det().abs()
    }
}

/// Euclidean norm of the first `dim` components.
pub fn vec_norm(v: [f64; 2], dim: usize) -> f64 {
    if dim == 1 {
        v[0].abs()
    } else {
        v[0].hypot(v[1])
    }
}

/// Interval-valued square matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IMat {
    dim: usize,
    e: [[Interval; 2]; 2],
}

impl IMat {
    pub fn scalar(a: Interval) -> Self {
        let z = Interval::point(0.0);
        Self {
            dim: 1,
            e: [[a, z], [z, z]],
        }
    }

    pub fn new2(a: Interval, b: Interval, c: Interval, d: Interval) -> Self {
        Self {
            dim: 2,
            e: [[a, b], [c, d]],
        }
    }

    pub fn from_mat(m: &Mat) -> Self {
        let p = Interval::point;
        if m.dim == 1 {
            Self::scalar(p(m.e[0][0]))
        } else {
            Self::new2(p(m.e[0][0]), p(m.e[0][1]), p(m.e[1][0]), p(m.e[1][1]))
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Interval {
        self.e[i][j]
    }

    pub fn contains(&self, m: &Mat) -> bool {
        self.dim == m.dim
            && (0..self.dim).all(|i| (0..self.dim).all(|j| self.e[i][j].contains(m.e[i][j])))
    }

    pub fn mul(&self, rhs: &IMat) -> IMat {
        assert_eq!(self.dim, rhs.dim);
        if self.dim == 1 {
            return IMat::scalar(self.e[0][0].mul(&rhs.e[0][0]));
        }
        let mut out = self.e;
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.e[i][0]
                    .mul(&rhs.e[0][j])
                    .add(&self.e[i][1].mul(&rhs.e[1][j]));
            }
        }
        IMat { dim: 2, e: out }
    }

    pub fn apply(&self, v: [Interval; 2]) -> [Interval; 2] {
        if self.dim == 1 {
            [self.e[0][0].mul(&v[0]), Interval::point(0.0)]
        } else {
            [
                self.e[0][0].mul(&v[0]).add(&self.e[0][1].mul(&v[1])),
                self.e[1][0].mul(&v[0]).add(&self.e[1][1].mul(&v[1])),
            ]
        }
    }

    pub fn det(&self) -> Interval {
        if self.dim == 1 {
            self.e[0][0]
        } else {
            self.e[0][0]
                .mul(&self.e[1][1])
                .sub(&self.e[0][1].mul(&self.e[1][0]))
        }
    }

    pub fn op_norm(&self) -> Result<Interval> {
        if self.dim == 1 {
            return Ok(self.e[0][0].abs());
        }
        let f2 = self
            .e
            .iter()
            .flatten()
            .fold(Interval::point(0.0), |acc, v| acc.add(&v.sqr()));
        // F⁴ − 4det² factored into sums of squares, free of cancellation.
        let [[a, b], [c, d]] = self.e;
        let minus = a.sub(&d).sqr().add(&b.add(&c).sqr());
        let plus = a.add(&d).sqr().add(&b.sub(&c).sqr());
        let disc = minus.mul(&plus);
        f2.add(&disc.sqrt()?).scale(0.5).sqrt()
    }

    /// Enclosure of `‖M⁻¹‖` over all matrices in the interval matrix.
    pub fn inv_norm_bound(&self) -> Result<Interval> {
        let det = self.det();
        if det.contains_zero() {
            return Err(Error::Domain(format!(
                "determinant enclosure {det:?} contains zero"
            )));
        }
        if self.dim == 1 {
            return self.e[0][0].abs().recip();
        }
        self.op_norm()?.div(&det.abs())
    }
}

/// Enclosure of `‖M⁻¹‖` for an interval or exact matrix.
pub fn matrix_inv_norm_bound(m: &IMat) -> Result<Interval> {
    m.inv_norm_bound()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diag_half_three() {
        let m = Mat::diag(0.5, 3.0);
        assert!((m.inv_op_norm() - 2.0).abs() < 1e-15);
        let b = matrix_inv_norm_bound(&IMat::from_mat(&m)).unwrap();
        assert!(b.contains(2.0));
        assert!(b.width() < 1e-14);
    }

    #[test]
    fn identity_inv_norm() {
        let b = matrix_inv_norm_bound(&IMat::from_mat(&Mat::identity(2))).unwrap();
        assert!(b.contains(1.0) && b.width() < 1e-14);
    }

    #[test]
    fn cat_inverse_norm_matches_eigenvalue() {
        // symmetric: ‖A⁻¹‖ = 1/λ_min, λ_min from the characteristic polynomial
        let lambda_min = (3.0 - 5f64.sqrt()) / 2.0;
        let expected = 1.0 / lambda_min;
        let m = Mat::new2(2.0, 1.0, 1.0, 1.0);
        assert!((m.inv_op_norm() - expected).abs() < 1e-14);
        let b = matrix_inv_norm_bound(&IMat::from_mat(&m)).unwrap();
        assert!(b.contains(expected));
        assert!((expected - 2.618034).abs() < 1e-6);
    }

    #[test]
    fn singular_interval_matrix_rejected() {
        let m = IMat::new2(
            Interval::new(-1.0, 1.0),
            Interval::point(0.0),
            Interval::point(0.0),
            Interval::point(1.0),
        );
        assert!(matrix_inv_norm_bound(&m).is_err());
    }

    #[test]
    fn op_norm_matches_power_iteration() {
        let m = Mat::new2(1.0, 2.0, -0.5, 3.0);
        let mtm = Mat::new2(
            m.get(0, 0) * m.get(0, 0) + m.get(1, 0) * m.get(1, 0),
            m.get(0, 0) * m.get(0, 1) + m.get(1, 0) * m.get(1, 1),
            m.get(0, 1) * m.get(0, 0) + m.get(1, 1) * m.get(1, 0),
            m.get(0, 1) * m.get(0, 1) + m.get(1, 1) * m.get(1, 1),
        );
        let mut v = [1.0, 0.3];
        let mut lambda = 0.0;
        for _ in 0..200 {
            let w = mtm.apply(v);
            lambda = vec_norm(w, 2);
            v = [w[0] / lambda, w[1] / lambda];
        }
        assert!((m.op_norm() - lambda.sqrt()).abs() < 1e-12);
    }
}
