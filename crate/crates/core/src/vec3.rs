//! Real 3-vectors and 3×3 matrices for parameter-space geometry and rigid
//! rotations.

use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::fp;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    pub fn norm(self) -> f64 {
        fp::sqrt(self.dot(self))
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n == 0.0 {
            Vec3::ZERO
        } else {
            self / n
        }
    }

    /// Spherical polar angles `(θ, φ)` of the direction, θ ∈ [0, π].
    pub fn polar_angles(self) -> (f64, f64) {
        let r = self.norm();
        if r == 0.0 {
            return (0.0, 0.0);
        }
        (fp::acos(self.z / r), fp::atan2(self.y, self.x))
    }

    pub fn from_spherical(r: f64, theta: f64, phi: f64) -> Vec3 {
        Vec3 {
            x: r * fp::sin(theta) * fp::cos(phi),
            y: r * fp::sin(theta) * fp::sin(phi),
            z: r * fp::cos(theta),
        }
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Component by index (0 → x, 1 → y, 2 → z).
    pub fn get(self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    pub fn from_slice(s: &[f64]) -> Vec3 {
        Vec3::new(s[0], s[1], s[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Row-major real 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn zeros() -> Mat3 {
        Mat3 { m: [[0.0; 3]; 3] }
    }

    pub fn from_rows(r0: Vec3, r1: Vec3, r2: Vec3) -> Mat3 {
        Mat3 {
            m: [r0.as_array(), r1.as_array(), r2.as_array()],
        }
    }

    pub fn from_columns(c0: Vec3, c1: Vec3, c2: Vec3) -> Mat3 {
        Mat3::from_rows(c0, c1, c2).transpose()
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3::from_slice(&self.m[i])
    }

    pub fn column(&self, j: usize) -> Vec3 {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn transpose(&self) -> Mat3 {
        let mut t = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                t.m[i][j] = self.m[j][i];
            }
        }
        t
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn mat_vec(&self, v: Vec3) -> Vec3 {
        Vec3::new(
            self.row(0).dot(v),
            self.row(1).dot(v),
            self.row(2).dot(v),
        )
    }

    pub fn mat_mul(&self, o: &Mat3) -> Mat3 {
        let mut r = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for (k, ok) in o.m.iter().enumerate() {
                    s += self.m[i][k] * ok[j];
                }
                r.m[i][j] = s;
            }
        }
        r
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        let mut r = *self;
        for row in r.m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        r
    }

    pub fn add(&self, o: &Mat3) -> Mat3 {
        let mut r = *self;
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] += o.m[i][j];
            }
        }
        r
    }

    /// Rodrigues rotation by `angle` about the (normalized) `axis`.
    pub fn rotation(axis: Vec3, angle: f64) -> Mat3 {
        let n = axis.normalized();
        let (s, c) = (fp::sin(angle), fp::cos(angle));
        let omc = 1.0 - c;
        Mat3 {
            m: [
                [
                    c + n.x * n.x * omc,
                    n.x * n.y * omc - n.z * s,
                    n.x * n.z * omc + n.y * s,
                ],
                [
                    n.y * n.x * omc + n.z * s,
                    c + n.y * n.y * omc,
                    n.y * n.z * omc - n.x * s,
                ],
                [
                    n.z * n.x * omc - n.y * s,
                    n.z * n.y * omc + n.x * s,
                    c + n.z * n.z * omc,
                ],
            ],
        }
    }

    /// Skew-symmetric matrix `[ω]×` with `[ω]× v = ω × v`.
    pub fn skew(w: Vec3) -> Mat3 {
        Mat3 {
            m: [
                [0.0, -w.z, w.y],
                [w.z, 0.0, -w.x],
                [-w.y, w.x, 0.0],
            ],
        }
    }

    /// Frobenius distance to another matrix.
    pub fn distance(&self, o: &Mat3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += fp::sq(self.m[i][j] - o.m[i][j]);
            }
        }
        fp::sqrt(s)
    }

    /// Deviation from orthogonality, ‖RᵀR − 1‖_F.
    pub fn orthogonality_defect(&self) -> f64 {
        self.transpose().mat_mul(self).distance(&Mat3::IDENTITY)
    }

    /// Rotation angle of a proper rotation matrix, in `[0, π]`.
    pub fn rotation_angle(&self) -> f64 {
        let tr = self.m[0][0] + self.m[1][1] + self.m[2][2];
        fp::acos(fp::max(-1.0, fp::min(1.0, (tr - 1.0) / 2.0)))
    }

    /// Rotation axis (unit) and signed angle in `(−π, π]` of a proper
    /// rotation, with the convention that the angle is positive for a
    /// right-handed rotation about the returned axis.
    pub fn axis_angle(&self) -> (Vec3, f64) {
        let angle = self.rotation_angle();
        let axis = Vec3::new(
            self.m[2][1] - self.m[1][2],
            self.m[0][2] - self.m[2][0],
            self.m[1][0] - self.m[0][1],
        );
        let n = axis.norm();
        if n < 1e-12 {
            // angle ≈ 0 or π; for π extract the axis from R + I.
            if angle > 1.0 {
                let rp = self.add(&Mat3::IDENTITY);
                let mut best = rp.column(0);
                for j in 1..3 {
                    if rp.column(j).norm() > best.norm() {
                        best = rp.column(j);
                    }
                }
                return (best.normalized(), angle);
            }
            return (Vec3::new(0.0, 0.0, 1.0), 0.0);
        }
        (axis / n, angle)
    }

    /// Inverse via the adjugate; returns `None` when the determinant is
    /// smaller than `1e-14` times the matrix scale cubed.
    pub fn inverse(&self) -> Option<Mat3> {
        let d = self.det();
        let mut scale: f64 = 0.0;
        for row in &self.m {
            for &v in row {
                scale = fp::max(scale, fp::abs(v));
            }
        }
        if fp::abs(d) < 1e-14 * fp::max(scale * scale * scale, f64::MIN_POSITIVE) {
            return None;
        }
        let m = &self.m;
        let cof = |i: usize, j: usize| -> f64 {
            let r = [(i + 1) % 3, (i + 2) % 3];
            let c = [(j + 1) % 3, (j + 2) % 3];
            m[r[0]][c[0]] * m[r[1]][c[1]] - m[r[0]][c[1]] * m[r[1]][c[0]]
        };
        let mut inv = Mat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                // adjugate = transpose of cofactor matrix
                inv.m[j][i] = cof(i, j) / d;
            }
        }
        Some(inv)
    }

    /// Re-orthonormalize a near-rotation matrix by Gram–Schmidt on its rows.
    pub fn orthonormalized(&self) -> Mat3 {
        let r0 = self.row(0).normalized();
        let mut r1 = self.row(1) - r0 * self.row(1).dot(r0);
        r1 = r1.normalized();
        let r2 = r0.cross(r1);
        Mat3::from_rows(r0, r1, r2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp::PI;

    #[test]
    fn cross_product_is_right_handed() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        let y = Vec3::new(0.0, 1.0, 0.0);
        assert!((x.cross(y) - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn rotation_matrix_rotates_by_the_requested_angle() {
        let r = Mat3::rotation(Vec3::new(0.0, 0.0, 1.0), PI / 2.0);
        let v = r.mat_vec(Vec3::new(1.0, 0.0, 0.0));
        assert!((v - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-14);
        assert!(r.orthogonality_defect() < 1e-14);
        assert!((r.det() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn axis_angle_round_trips_through_rodrigues() {
        let axis = Vec3::new(0.3, -0.5, 0.8).normalized();
        let angle = 1.234;
        let r = Mat3::rotation(axis, angle);
        let (a, th) = r.axis_angle();
        assert!((th - angle).abs() < 1e-12);
        assert!((a - axis).norm() < 1e-12);
    }

    #[test]
    fn skew_matrix_reproduces_cross_product() {
        let w = Vec3::new(0.2, 0.7, -0.4);
        let v = Vec3::new(-1.0, 0.5, 2.0);
        assert!((Mat3::skew(w).mat_vec(v) - w.cross(v)).norm() < 1e-15);
    }

    #[test]
    fn spherical_round_trip() {
        let v = Vec3::from_spherical(2.0, 1.1, -2.3);
        let (theta, phi) = v.polar_angles();
        assert!((v.norm() - 2.0).abs() < 1e-14);
        assert!((theta - 1.1).abs() < 1e-14);
        assert!((phi + 2.3).abs() < 1e-14);
    }
}
