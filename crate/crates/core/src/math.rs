//! Minimal 3D vector / matrix math over `f64`.

/// A 3D vector (camera-frame millimeters unless stated otherwise).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        libm::sqrt(self.norm_sq())
    }

    #[inline]
    pub fn normalized(self) -> Vec3 {
        self / self.norm()
    }

    #[inline]
    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl core::ops::Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl core::ops::Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl core::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        self.scale(s)
    }
}

impl core::ops::Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        self.scale(1.0 / s)
    }
}

/// Row-major 3x3 rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Rotation about the x axis; positive angle turns +y toward +z.
    pub fn rot_x(rad: f64) -> Mat3 {
        let (s, c) = (libm::sin(rad), libm::cos(rad));
        Mat3 {
            m: [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
        }
    }

    /// Rotation about the y axis; positive angle turns +z toward +x.
    pub fn rot_y(rad: f64) -> Mat3 {
        let (s, c) = (libm::sin(rad), libm::cos(rad));
        Mat3 {
            m: [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
        }
    }

    /// Rotation about the z axis; positive angle turns +x toward +y.
    pub fn rot_z(rad: f64) -> Mat3 {
        let (s, c) = (libm::sin(rad), libm::cos(rad));
        Mat3 {
            m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        Vec3::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y + self.m[0][2] * v.z,
            self.m[1][0] * v.x + self.m[1][1] * v.y + self.m[1][2] * v.z,
            self.m[2][0] * v.x + self.m[2][1] * v.y + self.m[2][2] * v.z,
        )
    }

    /// Applies the transpose, i.e. the inverse of a rotation.
    #[inline]
    pub fn mul_vec_transposed(&self, v: Vec3) -> Vec3 {
        Vec3::new(
            self.m[0][0] * v.x + self.m[1][0] * v.y + self.m[2][0] * v.z,
            self.m[0][1] * v.x + self.m[1][1] * v.y + self.m[2][1] * v.z,
            self.m[0][2] * v.x + self.m[1][2] * v.y + self.m[2][2] * v.z,
        )
    }

    pub fn mul(&self, o: &Mat3) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] =
                    self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j] + self.m[i][2] * o.m[2][j];
            }
        }
        Mat3 { m: r }
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }
}

#[inline]
pub fn deg_to_rad(deg: f64) -> f64 {
    deg * (core::f64::consts::PI / 180.0)
}

/// Relative rotation angle between two rotations, in degrees.
pub fn rotation_angle_deg(a: &Mat3, b: &Mat3) -> f64 {
    // trace(a^T b) = 1 + 2 cos(angle)
    let mut r_trace = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            r_trace += a.m[k][i] * b.m[k][i];
        }
    }
    let c = ((r_trace - 1.0) * 0.5).clamp(-1.0, 1.0);
    libm::acos(c) * (180.0 / core::f64::consts::PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rot_z_turns_x_to_y() {
        let r = Mat3::rot_z(deg_to_rad(90.0));
        let v = r.mul_vec(Vec3::new(1.0, 0.0, 0.0));
        assert!((v.x).abs() < 1e-12 && (v.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transpose_inverts_rotation() {
        let r = Mat3::rot_x(0.3).mul(&Mat3::rot_y(-0.7)).mul(&Mat3::rot_z(1.1));
        let v = Vec3::new(1.0, 2.0, 3.0);
        let back = r.mul_vec_transposed(r.mul_vec(v));
        assert!((back - v).norm() < 1e-12);
    }

    #[test]
    fn rotation_angle_of_known_pair() {
        let a = Mat3::IDENTITY;
        let b = Mat3::rot_y(deg_to_rad(25.0));
        assert!((rotation_angle_deg(&a, &b) - 25.0).abs() < 1e-9);
    }
}
