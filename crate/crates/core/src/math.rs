//! Minimal 3-D vector / quaternion / rigid-transform algebra.
//!
//! Quaternions are Hamilton convention, stored scalar-last as `(x, y, z, w)`.
//! `q` and `-q` denote the same rotation; every distance function here
//! resolves the double cover.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// 3-D vector (meters when used as a position).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, rhs: Vec3) -> f64 {
        self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    pub fn cross(self, rhs: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * rhs.z - self.z * rhs.y,
            y: self.z * rhs.x - self.x * rhs.z,
            z: self.x * rhs.y - self.y * rhs.x,
        }
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scaled(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
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
        self.scaled(s)
    }
}

/// Unit quaternion, Hamilton convention, scalar-last storage `(x, y, z, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { x: 0.0, y: 0.0, z: 0.0, w: 1.0 };

    pub fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        Quaternion { x, y, z, w }
    }

    /// Rotation of `angle` radians about a unit `axis`.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let (s, c) = (angle * 0.5).sin_cos();
        Quaternion::new(axis.x * s, axis.y * s, axis.z * s, c)
    }

    /// Intrinsic roll-pitch-yaw (body x, then y, then z): R = Rx(r)·Ry(p)·Rz(y).
    pub fn from_rpy(roll: f64, pitch: f64, yaw: f64) -> Self {
        let qx = Quaternion::from_axis_angle(Vec3::new(1.0, 0.0, 0.0), roll);
        let qy = Quaternion::from_axis_angle(Vec3::new(0.0, 1.0, 0.0), pitch);
        let qz = Quaternion::from_axis_angle(Vec3::new(0.0, 0.0, 1.0), yaw);
        qx.mul_raw(qy).mul_raw(qz).normalized()
    }

    /// Inverse of [`Quaternion::from_rpy`]; returns (roll, pitch, yaw).
    pub fn to_rpy(self) -> (f64, f64, f64) {
        let m = self.to_matrix();
        // R = Rx(r)·Ry(p)·Rz(y): R[0][2] = sin(p)
        let pitch = m[0][2].clamp(-1.0, 1.0).asin();
        let roll = (-m[1][2]).atan2(m[2][2]);
        let yaw = (-m[0][1]).atan2(m[0][0]);
        (roll, pitch, yaw)
    }

    pub fn conjugate(self) -> Self {
        Quaternion::new(-self.x, -self.y, -self.z, self.w)
    }

    pub fn dot(self, rhs: Quaternion) -> f64 {
        self.x * rhs.x + self.y * rhs.y + self.z * rhs.z + self.w * rhs.w
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit-norm copy. Exact no-op when the squared norm is already 1
    /// to machine precision, so composing with the identity stays bit-exact.
    pub fn normalized(self) -> Self {
        let n2 = self.dot(self);
        if (n2 - 1.0).abs() <= 4.0 * f64::EPSILON {
            return self;
        }
        let inv = 1.0 / n2.sqrt();
        Quaternion::new(self.x * inv, self.y * inv, self.z * inv, self.w * inv)
    }

    /// Sign-canonical copy with `w >= 0` (same rotation).
    pub fn canonical(self) -> Self {
        if self.w < 0.0 {
            Quaternion::new(-self.x, -self.y, -self.z, -self.w)
        } else {
            self
        }
    }

    /// Hamilton product without renormalization.
    pub(crate) fn mul_raw(self, rhs: Quaternion) -> Quaternion {
        let (ax, ay, az, aw) = (self.x, self.y, self.z, self.w);
        let (bx, by, bz, bw) = (rhs.x, rhs.y, rhs.z, rhs.w);
        Quaternion::new(
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
            aw * bw - ax * bx - ay * by - az * bz,
        )
    }

    /// Rotate a vector: q v q*.
    pub fn rotate(self, v: Vec3) -> Vec3 {
        // t = 2 q_vec x v; v' = v + w t + q_vec x t
        let qv = Vec3::new(self.x, self.y, self.z);
        let t = qv.cross(v).scaled(2.0);
        v + t.scaled(self.w) + qv.cross(t)
    }

    /// 3x3 rotation matrix, row-major.
    pub fn to_matrix(self) -> [[f64; 3]; 3] {
        let (x, y, z, w) = (self.x, self.y, self.z, self.w);
        let (xx, yy, zz) = (x * x, y * y, z * z);
        let (xy, xz, yz) = (x * y, x * z, y * z);
        let (wx, wy, wz) = (w * x, w * y, w * z);
        [
            [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
            [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
            [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
        ]
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.z, self.w]
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.x, -self.y, -self.z, -self.w)
    }
}

/// Hamilton product of two unit quaternions, renormalized.
pub fn quat_mul(a: Quaternion, b: Quaternion) -> Quaternion {
    a.mul_raw(b).normalized()
}

/// Geodesic angle between two unit quaternions in degrees, range [0, 180].
///
/// Double cover resolved through the absolute dot product, so
/// `quat_angle_deg(q, -q) == 0`.
pub fn quat_angle_deg(a: Quaternion, b: Quaternion) -> f64 {
    quat_angle_rad(a, b).to_degrees()
}

/// Same angle in radians; used by the local refiner's stop test.
pub fn quat_angle_rad(a: Quaternion, b: Quaternion) -> f64 {
    let d = a.dot(b).abs();
    // Dots an ulp shy of 1 are rounding noise; snap them so the angle of a
    // quaternion with itself is exactly zero.
    if d >= 1.0 - 4.0 * f64::EPSILON {
        return 0.0;
    }
    2.0 * d.acos()
}

/// Rigid transform: rotate then translate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub translation: Vec3,
    pub rotation: Quaternion,
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        translation: Vec3::ZERO,
        rotation: Quaternion::IDENTITY,
    };

    pub fn new(translation: Vec3, rotation: Quaternion) -> Self {
        Transform { translation, rotation }
    }

    pub fn from_xyz_rpy(xyz: [f64; 3], rpy: [f64; 3]) -> Self {
        Transform::new(Vec3::from_array(xyz), Quaternion::from_rpy(rpy[0], rpy[1], rpy[2]))
    }

    /// `self` applied first, then... no: standard composition `self * rhs`,
    /// i.e. `rhs` expressed in `self`'s frame. Associative; composing with
    /// the identity is bit-exact.
    pub fn compose(self, rhs: Transform) -> Transform {
        Transform {
            translation: self.translation + self.rotation.rotate(rhs.translation),
            rotation: self.rotation.mul_raw(rhs.rotation),
        }
    }

    pub fn apply(self, p: Vec3) -> Vec3 {
        self.translation + self.rotation.rotate(p)
    }
}
