use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix4, Vector3, Vector4};

use crate::error::{CalibError, Result};

/// Tolerance for unit-norm checks on values produced by this crate.
pub const UNIT_TOL: f64 = 1e-9;
/// Tolerance for unit-norm checks on externally supplied rotations.
pub const CONSTRUCTION_TOL: f64 = 1e-6;

/// Quaternion with scalar-first component order (w, x, y, z), Hamilton product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// 4x4 real matrix acting on quaternion coefficient vectors.
pub type QuatMatrix = Matrix4<f64>;

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };
    pub const ZERO: Quaternion = Quaternion { w: 0.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    /// Quaternion with zero scalar part and the given vector part.
    pub fn pure(v: &Vector3<f64>) -> Self {
        Quaternion { w: 0.0, x: v.x, y: v.y, z: v.z }
    }

    /// Rotation about a unit axis by `angle` radians.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        debug_assert!((axis.norm() - 1.0).abs() < 1e-6);
        let half = 0.5 * angle;
        let s = half.sin();
        Quaternion { w: half.cos(), x: s * axis.x, y: s * axis.y, z: s * axis.z }
    }

    pub fn coeffs(&self) -> Vector4<f64> {
        Vector4::new(self.w, self.x, self.y, self.z)
    }

    pub fn from_coeffs(v: &Vector4<f64>) -> Self {
        Quaternion { w: v[0], x: v[1], y: v[2], z: v[3] }
    }

    pub fn vector_part(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn conjugate(&self) -> Self {
        Quaternion { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    pub fn norm_squared(&self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn scaled(&self, k: f64) -> Self {
        Quaternion { w: k * self.w, x: k * self.x, y: k * self.y, z: k * self.z }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n < 1e-12 {
            return Err(CalibError::NonUnitRotation { norm: n });
        }
        Ok(self.scaled(1.0 / n))
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_TOL
    }

    /// Matrix L(a) with L(a) * coeffs(b) = coeffs(a * b).
    pub fn left_matrix(&self) -> QuatMatrix {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Matrix4::new(
            w, -x, -y, -z, //
            x, w, -z, y, //
            y, z, w, -x, //
            z, -y, x, w,
        )
    }

    /// Matrix R(b) with R(b) * coeffs(a) = coeffs(a * b).
    pub fn right_matrix(&self) -> QuatMatrix {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Matrix4::new(
            w, -x, -y, -z, //
            x, w, z, -y, //
            y, -z, w, x, //
            z, y, -x, w,
        )
    }

    /// Rotates a vector by this quaternion, which must be unit.
    pub fn rotate_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        (*self * Quaternion::pure(v) * self.conjugate()).vector_part()
    }

    /// Rotation angle in [0, pi], insensitive to quaternion sign.
    pub fn rotation_angle(&self) -> f64 {
        2.0 * self.w.abs().clamp(-1.0, 1.0).acos()
    }

    /// Rotation axis; `None` when the rotation is numerically the identity.
    pub fn axis(&self) -> Option<Vector3<f64>> {
        let v = self.vector_part();
        let n = v.norm();
        if n < 1e-12 {
            None
        } else {
            let sign = if self.w < 0.0 { -1.0 } else { 1.0 };
            Some(v * (sign / n))
        }
    }

    /// Flips the sign so w > 0; on w = 0 the first nonzero component is positive.
    pub fn canonicalized(&self) -> Self {
        for c in [self.w, self.x, self.y, self.z] {
            if c > 0.0 {
                return *self;
            }
            if c < 0.0 {
                return -*self;
            }
        }
        *self
    }

    /// Spherical interpolation between unit quaternions, shortest arc.
    pub fn slerp(&self, other: &Quaternion, u: f64) -> Quaternion {
        let mut b = *other;
        let mut cos_omega = self.dot(&b);
        if cos_omega < 0.0 {
            b = -b;
            cos_omega = -cos_omega;
        }
        let raw = if cos_omega > 1.0 - 1e-9 {
            *self + (b - *self).scaled(u)
        } else {
            let omega = cos_omega.clamp(-1.0, 1.0).acos();
            let sin_omega = omega.sin();
            let sa = ((1.0 - u) * omega).sin() / sin_omega;
            let sb = (u * omega).sin() / sin_omega;
            self.scaled(sa) + b.scaled(sb)
        };
        raw.normalized().unwrap_or(Quaternion::IDENTITY)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, rhs: Quaternion) -> Quaternion {
        Quaternion {
            w: self.w * rhs.w - self.x * rhs.x - self.y * rhs.y - self.z * rhs.z,
            x: self.w * rhs.x + self.x * rhs.w + self.y * rhs.z - self.z * rhs.y,
            y: self.w * rhs.y - self.x * rhs.z + self.y * rhs.w + self.z * rhs.x,
            z: self.w * rhs.z + self.x * rhs.y - self.y * rhs.x + self.z * rhs.w,
        }
    }
}

impl Add for Quaternion {
    type Output = Quaternion;

    fn add(self, rhs: Quaternion) -> Quaternion {
        Quaternion { w: self.w + rhs.w, x: self.x + rhs.x, y: self.y + rhs.y, z: self.z + rhs.z }
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;

    fn sub(self, rhs: Quaternion) -> Quaternion {
        Quaternion { w: self.w - rhs.w, x: self.x - rhs.x, y: self.y - rhs.y, z: self.z - rhs.z }
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Quaternion {
        self.scaled(-1.0)
    }
}

/// Dual quaternion `real + eps * dual`.
///
/// A rigid motion with rotation r and translation t has real = r and
/// dual = 0.5 * (0, t) * r. The private `scaled` flag records that the dual
/// part was rescaled by some alpha != 1, so the value no longer encodes a
/// metric rigid motion until descaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualQuaternion {
    pub real: Quaternion,
    pub dual: Quaternion,
    scaled: bool,
}

impl DualQuaternion {
    pub const IDENTITY: DualQuaternion =
        DualQuaternion { real: Quaternion::IDENTITY, dual: Quaternion::ZERO, scaled: false };

    /// Assembles a dual quaternion from raw parts, assumed metric.
    pub fn from_parts(real: Quaternion, dual: Quaternion) -> Self {
        DualQuaternion { real, dual, scaled: false }
    }

    /// Builds the dual quaternion of the rigid motion (rotation, translation).
    pub fn from_pose(rotation: Quaternion, translation: &Vector3<f64>) -> Result<Self> {
        let norm = rotation.norm();
        if (norm - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(CalibError::NonUnitRotation { norm });
        }
        let real = rotation.scaled(1.0 / norm);
        let dual = (Quaternion::pure(translation) * real).scaled(0.5);
        Ok(DualQuaternion { real, dual, scaled: false })
    }

    /// Recovers (rotation, translation); fails on scaled or non-rigid values.
    pub fn to_pose(&self) -> Result<(Quaternion, Vector3<f64>)> {
        if self.scaled {
            return Err(CalibError::NotRigid);
        }
        let norm = self.real.norm();
        if (norm - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(CalibError::NotRigid);
        }
        let t_quat = (self.dual * self.real.conjugate()).scaled(2.0 / (norm * norm));
        if t_quat.w.abs() > CONSTRUCTION_TOL {
            return Err(CalibError::NotRigid);
        }
        Ok((self.real, t_quat.vector_part()))
    }

    pub fn conjugate(&self) -> Self {
        DualQuaternion {
            real: self.real.conjugate(),
            dual: self.dual.conjugate(),
            scaled: self.scaled,
        }
    }

    /// Translation vector 2 * dual * conj(real), taken at face value.
    pub fn translation(&self) -> Vector3<f64> {
        (self.dual * self.real.conjugate()).scaled(2.0).vector_part()
    }

    pub fn rotation(&self) -> Quaternion {
        self.real
    }

    /// Multiplies the dual part by `alpha` and marks the value as scaled.
    pub fn scale_translation(&self, alpha: f64) -> Result<Self> {
        if alpha <= 0.0 {
            return Err(CalibError::NonPositiveScale { alpha });
        }
        Ok(DualQuaternion {
            real: self.real,
            dual: self.dual.scaled(alpha),
            scaled: self.scaled || alpha != 1.0,
        })
    }

    /// Divides the dual part by `alpha` and treats the result as metric again.
    pub fn descale(&self, alpha: f64) -> Result<Self> {
        if alpha <= 0.0 {
            return Err(CalibError::NonPositiveScale { alpha });
        }
        Ok(DualQuaternion { real: self.real, dual: self.dual.scaled(1.0 / alpha), scaled: false })
    }

    /// Clears the scaled flag without touching the coefficients.
    pub fn assume_metric(&self) -> Self {
        DualQuaternion { real: self.real, dual: self.dual, scaled: false }
    }

    pub fn is_scaled(&self) -> bool {
        self.scaled
    }

    /// Unit dual quaternion: real part unit, real and dual orthogonal.
    pub fn is_unit(&self) -> bool {
        (self.real.norm() - 1.0).abs() <= UNIT_TOL
            && 2.0 * self.real.dot(&self.dual).abs() <= UNIT_TOL
    }

    /// Negates both parts together so the real part is canonical.
    pub fn canonicalized(&self) -> Self {
        let parts =
            [self.real.w, self.real.x, self.real.y, self.real.z, self.dual.w, self.dual.x,
             self.dual.y, self.dual.z];
        for c in parts {
            if c > 0.0 {
                return *self;
            }
            if c < 0.0 {
                return DualQuaternion { real: -self.real, dual: -self.dual, scaled: self.scaled };
            }
        }
        *self
    }

    pub fn to_coeffs(&self) -> [f64; 8] {
        [
            self.real.w, self.real.x, self.real.y, self.real.z, //
            self.dual.w, self.dual.x, self.dual.y, self.dual.z,
        ]
    }

    pub fn from_coeffs(c: &[f64; 8]) -> Self {
        DualQuaternion {
            real: Quaternion::new(c[0], c[1], c[2], c[3]),
            dual: Quaternion::new(c[4], c[5], c[6], c[7]),
            scaled: false,
        }
    }
}

impl Mul for DualQuaternion {
    type Output = DualQuaternion;

    fn mul(self, rhs: DualQuaternion) -> DualQuaternion {
        DualQuaternion {
            real: self.real * rhs.real,
            dual: self.real * rhs.dual + self.dual * rhs.real,
            scaled: self.scaled || rhs.scaled,
        }
    }
}
