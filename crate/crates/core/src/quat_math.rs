//! Quaternion algebra for attitude kinematics.
//!
//! Components are stored as `(x, y, z, w)`: vector part first, scalar last.
//! Products follow the Hamilton convention, so body-frame angular velocity
//! enters the kinematics on the right: `q̇ = ½ q ⊗ (ω, 0)`.

use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

/// Maximum deviation from unit norm accepted by operations that require a
/// rotation quaternion.
pub const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        x: 0.0,
        y: 0.0,
        z: 0.0,
        w: 1.0,
    };

    pub const fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        Self { x, y, z, w }
    }

    /// Pure quaternion `(v, 0)`.
    pub fn from_vector(v: &Vec3) -> Self {
        Self::new(v.x, v.y, v.z, 0.0)
    }

    /// Rotation by `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::IDENTITY;
        }
        let (s, c) = (0.5 * angle).sin_cos();
        let a = axis / n;
        Self::new(a.x * s, a.y * s, a.z * s, c)
    }

    /// Builds the attitude with the given intrinsic Z-Y-X Euler angles
    /// (yaw `ψ`, then pitch `θ`, then roll `φ`).
    pub fn from_euler(roll: f64, pitch: f64, yaw: f64) -> Self {
        let (sr, cr) = (0.5 * roll).sin_cos();
        let (sp, cp) = (0.5 * pitch).sin_cos();
        let (sy, cy) = (0.5 * yaw).sin_cos();
        Self::new(
            sr * cp * cy - cr * sp * sy,
            cr * sp * cy + sr * cp * sy,
            cr * cp * sy - sr * sp * cy,
            cr * cp * cy + sr * sp * sy,
        )
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.z, self.w]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn vector(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn norm_squared(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z + self.w * self.w
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Returns `q / ‖q‖`. The zero quaternion maps to the identity.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return Self::IDENTITY;
        }
        self.scale(1.0 / n)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s, self.w * s)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z, self.w + o.w)
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn conjugate(&self) -> Self {
        Self::new(-self.x, -self.y, -self.z, self.w)
    }

    /// Hamilton product `self ⊗ rhs`.
    ///
    /// The vector part is grouped as `w₁v₂ + w₂v₁ + v₁×v₂` so that `q*⊗q`
    /// has an exactly zero vector part.
    pub fn multiply(&self, rhs: &Self) -> Self {
        let (a, b) = (self, rhs);
        Self::new(
            (a.w * b.x + b.w * a.x) + (a.y * b.z - a.z * b.y),
            (a.w * b.y + b.w * a.y) + (a.z * b.x - a.x * b.z),
            (a.w * b.z + b.w * a.z) + (a.x * b.y - a.y * b.x),
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.w.is_finite()
    }

    pub fn ensure_unit(&self, what: &str) -> Result<()> {
        let dev = (self.norm_squared() - 1.0).abs();
        if dev.is_finite() && dev <= UNIT_TOLERANCE {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "{what} must be a unit quaternion (|‖q‖²−1| = {dev:e})"
            )))
        }
    }

    /// Rotates `v` by this unit quaternion: `Im(q ⊗ (v, 0) ⊗ q*)`.
    pub fn rotate_vector(&self, v: &Vec3) -> Result<Vec3> {
        self.ensure_unit("rotation")?;
        Ok(self.rotate_unchecked(v))
    }

    /// Sandwich product without the unit-norm check; used on the integrator
    /// hot path where the attitude is renormalized every step.
    pub(crate) fn rotate_unchecked(&self, v: &Vec3) -> Vec3 {
        self.multiply(&Self::from_vector(v))
            .multiply(&self.conjugate())
            .vector()
    }

    /// Standard rotation matrix of this unit quaternion.
    pub fn rotation_matrix(&self) -> nalgebra::Matrix3<f64> {
        let Quaternion { x, y, z, w } = *self;
        nalgebra::Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Intrinsic Z-Y-X Euler angles `(roll, pitch, yaw)`.
    ///
    /// At gimbal lock (`|pitch| = π/2`) roll and yaw are not separable; the
    /// returned pair is one valid decomposition and pitch is clamped to ±π/2.
    pub fn to_euler(&self) -> (f64, f64, f64) {
        let Quaternion { x, y, z, w } = *self;
        let roll = (2.0 * (w * x + y * z)).atan2(1.0 - 2.0 * (x * x + y * y));
        let pitch = (2.0 * (w * y - z * x)).clamp(-1.0, 1.0).asin();
        let yaw = (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z));
        (roll, pitch, yaw)
    }

    /// Applies the shortest-path sign convention: `w ≥ 0`, and when `w = 0`
    /// the first nonzero vector component is made positive.
    pub fn canonical(&self) -> Self {
        let flip = if self.w != 0.0 {
            self.w < 0.0
        } else {
            [self.x, self.y, self.z]
                .into_iter()
                .find(|c| *c != 0.0)
                .is_some_and(|c| c < 0.0)
        };
        if flip {
            self.neg()
        } else {
            *self
        }
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    fn mul(self, rhs: Self) -> Self::Output {
        self.multiply(&rhs)
    }
}

/// Attitude error `q_target* ⊗ q_current`, normalized and canonicalized so
/// that `w ≥ 0`.
pub fn error_quaternion(current: &Quaternion, target: &Quaternion) -> Result<Quaternion> {
    current.ensure_unit("current attitude")?;
    target.ensure_unit("target attitude")?;
    Ok(error_quaternion_unchecked(current, target))
}

pub(crate) fn error_quaternion_unchecked(current: &Quaternion, target: &Quaternion) -> Quaternion {
    target
        .conjugate()
        .multiply(current)
        .normalized()
        .canonical()
}

/// Shortest rotation angle `2·atan2(‖v‖, w)` in `[0, π]`.
///
/// `|w|` is used so that `q` and `−q` give the same angle.
pub fn geodesic_angle(q_e: &Quaternion) -> f64 {
    2.0 * q_e.vector().norm().atan2(q_e.w.abs())
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}
