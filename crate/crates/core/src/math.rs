//! Attitude primitives.
//!
//! Frame conventions used across the crate:
//!
//! * navigation frame `n`: x = North, y = West, z = Up (right handed). A level,
//!   stationary accelerometer reads `(0, 0, +g)`.
//! * body frame `b`: x forward, y left, z up.
//! * heading is measured clockwise from North, so the body-to-navigation
//!   rotation is `C_b^n = Rz(-heading) * Ry(pitch) * Rx(roll)`.
//!
//! With these conventions the accelerometer tilt relations and the
//! tilt-compensated compass formulas hold exactly as written in
//! [`crate::heading`].

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Mat4 = Matrix4<f64>;

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Cross-product matrix: `skew3(v) * w == v x w`.
pub fn skew3(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Small-angle attitude error matrix used by the Padé correction.
///
/// The sign is the opposite of [`skew3`]: `small_angle_skew(d) == -skew3(d)`.
pub fn small_angle_skew(d: &Vec3) -> Mat3 {
    Mat3::new(0.0, d.z, -d.y, -d.z, 0.0, d.x, d.y, -d.x, 0.0)
}

/// 4x4 rate matrix acting on `(w, x, y, z)` quaternion coordinates.
pub fn omega4(w: &Vec3) -> Mat4 {
    Mat4::new(
        0.0, -w.x, -w.y, -w.z, //
        w.x, 0.0, w.z, -w.y, //
        w.y, -w.z, 0.0, w.x, //
        w.z, w.y, -w.x, 0.0,
    )
}

/// Hamilton quaternion `w + xi + yj + zk`, used as the body-to-navigation
/// attitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::identity()
    }
}

impl Quaternion {
    pub const fn identity() -> Self {
        Self {
            w: 1.0,
            x: 0.0,
            y: 0.0,
            z: 0.0,
        }
    }

    /// Builds a quaternion and normalizes it.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }.normalized()
    }

    /// Rotation of `angle` radians about `axis` (any non-zero length).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 || angle == 0.0 {
            return Self::identity();
        }
        let (s, c) = (0.5 * angle).sin_cos();
        let a = axis / n;
        Self::new(c, s * a.x, s * a.y, s * a.z)
    }

    pub fn norm(&self) -> f64 {
        self.as_vector().norm()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self {
            w: self.w / n,
            x: self.x / n,
            y: self.y / n,
            z: self.z / n,
        }
    }

    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.w, self.x, self.y, self.z)
    }

    fn from_vector(v: &Vector4<f64>) -> Self {
        Self {
            w: v[0],
            x: v[1],
            y: v[2],
            z: v[3],
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.as_vector().dot(&other.as_vector())
    }

    pub fn conjugate(&self) -> Self {
        Self {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Hamilton product `self * rhs`.
    pub fn mul(&self, r: &Self) -> Self {
        let (a, b) = (self, r);
        Self {
            w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        }
    }

    /// Rotation vector (axis * angle) of this quaternion, angle in `[0, pi]`.
    pub fn to_rotation_vector(&self) -> Vec3 {
        let q = if self.w < 0.0 {
            Self {
                w: -self.w,
                x: -self.x,
                y: -self.y,
                z: -self.z,
            }
        } else {
            *self
        };
        let v = Vec3::new(q.x, q.y, q.z);
        let s = v.norm();
        if s == 0.0 {
            return Vec3::zeros();
        }
        let angle = 2.0 * s.atan2(q.w);
        v * (angle / s)
    }

    /// Advances the attitude by a constant body rate over `dt`:
    /// `q' = exp(0.5 * Omega(w) * dt) * q`, evaluated in closed form.
    pub fn propagate(&self, w: &Vec3, dt: f64) -> Self {
        let n = w.norm();
        if n == 0.0 {
            return *self;
        }
        let half = 0.5 * n * dt;
        let transition = Mat4::identity() * half.cos() + omega4(w) * (half.sin() / n);
        Self::from_vector(&(transition * self.as_vector())).normalized()
    }

    /// Body-to-navigation rotation matrix.
    pub fn to_rotmat(&self) -> Mat3 {
        let Self { w, x, y, z } = *self;
        Mat3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Inverse of [`Quaternion::to_rotmat`] (Shepperd's method). The sign is
    /// chosen so that `w >= 0`.
    pub fn from_rotmat(c: &Mat3) -> Self {
        let tr = c.trace();
        let q = if tr > c[(0, 0)] && tr > c[(1, 1)] && tr > c[(2, 2)] {
            let s = 2.0 * (1.0 + tr).sqrt();
            Self {
                w: 0.25 * s,
                x: (c[(2, 1)] - c[(1, 2)]) / s,
                y: (c[(0, 2)] - c[(2, 0)]) / s,
                z: (c[(1, 0)] - c[(0, 1)]) / s,
            }
        } else if c[(0, 0)] > c[(1, 1)] && c[(0, 0)] > c[(2, 2)] {
            let s = 2.0 * (1.0 + c[(0, 0)] - c[(1, 1)] - c[(2, 2)]).sqrt();
            Self {
                w: (c[(2, 1)] - c[(1, 2)]) / s,
                x: 0.25 * s,
                y: (c[(0, 1)] + c[(1, 0)]) / s,
                z: (c[(0, 2)] + c[(2, 0)]) / s,
            }
        } else if c[(1, 1)] > c[(2, 2)] {
            let s = 2.0 * (1.0 - c[(0, 0)] + c[(1, 1)] - c[(2, 2)]).sqrt();
            Self {
                w: (c[(0, 2)] - c[(2, 0)]) / s,
                x: (c[(0, 1)] + c[(1, 0)]) / s,
                y: 0.25 * s,
                z: (c[(1, 2)] + c[(2, 1)]) / s,
            }
        } else {
            let s = 2.0 * (1.0 - c[(0, 0)] - c[(1, 1)] + c[(2, 2)]).sqrt();
            Self {
                w: (c[(1, 0)] - c[(0, 1)]) / s,
                x: (c[(0, 2)] + c[(2, 0)]) / s,
                y: (c[(1, 2)] + c[(2, 1)]) / s,
                z: 0.25 * s,
            }
        };
        let q = q.normalized();
        if q.w < 0.0 {
            Self {
                w: -q.w,
                x: -q.x,
                y: -q.y,
                z: -q.z,
            }
        } else {
            q
        }
    }

    pub fn to_euler(&self) -> Result<EulerAngles> {
        euler_from_rotmat(&self.to_rotmat())
    }

    pub fn from_euler(e: &EulerAngles) -> Self {
        Self::from_rotmat(&rotmat_from_euler(e))
    }
}

/// Applies a small attitude correction with the Cayley (Padé) form
/// `(2I + dTheta)(2I - dTheta)^-1 * C`, where `dTheta = small_angle_skew(d)`.
///
/// The correction factor is orthogonal for any `d`, so a rotation stays a
/// rotation. It approximates `exp(-[d x]) * C` to third order and is meant
/// for `|d| < 0.3` rad.
pub fn pade_attitude_correct(c: &Mat3, d: &Vec3) -> Mat3 {
    let theta = small_angle_skew(d);
    let two = Mat3::identity() * 2.0;
    // det(2I - dTheta) = 8 + 2|d|^2 > 0
    let inv = (two - theta)
        .try_inverse()
        .expect("2I - skew is always invertible");
    (two + theta) * inv * c
}

/// Exact rotation matrix for a rotation vector (Rodrigues' formula).
pub fn rodrigues(v: &Vec3) -> Mat3 {
    let angle = v.norm();
    if angle == 0.0 {
        return Mat3::identity();
    }
    let k = skew3(&(v / angle));
    Mat3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

/// Roll, pitch and heading in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerAngles {
    pub roll: f64,
    pub pitch: f64,
    pub heading: f64,
}

impl EulerAngles {
    pub fn new(roll: f64, pitch: f64, heading: f64) -> Self {
        Self {
            roll,
            pitch,
            heading,
        }
    }

    pub fn to_degrees(&self) -> [f64; 3] {
        [
            self.roll.to_degrees(),
            self.pitch.to_degrees(),
            self.heading.to_degrees(),
        ]
    }
}

fn rot_x(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_y(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

fn rot_z(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Levelling matrix `Ry(pitch) * Rx(roll)`: maps body vectors into the
/// heading-aligned horizontal frame.
pub fn tilt_matrix(roll: f64, pitch: f64) -> Mat3 {
    rot_y(pitch) * rot_x(roll)
}

/// Body-to-navigation rotation `C_b^n` for the given Euler angles.
pub fn rotmat_from_euler(e: &EulerAngles) -> Mat3 {
    rot_z(-e.heading) * tilt_matrix(e.roll, e.pitch)
}

/// Extracts Euler angles from `C_b^n`.
pub fn euler_from_rotmat(c: &Mat3) -> Result<EulerAngles> {
    let pitch = (-c[(2, 0)]).atan2(c[(2, 1)].hypot(c[(2, 2)]));
    if (FRAC_PI_2 - pitch.abs()) < 1e-6 {
        return Err(Error::DegenerateAttitude { pitch });
    }
    Ok(EulerAngles {
        roll: wrap_angle(c[(2, 1)].atan2(c[(2, 2)])),
        pitch,
        heading: wrap_angle((-c[(1, 0)]).atan2(c[(0, 0)])),
    })
}
